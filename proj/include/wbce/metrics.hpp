// SPDX-License-Identifier: Apache-2.0
//
// wbce - compressive channel estimation for wideband hybrid mmWave MIMO links
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------
#pragma once

#include "wbce/recovery.hpp"
#include "wbce/wavechan.hpp"

namespace wbce {

/// ||h - h_est||^2 / ||h||^2. Throws for an all-zero true channel.
double nmse(const CVec& truth, const CVec& estimate);
double nmse(const TapChannel& truth, const ChannelEstimate& estimate);
double nmse_tapwise(const TapChannel& truth, const TapChannel& estimate);

/// Per-subcarrier view of an estimate: FD estimates carry their own H[k], the others are DFT'd.
FreqChannel estimate_freq(const ChannelEstimate& est, Index num_rx, Index num_tx, Index fft_size);

/// Rate of SVD beamformers computed from \p est, evaluated on \p truth, bits/s/Hz averaged over subcarriers.
/// Streams are reduced on subcarriers where the estimate has rank below \p streams.
double spectral_efficiency(const FreqChannel& truth, const FreqChannel& est, double snr, Index streams);

inline constexpr const char* kRateSurrogateLabel = "rate=svd-of-estimate-on-true-channel";

} // namespace wbce
