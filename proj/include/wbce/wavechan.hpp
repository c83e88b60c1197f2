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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wbce/steering.hpp"
#include "wbce/types.hpp"

namespace wbce {

/// Link dimensions shared by every stage of the simulator.
struct SystemConfig {
    Index num_rx = 16;        // N_r
    Index num_tx = 32;        // N_t
    Index num_taps = 4;       // N_c
    double symbol_period = 1; // T_s
    double rolloff = 0.8;
    Index num_paths = 2;      // N_p
    Index fft_size = 16;      // K
    Index frame_len = 16;     // N, training symbols per frame (excluding the zero prefix)

    /// Throws std::invalid_argument when an invariant is violated.
    void validate() const;
};

struct PathSet {
    CVec gains;          // alpha
    RVec delays;         // tau, seconds
    RVec aoa;            // phi
    RVec aod;            // theta

    Index size() const { return gains.size(); }
};

/// N_c tap matrices H_d (N_r x N_t) and their stacked vectorization h_c.
struct TapChannel {
    std::vector<CMat> taps;
    CVec h_c;
    std::optional<std::string> warning;

    static TapChannel from_taps(std::vector<CMat> taps);
    static TapChannel from_vectorized(const CVec& h_c, Index num_rx, Index num_tx, Index num_taps);

    Index num_taps() const { return static_cast<Index>(taps.size()); }
    Index num_rx() const { return taps.empty() ? 0 : taps.front().rows(); }
    Index num_tx() const { return taps.empty() ? 0 : taps.front().cols(); }
};

/// Per-subcarrier channel matrices H[k], k = 0..K-1.
struct FreqChannel {
    std::vector<CMat> per_subcarrier;

    Index size() const { return static_cast<Index>(per_subcarrier.size()); }
};

/// Raised-cosine pulse p_rc(t). Total: the removable singularities at t = 0 and
/// |t| = T_s/(2*rolloff) evaluate to their analytic limits.
double raised_cosine(double t, double symbol_period, double rolloff);

/// Uniform delays on [0, (N_c-1)T_s], uniform angles on [0, pi], unit-variance
/// CN gains. Deterministic in seed.
PathSet draw_paths(const SystemConfig& cfg, std::uint64_t seed);

/// gamma(l, d) = alpha_l * p_rc(d*T_s - tau_l), the diagonal of Delta_d (before normalization).
/// Same distribution for the gains, with angles and delays snapped to uniformly drawn grid points.
PathSet draw_paths_on_grid(const SystemConfig& cfg, std::uint64_t seed, Index grid_rx, Index grid_tx, Index grid_delay);

CMat path_tap_gains(const PathSet& paths, const SystemConfig& cfg);

/// Scalar applied to every path gain so that ||h_c||^2 = N_r*N_t. Returns 0 for a
/// zero-power channel.
double power_normalization(const PathSet& paths, const SystemConfig& cfg, const SteeringGeometry& steering);

TapChannel taps_from_paths(const PathSet& paths, const SystemConfig& cfg, const SteeringGeometry& steering);

/// K-point DFT over the tap index. Throws when K < N_c.
FreqChannel freq_response_from_taps(const TapChannel& ch, Index fft_size);

/// H[k] = sum_l alpha_l beta_{k,l} a_R a_T^*, normalized with the same constant as
/// taps_from_paths. Subcarrier indices are taken modulo K.
FreqChannel freq_response_from_paths(const PathSet& paths, const SystemConfig& cfg, const SteeringGeometry& steering);

/// beta_{k,l} = sum_d p_rc(d*T_s - tau) exp(-j*2*pi*k*d/K)
cplx pulse_frequency_response(double delay, Index subcarrier, const SystemConfig& cfg);

} // namespace wbce
