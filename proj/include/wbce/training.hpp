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
#include <vector>

#include "wbce/linear_operator.hpp"
#include "wbce/types.hpp"
#include "wbce/wavechan.hpp"

namespace wbce {

struct TrainingConfig {
    Index num_frames = 60; // M
    Index rf_chains = 1;   // N_RF
    int phase_bits = 2;    // N_Q
    double snr = 1.0;      // linear, rho = 1 so sigma^2 = 1/snr; +inf gives a noiseless link
    std::uint64_t seed = 1;

    double noise_variance() const;
    void validate() const;
};

/// Phase-shifter alphabet {0, 2pi/2^bits, ...}.
RVec phase_alphabet(int bits);

/// Per-frame RF precoders/combiners and pilots of one training session.
struct TrainingRealization {
    std::vector<CMat> precoders; // F_m, N_t x N_RF, entries exp(j*phi)/sqrt(N_t)
    std::vector<CMat> combiners; // W_m, N_r x N_RF, entries exp(j*omega)/sqrt(N_r)
    std::vector<CMat> pilots;    // N_RF x N, column n-1 holds s_m[n]
    Index zero_prefix = 0;       // N_c - 1 zero symbols ahead of each frame
    double noise_variance = 0.0;
    std::uint64_t noise_seed = 0;

    Index num_frames() const { return static_cast<Index>(precoders.size()); }
    Index rf_chains() const { return precoders.empty() ? 0 : precoders.front().cols(); }
    Index frame_len() const { return pilots.empty() ? 0 : pilots.front().cols(); }
};

TrainingRealization draw_training(const SystemConfig& cfg, const TrainingConfig& tcfg);

/// Noise covariance sigma2 * diag_m(I_repeats kron C_m) of a stacked measurement vector.
struct BlockCovariance {
    double scale = 0.0;         // sigma^2 times any transform gain
    Index repeats = 1;          // N for the time-domain stack, 1 per subcarrier
    std::vector<CMat> blocks;   // C_m = W_m^* W_m

    Index dim() const;
    /// E[e^* e]
    double expected_energy() const;
};

/// Post-combining samples of every frame, N_RF x (N + N_c - 1). The last N_c - 1
/// columns are the channel tail that spills into the next frame's zero prefix.
struct ReceivedFrames {
    std::vector<CMat> samples;
};

struct MeasurementSet {
    CVec y_td;                  // N*M*N_RF, frame-major, then symbol, then RF chain
    BlockCovariance td_noise;
    double eps_td = 0.0;

    std::vector<CVec> y_fd;     // K entries of length M*N_RF
    std::vector<BlockCovariance> fd_noise;
    RVec eps_fd;
};

/// Linear convolution of each zero-prefixed frame through the taps, AWGN, RF combining.
ReceivedFrames receive_frames(const TapChannel& ch, const TrainingRealization& tr);

/// Stack y_m[1..N] of every frame.
void fill_td_measurements(const ReceivedFrames& rx, const TrainingRealization& tr, MeasurementSet& out);

/// Fold the received block modulo K (overlap-and-add), K-point DFT, per-subcarrier stack.
void fill_fd_measurements(const ReceivedFrames& rx, const TrainingRealization& tr, Index fft_size, MeasurementSet& out);

MeasurementSet simulate_td_rx(const TapChannel& ch, const TrainingRealization& tr);
MeasurementSet simulate_fd_rx(const TapChannel& ch, const TrainingRealization& tr, Index fft_size);
/// Analytic per-subcarrier model W^* H[k] F s[k] plus the same time-domain noise path.
MeasurementSet simulate_fd_rx(const FreqChannel& ch, const TrainingRealization& tr, Index num_taps);
/// Both domains from one received realization.
MeasurementSet simulate_rx(const TapChannel& ch, const TrainingRealization& tr, Index fft_size);

/// s_m[k] = sum_{n=1}^{N} s_m[n] exp(-j 2 pi k n / K), one column per subcarrier (N_RF x K).
CMat pilot_spectrum(const CMat& pilots, Index fft_size);

/// Phi_td: row block m is S_m (I_Nc kron F_m^T) kron W_m^*. S_m is applied as an FIR
/// filter over the frame and never formed.
class TdMeasurementOperator final : public LinearOperator {
public:
    TdMeasurementOperator(const TrainingRealization& tr, Index num_rx, Index num_tx, Index num_taps);

    Index rows() const override;
    Index cols() const override { return num_taps_ * num_rx_ * num_tx_; }
    CVec apply(const CVec& h) const override;
    CVec adjoint(const CVec& y) const override;
    CVec apply_outer(const RVec& tap_weights, const CVec& rx, const CVec& tx) const override;

    RVec atom_norms2(const SeparableAtoms& atoms) const override { return *atom_norms2_framed(atoms, {}); }
    /// An empty \p frame_left means the identity.
    std::optional<RVec> atom_norms2_framed(const SeparableAtoms& atoms, const std::vector<CMat>& frame_left) const override;
private:
    std::vector<CMat> precoders_;
    std::vector<CMat> combiners_;
    std::vector<CMat> pilots_;
    Index num_rx_, num_tx_, num_taps_;
};

/// Phi_fd[k]: row block m is s_m[k]^T F_m^T kron W_m^*.
class FdMeasurementOperator final : public LinearOperator {
public:
    FdMeasurementOperator(const TrainingRealization& tr, Index num_rx, Index num_tx, Index subcarrier, Index fft_size);

    Index rows() const override { return static_cast<Index>(combiners_.size()) * rf_; }
    Index cols() const override { return num_rx_ * num_tx_; }
    CVec apply(const CVec& h) const override;
    CVec adjoint(const CVec& y) const override;
    CVec apply_outer(const RVec& tap_weights, const CVec& rx, const CVec& tx) const override;

    RVec atom_norms2(const SeparableAtoms& atoms) const override { return *atom_norms2_framed(atoms, {}); }
    /// An empty \p frame_left means the identity.
    std::optional<RVec> atom_norms2_framed(const SeparableAtoms& atoms, const std::vector<CMat>& frame_left) const override;
private:
    std::vector<CMat> combiners_;
    std::vector<CVec> beams_; // F_m s_m[k]
    Index num_rx_, num_tx_, rf_;
};

} // namespace wbce
