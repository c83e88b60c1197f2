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
#include "wbce/training.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "wbce/rng.hpp"

namespace wbce {

double TrainingConfig::noise_variance() const
{
    if (std::isinf(snr))
        return 0.0;
    return 1.0 / snr;
}

void TrainingConfig::validate() const
{
    if (num_frames < 1)
        throw std::invalid_argument("TrainingConfig: num_frames must be >= 1");
    if (rf_chains < 1)
        throw std::invalid_argument("TrainingConfig: rf_chains must be >= 1");
    if (phase_bits < 1 || phase_bits > 16)
        throw std::invalid_argument("TrainingConfig: phase_bits must lie in [1, 16]");
    if (!(snr > 0.0))
        throw std::invalid_argument("TrainingConfig: snr must be positive");
}

RVec phase_alphabet(int bits)
{
    const Index n = Index{1} << bits;
    RVec a(n);
    for (Index q = 0; q < n; ++q)
        a(q) = 2.0 * kPi * static_cast<double>(q) / static_cast<double>(n);
    return a;
}

namespace {

CMat random_phase_matrix(Rng& rng, Index rows, Index cols, const RVec& alphabet)
{
    std::uniform_int_distribution<Index> pick(0, alphabet.size() - 1);
    const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
    CMat m(rows, cols);
    // column-major fill keeps the draw order independent of Eigen internals
    for (Index c = 0; c < cols; ++c)
        for (Index r = 0; r < rows; ++r)
            m(r, c) = std::polar(scale, alphabet(pick(rng)));
    return m;
}

} // namespace

TrainingRealization draw_training(const SystemConfig& cfg, const TrainingConfig& tcfg)
{
    cfg.validate();
    tcfg.validate();
    Rng rng(derive_seed(tcfg.seed, {1}));
    const RVec alphabet = phase_alphabet(tcfg.phase_bits);
    std::uniform_int_distribution<int> qpsk(0, 3);
    const double pilot_amp = 1.0 / std::sqrt(static_cast<double>(tcfg.rf_chains));

    TrainingRealization tr;
    tr.zero_prefix = cfg.num_taps - 1;
    tr.noise_variance = tcfg.noise_variance();
    tr.noise_seed = derive_seed(tcfg.seed, {2});
    const auto frames = static_cast<std::size_t>(tcfg.num_frames);
    tr.precoders.reserve(frames);
    tr.combiners.reserve(frames);
    tr.pilots.reserve(frames);
    for (std::size_t m = 0; m < frames; ++m) {
        tr.precoders.push_back(random_phase_matrix(rng, cfg.num_tx, tcfg.rf_chains, alphabet));
        tr.combiners.push_back(random_phase_matrix(rng, cfg.num_rx, tcfg.rf_chains, alphabet));
        CMat s(tcfg.rf_chains, cfg.frame_len);
        for (Index n = 0; n < cfg.frame_len; ++n)
            for (Index r = 0; r < tcfg.rf_chains; ++r)
                s(r, n) = std::polar(pilot_amp, kPi / 4.0 + kPi / 2.0 * static_cast<double>(qpsk(rng)));
        tr.pilots.push_back(std::move(s));
    }
    return tr;
}

Index BlockCovariance::dim() const
{
    Index n = 0;
    for (const auto& b : blocks)
        n += b.rows() * repeats;
    return n;
}

double BlockCovariance::expected_energy() const
{
    double tr = 0.0;
    for (const auto& b : blocks)
        tr += b.trace().real();
    return scale * static_cast<double>(repeats) * tr;
}

ReceivedFrames receive_frames(const TapChannel& ch, const TrainingRealization& tr)
{
    const Index nc = ch.num_taps();
    if (tr.zero_prefix < nc - 1)
        throw std::invalid_argument("receive_frames: zero prefix shorter than N_c - 1");
    if (tr.num_frames() < 1)
        throw std::invalid_argument("receive_frames: empty training realization");
    if (tr.precoders.front().rows() != ch.num_tx() || tr.combiners.front().rows() != ch.num_rx())
        throw std::invalid_argument("receive_frames: RF matrices do not match the channel");

    const Index n = tr.frame_len();
    const Index len = n + nc - 1;
    const Index nr = ch.num_rx();
    Rng rng(tr.noise_seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(tr.noise_variance / 2.0));

    ReceivedFrames rx;
    rx.samples.reserve(static_cast<std::size_t>(tr.num_frames()));
    for (Index m = 0; m < tr.num_frames(); ++m) {
        const auto mi = static_cast<std::size_t>(m);
        const CMat tx = tr.precoders[mi] * tr.pilots[mi]; // N_t x N
        CMat r = CMat::Zero(nr, len);
        for (Index d = 0; d < nc; ++d)
            r.middleCols(d, n).noalias() += ch.taps[static_cast<std::size_t>(d)] * tx;
        if (tr.noise_variance > 0.0)
            for (Index q = 0; q < len; ++q)
                for (Index a = 0; a < nr; ++a) {
                    const double re = gauss(rng);
                    const double im = gauss(rng);
                    r(a, q) += cplx(re, im);
                }
        rx.samples.push_back(tr.combiners[mi].adjoint() * r);
    }
    return rx;
}

void fill_td_measurements(const ReceivedFrames& rx, const TrainingRealization& tr, MeasurementSet& out)
{
    const Index n = tr.frame_len();
    const Index rf = tr.rf_chains();
    out.y_td.resize(tr.num_frames() * n * rf);
    out.td_noise.scale = tr.noise_variance;
    out.td_noise.repeats = n;
    out.td_noise.blocks.clear();
    for (Index m = 0; m < tr.num_frames(); ++m) {
        const auto mi = static_cast<std::size_t>(m);
        out.y_td.segment(m * n * rf, n * rf) = rx.samples[mi].leftCols(n).reshaped();
        out.td_noise.blocks.push_back(tr.combiners[mi].adjoint() * tr.combiners[mi]);
    }
    out.eps_td = out.td_noise.expected_energy();
}

namespace {

cplx twiddle(Index k, Index n, Index fft_size)
{
    const Index e = (k * n) % fft_size;
    return std::polar(1.0, -2.0 * kPi * static_cast<double>(e) / static_cast<double>(fft_size));
}

// Columns hold time samples at n = 1, 2, ...; returns N_RF x K with the same phase origin.
CMat fold_and_transform(const CMat& samples, Index fft_size)
{
    CMat folded = CMat::Zero(samples.rows(), fft_size);
    for (Index q = 0; q < samples.cols(); ++q)
        folded.col(q % fft_size) += samples.col(q);
    CMat dft(fft_size, fft_size);
    for (Index p = 0; p < fft_size; ++p)
        for (Index k = 0; k < fft_size; ++k)
            dft(p, k) = twiddle(k, p + 1, fft_size);
    return folded * dft;
}

void check_fft_size(const TrainingRealization& tr, Index fft_size)
{
    if (fft_size < tr.frame_len())
        throw std::invalid_argument("frequency-domain receiver: K must be >= N");
}

void init_fd(const TrainingRealization& tr, Index fft_size, Index num_taps, MeasurementSet& out)
{
    const Index rf = tr.rf_chains();
    out.y_fd.assign(static_cast<std::size_t>(fft_size), CVec::Zero(tr.num_frames() * rf));
    BlockCovariance cov;
    // every one of the N + N_c - 1 received samples lands in exactly one DFT input bin
    cov.scale = tr.noise_variance * static_cast<double>(tr.frame_len() + num_taps - 1);
    cov.repeats = 1;
    for (Index m = 0; m < tr.num_frames(); ++m) {
        const auto& w = tr.combiners[static_cast<std::size_t>(m)];
        cov.blocks.push_back(w.adjoint() * w);
    }
    out.fd_noise.assign(static_cast<std::size_t>(fft_size), cov);
    out.eps_fd = RVec::Constant(fft_size, cov.expected_energy());
}

} // namespace

CMat pilot_spectrum(const CMat& pilots, Index fft_size)
{
    CMat out = CMat::Zero(pilots.rows(), fft_size);
    for (Index k = 0; k < fft_size; ++k)
        for (Index n = 0; n < pilots.cols(); ++n)
            out.col(k) += twiddle(k, n + 1, fft_size) * pilots.col(n);
    return out;
}

void fill_fd_measurements(const ReceivedFrames& rx, const TrainingRealization& tr, Index fft_size, MeasurementSet& out)
{
    check_fft_size(tr, fft_size);
    const Index rf = tr.rf_chains();
    const Index num_taps = rx.samples.front().cols() - tr.frame_len() + 1;
    init_fd(tr, fft_size, num_taps, out);
    for (Index m = 0; m < tr.num_frames(); ++m) {
        const CMat spec = fold_and_transform(rx.samples[static_cast<std::size_t>(m)], fft_size);
        for (Index k = 0; k < fft_size; ++k)
            out.y_fd[static_cast<std::size_t>(k)].segment(m * rf, rf) = spec.col(k);
    }
}

MeasurementSet simulate_td_rx(const TapChannel& ch, const TrainingRealization& tr)
{
    MeasurementSet out;
    fill_td_measurements(receive_frames(ch, tr), tr, out);
    return out;
}

MeasurementSet simulate_fd_rx(const TapChannel& ch, const TrainingRealization& tr, Index fft_size)
{
    check_fft_size(tr, fft_size);
    MeasurementSet out;
    fill_fd_measurements(receive_frames(ch, tr), tr, fft_size, out);
    return out;
}

MeasurementSet simulate_fd_rx(const FreqChannel& ch, const TrainingRealization& tr, Index num_taps)
{
    const Index fft_size = ch.size();
    check_fft_size(tr, fft_size);
    const Index nr = ch.per_subcarrier.front().rows();
    const Index nt = ch.per_subcarrier.front().cols();
    // noise only: run the time-domain path with a zero channel so the noise draw matches
    std::vector<CMat> zero(static_cast<std::size_t>(num_taps), CMat::Zero(nr, nt));
    MeasurementSet out;
    fill_fd_measurements(receive_frames(TapChannel::from_taps(std::move(zero)), tr), tr, fft_size, out);
    const Index rf = tr.rf_chains();
    for (Index m = 0; m < tr.num_frames(); ++m) {
        const auto mi = static_cast<std::size_t>(m);
        const CMat spec = pilot_spectrum(tr.pilots[mi], fft_size);
        for (Index k = 0; k < fft_size; ++k)
            out.y_fd[static_cast<std::size_t>(k)].segment(m * rf, rf) +=
                tr.combiners[mi].adjoint() * (ch.per_subcarrier[static_cast<std::size_t>(k)] * (tr.precoders[mi] * spec.col(k)));
    }
    return out;
}

MeasurementSet simulate_rx(const TapChannel& ch, const TrainingRealization& tr, Index fft_size)
{
    check_fft_size(tr, fft_size);
    const ReceivedFrames rx = receive_frames(ch, tr);
    MeasurementSet out;
    fill_td_measurements(rx, tr, out);
    fill_fd_measurements(rx, tr, fft_size, out);
    return out;
}

// ---------------------------------------------------------------------------

namespace {

// ||L_m W_m^* rx_i||^2 for every frame m (rows) and receive atom i (columns).
RMat combined_rx_energy(const std::vector<CMat>& combiners, const std::vector<CMat>& frame_left, const CMat& rx)
{
    if (!frame_left.empty() && frame_left.size() != combiners.size())
        throw std::invalid_argument("atom_norms2: one left transform per frame expected");
    RMat out(static_cast<Index>(combiners.size()), rx.cols());
    for (std::size_t m = 0; m < combiners.size(); ++m) {
        CMat left = combiners[m].adjoint() * rx;
        if (!frame_left.empty()) {
            if (frame_left[m].cols() != left.rows())
                throw std::invalid_argument("atom_norms2: left transform size mismatch");
            left = frame_left[m] * left;
        }
        out.row(static_cast<Index>(m)) = left.colwise().squaredNorm();
    }
    return out;
}

// Flat g*(G_r*G_t) + j*G_r + i from u (frames x G_r) and v (frames x G_c*G_t, column g*G_t + j).
RVec combine_energies(const RMat& u, const RMat& v)
{
    const RMat r = u.transpose() * v;
    return r.reshaped();
}

} // namespace

TdMeasurementOperator::TdMeasurementOperator(const TrainingRealization& tr, Index num_rx, Index num_tx, Index num_taps)
    : precoders_(tr.precoders), combiners_(tr.combiners), pilots_(tr.pilots), num_rx_(num_rx), num_tx_(num_tx),
      num_taps_(num_taps)
{
    if (tr.num_frames() < 1)
        throw std::invalid_argument("TdMeasurementOperator: empty training realization");
    if (tr.frame_len() < num_taps)
        throw std::invalid_argument("TdMeasurementOperator: frame shorter than the channel");
}

Index TdMeasurementOperator::rows() const
{
    return static_cast<Index>(pilots_.size()) * pilots_.front().cols() * pilots_.front().rows();
}

CVec TdMeasurementOperator::apply(const CVec& h) const
{
    if (h.size() != cols())
        throw std::invalid_argument("TdMeasurementOperator::apply: dimension mismatch");
    const Index n = pilots_.front().cols();
    const Index rf = pilots_.front().rows();
    const Index block = num_rx_ * num_tx_;
    CVec y(rows());
    for (std::size_t m = 0; m < pilots_.size(); ++m) {
        CMat frame = CMat::Zero(rf, n);
        const CMat wh = combiners_[m].adjoint();
        for (Index d = 0; d < num_taps_; ++d) {
            const auto hd = h.segment(d * block, block).reshaped(num_rx_, num_tx_);
            const CMat g = (wh * hd) * precoders_[m];
            frame.rightCols(n - d).noalias() += g * pilots_[m].leftCols(n - d);
        }
        y.segment(static_cast<Index>(m) * n * rf, n * rf) = frame.reshaped();
    }
    return y;
}

CVec TdMeasurementOperator::adjoint(const CVec& y) const
{
    if (y.size() != rows())
        throw std::invalid_argument("TdMeasurementOperator::adjoint: dimension mismatch");
    const Index n = pilots_.front().cols();
    const Index rf = pilots_.front().rows();
    const Index block = num_rx_ * num_tx_;
    CVec h = CVec::Zero(cols());
    for (std::size_t m = 0; m < pilots_.size(); ++m) {
        const auto frame = y.segment(static_cast<Index>(m) * n * rf, n * rf).reshaped(rf, n);
        for (Index d = 0; d < num_taps_; ++d) {
            const CMat t = frame.rightCols(n - d) * pilots_[m].leftCols(n - d).adjoint();
            auto hd = h.segment(d * block, block).reshaped(num_rx_, num_tx_);
            hd.noalias() += combiners_[m] * (t * precoders_[m].adjoint());
        }
    }
    return h;
}

CVec TdMeasurementOperator::apply_outer(const RVec& tap_weights, const CVec& rx, const CVec& tx) const
{
    if (tap_weights.size() != num_taps_ || rx.size() != num_rx_ || tx.size() != num_tx_)
        throw std::invalid_argument("TdMeasurementOperator::apply_outer: dimension mismatch");
    const Index n = pilots_.front().cols();
    const Index rf = pilots_.front().rows();
    CVec y(rows());
    for (std::size_t m = 0; m < pilots_.size(); ++m) {
        // y_m[n] = (W^* rx) * (tx^* F) * sum_d w_d s[n-d]
        const CVec left = combiners_[m].adjoint() * rx;
        const Eigen::RowVectorXcd right = tx.adjoint() * precoders_[m];
        Eigen::RowVectorXcd scalar = Eigen::RowVectorXcd::Zero(n);
        for (Index d = 0; d < num_taps_; ++d)
            if (tap_weights(d) != 0.0)
                scalar.tail(n - d).noalias() += tap_weights(d) * (right * pilots_[m].leftCols(n - d));
        y.segment(static_cast<Index>(m) * n * rf, n * rf) = (left * scalar).reshaped();
    }
    return y;
}

FdMeasurementOperator::FdMeasurementOperator(const TrainingRealization& tr, Index num_rx, Index num_tx,
                                             Index subcarrier, Index fft_size)
    : combiners_(tr.combiners), num_rx_(num_rx), num_tx_(num_tx), rf_(tr.rf_chains())
{
    if (tr.num_frames() < 1)
        throw std::invalid_argument("FdMeasurementOperator: empty training realization");
    if (subcarrier < 0 || subcarrier >= fft_size)
        throw std::out_of_range("FdMeasurementOperator: subcarrier out of range");
    beams_.reserve(static_cast<std::size_t>(tr.num_frames()));
    for (Index m = 0; m < tr.num_frames(); ++m) {
        const auto mi = static_cast<std::size_t>(m);
        CVec s_k = CVec::Zero(rf_);
        for (Index q = 0; q < tr.frame_len(); ++q)
            s_k += twiddle(subcarrier, q + 1, fft_size) * tr.pilots[mi].col(q);
        beams_.push_back(tr.precoders[mi] * s_k);
    }
}

CVec FdMeasurementOperator::apply(const CVec& h) const
{
    if (h.size() != cols())
        throw std::invalid_argument("FdMeasurementOperator::apply: dimension mismatch");
    const auto hm = h.reshaped(num_rx_, num_tx_);
    CVec y(rows());
    for (std::size_t m = 0; m < combiners_.size(); ++m)
        y.segment(static_cast<Index>(m) * rf_, rf_) = combiners_[m].adjoint() * (hm * beams_[m]);
    return y;
}

CVec FdMeasurementOperator::apply_outer(const RVec& tap_weights, const CVec& rx, const CVec& tx) const
{
    if (tap_weights.size() != 1 || rx.size() != num_rx_ || tx.size() != num_tx_)
        throw std::invalid_argument("FdMeasurementOperator::apply_outer: dimension mismatch");
    CVec y(rows());
    for (std::size_t m = 0; m < combiners_.size(); ++m)
        y.segment(static_cast<Index>(m) * rf_, rf_) =
            (tap_weights(0) * tx.dot(beams_[m])) * (combiners_[m].adjoint() * rx);
    return y;
}

std::optional<RVec> TdMeasurementOperator::atom_norms2_framed(const SeparableAtoms& atoms,
                                                               const std::vector<CMat>& frame_left) const
{
    if (atoms.tap_weights.rows() != num_taps_ || atoms.rx.rows() != num_rx_ || atoms.tx.rows() != num_tx_)
        throw std::invalid_argument("TdMeasurementOperator::atom_norms2: dimension mismatch");
    const Index n = pilots_.front().cols();
    const Index gc = atoms.tap_weights.cols(), gt = atoms.tx.cols();
    const RMat u = combined_rx_energy(combiners_, frame_left, atoms.rx);
    RMat v(u.rows(), gc * gt);
    for (std::size_t m = 0; m < pilots_.size(); ++m) {
        // row j holds tx_j^* F s[n], the per-symbol scalar before the tap filter
        const CMat z = (atoms.tx.adjoint() * precoders_[m]) * pilots_[m];
        for (Index g = 0; g < gc; ++g) {
            CMat acc = CMat::Zero(gt, n);
            for (Index d = 0; d < num_taps_; ++d)
                if (atoms.tap_weights(d, g) != 0.0)
                    acc.rightCols(n - d) += atoms.tap_weights(d, g) * z.leftCols(n - d);
            v.block(static_cast<Index>(m), g * gt, 1, gt) = acc.rowwise().squaredNorm().transpose();
        }
    }
    return combine_energies(u, v);
}

std::optional<RVec> FdMeasurementOperator::atom_norms2_framed(const SeparableAtoms& atoms,
                                                               const std::vector<CMat>& frame_left) const
{
    if (atoms.tap_weights.size() != 1 || atoms.rx.rows() != num_rx_ || atoms.tx.rows() != num_tx_)
        throw std::invalid_argument("FdMeasurementOperator::atom_norms2: dimension mismatch");
    const RMat u = combined_rx_energy(combiners_, frame_left, atoms.rx);
    RMat v(u.rows(), atoms.tx.cols());
    const double w2 = atoms.tap_weights(0, 0) * atoms.tap_weights(0, 0);
    for (std::size_t m = 0; m < beams_.size(); ++m)
        v.row(static_cast<Index>(m)) = w2 * (atoms.tx.adjoint() * beams_[m]).cwiseAbs2().transpose();
    return combine_energies(u, v);
}

CVec FdMeasurementOperator::adjoint(const CVec& y) const
{
    if (y.size() != rows())
        throw std::invalid_argument("FdMeasurementOperator::adjoint: dimension mismatch");
    CMat left(num_rx_, static_cast<Index>(combiners_.size()));
    CMat right(num_tx_, static_cast<Index>(combiners_.size()));
    for (std::size_t m = 0; m < combiners_.size(); ++m) {
        left.col(static_cast<Index>(m)) = combiners_[m] * y.segment(static_cast<Index>(m) * rf_, rf_);
        right.col(static_cast<Index>(m)) = beams_[m];
    }
    const CMat hm = left * right.adjoint();
    return hm.reshaped();
}

} // namespace wbce
