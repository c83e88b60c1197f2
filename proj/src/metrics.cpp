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
#include "wbce/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace wbce {

double nmse(const CVec& truth, const CVec& estimate)
{
    if (truth.size() != estimate.size())
        throw std::invalid_argument("nmse: dimension mismatch");
    const double den = truth.squaredNorm();
    if (!(den > 0.0))
        throw std::domain_error("nmse: true channel is zero");
    return (truth - estimate).squaredNorm() / den;
}

double nmse(const TapChannel& truth, const ChannelEstimate& estimate)
{
    return nmse(truth.h_c, estimate.h_c);
}

double nmse_tapwise(const TapChannel& truth, const TapChannel& estimate)
{
    if (truth.num_taps() != estimate.num_taps())
        throw std::invalid_argument("nmse: tap count mismatch");
    double num = 0.0, den = 0.0;
    for (Index d = 0; d < truth.num_taps(); ++d) {
        const auto i = static_cast<std::size_t>(d);
        if (truth.taps[i].rows() != estimate.taps[i].rows() || truth.taps[i].cols() != estimate.taps[i].cols())
            throw std::invalid_argument("nmse: dimension mismatch");
        num += (truth.taps[i] - estimate.taps[i]).squaredNorm();
        den += truth.taps[i].squaredNorm();
    }
    if (!(den > 0.0))
        throw std::domain_error("nmse: true channel is zero");
    return num / den;
}

FreqChannel estimate_freq(const ChannelEstimate& est, Index num_rx, Index num_tx, Index fft_size)
{
    if (est.kind == EstimatorKind::FD && static_cast<Index>(est.freq.size()) == fft_size)
        return FreqChannel{est.freq};
    const Index nc = est.h_c.size() / (num_rx * num_tx);
    return freq_response_from_taps(TapChannel::from_vectorized(est.h_c, num_rx, num_tx, nc), fft_size);
}

double spectral_efficiency(const FreqChannel& truth, const FreqChannel& est, double snr, Index streams)
{
    if (truth.size() != est.size() || truth.size() == 0)
        throw std::invalid_argument("spectral_efficiency: subcarrier count mismatch");
    if (!(snr >= 0.0) || !std::isfinite(snr))
        throw std::invalid_argument("spectral_efficiency: snr must be finite and >= 0");
    if (streams < 1)
        throw std::invalid_argument("spectral_efficiency: need at least one stream");

    double total = 0.0;
    for (Index k = 0; k < truth.size(); ++k) {
        const CMat& h = truth.per_subcarrier[static_cast<std::size_t>(k)];
        const CMat& he = est.per_subcarrier[static_cast<std::size_t>(k)];
        if (h.rows() != he.rows() || h.cols() != he.cols())
            throw std::invalid_argument("spectral_efficiency: dimension mismatch");
        if (streams > std::min(h.rows(), h.cols()))
            throw std::invalid_argument("spectral_efficiency: N_s exceeds min(N_r, N_t)");

        Eigen::BDCSVD<CMat> svd(he, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const RVec& s = svd.singularValues();
        Index rank = 0;
        const double tol = s.size() > 0 ? s(0) * 1e-12 * static_cast<double>(std::max(he.rows(), he.cols())) : 0.0;
        while (rank < s.size() && s(rank) > tol)
            ++rank;
        const Index ns = std::min(streams, rank);
        if (ns == 0)
            continue;

        const CMat f = svd.matrixV().leftCols(ns);
        const CMat w = svd.matrixU().leftCols(ns);
        const CMat whf = w.adjoint() * h * f;
        const CMat wtw = w.adjoint() * w;
        const CMat m = CMat::Identity(ns, ns)
                       + (snr / static_cast<double>(ns)) * wtw.ldlt().solve(whf * whf.adjoint());
        total += std::log2(std::abs(m.partialPivLu().determinant()));
    }
    return total / static_cast<double>(truth.size());
}

} // namespace wbce
