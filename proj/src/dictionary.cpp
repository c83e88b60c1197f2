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
#include "wbce/dictionary.hpp"

#include <stdexcept>

namespace wbce {

AngleGrids build_grids(const SteeringGeometry& steering, Index grid_rx, Index grid_tx)
{
    if (grid_rx < 1 || grid_tx < 1)
        throw std::invalid_argument("build_grids: grid sizes must be >= 1");
    AngleGrids g;
    g.grid_rx.resize(grid_rx);
    g.grid_tx.resize(grid_tx);
    g.a_rx.resize(steering.num_rx(), grid_rx);
    g.a_tx.resize(steering.num_tx(), grid_tx);
    for (Index k = 0; k < grid_rx; ++k) {
        g.grid_rx(k) = static_cast<double>(k) * kPi / static_cast<double>(grid_rx);
        g.a_rx.col(k) = steering.rx(g.grid_rx(k));
    }
    for (Index k = 0; k < grid_tx; ++k) {
        g.grid_tx(k) = static_cast<double>(k) * kPi / static_cast<double>(grid_tx);
        g.a_tx.col(k) = steering.tx(g.grid_tx(k));
    }
    return g;
}

DelayGrid build_delay_grid(const SystemConfig& cfg, Index grid_delay)
{
    if (grid_delay < 1)
        throw std::invalid_argument("build_delay_grid: G_c must be >= 1");
    DelayGrid dg;
    const double span = static_cast<double>(cfg.num_taps - 1) * cfg.symbol_period;
    dg.points.resize(grid_delay);
    for (Index n = 0; n < grid_delay; ++n)
        dg.points(n) = grid_delay == 1 ? 0.0 : span * static_cast<double>(n) / static_cast<double>(grid_delay - 1);
    dg.pulse.resize(cfg.num_taps, grid_delay);
    for (Index d = 0; d < cfg.num_taps; ++d)
        for (Index n = 0; n < grid_delay; ++n)
            dg.pulse(d, n) = raised_cosine(static_cast<double>(d) * cfg.symbol_period - dg.points(n),
                                           cfg.symbol_period, cfg.rolloff);
    if (grid_delay < cfg.num_taps)
        dg.warning = "delay grid coarser than the tap spacing (G_c < N_c)";
    return dg;
}

RMat DelayGrid::gamma_dense(Index grid_rx, Index grid_tx) const
{
    const Index ang = grid_rx * grid_tx;
    const Index rows = num_taps() * ang;
    const Index cols = size() * ang;
    if (rows * cols > (Index{1} << 24))
        throw std::length_error("DelayGrid::gamma_dense: instance too large to materialize");
    // block d = I_{GrGt} kron p_d^T
    RMat gamma = RMat::Zero(rows, cols);
    for (Index d = 0; d < num_taps(); ++d)
        for (Index a = 0; a < ang; ++a)
            for (Index n = 0; n < size(); ++n)
                gamma(d * ang + a, a * size() + n) = pulse(d, n);
    return gamma;
}

CMat Dictionary::dense(Index max_entries) const
{
    if (dim() * atoms() > max_entries)
        throw std::length_error("Dictionary::dense: instance too large to materialize");
    CMat out(dim(), atoms());
    for (Index a = 0; a < atoms(); ++a)
        out.col(a) = atom(a);
    return out;
}

CVec angle_pair_vector(const AngleGrids& grids, AnglePair pair)
{
    const auto& ar = grids.a_rx;
    const auto& at = grids.a_tx;
    if (pair.aoa < 0 || pair.aoa >= ar.cols() || pair.aod < 0 || pair.aod >= at.cols())
        throw std::out_of_range("angle pair outside the grid");
    CVec v(ar.rows() * at.rows());
    for (Index t = 0; t < at.rows(); ++t)
        v.segment(t * ar.rows(), ar.rows()) = std::conj(at(t, pair.aod)) * ar.col(pair.aoa);
    return v;
}

FreqDictionary::FreqDictionary(AngleGrids grids) : grids_(std::move(grids)), a_rx_adj_(grids_.a_rx.adjoint()) {}

Index FreqDictionary::encode(AnglePair p) const
{
    if (p.aoa < 0 || p.aoa >= grids_.size_rx() || p.aod < 0 || p.aod >= grids_.size_tx())
        throw std::out_of_range("FreqDictionary::encode: index outside the grid");
    return p.aod * grids_.size_rx() + p.aoa;
}

AnglePair FreqDictionary::decode(Index index) const
{
    if (index < 0 || index >= atoms())
        throw std::out_of_range("FreqDictionary: atom index out of range");
    return {index / grids_.size_rx(), index % grids_.size_rx()};
}

CVec FreqDictionary::atom(Index index) const { return angle_pair_vector(grids_, decode(index)); }

AtomFactors FreqDictionary::factors(Index index) const
{
    const auto p = decode(index);
    return {RVec::Ones(1), grids_.a_rx.col(p.aoa), grids_.a_tx.col(p.aod)};
}

std::optional<SeparableAtoms> FreqDictionary::separable() const
{
    return SeparableAtoms{RMat::Ones(1, 1), grids_.a_rx, grids_.a_tx};
}

CVec FreqDictionary::correlate(const CVec& z) const
{
    if (z.size() != dim())
        throw std::invalid_argument("FreqDictionary::correlate: dimension mismatch");
    const auto zm = z.reshaped(grids_.a_rx.rows(), grids_.a_tx.rows());
    // (A_tx^T kron A_rx^*) vec(Z) = vec(A_rx^* Z A_tx)
    const CMat c = (a_rx_adj_ * zm) * grids_.a_tx;
    return c.reshaped();
}

TimeDictionary::TimeDictionary(AngleGrids grids, DelayGrid delays)
    : grids_(std::move(grids)), delays_(std::move(delays)), a_rx_adj_(grids_.a_rx.adjoint())
{
    if (delays_.size() < 1 || delays_.num_taps() < 1)
        throw std::invalid_argument("TimeDictionary: empty delay grid");
}

Index TimeDictionary::encode(DelayAngleIndex t) const
{
    if (t.delay < 0 || t.delay >= delays_.size() || t.aoa < 0 || t.aoa >= grids_.size_rx() || t.aod < 0
        || t.aod >= grids_.size_tx())
        throw std::out_of_range("TimeDictionary::encode: index outside the grid");
    return t.delay * grids_.size_rx() * grids_.size_tx() + t.aod * grids_.size_rx() + t.aoa;
}

DelayAngleIndex TimeDictionary::decode(Index index) const
{
    if (index < 0 || index >= atoms())
        throw std::out_of_range("TimeDictionary: atom index out of range");
    const Index ang = grids_.size_rx() * grids_.size_tx();
    const Index rem = index % ang;
    return {index / ang, rem / grids_.size_rx(), rem % grids_.size_rx()};
}

CVec TimeDictionary::atom(Index index) const
{
    const auto t = decode(index);
    const CVec pv = angle_pair_vector(grids_, t.pair());
    const Index block = pv.size();
    CVec out(dim());
    for (Index d = 0; d < num_taps(); ++d)
        out.segment(d * block, block) = delays_.pulse(d, t.delay) * pv;
    return out;
}

AtomFactors TimeDictionary::factors(Index index) const
{
    const auto t = decode(index);
    return {delays_.pulse.col(t.delay), grids_.a_rx.col(t.aoa), grids_.a_tx.col(t.aod)};
}

std::optional<SeparableAtoms> TimeDictionary::separable() const
{
    return SeparableAtoms{delays_.pulse, grids_.a_rx, grids_.a_tx};
}

CVec TimeDictionary::tap_pair_vector(Index tap, AnglePair pair) const
{
    if (tap < 0 || tap >= num_taps())
        throw std::out_of_range("TimeDictionary::tap_pair_vector: tap out of range");
    const CVec pv = angle_pair_vector(grids_, pair);
    CVec out = CVec::Zero(dim());
    out.segment(tap * pv.size(), pv.size()) = pv;
    return out;
}

CVec TimeDictionary::correlate(const CVec& z) const
{
    if (z.size() != dim())
        throw std::invalid_argument("TimeDictionary::correlate: dimension mismatch");
    const Index nr = grids_.a_rx.rows();
    const Index nt = grids_.a_tx.rows();
    const Index ang = grids_.size_rx() * grids_.size_tx();

    // per-tap angular correlation C_d = A_rx^* Z_d A_tx, then mix taps with the pulse profiles
    CMat per_tap(ang, num_taps());
    for (Index d = 0; d < num_taps(); ++d) {
        const auto zd = z.segment(d * nr * nt, nr * nt).reshaped(nr, nt);
        const CMat c = (a_rx_adj_ * zd) * grids_.a_tx;
        per_tap.col(d) = c.reshaped();
    }
    CMat mixed = per_tap * delays_.pulse.cast<cplx>();
    return mixed.reshaped();
}

} // namespace wbce
