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
#include "wbce/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace wbce {

namespace {

void add_warning(std::vector<std::string>& list, const std::string& w)
{
    if (std::find(list.begin(), list.end(), w) == list.end())
        list.push_back(w);
}

void merge_warnings(std::vector<std::string>& into, const std::vector<std::string>& from)
{
    for (const auto& w : from)
        add_warning(into, w);
}

} // namespace

// ---------------------------------------------------------------------------

Whitener make_whitener(const BlockCovariance& cov)
{
    Whitener w;
    w.repeats = cov.repeats;
    w.inv_factors.reserve(cov.blocks.size());
    double trace_sum = 0.0;
    for (std::size_t m = 0; m < cov.blocks.size(); ++m) {
        const CMat& c = cov.blocks[m];
        Eigen::LLT<CMat> llt(c);
        const Index n = c.rows();
        bool ok = llt.info() == Eigen::Success;
        CMat inv;
        if (ok) {
            inv = llt.matrixL().solve(CMat::Identity(n, n));
            ok = inv.allFinite();
        }
        if (!ok) {
            add_warning(w.warnings, "singular noise covariance block, identity whitening used");
            inv = CMat::Identity(n, n);
            trace_sum += c.trace().real();
        } else {
            trace_sum += static_cast<double>(n);
        }
        w.inv_factors.push_back(std::move(inv));
    }
    w.threshold = cov.scale * static_cast<double>(cov.repeats) * trace_sum;
    return w;
}

CVec Whitener::apply(const CVec& y) const
{
    CVec out(y.size());
    Index pos = 0;
    for (const auto& l : inv_factors)
        for (Index r = 0; r < repeats; ++r) {
            out.segment(pos, l.rows()).noalias() = l * y.segment(pos, l.rows());
            pos += l.rows();
        }
    if (pos != y.size())
        throw std::invalid_argument("Whitener: vector length does not match the covariance layout");
    return out;
}

CVec Whitener::apply_adjoint(const CVec& y) const
{
    CVec out(y.size());
    Index pos = 0;
    for (const auto& l : inv_factors)
        for (Index r = 0; r < repeats; ++r) {
            out.segment(pos, l.rows()).noalias() = l.adjoint() * y.segment(pos, l.rows());
            pos += l.rows();
        }
    if (pos != y.size())
        throw std::invalid_argument("Whitener: vector length does not match the covariance layout");
    return out;
}

WhitenedOperator::WhitenedOperator(std::shared_ptr<const LinearOperator> base, std::shared_ptr<const Whitener> whitener)
    : base_(std::move(base)), whitener_(std::move(whitener))
{
}

RVec WhitenedOperator::atom_norms2(const SeparableAtoms& atoms) const
{
    if (auto framed = base_->atom_norms2_framed(atoms, whitener_->inv_factors))
        return *framed;
    return LinearOperator::atom_norms2(atoms);
}

WhitenedProblem whiten(const CVec& y, const BlockCovariance& cov, std::shared_ptr<const LinearOperator> op)
{
    if (cov.dim() != y.size() || op->rows() != y.size())
        throw std::invalid_argument("whiten: measurement, covariance and operator sizes differ");
    auto w = std::make_shared<const Whitener>(make_whitener(cov));
    WhitenedProblem p;
    p.y = w->apply(y);
    p.threshold = w->threshold;
    p.warnings = w->warnings;
    p.op = std::make_shared<WhitenedOperator>(std::move(op), std::move(w));
    return p;
}

// ---------------------------------------------------------------------------

ComposedSensing::ComposedSensing(std::shared_ptr<const LinearOperator> phi, std::shared_ptr<const Dictionary> psi)
    : phi_(std::move(phi)), psi_(std::move(psi))
{
    if (phi_->cols() != psi_->dim())
        throw std::invalid_argument("ComposedSensing: operator and dictionary dimensions differ");
}

CVec ComposedSensing::column(Index atom) const
{
    const auto f = psi_->factors(atom);
    return phi_->apply_outer(f.tap_weights, f.rx, f.tx);
}

RVec ComposedSensing::column_norms2() const
{
    if (auto sep = psi_->separable())
        return phi_->atom_norms2(*sep);
    return SensingOperator::column_norms2();
}

RVec SensingOperator::column_norms2() const
{
    RVec out(atoms());
    for (Index a = 0; a < atoms(); ++a)
        out(a) = column(a).squaredNorm();
    return out;
}

// ---------------------------------------------------------------------------

LsResult solve_normal_equations(const CMat& gram, const CVec& rhs)
{
    const Index n = gram.rows();
    LsResult out;
    out.gains = CVec::Zero(n);
    if (n == 0)
        return out;

    std::vector<Index> active(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
        active[static_cast<std::size_t>(i)] = i;

    while (!active.empty()) {
        const auto na = static_cast<Index>(active.size());
        CMat g(na, na);
        CVec b(na);
        for (Index r = 0; r < na; ++r) {
            b(r) = rhs(active[static_cast<std::size_t>(r)]);
            for (Index c = 0; c < na; ++c)
                g(r, c) = gram(active[static_cast<std::size_t>(r)], active[static_cast<std::size_t>(c)]);
        }

        Eigen::SelfAdjointEigenSolver<CMat> es(g, Eigen::EigenvaluesOnly);
        const double lmax = es.eigenvalues().maxCoeff();
        const double lmin = es.eigenvalues().minCoeff();
        const double trace = g.trace().real();
        bool solved = false;
        if (lmax > 0.0 && std::isfinite(lmax)) {
            const bool ill = !(lmin > 0.0) || lmax / lmin > 1e10;
            if (ill) {
                g.diagonal().array() += 1e-10 * trace / static_cast<double>(na);
                out.regularized = true;
                add_warning(out.warnings, "ill-conditioned least squares, ridge regularization applied");
            }
            Eigen::LDLT<CMat> ldlt(g);
            if (ldlt.info() == Eigen::Success) {
                const CVec x = ldlt.solve(b);
                if (x.allFinite()) {
                    for (Index r = 0; r < na; ++r)
                        out.gains(active[static_cast<std::size_t>(r)]) = x(r);
                    solved = true;
                }
            }
        }
        if (solved)
            return out;

        // drop a zero column if present, else the one most collinear with the rest
        Index worst = 0;
        double worst_score = -1.0;
        for (Index r = 0; r < na; ++r) {
            const double grr = g(r, r).real();
            double score = std::numeric_limits<double>::infinity();
            if (grr > 0.0) {
                score = 0.0;
                for (Index c = 0; c < na; ++c)
                    if (c != r && g(c, c).real() > 0.0)
                        score = std::max(score, std::abs(g(r, c)) / std::sqrt(grr * g(c, c).real()));
            }
            if (score > worst_score) {
                worst_score = score;
                worst = r;
            }
        }
        out.dropped.push_back(active[static_cast<std::size_t>(worst)]);
        active.erase(active.begin() + worst);
        add_warning(out.warnings, "rank-deficient least squares, collinear atom dropped");
    }
    return out;
}

LsResult ls_refit(const CMat& omega, const CVec& y)
{
    if (omega.rows() != y.size())
        throw std::invalid_argument("ls_refit: dimension mismatch");
    if (omega.cols() > omega.rows())
        throw std::invalid_argument("ls_refit: more unknowns than measurements");
    return solve_normal_equations(omega.adjoint() * omega, omega.adjoint() * y);
}

// ---------------------------------------------------------------------------

OmpResult omp(const SensingOperator& sensing, const CVec& y, const OmpSettings& settings)
{
    if (sensing.atoms() < 1)
        throw std::invalid_argument("omp: empty dictionary");
    if (!(settings.stop_threshold >= 0.0))
        throw std::invalid_argument("omp: stop threshold must be >= 0");
    if (settings.max_atoms < 1)
        throw std::invalid_argument("omp: max_atoms must be >= 1");
    if (y.size() != sensing.rows())
        throw std::invalid_argument("omp: measurement length does not match the sensing operator");

    OmpResult res;
    Index cap = std::min({settings.max_atoms, sensing.rows(), sensing.atoms()});
    if (cap < settings.max_atoms)
        add_warning(res.warnings, "max_atoms clamped to the measurement length");

    const double y2 = y.squaredNorm();
    res.residual = y;
    double r2 = y2;
    res.residual_history.push_back(r2);
    res.gains = CVec::Zero(0);

    CMat omega(y.size(), cap);
    CMat gram(cap, cap);
    CVec rhs(cap);
    std::vector<bool> used(static_cast<std::size_t>(sensing.atoms()), false);
    const RVec norms2 = sensing.column_norms2();
    const double zero_col = kZeroColumn * norms2.maxCoeff();

    while (true) {
        if (r2 <= settings.stop_threshold) {
            res.reason = OmpStop::Threshold;
            break;
        }
        const auto k = static_cast<Index>(res.support.size());
        if (k >= cap) {
            res.reason = OmpStop::MaxAtoms;
            break;
        }

        const CVec corr = sensing.correlate(res.residual);
        Index best = -1;
        double best_mag = 0.0;
        for (Index a = 0; a < corr.size(); ++a) {
            if (used[static_cast<std::size_t>(a)] || !(norms2(a) > zero_col))
                continue;
            const double mag = std::norm(corr(a)) / (settings.normalize_columns ? norms2(a) : 1.0);
            if (mag > best_mag * (1.0 + kTieTolerance)) { // the lowest index wins near-ties
                best_mag = mag;
                best = a;
            }
        }
        if (best < 0) {
            res.reason = OmpStop::NoCorrelation;
            break;
        }

        const CVec col = sensing.column(best);
        omega.col(k) = col;
        if (k > 0) {
            const CVec cross = omega.leftCols(k).adjoint() * col;
            gram.col(k).head(k) = cross;
            gram.row(k).head(k) = cross.adjoint();
        }
        gram(k, k) = col.squaredNorm();
        rhs(k) = col.dot(y);

        LsResult ls = solve_normal_equations(gram.topLeftCorner(k + 1, k + 1), rhs.head(k + 1));
        const CVec resid = y - omega.leftCols(k + 1) * ls.gains;
        const double r2_new = resid.squaredNorm();
        if (r2 - r2_new < settings.min_residual_decrease * y2) {
            res.reason = OmpStop::Stalled;
            break;
        }
        merge_warnings(res.warnings, ls.warnings);
        used[static_cast<std::size_t>(best)] = true;
        res.support.push_back(best);
        res.gains = ls.gains;
        res.residual = resid;
        r2 = r2_new;
        res.residual_history.push_back(r2);
    }
    return res;
}

// ---------------------------------------------------------------------------

const char* to_string(EstimatorKind k)
{
    switch (k) {
    case EstimatorKind::TD: return "TD";
    case EstimatorKind::FD: return "FD";
    case EstimatorKind::TF: return "TF";
    }
    return "?";
}

EstimatorKind estimator_from_string(const std::string& s)
{
    if (s == "TD" || s == "td")
        return EstimatorKind::TD;
    if (s == "FD" || s == "fd")
        return EstimatorKind::FD;
    if (s == "TF" || s == "tf")
        return EstimatorKind::TF;
    throw std::invalid_argument("unknown estimator '" + s + "' (expected TD, FD or TF)");
}

RecoveryOptions RecoveryOptions::for_paths(Index num_paths, Index grid_delay)
{
    RecoveryOptions o;
    o.max_atoms_td = std::max<Index>(1, 2 * num_paths * grid_delay);
    o.max_atoms_fd = std::max<Index>(1, 2 * num_paths);
    return o;
}

std::vector<Index> tf_subcarriers(Index fft_size, Index count)
{
    if (count < 1 || count > fft_size)
        throw std::invalid_argument("tf_subcarriers: need 1 <= P <= K");
    std::vector<Index> ks;
    ks.reserve(static_cast<std::size_t>(count));
    for (Index p = 0; p < count; ++p)
        ks.push_back(static_cast<Index>(std::lround(static_cast<double>(p * fft_size) / static_cast<double>(count))));
    return ks;
}

std::vector<AnglePair> union_pairs(const std::vector<std::vector<AnglePair>>& sets)
{
    std::vector<AnglePair> out;
    for (const auto& s : sets)
        for (const auto& p : s)
            if (std::find(out.begin(), out.end(), p) == out.end())
                out.push_back(p);
    return out;
}

namespace {

struct SubcarrierFit {
    std::vector<AnglePair> pairs;
    CVec gains;
    Index iterations = 0;
    double residual = 0.0;
    std::vector<std::string> warnings;
};

SubcarrierFit fit_subcarrier(const MeasurementSet& meas, const TrainingRealization& tr,
                             const std::shared_ptr<const FreqDictionary>& dict, Index k, const RecoveryOptions& opts)
{
    const Index nr = dict->grids().a_rx.rows();
    const Index nt = dict->grids().a_tx.rows();
    const auto K = static_cast<Index>(meas.y_fd.size());
    auto phi = std::make_shared<FdMeasurementOperator>(tr, nr, nt, k, K);
    const auto ki = static_cast<std::size_t>(k);
    WhitenedProblem wp = whiten(meas.y_fd[ki], meas.fd_noise[ki], phi);

    ComposedSensing sensing(wp.op, dict);
    const OmpResult o = omp(sensing, wp.y, {wp.threshold, opts.max_atoms_fd, opts.min_residual_decrease});

    SubcarrierFit fit;
    fit.iterations = static_cast<Index>(o.support.size());
    fit.residual = o.residual_history.back();
    fit.warnings = wp.warnings;
    merge_warnings(fit.warnings, o.warnings);
    CMat omega(wp.y.size(), static_cast<Index>(o.support.size()));
    for (std::size_t s = 0; s < o.support.size(); ++s) {
        fit.pairs.push_back(dict->decode(o.support[s]));
        omega.col(static_cast<Index>(s)) = sensing.column(o.support[s]);
    }
    const LsResult ls = ls_refit(omega, wp.y);
    merge_warnings(fit.warnings, ls.warnings);
    fit.gains = ls.gains;
    return fit;
}

void check_measurements(const MeasurementSet& meas, bool need_td, bool need_fd)
{
    if (need_td && meas.y_td.size() == 0)
        throw std::invalid_argument("estimator needs time-domain measurements");
    if (need_fd && meas.y_fd.empty())
        throw std::invalid_argument("estimator needs frequency-domain measurements");
}

} // namespace

ChannelEstimate estimate_td(const MeasurementSet& meas, const TrainingRealization& tr,
                            std::shared_ptr<const TimeDictionary> dict, const RecoveryOptions& opts)
{
    check_measurements(meas, true, false);
    const auto& grids = dict->grids();
    const Index nr = grids.a_rx.rows();
    const Index nt = grids.a_tx.rows();
    const Index nc = dict->num_taps();
    auto phi = std::make_shared<TdMeasurementOperator>(tr, nr, nt, nc);
    WhitenedProblem wp = whiten(meas.y_td, meas.td_noise, phi);

    ChannelEstimate est;
    est.kind = EstimatorKind::TD;
    est.diag.warnings = wp.warnings;

    ComposedSensing sensing(wp.op, dict);
    const OmpResult o = omp(sensing, wp.y, {wp.threshold, opts.max_atoms_td, opts.min_residual_decrease});
    est.diag.omp_calls = 1;
    est.diag.iterations = static_cast<Index>(o.support.size());
    est.diag.final_residual = o.residual_history.back();
    merge_warnings(est.diag.warnings, o.warnings);

    for (Index a : o.support) {
        const auto t = dict->decode(a);
        est.td_support.push_back(t);
        if (std::find(est.pairs.begin(), est.pairs.end(), t.pair()) == est.pairs.end())
            est.pairs.push_back(t.pair());
    }

    // reduced model: one gain per (tap, angle pair), tap-major columns
    const auto np = static_cast<Index>(est.pairs.size());
    est.h_c = CVec::Zero(dict->dim());
    if (np == 0) {
        est.gains = CVec::Zero(0);
        return est;
    }
    if (nc * np > wp.y.size())
        add_warning(est.diag.warnings, "time-domain refit has more unknowns than measurements");
    CMat omega(wp.y.size(), nc * np);
    for (Index d = 0; d < nc; ++d) {
        RVec e = RVec::Zero(nc);
        e(d) = 1.0;
        for (Index p = 0; p < np; ++p) {
            const auto& pr = est.pairs[static_cast<std::size_t>(p)];
            omega.col(d * np + p) = wp.op->apply_outer(e, grids.a_rx.col(pr.aoa), grids.a_tx.col(pr.aod));
        }
    }
    LsResult ls = omega.cols() > omega.rows() ? solve_normal_equations(omega.adjoint() * omega, omega.adjoint() * wp.y)
                                              : ls_refit(omega, wp.y);
    merge_warnings(est.diag.warnings, ls.warnings);
    est.gains = ls.gains;
    for (Index d = 0; d < nc; ++d)
        for (Index p = 0; p < np; ++p)
            est.h_c += est.gains(d * np + p) * dict->tap_pair_vector(d, est.pairs[static_cast<std::size_t>(p)]);
    return est;
}

ChannelEstimate estimate_fd(const MeasurementSet& meas, const TrainingRealization& tr,
                            std::shared_ptr<const FreqDictionary> dict, Index num_taps, const RecoveryOptions& opts)
{
    check_measurements(meas, false, true);
    const auto K = static_cast<Index>(meas.y_fd.size());
    if (num_taps < 1 || num_taps > K)
        throw std::invalid_argument("estimate_fd: need 1 <= N_c <= K");
    const auto& grids = dict->grids();
    const Index nr = grids.a_rx.rows();
    const Index nt = grids.a_tx.rows();

    ChannelEstimate est;
    est.kind = EstimatorKind::FD;
    std::vector<CVec> gains;
    for (Index k = 0; k < K; ++k) {
        SubcarrierFit fit = fit_subcarrier(meas, tr, dict, k, opts);
        CMat hk = CMat::Zero(nr, nt);
        for (std::size_t s = 0; s < fit.pairs.size(); ++s)
            hk += fit.gains(static_cast<Index>(s)) * (grids.a_rx.col(fit.pairs[s].aoa) * grids.a_tx.col(fit.pairs[s].aod).adjoint());
        est.freq.push_back(std::move(hk));
        est.fd_support.push_back(std::move(fit.pairs));
        est.subcarriers.push_back(k);
        gains.push_back(std::move(fit.gains));
        est.diag.omp_calls += 1;
        est.diag.iterations += fit.iterations;
        est.diag.final_residual = fit.residual;
        merge_warnings(est.diag.warnings, fit.warnings);
    }
    est.pairs = union_pairs(est.fd_support);

    Index total = 0;
    for (const auto& g : gains)
        total += g.size();
    est.gains.resize(total);
    Index pos = 0;
    for (const auto& g : gains) {
        est.gains.segment(pos, g.size()) = g;
        pos += g.size();
    }

    // truncated inverse DFT back to N_c taps
    est.h_c = CVec::Zero(num_taps * nr * nt);
    for (Index d = 0; d < num_taps; ++d) {
        CMat hd = CMat::Zero(nr, nt);
        for (Index k = 0; k < K; ++k) {
            const Index e = (k * d) % K;
            hd += std::polar(1.0, 2.0 * kPi * static_cast<double>(e) / static_cast<double>(K))
                  * est.freq[static_cast<std::size_t>(k)];
        }
        est.h_c.segment(d * nr * nt, nr * nt) = (hd / static_cast<double>(K)).reshaped();
    }
    return est;
}

ChannelEstimate estimate_tf(const MeasurementSet& meas, const TrainingRealization& tr,
                            std::shared_ptr<const TimeDictionary> td_dict, std::shared_ptr<const FreqDictionary> fd_dict,
                            Index num_subcarriers, const RecoveryOptions& opts)
{
    check_measurements(meas, true, true);
    const auto K = static_cast<Index>(meas.y_fd.size());
    const auto& grids = td_dict->grids();
    const Index nr = grids.a_rx.rows();
    const Index nt = grids.a_tx.rows();
    const Index nc = td_dict->num_taps();
    const Index gc = td_dict->delays().size();

    ChannelEstimate est;
    est.kind = EstimatorKind::TF;
    for (Index k : tf_subcarriers(K, num_subcarriers)) {
        SubcarrierFit fit = fit_subcarrier(meas, tr, fd_dict, k, opts);
        est.fd_support.push_back(std::move(fit.pairs));
        est.subcarriers.push_back(k);
        est.diag.omp_calls += 1;
        est.diag.iterations += fit.iterations;
        merge_warnings(est.diag.warnings, fit.warnings);
    }
    est.pairs = union_pairs(est.fd_support);

    auto phi = std::make_shared<TdMeasurementOperator>(tr, nr, nt, nc);
    WhitenedProblem wp = whiten(meas.y_td, meas.td_noise, phi);
    merge_warnings(est.diag.warnings, wp.warnings);

    const auto np = static_cast<Index>(est.pairs.size());
    est.h_c = CVec::Zero(td_dict->dim());
    est.gains = CVec::Zero(0);
    if (np == 0)
        return est;

    // restricted [Psi_td]_{:,S}: column p*G_c + g is the delay-grid atom (g, pair p)
    CMat omega(wp.y.size(), np * gc);
    const CMat pulse = td_dict->delays().pulse.cast<cplx>();
    for (Index p = 0; p < np; ++p) {
        const auto& pr = est.pairs[static_cast<std::size_t>(p)];
        CMat taps(wp.y.size(), nc);
        for (Index d = 0; d < nc; ++d) {
            RVec e = RVec::Zero(nc);
            e(d) = 1.0;
            taps.col(d) = wp.op->apply_outer(e, grids.a_rx.col(pr.aoa), grids.a_tx.col(pr.aod));
        }
        omega.middleCols(p * gc, gc).noalias() = taps * pulse;
    }
    if (omega.cols() > omega.rows())
        add_warning(est.diag.warnings, "underdetermined time-domain refit, regularized solve");
    const LsResult ls = solve_normal_equations(omega.adjoint() * omega, omega.adjoint() * wp.y);
    merge_warnings(est.diag.warnings, ls.warnings);
    est.gains = ls.gains;

    for (Index p = 0; p < np; ++p) {
        const auto& pr = est.pairs[static_cast<std::size_t>(p)];
        const CVec pv = angle_pair_vector(grids, pr);
        for (Index g = 0; g < gc; ++g) {
            const cplx x = est.gains(p * gc + g);
            for (Index d = 0; d < nc; ++d)
                est.h_c.segment(d * pv.size(), pv.size()) += (x * td_dict->delays().pulse(d, g)) * pv;
        }
    }
    return est;
}

} // namespace wbce
