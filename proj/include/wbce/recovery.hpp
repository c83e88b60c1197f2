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

#include <memory>
#include <string>
#include <vector>

#include "wbce/dictionary.hpp"
#include "wbce/linear_operator.hpp"
#include "wbce/training.hpp"
#include "wbce/types.hpp"

namespace wbce {

// ---------------------------------------------------------------------------
// Whitening

/// blockdiag_m(I_repeats kron L_m^{-1}) with C_m = L_m L_m^*.
struct Whitener {
    std::vector<CMat> inv_factors;
    Index repeats = 1;
    double threshold = 0.0; // E[e_w^* e_w] of the whitened noise
    std::vector<std::string> warnings;

    CVec apply(const CVec& y) const;
    CVec apply_adjoint(const CVec& y) const;
};

/// Cholesky-based whitener. A block that is not positive definite keeps the
/// identity and records a warning.
Whitener make_whitener(const BlockCovariance& cov);

class WhitenedOperator final : public LinearOperator {
public:
    WhitenedOperator(std::shared_ptr<const LinearOperator> base, std::shared_ptr<const Whitener> whitener);

    Index rows() const override { return base_->rows(); }
    Index cols() const override { return base_->cols(); }
    CVec apply(const CVec& v) const override { return whitener_->apply(base_->apply(v)); }
    CVec adjoint(const CVec& y) const override { return base_->adjoint(whitener_->apply_adjoint(y)); }
    CVec apply_outer(const RVec& w, const CVec& rx, const CVec& tx) const override
    {
        return whitener_->apply(base_->apply_outer(w, rx, tx));
    }
    RVec atom_norms2(const SeparableAtoms& atoms) const override;

private:
    std::shared_ptr<const LinearOperator> base_;
    std::shared_ptr<const Whitener> whitener_;
};

struct WhitenedProblem {
    CVec y;
    std::shared_ptr<const LinearOperator> op;
    double threshold = 0.0;
    std::vector<std::string> warnings;
};

WhitenedProblem whiten(const CVec& y, const BlockCovariance& cov, std::shared_ptr<const LinearOperator> op);

// ---------------------------------------------------------------------------
// Sensing matrix Phi * Psi

class SensingOperator {
public:
    virtual ~SensingOperator() = default;
    virtual Index rows() const = 0;
    virtual Index atoms() const = 0;
    /// (Phi Psi)^* r
    virtual CVec correlate(const CVec& r) const = 0;
    /// Phi Psi e_atom
    virtual CVec column(Index atom) const = 0;
    /// ||Phi Psi e_atom||^2 for every atom.
    virtual RVec column_norms2() const;
};

class ComposedSensing final : public SensingOperator {
public:
    ComposedSensing(std::shared_ptr<const LinearOperator> phi, std::shared_ptr<const Dictionary> psi);

    Index rows() const override { return phi_->rows(); }
    Index atoms() const override { return psi_->atoms(); }
    CVec correlate(const CVec& r) const override { return psi_->correlate(phi_->adjoint(r)); }
    CVec column(Index atom) const override;
    RVec column_norms2() const override;

private:
    std::shared_ptr<const LinearOperator> phi_;
    std::shared_ptr<const Dictionary> psi_;
};

class DenseSensing final : public SensingOperator {
public:
    explicit DenseSensing(CMat a) : a_(std::move(a)) {}
    Index rows() const override { return a_.rows(); }
    Index atoms() const override { return a_.cols(); }
    CVec correlate(const CVec& r) const override { return a_.adjoint() * r; }
    CVec column(Index atom) const override { return a_.col(atom); }
    RVec column_norms2() const override { return a_.colwise().squaredNorm().transpose(); }

private:
    CMat a_;
};

// ---------------------------------------------------------------------------
// Least squares

struct LsResult {
    CVec gains;                 // one entry per input column; dropped columns hold 0
    bool regularized = false;
    std::vector<Index> dropped;
    std::vector<std::string> warnings;
};

/// Normal-equation solve of min ||y - Omega x||. Ridge lambda = 1e-10 * trace/n is
/// added when the eigenvalue condition estimate exceeds 1e10; columns are dropped
/// (most collinear first) only if the regularized system still fails.
LsResult ls_refit(const CMat& omega, const CVec& y);

/// Same solver given the Gram matrix and Omega^* y.
LsResult solve_normal_equations(const CMat& gram, const CVec& rhs);

// ---------------------------------------------------------------------------
// OMP

struct OmpSettings {
    double stop_threshold = 0.0;          // epsilon, compared against ||r||^2
    Index max_atoms = 1;
    double min_residual_decrease = 1e-12; // relative to ||y||^2
    bool normalize_columns = true;        // select by |a_i^* r| / ||a_i|| instead of |a_i^* r|
};

enum class OmpStop { Threshold, MaxAtoms, Stalled, NoCorrelation };

struct OmpResult {
    std::vector<Index> support;      // insertion order
    CVec gains;
    CVec residual;
    std::vector<double> residual_history; // ||r||^2, starting with ||y||^2
    OmpStop reason = OmpStop::Threshold;
    std::vector<std::string> warnings;
};

/// Scores within kTieTolerance (relative) of the running best count as ties and keep
/// the lower index. Columns with ||a||^2 <= kZeroColumn * max ||a||^2 are never selected.
inline constexpr double kTieTolerance = 1e-12;
inline constexpr double kZeroColumn = 1e-20;
OmpResult omp(const SensingOperator& sensing, const CVec& y, const OmpSettings& settings);

// ---------------------------------------------------------------------------
// End-to-end estimators

enum class EstimatorKind { TD, FD, TF };

const char* to_string(EstimatorKind k);
EstimatorKind estimator_from_string(const std::string& s);

struct RecoveryOptions {
    Index max_atoms_td = 32;             // default 2 * N_p * G_c
    Index max_atoms_fd = 4;              // default 2 * N_p
    double min_residual_decrease = 1e-12;

    static RecoveryOptions for_paths(Index num_paths, Index grid_delay);
};

struct EstimateDiagnostics {
    Index omp_calls = 0;
    Index iterations = 0;
    double final_residual = 0.0;         // ||r||^2 of the last OMP call, whitened
    const char* residual_rule = "squared-norm";
    std::vector<std::string> warnings;
};

struct ChannelEstimate {
    EstimatorKind kind = EstimatorKind::TD;
    std::vector<DelayAngleIndex> td_support;           // TD: OMP atoms
    std::vector<std::vector<AnglePair>> fd_support;    // FD/TF: per processed subcarrier
    std::vector<Index> subcarriers;                    // FD/TF: which k each fd_support entry belongs to
    std::vector<AnglePair> pairs;                      // distinct angle pairs used by the final refit
    CVec gains;
    CVec h_c;                                          // N_c*N_r*N_t
    std::vector<CMat> freq;                            // FD: per-subcarrier H[k] estimates
    EstimateDiagnostics diag;
};

/// Evenly spaced subcarriers round(p*K/P), p = 0..P-1.
std::vector<Index> tf_subcarriers(Index fft_size, Index count);

/// Duplicate-free union in first-seen order.
std::vector<AnglePair> union_pairs(const std::vector<std::vector<AnglePair>>& sets);

ChannelEstimate estimate_td(const MeasurementSet& meas, const TrainingRealization& tr,
                            std::shared_ptr<const TimeDictionary> dict, const RecoveryOptions& opts);

ChannelEstimate estimate_fd(const MeasurementSet& meas, const TrainingRealization& tr,
                            std::shared_ptr<const FreqDictionary> dict, Index num_taps, const RecoveryOptions& opts);

ChannelEstimate estimate_tf(const MeasurementSet& meas, const TrainingRealization& tr,
                            std::shared_ptr<const TimeDictionary> td_dict, std::shared_ptr<const FreqDictionary> fd_dict,
                            Index num_subcarriers, const RecoveryOptions& opts);

} // namespace wbce
