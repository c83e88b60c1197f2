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

#include <optional>
#include <string>

#include "wbce/linear_operator.hpp"
#include "wbce/steering.hpp"
#include "wbce/types.hpp"
#include "wbce/wavechan.hpp"

namespace wbce {

/// Quantized AoA/AoD grids, angle k of G is k*pi/G.
struct AngleGrids {
    RVec grid_rx; // G_r AoA grid points
    RVec grid_tx; // G_t AoD grid points
    CMat a_rx;    // N_r x G_r, column k = a_R(grid_rx(k))
    CMat a_tx;    // N_t x G_t

    Index size_rx() const { return grid_rx.size(); }
    Index size_tx() const { return grid_tx.size(); }
};

AngleGrids build_grids(const SteeringGeometry& steering, Index grid_rx, Index grid_tx);

/// Uniform delay grid of G_c points on [0, (N_c-1)T_s] (both endpoints included)
/// and the sampled pulse p_d(n) = p_rc(d*T_s - grid(n)).
struct DelayGrid {
    RVec points; // G_c delays
    RMat pulse;  // N_c x G_c; row d is p_d^T, column g is the tap profile of grid point g
    std::optional<std::string> warning;

    Index size() const { return points.size(); }
    Index num_taps() const { return pulse.rows(); }

    /// Gamma, (N_c*G_r*G_t) x (G_c*G_r*G_t), row block d = I kron p_d^T. Its columns are
    /// angle-major (a*G_c + g), a permutation of the TimeDictionary atom order.
    /// Debug path, refuses large sizes.
    RMat gamma_dense(Index grid_rx, Index grid_tx) const;
};

DelayGrid build_delay_grid(const SystemConfig& cfg, Index grid_delay);

/// Atom written as the stacked vec(w_d * rx * tx^*), d = 0..tap_weights.size()-1.
struct AtomFactors {
    RVec tap_weights;
    CVec rx;
    CVec tx;
};

/// A sparsifying basis exposed column by column.
class Dictionary {
public:
    virtual ~Dictionary() = default;

    virtual Index dim() const = 0;
    virtual Index atoms() const = 0;
    virtual CVec atom(Index index) const = 0;
    /// Psi^* z for every atom at once.
    virtual CVec correlate(const CVec& z) const = 0;
    virtual AtomFactors factors(Index index) const = 0;
    /// Factored form of all atoms when the flat order is g*(G_r*G_t) + j*G_r + i.
    virtual std::optional<SeparableAtoms> separable() const { return std::nullopt; }

    /// Materializes Psi. Only for small instances (tests, debugging).
    CMat dense(Index max_entries = Index{1} << 22) const;
};

struct AnglePair {
    Index aod = 0; // j, column of A_tx
    Index aoa = 0; // i, column of A_rx

    friend bool operator==(const AnglePair&, const AnglePair&) = default;
};

struct DelayAngleIndex {
    Index delay = 0; // g
    Index aod = 0;   // j
    Index aoa = 0;   // i

    AnglePair pair() const { return {aod, aoa}; }
    friend bool operator==(const DelayAngleIndex&, const DelayAngleIndex&) = default;
};

/// vec(a_rx,i * a_tx,j^*) = conj(a_tx,j) kron a_rx,i
CVec angle_pair_vector(const AngleGrids& grids, AnglePair pair);

/// Psi_fd = conj(A_tx) kron A_rx. Flat index = j*G_r + i.
class FreqDictionary final : public Dictionary {
public:
    explicit FreqDictionary(AngleGrids grids);

    Index dim() const override { return grids_.a_rx.rows() * grids_.a_tx.rows(); }
    Index atoms() const override { return grids_.size_rx() * grids_.size_tx(); }
    CVec atom(Index index) const override;
    CVec correlate(const CVec& z) const override;
    AtomFactors factors(Index index) const override;
    std::optional<SeparableAtoms> separable() const override;

    Index encode(AnglePair p) const;
    AnglePair decode(Index index) const;
    const AngleGrids& grids() const { return grids_; }

private:
    AngleGrids grids_;
    CMat a_rx_adj_;
};

/// Psi_td, row block d = (conj(A_tx) kron A_rx) kron p_d^T.
/// Flat index = g*(G_r*G_t) + j*G_r + i.
class TimeDictionary final : public Dictionary {
public:
    TimeDictionary(AngleGrids grids, DelayGrid delays);

    Index num_taps() const { return delays_.num_taps(); }
    Index dim() const override { return num_taps() * grids_.a_rx.rows() * grids_.a_tx.rows(); }
    Index atoms() const override { return delays_.size() * grids_.size_rx() * grids_.size_tx(); }
    CVec atom(Index index) const override;
    CVec correlate(const CVec& z) const override;
    AtomFactors factors(Index index) const override;
    std::optional<SeparableAtoms> separable() const override;

    Index encode(DelayAngleIndex t) const;
    DelayAngleIndex decode(Index index) const;

    /// Column of (I_Nc kron conj(A_tx) kron A_rx): the pair vector placed in tap block d.
    CVec tap_pair_vector(Index tap, AnglePair pair) const;

    const AngleGrids& grids() const { return grids_; }
    const DelayGrid& delays() const { return delays_; }

private:
    AngleGrids grids_;
    DelayGrid delays_;
    CMat a_rx_adj_;
};

} // namespace wbce
