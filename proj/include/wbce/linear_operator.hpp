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
#include <vector>

#include "wbce/types.hpp"

namespace wbce {

/// Atoms vec(w_g(d) * rx_i * tx_j^*) for every (g, j, i); flat index g*(G_r*G_t) + j*G_r + i.
struct SeparableAtoms {
    RMat tap_weights; // taps x G_c
    CMat rx;          // N_r x G_r
    CMat tx;          // N_t x G_t
    Index count() const { return tap_weights.cols() * rx.cols() * tx.cols(); }
};

/// Matrix-free linear map C^cols -> C^rows with its conjugate transpose.
class LinearOperator {
public:
    virtual ~LinearOperator() = default;

    virtual Index rows() const = 0;
    virtual Index cols() const = 0;
    virtual CVec apply(const CVec& v) const = 0;
    virtual CVec adjoint(const CVec& y) const = 0;

    /// Applies the map to a tap-weighted outer product, i.e. to the stacked
    /// vec(w_d * rx * tx^*) for d = 0..weights.size()-1. Operators with
    /// Kronecker structure override this with a cheaper path.
    virtual CVec apply_outer(const RVec& tap_weights, const CVec& rx, const CVec& tx) const;

    /// Squared norm of the image of every atom.
    virtual RVec atom_norms2(const SeparableAtoms& atoms) const;
    /// Same with a left transform applied to each frame's block of rows. Operators
    /// without frame structure return nothing.
    virtual std::optional<RVec> atom_norms2_framed(const SeparableAtoms& atoms, const std::vector<CMat>& frame_left) const;
    /// Debug materialization by applying the map to unit vectors.
    CMat dense(Index max_entries = Index{1} << 22) const;
};

/// Wraps an explicit matrix.
class DenseOperator final : public LinearOperator {
public:
    explicit DenseOperator(CMat m) : m_(std::move(m)) {}

    Index rows() const override { return m_.rows(); }
    Index cols() const override { return m_.cols(); }
    CVec apply(const CVec& v) const override { return m_ * v; }
    CVec adjoint(const CVec& y) const override { return m_.adjoint() * y; }
    const CMat& matrix() const { return m_; }

private:
    CMat m_;
};

} // namespace wbce
