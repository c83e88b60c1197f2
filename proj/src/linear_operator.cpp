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
#include "wbce/linear_operator.hpp"

#include <stdexcept>

namespace wbce {

CVec LinearOperator::apply_outer(const RVec& tap_weights, const CVec& rx, const CVec& tx) const
{
    const Index block = rx.size() * tx.size();
    if (tap_weights.size() * block != cols())
        throw std::invalid_argument("LinearOperator::apply_outer: dimension mismatch");
    const CMat outer = rx * tx.adjoint();
    CVec v(cols());
    for (Index d = 0; d < tap_weights.size(); ++d)
        v.segment(d * block, block) = tap_weights(d) * outer.reshaped();
    return apply(v);
}

RVec LinearOperator::atom_norms2(const SeparableAtoms& atoms) const
{
    const Index gr = atoms.rx.cols(), gt = atoms.tx.cols();
    RVec out(atoms.count());
    for (Index g = 0; g < atoms.tap_weights.cols(); ++g)
        for (Index j = 0; j < gt; ++j)
            for (Index i = 0; i < gr; ++i)
                out(g * gr * gt + j * gr + i) = apply_outer(atoms.tap_weights.col(g), atoms.rx.col(i), atoms.tx.col(j)).squaredNorm();
    return out;
}

std::optional<RVec> LinearOperator::atom_norms2_framed(const SeparableAtoms&, const std::vector<CMat>&) const
{
    return std::nullopt;
}

CMat LinearOperator::dense(Index max_entries) const
{
    if (rows() * cols() > max_entries)
        throw std::length_error("LinearOperator::dense: instance too large to materialize");
    CMat out(rows(), cols());
    CVec e = CVec::Zero(cols());
    for (Index c = 0; c < cols(); ++c) {
        e(c) = 1.0;
        out.col(c) = apply(e);
        e(c) = 0.0;
    }
    return out;
}

} // namespace wbce
