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

#include <functional>

#include "wbce/types.hpp"

namespace wbce {

/// Array response generator for the receive and transmit arrays.
///
/// Every returned steering vector has unit Euclidean norm. For the built-in
/// half-wavelength ULA the n-th element is exp(j*pi*n*cos(angle))/sqrt(N).
/// Custom responses are rescaled to unit norm on return.
class SteeringGeometry {
public:
    enum class Kind { UlaHalfWavelength, Custom };

    /// (angle, num_elements) -> response
    using Response = std::function<CVec(double, Index)>;

    static SteeringGeometry ula_half_wavelength(Index num_rx, Index num_tx);
    static SteeringGeometry custom(Index num_rx, Index num_tx, Response rx, Response tx);

    Kind kind() const { return kind_; }
    Index num_rx() const { return num_rx_; }
    Index num_tx() const { return num_tx_; }

    CVec rx(double aoa) const;
    CVec tx(double aod) const;

private:
    SteeringGeometry(Kind kind, Index num_rx, Index num_tx, Response rx, Response tx);

    Kind kind_;
    Index num_rx_;
    Index num_tx_;
    Response rx_;
    Response tx_;
};

CVec ula_response(double angle, Index num_elements);

} // namespace wbce
