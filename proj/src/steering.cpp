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
#include "wbce/steering.hpp"

#include <cmath>
#include <stdexcept>

namespace wbce {

CVec ula_response(double angle, Index num_elements)
{
    CVec a(num_elements);
    const double phase = kPi * std::cos(angle);
    const double scale = 1.0 / std::sqrt(static_cast<double>(num_elements));
    for (Index n = 0; n < num_elements; ++n)
        a(n) = std::polar(scale, phase * static_cast<double>(n));
    return a;
}

SteeringGeometry::SteeringGeometry(Kind kind, Index num_rx, Index num_tx, Response rx, Response tx)
    : kind_(kind), num_rx_(num_rx), num_tx_(num_tx), rx_(std::move(rx)), tx_(std::move(tx))
{
    if (num_rx < 1 || num_tx < 1)
        throw std::invalid_argument("SteeringGeometry: array sizes must be positive");
}

SteeringGeometry SteeringGeometry::ula_half_wavelength(Index num_rx, Index num_tx)
{
    return {Kind::UlaHalfWavelength, num_rx, num_tx, ula_response, ula_response};
}

SteeringGeometry SteeringGeometry::custom(Index num_rx, Index num_tx, Response rx, Response tx)
{
    if (!rx || !tx)
        throw std::invalid_argument("SteeringGeometry: custom responses must be callable");
    return {Kind::Custom, num_rx, num_tx, std::move(rx), std::move(tx)};
}

namespace {

CVec checked_unit(CVec a, Index expected)
{
    if (a.size() != expected)
        throw std::invalid_argument("SteeringGeometry: response has wrong length");
    const double n = a.norm();
    if (!(n > 0.0))
        throw std::invalid_argument("SteeringGeometry: zero response vector");
    if (std::abs(n - 1.0) > 1e-14)
        a /= n;
    return a;
}

} // namespace

CVec SteeringGeometry::rx(double aoa) const
{
    if (kind_ == Kind::UlaHalfWavelength)
        return ula_response(aoa, num_rx_);
    return checked_unit(rx_(aoa, num_rx_), num_rx_);
}

CVec SteeringGeometry::tx(double aod) const
{
    if (kind_ == Kind::UlaHalfWavelength)
        return ula_response(aod, num_tx_);
    return checked_unit(tx_(aod, num_tx_), num_tx_);
}

} // namespace wbce
