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
#include "wbce/wavechan.hpp"

#include <cmath>
#include <stdexcept>

#include "wbce/rng.hpp"

namespace wbce {

void SystemConfig::validate() const
{
    if (num_rx < 1 || num_tx < 1 || num_taps < 1 || fft_size < 1 || frame_len < 1)
        throw std::invalid_argument("SystemConfig: all counts must be >= 1");
    if (num_paths < 0)
        throw std::invalid_argument("SystemConfig: num_paths must be >= 0");
    if (!(symbol_period > 0.0))
        throw std::invalid_argument("SystemConfig: symbol_period must be positive");
    if (!(rolloff >= 0.0 && rolloff <= 1.0))
        throw std::invalid_argument("SystemConfig: rolloff must lie in [0, 1]");
    if (frame_len <= num_taps)
        throw std::invalid_argument("SystemConfig: frame_len must exceed num_taps");
    if (fft_size < num_taps)
        throw std::invalid_argument("SystemConfig: fft_size must be >= num_taps");
}

TapChannel TapChannel::from_taps(std::vector<CMat> taps)
{
    TapChannel ch;
    if (taps.empty())
        throw std::invalid_argument("TapChannel: at least one tap required");
    const Index nr = taps.front().rows();
    const Index nt = taps.front().cols();
    ch.h_c.resize(static_cast<Index>(taps.size()) * nr * nt);
    for (std::size_t d = 0; d < taps.size(); ++d) {
        if (taps[d].rows() != nr || taps[d].cols() != nt)
            throw std::invalid_argument("TapChannel: taps must share one shape");
        ch.h_c.segment(static_cast<Index>(d) * nr * nt, nr * nt) = taps[d].reshaped();
    }
    ch.taps = std::move(taps);
    return ch;
}

TapChannel TapChannel::from_vectorized(const CVec& h_c, Index num_rx, Index num_tx, Index num_taps)
{
    if (h_c.size() != num_rx * num_tx * num_taps)
        throw std::invalid_argument("TapChannel: vector length does not match dimensions");
    std::vector<CMat> taps(static_cast<std::size_t>(num_taps));
    const Index block = num_rx * num_tx;
    for (Index d = 0; d < num_taps; ++d)
        taps[static_cast<std::size_t>(d)] = h_c.segment(d * block, block).reshaped(num_rx, num_tx);
    TapChannel ch;
    ch.taps = std::move(taps);
    ch.h_c = h_c;
    return ch;
}

double raised_cosine(double t, double symbol_period, double rolloff)
{
    const double x = t / symbol_period;
    if (x == 0.0)
        return 1.0;
    auto sinc = [](double u) { return u == 0.0 ? 1.0 : std::sin(kPi * u) / (kPi * u); };
    const double q = 2.0 * rolloff * x;
    const double denom = 1.0 - q * q;
    if (rolloff > 0.0 && std::abs(denom) < 1e-8)
        return (kPi / 4.0) * sinc(1.0 / (2.0 * rolloff));
    return sinc(x) * std::cos(kPi * rolloff * x) / denom;
}

PathSet draw_paths(const SystemConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    Rng rng(seed);
    std::uniform_real_distribution<double> delay(0.0, static_cast<double>(cfg.num_taps - 1) * cfg.symbol_period);
    std::uniform_real_distribution<double> angle(0.0, kPi);

    PathSet p;
    p.gains.resize(cfg.num_paths);
    p.delays.resize(cfg.num_paths);
    p.aoa.resize(cfg.num_paths);
    p.aod.resize(cfg.num_paths);
    for (Index l = 0; l < cfg.num_paths; ++l) {
        p.gains(l) = complex_normal(rng, 1.0);
        p.delays(l) = delay(rng);
        p.aoa(l) = angle(rng);
        p.aod(l) = angle(rng);
    }
    return p;
}

PathSet draw_paths_on_grid(const SystemConfig& cfg, std::uint64_t seed, Index grid_rx, Index grid_tx, Index grid_delay)
{
    cfg.validate();
    if (grid_rx < 1 || grid_tx < 1 || grid_delay < 1)
        throw std::invalid_argument("draw_paths_on_grid: grid sizes must be positive");
    Rng rng(seed);
    std::uniform_int_distribution<Index> pick_rx(0, grid_rx - 1);
    std::uniform_int_distribution<Index> pick_tx(0, grid_tx - 1);
    std::uniform_int_distribution<Index> pick_delay(0, grid_delay - 1);
    const double span = static_cast<double>(cfg.num_taps - 1) * cfg.symbol_period;
    const double step = grid_delay > 1 ? span / static_cast<double>(grid_delay - 1) : 0.0;

    PathSet p;
    p.gains.resize(cfg.num_paths);
    p.delays.resize(cfg.num_paths);
    p.aoa.resize(cfg.num_paths);
    p.aod.resize(cfg.num_paths);
    for (Index l = 0; l < cfg.num_paths; ++l) {
        p.gains(l) = complex_normal(rng, 1.0);
        p.delays(l) = step * static_cast<double>(pick_delay(rng));
        p.aoa(l) = kPi * static_cast<double>(pick_rx(rng)) / static_cast<double>(grid_rx);
        p.aod(l) = kPi * static_cast<double>(pick_tx(rng)) / static_cast<double>(grid_tx);
    }
    return p;
}

CMat path_tap_gains(const PathSet& paths, const SystemConfig& cfg)
{
    CMat gamma(paths.size(), cfg.num_taps);
    for (Index l = 0; l < paths.size(); ++l)
        for (Index d = 0; d < cfg.num_taps; ++d)
            gamma(l, d) = paths.gains(l)
                          * raised_cosine(static_cast<double>(d) * cfg.symbol_period - paths.delays(l),
                                          cfg.symbol_period, cfg.rolloff);
    return gamma;
}

namespace {

std::vector<CMat> unnormalized_taps(const PathSet& paths, const SystemConfig& cfg, const SteeringGeometry& steering)
{
    if (paths.delays.size() != paths.size() || paths.aoa.size() != paths.size() || paths.aod.size() != paths.size())
        throw std::invalid_argument("PathSet: field lengths differ");
    if (steering.num_rx() != cfg.num_rx || steering.num_tx() != cfg.num_tx)
        throw std::invalid_argument("steering geometry does not match SystemConfig");

    const CMat gamma = path_tap_gains(paths, cfg);
    std::vector<CMat> taps(static_cast<std::size_t>(cfg.num_taps), CMat::Zero(cfg.num_rx, cfg.num_tx));
    for (Index l = 0; l < paths.size(); ++l) {
        const CMat outer = steering.rx(paths.aoa(l)) * steering.tx(paths.aod(l)).adjoint();
        for (Index d = 0; d < cfg.num_taps; ++d)
            taps[static_cast<std::size_t>(d)] += gamma(l, d) * outer;
    }
    return taps;
}

double power_scale_from_taps(const std::vector<CMat>& taps, const SystemConfig& cfg)
{
    double energy = 0.0;
    for (const auto& t : taps)
        energy += t.squaredNorm();
    if (energy <= 0.0)
        return 0.0;
    return std::sqrt(static_cast<double>(cfg.num_rx * cfg.num_tx) / energy);
}

} // namespace

double power_normalization(const PathSet& paths, const SystemConfig& cfg, const SteeringGeometry& steering)
{
    return power_scale_from_taps(unnormalized_taps(paths, cfg, steering), cfg);
}

TapChannel taps_from_paths(const PathSet& paths, const SystemConfig& cfg, const SteeringGeometry& steering)
{
    cfg.validate();
    auto taps = unnormalized_taps(paths, cfg, steering);
    const double scale = power_scale_from_taps(taps, cfg);
    for (auto& t : taps)
        t *= scale;
    TapChannel ch = TapChannel::from_taps(std::move(taps));
    if (scale == 0.0)
        ch.warning = "zero-power channel: no paths or all path gains vanish, normalization skipped";
    return ch;
}

FreqChannel freq_response_from_taps(const TapChannel& ch, Index fft_size)
{
    if (fft_size < ch.num_taps())
        throw std::invalid_argument("freq_response_from_taps: fft_size < num_taps aliases taps");
    FreqChannel out;
    out.per_subcarrier.assign(static_cast<std::size_t>(fft_size), CMat::Zero(ch.num_rx(), ch.num_tx()));
    for (Index k = 0; k < fft_size; ++k)
        for (Index d = 0; d < ch.num_taps(); ++d) {
            // reduce k*d first so the twiddle stays accurate for large K
            const Index kd = (k * d) % fft_size;
            const cplx w = std::polar(1.0, -2.0 * kPi * static_cast<double>(kd) / static_cast<double>(fft_size));
            out.per_subcarrier[static_cast<std::size_t>(k)] += w * ch.taps[static_cast<std::size_t>(d)];
        }
    return out;
}

cplx pulse_frequency_response(double delay, Index subcarrier, const SystemConfig& cfg)
{
    cplx beta{0.0, 0.0};
    const Index k = ((subcarrier % cfg.fft_size) + cfg.fft_size) % cfg.fft_size;
    for (Index d = 0; d < cfg.num_taps; ++d) {
        const Index kd = (k * d) % cfg.fft_size;
        beta += raised_cosine(static_cast<double>(d) * cfg.symbol_period - delay, cfg.symbol_period, cfg.rolloff)
                * std::polar(1.0, -2.0 * kPi * static_cast<double>(kd) / static_cast<double>(cfg.fft_size));
    }
    return beta;
}

FreqChannel freq_response_from_paths(const PathSet& paths, const SystemConfig& cfg, const SteeringGeometry& steering)
{
    cfg.validate();
    const double scale = power_normalization(paths, cfg, steering);
    FreqChannel out;
    out.per_subcarrier.assign(static_cast<std::size_t>(cfg.fft_size), CMat::Zero(cfg.num_rx, cfg.num_tx));
    for (Index l = 0; l < paths.size(); ++l) {
        const CMat outer = steering.rx(paths.aoa(l)) * steering.tx(paths.aod(l)).adjoint();
        for (Index k = 0; k < cfg.fft_size; ++k)
            out.per_subcarrier[static_cast<std::size_t>(k)] +=
                (scale * paths.gains(l) * pulse_frequency_response(paths.delays(l), k, cfg)) * outer;
    }
    return out;
}

} // namespace wbce
