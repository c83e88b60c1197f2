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
#include "wbce/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "wbce/dictionary.hpp"
#include "wbce/metrics.hpp"
#include "wbce/rng.hpp"
#include "wbce/steering.hpp"

#ifndef WBCE_VERSION
#define WBCE_VERSION "0.0.0"
#endif

namespace wbce {

const char* version_string() { return WBCE_VERSION; }

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep))
        out.push_back(trim(cur));
    return out;
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& why)
{
    throw std::invalid_argument("config key '" + key + "': " + why + " (got '" + value + "')");
}

long long to_int(const std::string& key, const std::string& v)
{
    long long x = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        bad(key, v, "expected an integer");
    return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v)
{
    std::uint64_t x = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        bad(key, v, "expected an unsigned integer");
    return x;
}

double to_double(const std::string& key, const std::string& v)
{
    if (v == "inf" || v == "+inf")
        return std::numeric_limits<double>::infinity();
    double x = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        bad(key, v, "expected a number");
    return x;
}

bool to_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "on" || v == "yes" || v == "1")
        return true;
    if (v == "false" || v == "off" || v == "no" || v == "0")
        return false;
    bad(key, v, "expected true/false");
}

template <class T, class F>
std::vector<T> list_of(const std::string& key, const std::string& v, F conv)
{
    std::vector<T> out;
    for (const auto& item : split(v, ','))
        if (!item.empty())
            out.push_back(static_cast<T>(conv(key, item)));
    if (out.empty())
        bad(key, v, "empty list");
    return out;
}

std::vector<Index> dims(const std::string& key, const std::string& v, std::size_t n)
{
    auto parts = split(v, 'x');
    if (parts.size() != n)
        bad(key, v, "expected " + std::to_string(n) + " sizes joined by 'x'");
    std::vector<Index> out;
    for (const auto& p : parts)
        out.push_back(static_cast<Index>(to_int(key, p)));
    return out;
}

std::string fmt_double(double x)
{
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[64];
    for (int prec = 6; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x)
            break;
    }
    return buf;
}

template <class T, class F>
std::string join(const std::vector<T>& v, F f, const char* sep = ",")
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            s += sep;
        s += f(v[i]);
    }
    return s;
}

std::string estimator_list(const std::vector<EstimatorKind>& v)
{
    return join(v, [](EstimatorKind k) { return std::string(to_string(k)); });
}

double snr_linear(double db)
{
    return std::isinf(db) ? db : std::pow(10.0, db / 10.0);
}

std::string flag_for(const std::string& warning)
{
    const auto has = [&](const char* s) { return warning.find(s) != std::string::npos; };
    if (has("ridge"))
        return "ls-ridge";
    if (has("dropped"))
        return "ls-dropped";
    if (has("underdetermined") || has("more unknowns"))
        return "ls-underdetermined";
    if (has("whitening"))
        return "whitening-fallback";
    if (has("clamped"))
        return "omp-clamped";
    if (has("delay grid"))
        return "coarse-delay-grid";
    if (has("zero channel") || has("no paths"))
        return "zero-channel";
    return "warning";
}

void add_flag(std::vector<std::string>& flags, const std::string& f)
{
    if (std::find(flags.begin(), flags.end(), f) == flags.end())
        flags.push_back(f);
}

} // namespace

// ---------------------------------------------------------------------------

ExperimentSpec parse_spec(const std::string& text)
{
    ExperimentSpec s;
    bool fft_set = false, grids_set = false, over_set = false;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::vector<std::string> seen;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string v = trim(line.substr(eq + 1));
        if (std::find(seen.begin(), seen.end(), key) != seen.end())
            throw std::invalid_argument("config key '" + key + "' given twice");
        seen.push_back(key);

        if (key == "name") s.name = v;
        else if (key == "description") s.description = v;
        else if (key == "annotation") s.annotation = v;
        else if (key == "n_c") s.base.num_taps = static_cast<Index>(to_int(key, v));
        else if (key == "frame_len") s.base.frame_len = static_cast<Index>(to_int(key, v));
        else if (key == "fft_size") { s.base.fft_size = static_cast<Index>(to_int(key, v)); fft_set = true; }
        else if (key == "rolloff") s.base.rolloff = to_double(key, v);
        else if (key == "symbol_period") s.base.symbol_period = to_double(key, v);
        else if (key == "antennas") {
            s.antennas.clear();
            for (const auto& item : split(v, ',')) {
                const auto d = dims(key, item, 2);
                s.antennas.push_back({d[0], d[1]});
            }
        }
        else if (key == "snr_db") s.snr_db = list_of<double>(key, v, to_double);
        else if (key == "m_frames") s.m_frames = list_of<Index>(key, v, to_int);
        else if (key == "n_rf") s.n_rf = list_of<Index>(key, v, to_int);
        else if (key == "n_p") s.n_p = list_of<Index>(key, v, to_int);
        else if (key == "p_subcarriers") s.p_subcarriers = list_of<Index>(key, v, to_int);
        else if (key == "phase_bits") s.phase_bits = list_of<int>(key, v, to_int);
        else if (key == "grids") {
            s.grids.clear();
            for (const auto& item : split(v, ',')) {
                const auto d = dims(key, item, 3);
                s.grids.push_back({d[0], d[1], d[2]});
            }
            grids_set = true;
        }
        else if (key == "grid_oversampling") { s.grid_oversampling = list_of<Index>(key, v, to_int); over_set = true; }
        else if (key == "grid_delay") s.grid_delay = static_cast<Index>(to_int(key, v));
        else if (key == "estimators") {
            s.estimators.clear();
            for (const auto& item : split(v, ','))
                if (!item.empty())
                    s.estimators.push_back(estimator_from_string(item));
        }
        else if (key == "trials") s.trials = static_cast<Index>(to_int(key, v));
        else if (key == "seed") s.seed = to_u64(key, v);
        else if (key == "placement") {
            if (v == "on-grid") s.placement = AnglePlacement::OnGrid;
            else if (v == "off-grid") s.placement = AnglePlacement::OffGrid;
            else bad(key, v, "expected on-grid or off-grid");
        }
        else if (key == "streams") s.streams = static_cast<Index>(to_int(key, v));
        else if (key == "rate") s.compute_rate = to_bool(key, v);
        else if (key == "max_atoms_td") s.max_atoms_td = static_cast<Index>(to_int(key, v));
        else if (key == "max_atoms_fd") s.max_atoms_fd = static_cast<Index>(to_int(key, v));
        else if (key == "min_residual_decrease") s.min_residual_decrease = to_double(key, v);
        else if (key == "overhead_reference_symbols") s.overhead_reference_symbols = static_cast<Index>(to_int(key, v));
        else
            throw std::invalid_argument("unknown config key '" + key + "'");
    }
    if (grids_set && over_set)
        throw std::invalid_argument("config: give either grids or grid_oversampling, not both");
    if (over_set)
        s.grids.clear();
    if (!fft_set)
        s.base.fft_size = s.base.frame_len;
    s.validate();
    return s;
}

ExperimentSpec load_spec(const std::string& path_or_preset)
{
    std::ifstream f(path_or_preset);
    if (f) {
        std::stringstream ss;
        ss << f.rdbuf();
        return parse_spec(ss.str());
    }
    if (auto text = preset_text(path_or_preset))
        return parse_spec(*text);
    throw std::invalid_argument("no config file or preset named '" + path_or_preset + "'");
}

void ExperimentSpec::validate() const
{
    const auto need = [](bool ok, const char* msg) {
        if (!ok)
            throw std::invalid_argument(std::string("experiment: ") + msg);
    };
    need(!estimators.empty(), "estimator set is empty");
    need(!antennas.empty() && !snr_db.empty() && !m_frames.empty() && !n_rf.empty() && !n_p.empty()
             && !p_subcarriers.empty() && !phase_bits.empty(),
         "every sweep axis needs at least one value");
    need(!grids.empty() || !grid_oversampling.empty(), "no dictionary grid given");
    need(trials >= 1, "trials must be >= 1");
    need(streams >= 1, "streams must be >= 1");
    need(grid_delay >= 0, "grid_delay must be >= 0");
    need(min_residual_decrease >= 0.0, "min_residual_decrease must be >= 0");
    need(!max_atoms_td || *max_atoms_td >= 1, "max_atoms_td must be >= 1");
    need(!max_atoms_fd || *max_atoms_fd >= 1, "max_atoms_fd must be >= 1");

    const bool freq = std::any_of(estimators.begin(), estimators.end(),
                                  [](EstimatorKind k) { return k != EstimatorKind::TD; });
    for (const auto& a : antennas) {
        SystemConfig c = base;
        c.num_rx = a.rx;
        c.num_tx = a.tx;
        for (Index np : n_p) {
            need(np >= 1, "n_p must be >= 1");
            c.num_paths = np;
            c.validate();
        }
        need(streams <= std::min(a.rx, a.tx), "streams exceeds min(N_r, N_t)");
        for (Index r : n_rf)
            need(r >= 1 && r <= std::min(a.rx, a.tx), "n_rf must lie in [1, min(N_r, N_t)]");
    }
    if (freq)
        need(base.fft_size >= base.frame_len, "fft_size must be >= frame_len for the frequency-domain estimators");
    for (Index m : m_frames)
        need(m >= 1, "m_frames must be >= 1");
    for (int b : phase_bits)
        need(b >= 1 && b <= 16, "phase_bits must lie in [1, 16]");
    for (Index p : p_subcarriers)
        need(p >= 1 && p <= base.fft_size, "p_subcarriers must lie in [1, K]");
    for (const auto& g : grids)
        need(g.rx >= 1 && g.tx >= 1 && g.delay >= 1, "grid sizes must be >= 1");
    for (Index o : grid_oversampling)
        need(o >= 1, "grid_oversampling must be >= 1");
    for (double s : snr_db)
        need(!std::isnan(s) && s != -std::numeric_limits<double>::infinity(), "snr_db must be a number or inf");
}

std::string ExperimentSpec::to_text() const
{
    std::ostringstream o;
    const auto idx = [](Index v) { return std::to_string(v); };
    o << "name = " << name << '\n';
    if (!description.empty())
        o << "description = " << description << '\n';
    o << "antennas = " << join(antennas, [](const AntennaSize& a) { return std::to_string(a.rx) + "x" + std::to_string(a.tx); }) << '\n';
    o << "n_c = " << base.num_taps << '\n';
    o << "frame_len = " << base.frame_len << '\n';
    o << "fft_size = " << base.fft_size << '\n';
    o << "rolloff = " << fmt_double(base.rolloff) << '\n';
    o << "symbol_period = " << fmt_double(base.symbol_period) << '\n';
    o << "snr_db = " << join(snr_db, fmt_double) << '\n';
    o << "m_frames = " << join(m_frames, idx) << '\n';
    o << "n_rf = " << join(n_rf, idx) << '\n';
    o << "n_p = " << join(n_p, idx) << '\n';
    o << "p_subcarriers = " << join(p_subcarriers, idx) << '\n';
    o << "phase_bits = " << join(phase_bits, [](int b) { return std::to_string(b); }) << '\n';
    if (!grid_oversampling.empty()) {
        o << "grid_oversampling = " << join(grid_oversampling, idx) << '\n';
        o << "grid_delay = " << grid_delay << '\n';
    } else {
        o << "grids = "
          << join(grids, [](const GridSize& g) {
                 return std::to_string(g.rx) + "x" + std::to_string(g.tx) + "x" + std::to_string(g.delay);
             })
          << '\n';
    }
    o << "estimators = " << estimator_list(estimators) << '\n';
    o << "trials = " << trials << '\n';
    o << "seed = " << seed << '\n';
    o << "placement = " << (placement == AnglePlacement::OnGrid ? "on-grid" : "off-grid") << '\n';
    o << "streams = " << streams << '\n';
    o << "rate = " << (compute_rate ? "true" : "false") << '\n';
    if (max_atoms_td)
        o << "max_atoms_td = " << *max_atoms_td << '\n';
    if (max_atoms_fd)
        o << "max_atoms_fd = " << *max_atoms_fd << '\n';
    o << "min_residual_decrease = " << fmt_double(min_residual_decrease) << '\n';
    if (overhead_reference_symbols)
        o << "overhead_reference_symbols = " << *overhead_reference_symbols << '\n';
    if (!annotation.empty())
        o << "annotation = " << annotation << '\n';
    return o.str();
}

// ---------------------------------------------------------------------------

std::vector<SweepPoint> expand_points(const ExperimentSpec& spec)
{
    std::vector<SweepPoint> pts;
    for (const auto& a : spec.antennas) {
        std::vector<GridSize> gs = spec.grids;
        if (!spec.grid_oversampling.empty()) {
            gs.clear();
            const Index gc = spec.grid_delay > 0 ? spec.grid_delay : 2 * spec.base.num_taps;
            for (Index o : spec.grid_oversampling)
                gs.push_back({o * a.rx, o * a.tx, gc});
        }
        for (const auto& g : gs)
            for (int q : spec.phase_bits)
                for (Index np : spec.n_p)
                    for (Index m : spec.m_frames)
                        for (Index r : spec.n_rf)
                            for (double snr : spec.snr_db)
                                pts.push_back({a, g, q, np, m, r, snr});
    }
    return pts;
}

std::uint64_t trial_seed(const ExperimentSpec& spec, Index trial)
{
    if (spec.replay_seed)
        return *spec.replay_seed;
    return derive_seed(spec.seed, {static_cast<std::uint64_t>(trial)});
}

std::vector<TrialRow> run_trial(const ExperimentSpec& spec, const SweepPoint& pt, Index trial, std::uint64_t seed)
{
    SystemConfig cfg = spec.base;
    cfg.num_rx = pt.antennas.rx;
    cfg.num_tx = pt.antennas.tx;
    cfg.num_paths = pt.n_p;

    const auto steering = SteeringGeometry::ula_half_wavelength(cfg.num_rx, cfg.num_tx);
    const std::uint64_t ch_seed = derive_seed(seed, {1});
    const PathSet paths = spec.placement == AnglePlacement::OnGrid
                              ? draw_paths_on_grid(cfg, ch_seed, pt.grid.rx, pt.grid.tx, pt.grid.delay)
                              : draw_paths(cfg, ch_seed);
    const TapChannel ch = taps_from_paths(paths, cfg, steering);

    TrainingConfig tcfg;
    tcfg.num_frames = pt.m_frames;
    tcfg.rf_chains = pt.n_rf;
    tcfg.phase_bits = pt.phase_bits;
    tcfg.snr = snr_linear(pt.snr_db);
    tcfg.seed = derive_seed(seed, {2});
    const TrainingRealization tr = draw_training(cfg, tcfg);

    const bool need_td = std::any_of(spec.estimators.begin(), spec.estimators.end(),
                                     [](EstimatorKind k) { return k != EstimatorKind::FD; });
    const bool need_fd = std::any_of(spec.estimators.begin(), spec.estimators.end(),
                                     [](EstimatorKind k) { return k != EstimatorKind::TD; });
    const MeasurementSet meas = need_fd ? simulate_rx(ch, tr, cfg.fft_size) : simulate_td_rx(ch, tr);

    auto grids = build_grids(steering, pt.grid.rx, pt.grid.tx);
    std::shared_ptr<const TimeDictionary> td_dict;
    std::shared_ptr<const FreqDictionary> fd_dict;
    std::optional<std::string> delay_warning;
    if (need_td) {
        DelayGrid dg = build_delay_grid(cfg, pt.grid.delay);
        delay_warning = dg.warning;
        td_dict = std::make_shared<const TimeDictionary>(grids, std::move(dg));
    }
    if (need_fd)
        fd_dict = std::make_shared<const FreqDictionary>(std::move(grids));

    RecoveryOptions opts = RecoveryOptions::for_paths(pt.n_p, pt.grid.delay);
    if (spec.max_atoms_td)
        opts.max_atoms_td = *spec.max_atoms_td;
    if (spec.max_atoms_fd)
        opts.max_atoms_fd = *spec.max_atoms_fd;
    opts.min_residual_decrease = spec.min_residual_decrease;

    const bool want_rate = spec.compute_rate && std::isfinite(tcfg.snr);
    FreqChannel truth_freq;
    if (want_rate)
        truth_freq = freq_response_from_taps(ch, cfg.fft_size);

    std::vector<TrialRow> rows;
    const auto finish = [&](TrialRow row, const std::function<ChannelEstimate()>& run) {
        row.point = pt;
        row.trial = trial;
        row.seed = seed;
        if (ch.warning)
            add_flag(row.flags, flag_for(*ch.warning));
        if (delay_warning && row.estimator != EstimatorKind::FD)
            add_flag(row.flags, flag_for(*delay_warning));
        try {
            const ChannelEstimate est = run();
            row.nmse = nmse(ch, est);
            for (const auto& w : est.diag.warnings)
                add_flag(row.flags, flag_for(w));
            if (want_rate) {
                row.rate = spectral_efficiency(truth_freq, estimate_freq(est, cfg.num_rx, cfg.num_tx, cfg.fft_size),
                                               tcfg.snr, spec.streams);
                add_flag(row.flags, kRateSurrogateLabel);
            } else if (spec.compute_rate) {
                add_flag(row.flags, "rate-undefined-noiseless");
            }
        } catch (const std::exception&) {
            row.nmse = std::numeric_limits<double>::quiet_NaN();
            add_flag(row.flags, "failed");
        }
        rows.push_back(std::move(row));
    };

    for (EstimatorKind k : spec.estimators) {
        TrialRow row;
        row.estimator = k;
        switch (k) {
        case EstimatorKind::TD:
            finish(row, [&] { return estimate_td(meas, tr, td_dict, opts); });
            break;
        case EstimatorKind::FD:
            finish(row, [&] { return estimate_fd(meas, tr, fd_dict, cfg.num_taps, opts); });
            break;
        case EstimatorKind::TF:
            for (Index p : spec.p_subcarriers) {
                TrialRow r = row;
                r.p_subcarriers = p;
                finish(r, [&] { return estimate_tf(meas, tr, td_dict, fd_dict, p, opts); });
            }
            break;
        }
    }
    return rows;
}

ResultTable run_experiment(const ExperimentSpec& spec, unsigned threads)
{
    spec.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const auto points = expand_points(spec);
    const auto ntasks = points.size() * static_cast<std::size_t>(spec.trials);
    std::vector<std::vector<TrialRow>> results(ntasks);

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    const auto worker = [&] {
        for (std::size_t t = next++; t < ntasks; t = next++) {
            const std::size_t pi = t / static_cast<std::size_t>(spec.trials);
            const auto trial = static_cast<Index>(t % static_cast<std::size_t>(spec.trials));
            try {
                results[t] = run_trial(spec, points[pi], trial, trial_seed(spec, trial));
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error)
                    error = std::current_exception();
                next = ntasks;
            }
        }
    };
    const unsigned nthreads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, ntasks))));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < nthreads; ++i)
        pool.emplace_back(worker);
    worker();
    for (auto& th : pool)
        th.join();
    if (error)
        std::rethrow_exception(error);

    ResultTable table;
    for (std::size_t pi = 0; pi < points.size(); ++pi) {
        const std::size_t first = pi * static_cast<std::size_t>(spec.trials);
        const std::size_t series = results[first].size();
        for (std::size_t s = 0; s < series; ++s) {
            TrialRow mean = results[first][s];
            mean.trial.reset();
            mean.seed.reset();
            mean.flags.clear();
            double sum = 0.0, rate_sum = 0.0;
            Index count = 0, rate_count = 0, failed = 0;
            for (Index tr = 0; tr < spec.trials; ++tr) {
                const TrialRow& row = results[first + static_cast<std::size_t>(tr)][s];
                table.rows.push_back(row);
                for (const auto& f : row.flags)
                    add_flag(mean.flags, f);
                if (!std::isfinite(row.nmse)) {
                    ++failed;
                    continue;
                }
                sum += row.nmse;
                ++count;
                if (row.rate) {
                    rate_sum += *row.rate;
                    ++rate_count;
                }
            }
            mean.nmse = count > 0 ? sum / static_cast<double>(count) : std::numeric_limits<double>::quiet_NaN();
            mean.rate = rate_count > 0 ? std::optional<double>(rate_sum / static_cast<double>(rate_count)) : std::nullopt;
            if (failed > 0)
                add_flag(mean.flags, "excluded=" + std::to_string(failed));
            table.rows.push_back(std::move(mean));
        }
    }
    table.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return table;
}

// ---------------------------------------------------------------------------

namespace {

std::string sci(double x)
{
    if (std::isnan(x))
        return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12e", x);
    return buf;
}

std::string fixed(double x, int digits)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

double to_db(double x)
{
    return 10.0 * std::log10(x);
}

} // namespace

std::string to_csv(const ResultTable& table)
{
    std::string out = kCsvHeader;
    out += '\n';
    for (const auto& r : table.rows) {
        const auto& p = r.point;
        out += to_string(r.estimator);
        out += ',' + fmt_double(p.snr_db);
        out += ',' + std::to_string(p.m_frames);
        out += ',' + std::to_string(p.n_rf);
        out += ',' + std::to_string(p.n_p);
        out += ',' + std::to_string(r.p_subcarriers);
        out += ',' + std::to_string(p.grid.rx);
        out += ',' + std::to_string(p.grid.tx);
        out += ',' + std::to_string(p.grid.delay);
        out += ',' + (r.trial ? std::to_string(*r.trial) : std::string("mean"));
        out += ',' + (r.seed ? std::to_string(*r.seed) : std::string());
        out += ',' + sci(r.nmse);
        out += ',' + fixed(to_db(r.nmse), 6);
        out += ',' + (r.rate ? fixed(*r.rate, 6) : std::string());
        out += ',' + join(r.flags, [](const std::string& f) { return f; }, ";");
        out += ',' + std::to_string(p.antennas.rx);
        out += ',' + std::to_string(p.antennas.tx);
        out += ',' + std::to_string(p.phase_bits);
        out += '\n';
    }
    return out;
}

std::string to_json_rows(const ResultTable& table)
{
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : table.rows) {
        const auto& p = r.point;
        nlohmann::ordered_json j;
        j["estimator"] = to_string(r.estimator);
        j["snr_db"] = std::isinf(p.snr_db) ? nlohmann::ordered_json("inf") : nlohmann::ordered_json(p.snr_db);
        j["m_frames"] = p.m_frames;
        j["n_rf"] = p.n_rf;
        j["n_p"] = p.n_p;
        j["p_subcarriers"] = r.p_subcarriers;
        j["g_r"] = p.grid.rx;
        j["g_t"] = p.grid.tx;
        j["g_c"] = p.grid.delay;
        j["trial"] = r.trial ? nlohmann::ordered_json(*r.trial) : nlohmann::ordered_json("mean");
        j["seed"] = r.seed ? nlohmann::ordered_json(*r.seed) : nlohmann::ordered_json(nullptr);
        j["nmse"] = std::isfinite(r.nmse) ? nlohmann::ordered_json(r.nmse) : nlohmann::ordered_json(nullptr);
        j["nmse_db"] = std::isfinite(r.nmse) && r.nmse > 0 ? nlohmann::ordered_json(to_db(r.nmse)) : nlohmann::ordered_json(nullptr);
        j["rate_bps_hz"] = r.rate ? nlohmann::ordered_json(*r.rate) : nlohmann::ordered_json(nullptr);
        j["flags"] = r.flags;
        j["n_r"] = p.antennas.rx;
        j["n_t"] = p.antennas.tx;
        j["n_q"] = p.phase_bits;
        rows.push_back(std::move(j));
    }
    return rows.dump(1) + "\n";
}

std::string manifest_json(const ExperimentSpec& spec, const ResultTable& table)
{
    nlohmann::ordered_json m;
    m["name"] = spec.name;
    m["description"] = spec.description;
    m["version"] = version_string();
    nlohmann::ordered_json echo;
    std::istringstream in(spec.to_text());
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find(" = ");
        if (eq != std::string::npos)
            echo[line.substr(0, eq)] = line.substr(eq + 3);
    }
    m["spec"] = echo;
    m["wall_time_s"] = table.wall_time_s;
    std::size_t means = 0;
    for (const auto& r : table.rows)
        means += r.trial ? 0 : 1;
    m["trial_rows"] = table.rows.size() - means;
    m["aggregate_rows"] = means;
    m["csv_header"] = kCsvHeader;
    m["rate_metric"] = kRateSurrogateLabel;
    m["p_subcarriers_note"] = "0 on TD and FD rows, which do not use P";
    if (!spec.annotation.empty())
        m["annotation"] = spec.annotation;
    if (spec.overhead_reference_symbols) {
        const Index max_m = *std::max_element(spec.m_frames.begin(), spec.m_frames.end());
        const Index symbols = max_m * spec.base.frame_len;
        nlohmann::ordered_json o;
        o["m_frames"] = max_m;
        o["frame_len"] = spec.base.frame_len;
        o["training_symbols"] = symbols;
        o["reference_symbols"] = *spec.overhead_reference_symbols;
        o["below_reference"] = symbols < *spec.overhead_reference_symbols;
        o["kind"] = "annotation, not a measured quantity";
        m["overhead"] = o;
    }
    return m.dump(2) + "\n";
}

} // namespace wbce
