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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wbce/recovery.hpp"
#include "wbce/training.hpp"
#include "wbce/wavechan.hpp"

namespace wbce {

enum class AnglePlacement { OnGrid, OffGrid };

struct GridSize {
    Index rx = 0, tx = 0, delay = 0;
    friend bool operator==(const GridSize&, const GridSize&) = default;
};

struct AntennaSize {
    Index rx = 0, tx = 0;
    friend bool operator==(const AntennaSize&, const AntennaSize&) = default;
};

struct ExperimentSpec {
    std::string name = "experiment";
    std::string description;

    SystemConfig base;                      // num_rx/num_tx/num_paths are overridden by the sweep axes
    std::vector<AntennaSize> antennas{{16, 32}};
    std::vector<double> snr_db{0.0};
    std::vector<Index> m_frames{60};
    std::vector<Index> n_rf{1};
    std::vector<Index> n_p{2};
    std::vector<Index> p_subcarriers{1};
    std::vector<int> phase_bits{2};
    // Either explicit grids, or grids derived as oversampling * antennas with a fixed delay grid.
    std::vector<GridSize> grids{{32, 64, 8}};
    std::vector<Index> grid_oversampling;
    Index grid_delay = 0;                   // 0 means 2 * N_c, used with grid_oversampling
    std::vector<EstimatorKind> estimators{EstimatorKind::TD};

    Index trials = 200;
    std::uint64_t seed = 1;
    AnglePlacement placement = AnglePlacement::OffGrid;
    Index streams = 1;
    bool compute_rate = true;
    std::optional<Index> max_atoms_td;
    std::optional<Index> max_atoms_fd;
    double min_residual_decrease = 1e-12;

    std::optional<Index> overhead_reference_symbols;
    std::string annotation;

    // Replays every sweep point with this single trial seed instead of deriving one per trial.
    std::optional<std::uint64_t> replay_seed;

    void validate() const;
    /// Canonical key=value text; parse_spec(to_text()) reproduces the spec.
    std::string to_text() const;
};

ExperimentSpec parse_spec(const std::string& text);
ExperimentSpec load_spec(const std::string& path_or_preset);

/// One sweep point, without the estimator and P (those are expanded per trial).
struct SweepPoint {
    AntennaSize antennas;
    GridSize grid;
    int phase_bits = 2;
    Index n_p = 2;
    Index m_frames = 60;
    Index n_rf = 1;
    double snr_db = 0.0;
};

std::vector<SweepPoint> expand_points(const ExperimentSpec& spec);

std::uint64_t trial_seed(const ExperimentSpec& spec, Index trial);

struct TrialRow {
    EstimatorKind estimator = EstimatorKind::TD;
    SweepPoint point;
    Index p_subcarriers = 0;                // 0 for TD/FD, which do not use P
    std::optional<Index> trial;             // empty on aggregate rows
    std::optional<std::uint64_t> seed;
    double nmse = 0.0;
    std::optional<double> rate;
    std::vector<std::string> flags;
};

struct ResultTable {
    std::vector<TrialRow> rows;             // canonical order: sweep point, estimator/P, trial, then the mean row
    double wall_time_s = 0.0;
};

/// Runs all estimators on one realization (channel, training, noise) of \p point.
std::vector<TrialRow> run_trial(const ExperimentSpec& spec, const SweepPoint& point, Index trial, std::uint64_t seed);

ResultTable run_experiment(const ExperimentSpec& spec, unsigned threads = 1);

inline constexpr const char* kCsvHeader =
    "estimator,snr_db,m_frames,n_rf,n_p,p_subcarriers,g_r,g_t,g_c,trial,seed,nmse,nmse_db,rate_bps_hz,flags,n_r,n_t,n_q";

std::string to_csv(const ResultTable& table);
std::string to_json_rows(const ResultTable& table);
std::string manifest_json(const ExperimentSpec& spec, const ResultTable& table);

// Presets shipped inside the binary.
std::vector<std::string> preset_names();
std::optional<std::string> preset_text(const std::string& name);

const char* version_string();

} // namespace wbce
