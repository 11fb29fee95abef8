#pragma once

#include "freespan/dasio.hpp"
#include "freespan/pipeline.hpp"
#include "freespan/simulator.hpp"
#include "freespan/stats.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

/// Command implementations behind the `freespan` executable, kept in the
/// library so they can be tested directly.
namespace freespan::cli {

struct WaveCondition {
    double wave_height_m = 0.15;
    double wave_period_s = 1.25;
};

struct GridSection {
    std::string section_id = "S1";
    double span_start_m = 8.0;
    double ei = 4.73e3;
};

/// Experimental grid: sections x exposure lengths x wave conditions x trials.
struct GridSpec {
    std::vector<GridSection> sections;
    std::vector<double> exposure_lengths_m;
    std::vector<WaveCondition> wave_conditions;
    int n_trials = 3;
    simulator::SimConfig base;  // ids, exposure, wave and seed are overridden per trial
    std::uint64_t seed = 42;
};

struct Config {
    pipeline::ExperimentConfig experiment;
    GridSpec grid;
};

/// Reference experiment defaults: 2 sections, L in {2,4,6,8,10} m, 4 wave
/// conditions, 3 trials, 6 m baselines, seed 42.
[[nodiscard]] Config default_config();
[[nodiscard]] Config load_config(const std::filesystem::path& path);
[[nodiscard]] std::string config_to_json(const Config& cfg);

/// One fully-resolved SimConfig per grid cell, with deterministic per-trial
/// ids and seeds.
[[nodiscard]] std::vector<simulator::SimConfig> expand_grid(const GridSpec& grid);

struct CatalogEntry {
    std::filesystem::path stem;  // path without extension; stem.das / stem.json exist
    dasio::TrialMetadata meta;
};

/// Scans a data directory for trial pairs, sorted by path.
[[nodiscard]] std::vector<CatalogEntry> catalog_trials(const std::filesystem::path& data_dir);

void cmd_simulate(const Config& cfg, const std::filesystem::path& out_dir,
                  const std::string& config_path);
void cmd_train(const Config& cfg, const std::filesystem::path& data_dir,
               const std::filesystem::path& model_dir, const std::string& config_path);
void cmd_score(const Config& cfg, const std::filesystem::path& model_dir,
               const std::filesystem::path& data_dir, const std::filesystem::path& out_dir,
               const std::string& config_path);
void cmd_evaluate(const std::filesystem::path& report_csv, const std::filesystem::path& out_path);

/// Per-nonzero-ΔL-level comparison against the ΔL = 0 baseline.
struct LevelResult {
    double delta_l_m = 0.0;
    long n_windows = 0;
    double u_statistic = 0.0;
    double p_raw = 1.0;
    double p_holm = 1.0;
    std::string method;
    double cliffs_delta = 0.0;
};

struct EvaluationResult {
    long n_windows = 0;
    bool score_correlation_defined = false;
    double score_vs_abs_delta_r = 0.0;  // pearson r of (|ΔL|, anomaly score)
    std::vector<LevelResult> levels;
    stats::BinaryMetrics binary;  // threshold 0, positive = anomalous
    bool regression_r_defined = false;
    double regression_r = 0.0;  // pearson r of (predicted, true exposure)
    double regression_mae_m = 0.0;
};

[[nodiscard]] EvaluationResult evaluate_report(const dasio::AnomalyReport& report);
[[nodiscard]] std::string evaluation_to_json(const EvaluationResult& result);

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3 };

/// Level from FREESPAN_LOG (debug|info|warn|error), default warn.
[[nodiscard]] LogLevel log_level();
void log(LogLevel level, const std::string& message);

} // namespace freespan::cli
