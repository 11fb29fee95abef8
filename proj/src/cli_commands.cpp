#include "freespan/cli_commands.hpp"

#include "freespan/version.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace freespan::cli {

namespace {

using nlohmann::json;

void atomic_write_text(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc | std::ios::binary);
        if (!f) throw std::runtime_error("cannot open for writing: " + tmp.string());
        f.write(text.data(), static_cast<std::streamsize>(text.size()));
    }
    std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return std::move(ss).str();
}

template <typename T>
void maybe_get(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void write_manifest(const std::filesystem::path& out_dir, const std::string& command,
                    const std::string& config_path, const std::vector<std::string>& inputs,
                    std::uint64_t seed) {
    json j;
    j["tool"] = std::string(kToolName);
    j["tool_version"] = std::string(kToolVersion);
    j["command"] = command;
    j["config_path"] = config_path;
    j["input_paths"] = inputs;
    j["output_dir"] = out_dir.string();
    j["seed"] = seed;
    atomic_write_text(out_dir / "manifest.json", j.dump(2) + "\n");
}

std::string trial_stem(const std::string& section_id, double length_m, double height_m,
                       double period_s, int trial_index) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s_L%04.1f_H%04.2f_P%04.2f_t%d", section_id.c_str(),
                  length_m, height_m, period_s, trial_index);
    return buf;
}

} // namespace

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("FREESPAN_LOG");
        if (env == nullptr) return LogLevel::warn;
        const std::string v(env);
        if (v == "debug") return LogLevel::debug;
        if (v == "info") return LogLevel::info;
        if (v == "error") return LogLevel::error;
        return LogLevel::warn;
    }();
    return level;
}

void log(LogLevel level, const std::string& message) {
    if (static_cast<int>(level) < static_cast<int>(log_level())) return;
    static constexpr const char* names[] = {"debug", "info", "warn", "error"};
    std::cerr << "[" << names[static_cast<int>(level)] << "] " << message << "\n";
}

Config default_config() {
    Config cfg;
    cfg.experiment.sections = {{"S1", 6.0}, {"S2", 6.0}};
    cfg.grid.sections = {{"S1", 8.0, 4.73e3}, {"S2", 8.0, 4.73e3 * 1.08}};
    cfg.grid.exposure_lengths_m = {2.0, 4.0, 6.0, 8.0, 10.0};
    cfg.grid.wave_conditions = {{0.15, 1.25}, {0.15, 2.50}, {0.30, 1.25}, {0.30, 2.50}};
    cfg.grid.n_trials = 3;
    cfg.grid.seed = 42;
    return cfg;
}

Config load_config(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw std::runtime_error("invalid config " + path.string() + ": " + e.what());
    }
    Config cfg = default_config();
    pipeline::ExperimentConfig& e = cfg.experiment;
    maybe_get(j, "segment_start_m", e.segment_start_m);
    maybe_get(j, "segment_length_m", e.segment_length_m);
    maybe_get(j, "window_s", e.window_s);
    maybe_get(j, "hop_s", e.hop_s);
    maybe_get(j, "f_max_hz", e.f_max_hz);
    maybe_get(j, "pls_k", e.pls_k);
    maybe_get(j, "nu", e.nu);
    maybe_get(j, "gamma", e.gamma);
    maybe_get(j, "train_trial_index", e.train_trial_index);
    if (j.contains("sections")) {
        e.sections.clear();
        for (const json& s : j.at("sections")) {
            pipeline::SectionSpec spec;
            spec.section_id = s.at("section_id").get<std::string>();
            maybe_get(s, "baseline_exposure_m", spec.baseline_exposure_m);
            e.sections.push_back(std::move(spec));
        }
    }
    if (j.contains("grid")) {
        const json& g = j.at("grid");
        maybe_get(g, "seed", cfg.grid.seed);
        maybe_get(g, "n_trials", cfg.grid.n_trials);
        if (g.contains("exposure_lengths_m"))
            cfg.grid.exposure_lengths_m = g.at("exposure_lengths_m").get<std::vector<double>>();
        if (g.contains("wave_conditions")) {
            cfg.grid.wave_conditions.clear();
            for (const json& w : g.at("wave_conditions")) {
                WaveCondition wc;
                wc.wave_height_m = w.at("wave_height_m").get<double>();
                wc.wave_period_s = w.at("wave_period_s").get<double>();
                cfg.grid.wave_conditions.push_back(wc);
            }
        }
        if (g.contains("sections")) {
            cfg.grid.sections.clear();
            for (const json& s : g.at("sections")) {
                GridSection gs;
                gs.section_id = s.at("section_id").get<std::string>();
                maybe_get(s, "span_start_m", gs.span_start_m);
                maybe_get(s, "ei", gs.ei);
                cfg.grid.sections.push_back(std::move(gs));
            }
        }
        if (g.contains("simulator")) {
            const json& s = g.at("simulator");
            simulator::SimConfig& b = cfg.grid.base;
            maybe_get(s, "duration_s", b.duration_s);
            maybe_get(s, "fs", b.fs);
            maybe_get(s, "channel_spacing_m", b.channel_spacing_m);
            maybe_get(s, "n_channels", b.n_channels);
            maybe_get(s, "mu", b.mu);
            maybe_get(s, "n_modes", b.n_modes);
            maybe_get(s, "modal_damping", b.modal_damping);
            maybe_get(s, "noise_rms", b.noise_rms);
            maybe_get(s, "resonance_mix", b.resonance_mix);
            maybe_get(s, "resonance_skirt", b.resonance_skirt);
            maybe_get(s, "leak_fraction", b.leak_fraction);
            maybe_get(s, "gauge_smoothing", b.gauge_smoothing);
        }
    }

    if (!(e.segment_length_m > 0.0) || !(e.window_s > 0.0) || !(e.hop_s > 0.0) ||
        !(e.f_max_hz > 0.0) || !(e.nu > 0.0 && e.nu <= 1.0) || e.train_trial_index < 1)
        throw std::runtime_error("invalid config " + path.string() + ": bad experiment values");
    if (e.sections.empty())
        throw std::runtime_error("invalid config " + path.string() + ": no sections");
    return cfg;
}

std::string config_to_json(const Config& cfg) {
    json j;
    const pipeline::ExperimentConfig& e = cfg.experiment;
    j["segment_start_m"] = e.segment_start_m;
    j["segment_length_m"] = e.segment_length_m;
    j["window_s"] = e.window_s;
    j["hop_s"] = e.hop_s;
    j["f_max_hz"] = e.f_max_hz;
    j["pls_k"] = e.pls_k;
    j["nu"] = e.nu;
    j["gamma"] = e.gamma;
    j["train_trial_index"] = e.train_trial_index;
    j["sections"] = json::array();
    for (const pipeline::SectionSpec& s : e.sections)
        j["sections"].push_back({{"section_id", s.section_id},
                                 {"baseline_exposure_m", s.baseline_exposure_m}});
    json g;
    g["seed"] = cfg.grid.seed;
    g["n_trials"] = cfg.grid.n_trials;
    g["exposure_lengths_m"] = cfg.grid.exposure_lengths_m;
    g["wave_conditions"] = json::array();
    for (const WaveCondition& w : cfg.grid.wave_conditions)
        g["wave_conditions"].push_back(
            {{"wave_height_m", w.wave_height_m}, {"wave_period_s", w.wave_period_s}});
    g["sections"] = json::array();
    for (const GridSection& s : cfg.grid.sections)
        g["sections"].push_back({{"section_id", s.section_id},
                                 {"span_start_m", s.span_start_m},
                                 {"ei", s.ei}});
    const simulator::SimConfig& b = cfg.grid.base;
    g["simulator"] = {{"duration_s", b.duration_s},
                      {"fs", b.fs},
                      {"channel_spacing_m", b.channel_spacing_m},
                      {"n_channels", b.n_channels},
                      {"mu", b.mu},
                      {"n_modes", b.n_modes},
                      {"modal_damping", b.modal_damping},
                      {"noise_rms", b.noise_rms},
                      {"resonance_mix", b.resonance_mix},
                      {"resonance_skirt", b.resonance_skirt},
                      {"leak_fraction", b.leak_fraction},
                      {"gauge_smoothing", b.gauge_smoothing}};
    j["grid"] = g;
    return j.dump(2) + "\n";
}

std::vector<simulator::SimConfig> expand_grid(const GridSpec& grid) {
    if (grid.sections.empty() || grid.exposure_lengths_m.empty() ||
        grid.wave_conditions.empty() || grid.n_trials < 1)
        throw std::runtime_error("invalid grid: empty dimension");
    std::vector<simulator::SimConfig> out;
    std::uint64_t ordinal = 0;
    for (const GridSection& section : grid.sections) {
        for (double length : grid.exposure_lengths_m) {
            for (const WaveCondition& wave : grid.wave_conditions) {
                for (int t = 1; t <= grid.n_trials; ++t) {
                    simulator::SimConfig cfg = grid.base;
                    cfg.section_id = section.section_id;
                    cfg.span_start_m = section.span_start_m;
                    cfg.ei = section.ei;
                    cfg.exposure_length_m = length;
                    cfg.wave_height_m = wave.wave_height_m;
                    cfg.wave_period_s = wave.wave_period_s;
                    cfg.trial_index = t;
                    cfg.trial_id = trial_stem(section.section_id, length, wave.wave_height_m,
                                              wave.wave_period_s, t);
                    cfg.seed = simulator::mix_seed(grid.seed, ordinal);
                    ++ordinal;
                    out.push_back(std::move(cfg));
                }
            }
        }
    }
    return out;
}

std::vector<CatalogEntry> catalog_trials(const std::filesystem::path& data_dir) {
    if (!std::filesystem::is_directory(data_dir))
        throw std::runtime_error("not a directory: " + data_dir.string());
    std::vector<std::filesystem::path> das_files;
    for (const auto& entry : std::filesystem::directory_iterator(data_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".das")
            das_files.push_back(entry.path());
    std::sort(das_files.begin(), das_files.end());

    std::vector<CatalogEntry> out;
    out.reserve(das_files.size());
    for (const std::filesystem::path& p : das_files) {
        std::filesystem::path stem = p;
        stem.replace_extension();
        std::filesystem::path sidecar = stem;
        sidecar += ".json";
        if (!std::filesystem::exists(sidecar))
            throw std::runtime_error("missing metadata sidecar for " + p.string());
        // metadata is cheap to parse; the record is loaded on demand
        json j = json::parse(read_text(sidecar));
        CatalogEntry e;
        e.stem = stem;
        e.meta.trial_id = j.at("trial_id").get<std::string>();
        e.meta.section_id = j.at("section_id").get<std::string>();
        e.meta.exposure_length_m = j.at("exposure_length_m").get<double>();
        e.meta.wave_height_m = j.at("wave_height_m").get<double>();
        e.meta.wave_period_s = j.at("wave_period_s").get<double>();
        e.meta.trial_index = j.at("trial_index").get<int>();
        e.meta.duration_s = j.at("duration_s").get<double>();
        out.push_back(std::move(e));
    }
    return out;
}

void cmd_simulate(const Config& cfg, const std::filesystem::path& out_dir,
                  const std::string& config_path) {
    std::filesystem::create_directories(out_dir);
    const std::vector<simulator::SimConfig> grid = expand_grid(cfg.grid);
    log(LogLevel::info, "simulating " + std::to_string(grid.size()) + " trials");
    std::size_t done = 0;
    for (const simulator::SimConfig& sim_cfg : grid) {
        const auto [record, meta] = simulator::simulate_trial(sim_cfg);
        dasio::write_trial(record, meta, out_dir / sim_cfg.trial_id);
        ++done;
        if (done % 10 == 0)
            log(LogLevel::info,
                "simulated " + std::to_string(done) + "/" + std::to_string(grid.size()));
    }
    write_manifest(out_dir, "simulate", config_path, {}, cfg.grid.seed);
}

void cmd_train(const Config& cfg, const std::filesystem::path& data_dir,
               const std::filesystem::path& model_dir, const std::string& config_path) {
    const std::vector<CatalogEntry> catalog = catalog_trials(data_dir);
    if (catalog.empty()) throw std::runtime_error("no trials found in " + data_dir.string());
    std::vector<dasio::TrialMetadata> metas;
    metas.reserve(catalog.size());
    for (const CatalogEntry& e : catalog) metas.push_back(e.meta);
    const pipeline::SplitIndices split =
        pipeline::split_by_metadata(metas, cfg.experiment.train_trial_index);

    // one preprocessing pass over the training split; band-limited
    // spectrograms are small enough to keep for the per-section stage
    std::vector<preprocess::Spectrogram> train_specs;
    train_specs.reserve(split.train.size());
    preprocess::FeatureAccumulator pls_features;
    for (std::size_t idx : split.train) {
        const auto [record, meta] = dasio::read_trial(catalog[idx].stem);
        train_specs.push_back(pipeline::preprocess_trial(record, cfg.experiment));
        pls_features.add(train_specs.back(), meta);
        log(LogLevel::debug, "preprocessed " + meta.trial_id);
    }

    log(LogLevel::info, "fitting PLS on " + std::to_string(pls_features.n_rows()) + " windows");
    const preprocess::FeatureMatrix features = std::move(pls_features).finalize();
    const pls::PlsModel model =
        pipeline::train_feature_extractor_features(features, cfg.experiment);
    std::filesystem::create_directories(model_dir);
    pls::save_pls(model, model_dir / "pls.json");
    log(LogLevel::info, "PLS components: " + std::to_string(model.k()));

    for (const pipeline::SectionSpec& section : cfg.experiment.sections) {
        preprocess::FeatureAccumulator acc;
        std::vector<dasio::TrialMetadata> section_metas;
        for (std::size_t i = 0; i < split.train.size(); ++i) {
            const dasio::TrialMetadata& m = metas[split.train[i]];
            if (m.section_id != section.section_id) continue;
            if (m.exposure_length_m != section.baseline_exposure_m) continue;
            acc.add(train_specs[i], m);
            section_metas.push_back(m);
        }
        if (section_metas.empty())
            throw std::runtime_error("no baseline trials for section " + section.section_id +
                                     " at L0 = " + std::to_string(section.baseline_exposure_m));
        const ocsvm::SectionModel sm = pipeline::train_section_features(
            std::move(acc).finalize(), section_metas, model, cfg.experiment, "pls.json");
        ocsvm::save_section(sm, model_dir / (section.section_id + ".svm.json"));
        log(LogLevel::info, "trained section " + section.section_id);
    }
    write_manifest(model_dir, "train", config_path, {data_dir.string()}, cfg.grid.seed);
}

void cmd_score(const Config& cfg, const std::filesystem::path& model_dir,
               const std::filesystem::path& data_dir, const std::filesystem::path& out_dir,
               const std::string& config_path) {
    const pls::PlsModel model = pls::load_pls(model_dir / "pls.json");
    std::vector<ocsvm::SectionModel> sections;
    for (const pipeline::SectionSpec& s : cfg.experiment.sections)
        sections.push_back(ocsvm::load_section(model_dir / (s.section_id + ".svm.json")));

    const std::vector<CatalogEntry> catalog = catalog_trials(data_dir);
    if (catalog.empty()) throw std::runtime_error("no trials found in " + data_dir.string());
    std::vector<dasio::TrialMetadata> metas;
    metas.reserve(catalog.size());
    for (const CatalogEntry& e : catalog) metas.push_back(e.meta);
    const pipeline::SplitIndices split =
        pipeline::split_by_metadata(metas, cfg.experiment.train_trial_index);

    dasio::AnomalyReport report;
    for (const ocsvm::SectionModel& section : sections) {
        preprocess::FeatureAccumulator acc;
        std::vector<dasio::TrialMetadata> eval_metas;
        for (std::size_t idx : split.eval) {
            if (metas[idx].section_id != section.section_id) continue;
            const auto [record, meta] = dasio::read_trial(catalog[idx].stem);
            acc.add(pipeline::preprocess_trial(record, cfg.experiment), meta);
            eval_metas.push_back(meta);
        }
        if (eval_metas.empty()) {
            log(LogLevel::warn, "no evaluation trials for section " + section.section_id);
            continue;
        }
        const dasio::AnomalyReport section_report = pipeline::score_features(
            section, model, std::move(acc).finalize(), eval_metas);
        report.rows.insert(report.rows.end(), section_report.rows.begin(),
                           section_report.rows.end());
        log(LogLevel::info, "scored section " + section.section_id + ": " +
                                std::to_string(section_report.rows.size()) + " windows");
    }

    std::filesystem::create_directories(out_dir);
    dasio::write_report_csv(report, out_dir / "report.csv");
    atomic_write_text(out_dir / "summary.json",
                      dasio::report_summary_json(dasio::summarize(report)));
    write_manifest(out_dir, "score", config_path, {model_dir.string(), data_dir.string()},
                   cfg.grid.seed);
}

EvaluationResult evaluate_report(const dasio::AnomalyReport& report) {
    if (report.rows.empty()) throw std::runtime_error("empty report");

    EvaluationResult r;
    r.n_windows = static_cast<long>(report.rows.size());

    std::vector<double> abs_delta, scores, exposures, predictions;
    std::vector<bool> predicted, truth;
    std::vector<double> baseline_scores;
    std::map<double, std::vector<double>> level_scores;
    for (const dasio::ReportRow& row : report.rows) {
        abs_delta.push_back(std::abs(row.delta_l_m));
        scores.push_back(row.anomaly_score);
        exposures.push_back(row.exposure_m);
        predictions.push_back(row.predicted_exposure_m);
        predicted.push_back(row.label == dasio::Label::anomalous);
        truth.push_back(row.delta_l_m != 0.0);
        if (row.delta_l_m == 0.0) baseline_scores.push_back(row.anomaly_score);
        else level_scores[row.delta_l_m].push_back(row.anomaly_score);
    }

    try {
        r.score_vs_abs_delta_r = stats::pearson_r(abs_delta, scores);
        r.score_correlation_defined = true;
    } catch (const std::runtime_error&) {
        r.score_correlation_defined = false;
    }

    if (!baseline_scores.empty()) {
        std::vector<double> raw_ps;
        for (const auto& [delta, sample] : level_scores) {
            const stats::TestResult t = stats::mann_whitney_u(sample, baseline_scores);
            LevelResult lr;
            lr.delta_l_m = delta;
            lr.n_windows = static_cast<long>(sample.size());
            lr.u_statistic = t.statistic;
            lr.p_raw = t.p_value;
            lr.method = t.method == stats::PMethod::exact ? "exact" : "normal_approx";
            lr.cliffs_delta = stats::cliffs_delta(sample, baseline_scores);
            r.levels.push_back(std::move(lr));
            raw_ps.push_back(t.p_value);
        }
        const std::vector<double> adjusted = stats::holm_correct(raw_ps);
        for (std::size_t i = 0; i < adjusted.size(); ++i) r.levels[i].p_holm = adjusted[i];
    }

    r.binary = stats::binary_metrics(predicted, truth);

    try {
        r.regression_r = stats::pearson_r(predictions, exposures);
        r.regression_r_defined = true;
    } catch (const std::runtime_error&) {
        r.regression_r_defined = false;
    }
    r.regression_mae_m = stats::mae(exposures, predictions);
    return r;
}

std::string evaluation_to_json(const EvaluationResult& result) {
    json j;
    j["n_windows"] = result.n_windows;
    if (result.score_correlation_defined)
        j["score_correlation"] = {{"pearson_r", result.score_vs_abs_delta_r}};
    else
        j["score_correlation"] = {{"pearson_r", "undefined"}};
    j["level_tests"] = json::array();
    for (const LevelResult& l : result.levels) {
        j["level_tests"].push_back({{"delta_l_m", l.delta_l_m},
                                    {"n_windows", l.n_windows},
                                    {"u_statistic", l.u_statistic},
                                    {"p_raw", l.p_raw},
                                    {"p_holm", l.p_holm},
                                    {"method", l.method},
                                    {"cliffs_delta", l.cliffs_delta}});
    }
    j["binary_metrics"] = {{"accuracy", result.binary.accuracy},
                           {"precision", result.binary.precision},
                           {"recall", result.binary.recall},
                           {"f1", result.binary.f1},
                           {"tp", result.binary.tp},
                           {"fp", result.binary.fp},
                           {"fn", result.binary.fn},
                           {"tn", result.binary.tn}};
    json reg;
    if (result.regression_r_defined) reg["pearson_r"] = result.regression_r;
    else reg["pearson_r"] = "undefined";
    reg["mae_m"] = result.regression_mae_m;
    j["regression"] = reg;
    return j.dump(2) + "\n";
}

void cmd_evaluate(const std::filesystem::path& report_csv,
                  const std::filesystem::path& out_path) {
    const dasio::AnomalyReport report = dasio::read_report_csv(report_csv);
    const EvaluationResult result = evaluate_report(report);
    if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
    // evaluate emits a single document, so the run manifest is embedded
    json j = json::parse(evaluation_to_json(result));
    j["manifest"] = {{"tool", std::string(kToolName)},
                     {"tool_version", std::string(kToolVersion)},
                     {"command", "evaluate"},
                     {"input_paths", std::vector<std::string>{report_csv.string()}}};
    atomic_write_text(out_path, j.dump(2) + "\n");
    log(LogLevel::info, "evaluation written to " + out_path.string());
}

} // namespace freespan::cli
