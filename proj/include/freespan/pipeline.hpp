#pragma once

#include "freespan/dasio.hpp"
#include "freespan/ocsvm.hpp"
#include "freespan/pls.hpp"
#include "freespan/preprocess.hpp"

#include <string>
#include <utility>
#include <vector>

/// Orchestrates the two-stage framework: one shared PLS feature extractor
/// trained across sections with different exposure lengths, then one
/// independent scaler + one-class SVM per free-span section, trained only
/// on that section's baseline windows.
namespace freespan::pipeline {

struct SectionSpec {
    std::string section_id;
    double baseline_exposure_m = 6.0;  // L0
};

struct ExperimentConfig {
    double segment_start_m = 8.0;
    double segment_length_m = 12.0;
    double window_s = 50.0;
    double hop_s = 5.0;
    double f_max_hz = 4.0;
    int pls_k = 0;        // 0 = select by cross-validation
    double nu = 0.1;
    double gamma = 0.0;   // 0 = per-section heuristic
    int train_trial_index = 2;
    std::vector<SectionSpec> sections;
};

struct Trial {
    dasio::DasRecord record;
    dasio::TrialMetadata meta;
};

/// Holdout split: within each (section, wave condition, exposure length)
/// group the trial with trial_index == train_index trains, the rest
/// evaluate. A group without the training index is an error.
[[nodiscard]] std::pair<std::vector<Trial>, std::vector<Trial>> split_trials(
    std::vector<Trial> trials, int train_index);

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> eval;
};

/// Same split decided from metadata alone (lets callers stream records).
[[nodiscard]] SplitIndices split_by_metadata(const std::vector<dasio::TrialMetadata>& metas,
                                             int train_index);

/// Preprocessing chain: segment selection, Hann STFT, band limit.
[[nodiscard]] preprocess::Spectrogram preprocess_trial(const dasio::DasRecord& record,
                                                       const ExperimentConfig& cfg);

[[nodiscard]] pls::PlsModel train_feature_extractor(const std::vector<Trial>& train_trials,
                                                    const ExperimentConfig& cfg);
[[nodiscard]] pls::PlsModel train_feature_extractor_features(
    const preprocess::FeatureMatrix& features, const ExperimentConfig& cfg);

[[nodiscard]] ocsvm::SectionModel train_section(const std::vector<Trial>& section_trials,
                                                const pls::PlsModel& model,
                                                const ExperimentConfig& cfg,
                                                const std::string& pls_ref = "pls");
[[nodiscard]] ocsvm::SectionModel train_section_features(
    const preprocess::FeatureMatrix& features,
    const std::vector<dasio::TrialMetadata>& metas, const pls::PlsModel& model,
    const ExperimentConfig& cfg, const std::string& pls_ref = "pls");

/// Exposure-length change: L_e - L0 (positive = extension).
[[nodiscard]] double delta_l(double baseline_m, double evaluated_m);

[[nodiscard]] dasio::AnomalyReport score_trials(const ocsvm::SectionModel& section,
                                                const pls::PlsModel& model,
                                                const std::vector<Trial>& eval_trials,
                                                const ExperimentConfig& cfg);
[[nodiscard]] dasio::AnomalyReport score_features(const ocsvm::SectionModel& section,
                                                  const pls::PlsModel& model,
                                                  const preprocess::FeatureMatrix& features,
                                                  const std::vector<dasio::TrialMetadata>& metas);

} // namespace freespan::pipeline
