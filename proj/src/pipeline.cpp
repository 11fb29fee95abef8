#include "freespan/pipeline.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

namespace freespan::pipeline {

namespace {

using GroupKey = std::tuple<std::string, double, double, double>;  // section, height, period, L

GroupKey group_key(const dasio::TrialMetadata& m) {
    return {m.section_id, m.wave_height_m, m.wave_period_s, m.exposure_length_m};
}

preprocess::FeatureMatrix features_of(const std::vector<Trial>& trials,
                                      const ExperimentConfig& cfg) {
    preprocess::FeatureAccumulator acc;
    for (const Trial& t : trials) acc.add(preprocess_trial(t.record, cfg), t.meta);
    return std::move(acc).finalize();
}

std::vector<dasio::TrialMetadata> metas_of(const std::vector<Trial>& trials) {
    std::vector<dasio::TrialMetadata> metas;
    metas.reserve(trials.size());
    for (const Trial& t : trials) metas.push_back(t.meta);
    return metas;
}

} // namespace

SplitIndices split_by_metadata(const std::vector<dasio::TrialMetadata>& metas, int train_index) {
    std::map<GroupKey, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < metas.size(); ++i) groups[group_key(metas[i])].push_back(i);

    SplitIndices out;
    for (const auto& [key, members] : groups) {
        bool found = false;
        for (std::size_t i : members) {
            if (metas[i].trial_index == train_index) {
                out.train.push_back(i);
                found = true;
            } else {
                out.eval.push_back(i);
            }
        }
        if (!found)
            throw std::runtime_error("missing training trial for section " + std::get<0>(key));
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.eval.begin(), out.eval.end());
    return out;
}

std::pair<std::vector<Trial>, std::vector<Trial>> split_trials(std::vector<Trial> trials,
                                                               int train_index) {
    const SplitIndices idx = split_by_metadata(metas_of(trials), train_index);
    std::vector<Trial> train, eval;
    train.reserve(idx.train.size());
    eval.reserve(idx.eval.size());
    for (std::size_t i : idx.train) train.push_back(std::move(trials[i]));
    for (std::size_t i : idx.eval) eval.push_back(std::move(trials[i]));
    return {std::move(train), std::move(eval)};
}

preprocess::Spectrogram preprocess_trial(const dasio::DasRecord& record,
                                         const ExperimentConfig& cfg) {
    const dasio::DasRecord segment =
        preprocess::select_segment(record, cfg.segment_start_m, cfg.segment_length_m);
    const preprocess::Spectrogram spec =
        preprocess::stft_frames(segment, cfg.window_s, cfg.hop_s, preprocess::Taper::hann);
    return preprocess::band_limit(spec, cfg.f_max_hz);
}

pls::PlsModel train_feature_extractor_features(const preprocess::FeatureMatrix& features,
                                               const ExperimentConfig& cfg) {
    const Eigen::Index n = features.X.rows();
    if (n < 2) throw std::runtime_error("not enough training windows");

    const int k_cap = static_cast<int>(std::min<Eigen::Index>(features.X.cols(), n - 1));
    int k = cfg.pls_k;
    if (k <= 0) {
        const int folds = static_cast<int>(std::min<Eigen::Index>(5, n));
        k = pls::select_components(features.X, features.y, std::min(10, k_cap), folds);
    }
    k = std::min(k, k_cap);
    return pls::fit_pls(features.X, features.y, k);
}

pls::PlsModel train_feature_extractor(const std::vector<Trial>& train_trials,
                                      const ExperimentConfig& cfg) {
    return train_feature_extractor_features(features_of(train_trials, cfg), cfg);
}

ocsvm::SectionModel train_section_features(const preprocess::FeatureMatrix& features,
                                           const std::vector<dasio::TrialMetadata>& metas,
                                           const pls::PlsModel& model,
                                           const ExperimentConfig& cfg,
                                           const std::string& pls_ref) {
    if (metas.empty()) throw std::runtime_error("no baseline trials");
    const std::string& section_id = metas.front().section_id;
    double baseline = metas.front().exposure_length_m;
    for (const dasio::TrialMetadata& m : metas) {
        if (m.section_id != section_id)
            throw std::runtime_error("mixed sections in baseline trials");
        if (m.exposure_length_m != baseline) throw std::runtime_error("inconsistent baseline");
    }
    if (features.X.rows() < 1) throw std::runtime_error("no baseline windows");

    const Eigen::MatrixXd latents = pls::transform(model, features.X);

    ocsvm::SectionModel section;
    section.section_id = section_id;
    section.baseline_exposure_m = baseline;
    section.pls_ref = pls_ref;
    if (latents.rows() >= 2) {
        section.scaler = preprocess::fit_scaler(latents);
    } else {
        // single-window degenerate model: center on the point, unit scale
        section.scaler.means = latents.row(0).transpose();
        section.scaler.stds = Eigen::VectorXd::Ones(latents.cols());
    }
    const Eigen::MatrixXd scaled = preprocess::apply_scaler(section.scaler, latents);
    const double gamma = cfg.gamma > 0.0 ? cfg.gamma : ocsvm::gamma_heuristic(scaled);
    section.svm = ocsvm::fit_ocsvm(scaled, cfg.nu, gamma);
    return section;
}

ocsvm::SectionModel train_section(const std::vector<Trial>& section_trials,
                                  const pls::PlsModel& model, const ExperimentConfig& cfg,
                                  const std::string& pls_ref) {
    return train_section_features(features_of(section_trials, cfg), metas_of(section_trials),
                                  model, cfg, pls_ref);
}

double delta_l(double baseline_m, double evaluated_m) {
    if (!(baseline_m > 0.0) || !(evaluated_m > 0.0))
        throw std::invalid_argument("exposure lengths must be positive");
    return evaluated_m - baseline_m;
}

dasio::AnomalyReport score_features(const ocsvm::SectionModel& section,
                                    const pls::PlsModel& model,
                                    const preprocess::FeatureMatrix& features,
                                    const std::vector<dasio::TrialMetadata>& metas) {
    for (const dasio::TrialMetadata& m : metas)
        if (m.section_id != section.section_id) throw std::runtime_error("wrong section");

    dasio::AnomalyReport report;
    if (features.X.rows() == 0) return report;

    const Eigen::MatrixXd latents = pls::transform(model, features.X);
    const Eigen::MatrixXd scaled = preprocess::apply_scaler(section.scaler, latents);
    const Eigen::VectorXd predictions = pls::predict(model, features.X);

    report.rows.reserve(static_cast<std::size_t>(features.X.rows()));
    for (Eigen::Index i = 0; i < features.X.rows(); ++i) {
        const double score = ocsvm::decision_function(section.svm, scaled.row(i).transpose());
        dasio::ReportRow row;
        row.trial_id = features.window_ids[static_cast<std::size_t>(i)].first;
        row.section_id = section.section_id;
        row.window_index = features.window_ids[static_cast<std::size_t>(i)].second;
        row.anomaly_score = score;
        row.label = score < 0.0 ? dasio::Label::anomalous : dasio::Label::normal;
        row.exposure_m = features.y(i);
        row.delta_l_m = delta_l(section.baseline_exposure_m, features.y(i));
        row.predicted_exposure_m = predictions(i);
        report.rows.push_back(std::move(row));
    }
    return report;
}

dasio::AnomalyReport score_trials(const ocsvm::SectionModel& section, const pls::PlsModel& model,
                                  const std::vector<Trial>& eval_trials,
                                  const ExperimentConfig& cfg) {
    if (eval_trials.empty()) return {};
    return score_features(section, model, features_of(eval_trials, cfg), metas_of(eval_trials));
}

} // namespace freespan::pipeline
