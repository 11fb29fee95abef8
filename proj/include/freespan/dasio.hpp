#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

/// On-disk data model for DAS trials, anomaly reports, and their binary/JSON
/// round-tripping. The `.das` payload is raw float32; everything numeric in
/// the header is fixed-layout little-endian so the format can be parsed from
/// any language without a schema.
namespace freespan::dasio {

/// One DAS measurement: a time x channel matrix of strain-rate samples.
/// Row i is the snapshot of all channels at sample instant i.
struct DasRecord {
    Eigen::MatrixXf samples;              // n_samples x n_channels
    double fs = 2000.0;                   // sampling frequency, Hz
    double channel_spacing = 0.8;         // spatial sampling interval, m
    double first_channel_position = 0.0;  // distance along cable, m

    [[nodiscard]] Eigen::Index n_samples() const { return samples.rows(); }
    [[nodiscard]] Eigen::Index n_channels() const { return samples.cols(); }
    [[nodiscard]] double duration_s() const { return static_cast<double>(samples.rows()) / fs; }
    [[nodiscard]] double channel_position(Eigen::Index c) const {
        return first_channel_position + static_cast<double>(c) * channel_spacing;
    }
};

/// Ground-truth sidecar for one trial. Stored as a JSON file next to the
/// binary payload so it can be edited without rewriting samples.
struct TrialMetadata {
    std::string trial_id;
    std::string section_id;
    double exposure_length_m = 0.0;
    double wave_height_m = 0.0;
    double wave_period_s = 0.0;
    int trial_index = 1;
    double duration_s = 0.0;
};

enum class Label { normal, anomalous };

[[nodiscard]] std::string_view label_name(Label l);

/// One scored analysis window.
struct ReportRow {
    std::string trial_id;
    std::string section_id;
    long window_index = 0;
    double anomaly_score = 0.0;
    Label label = Label::normal;
    double delta_l_m = 0.0;
    double exposure_m = 0.0;            // true exposure length of the trial
    double predicted_exposure_m = 0.0;  // regression estimate for the window
};

struct AnomalyReport {
    std::vector<ReportRow> rows;
};

struct DeltaSummary {
    double delta_l_m = 0.0;
    long n_windows = 0;
    double mean_score = 0.0;
    double fraction_anomalous = 0.0;
};

struct ReportSummary {
    long n_windows = 0;
    double mean_score = 0.0;
    double fraction_anomalous = 0.0;
    std::vector<DeltaSummary> per_delta;  // sorted by delta_l_m
};

[[nodiscard]] ReportSummary summarize(const AnomalyReport& report);

/// Size in bytes of the fixed `.das` header preceding the float32 payload.
inline constexpr std::size_t kTrialHeaderBytes = 42;

/// Writes `<path>.das` (binary samples) and `<path>.json` (metadata sidecar).
/// Output bytes are a pure function of the inputs; files are written to a
/// temporary name and renamed into place. Throws on non-finite samples or
/// invariant-violating metadata before anything touches disk.
void write_trial(const DasRecord& record, const TrialMetadata& meta,
                 const std::filesystem::path& path);

/// Reads back a trial written by write_trial. Validates magic, dimensions
/// against file length, and metadata invariants.
[[nodiscard]] std::pair<DasRecord, TrialMetadata> read_trial(const std::filesystem::path& path);

/// Validation helpers shared by the writer, the reader, and the simulator.
void validate_record(const DasRecord& record);
void validate_metadata(const TrialMetadata& meta, const DasRecord& record);

/// Report CSV: one row per window, comma separated, '.' decimal, LF endings.
void write_report_csv(const AnomalyReport& report, const std::filesystem::path& path);
[[nodiscard]] AnomalyReport read_report_csv(const std::filesystem::path& path);

/// Summary as a JSON document (serialized string, 2-space indent).
[[nodiscard]] std::string report_summary_json(const ReportSummary& summary);

} // namespace freespan::dasio
