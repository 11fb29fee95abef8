#pragma once

#include "freespan/dasio.hpp"

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

/// Raw DAS records -> frequency x distance feature matrices.
///
/// The chain is: select a spatial segment, short-time Fourier transform per
/// channel, keep the low-frequency band, then flatten each frame into one
/// feature row (channel-major). Magnitudes are linear (no dB), DC excluded.
namespace freespan::preprocess {

enum class Taper { hann, rectangular };

/// Time-frequency-distance magnitudes. frames[f] is an n_bins x n_channels
/// matrix for the f-th analysis window.
struct Spectrogram {
    std::vector<Eigen::MatrixXd> frames;
    double bin_width_hz = 0.0;
    std::vector<double> frame_times_s;        // window start times
    std::vector<double> bin_freqs_hz;         // per bin row
    std::vector<double> channel_positions_m;  // per column

    [[nodiscard]] long n_frames() const { return static_cast<long>(frames.size()); }
    [[nodiscard]] long n_bins() const { return static_cast<long>(bin_freqs_hz.size()); }
    [[nodiscard]] long n_channels() const { return static_cast<long>(channel_positions_m.size()); }
};

struct FeatureColumn {
    double channel_position_m = 0.0;
    double frequency_hz = 0.0;
};

/// PLS input: N windows x D frequency-distance features plus per-window
/// exposure-length targets.
struct FeatureMatrix {
    Eigen::MatrixXd X;                                     // N x D
    Eigen::VectorXd y;                                     // N, exposure length (m)
    std::vector<FeatureColumn> layout;                     // D, channel-major
    std::vector<std::pair<std::string, long>> window_ids;  // (trial_id, window_index)
};

/// Column standardization state (population std, floored at kStdFloor).
struct Scaler {
    Eigen::VectorXd means;
    Eigen::VectorXd stds;
};

inline constexpr double kStdFloor = 1e-12;

/// Sub-record whose channel positions fall in [start_m, start_m + length_m).
[[nodiscard]] dasio::DasRecord select_segment(const dasio::DasRecord& record, double start_m,
                                              double length_m);

/// One-sided magnitude STFT. n_frames = floor((duration - window)/hop) + 1;
/// partial trailing windows are dropped.
[[nodiscard]] Spectrogram stft_frames(const dasio::DasRecord& record, double window_s,
                                      double hop_s, Taper taper = Taper::hann);

/// Keeps bins with 0 < k*bin_width < f_max (DC always excluded).
[[nodiscard]] Spectrogram band_limit(const Spectrogram& spec, double f_max_hz);

/// Incremental feature assembly so trials can be preprocessed one at a time
/// without holding every spectrogram in memory.
class FeatureAccumulator {
public:
    void add(const Spectrogram& spec, const dasio::TrialMetadata& meta);
    [[nodiscard]] FeatureMatrix finalize() &&;
    [[nodiscard]] long n_rows() const { return static_cast<long>(rows_.size()); }

private:
    std::vector<Eigen::VectorXd> rows_;
    std::vector<double> targets_;
    std::vector<std::pair<std::string, long>> window_ids_;
    std::vector<FeatureColumn> layout_;
    double bin_width_hz_ = 0.0;
    std::vector<double> bin_freqs_hz_;
    std::vector<double> channel_positions_m_;
    bool has_layout_ = false;
};

[[nodiscard]] FeatureMatrix build_feature_matrix(
    const std::vector<std::pair<const Spectrogram*, const dasio::TrialMetadata*>>& specs);

[[nodiscard]] Scaler fit_scaler(const Eigen::MatrixXd& X);
[[nodiscard]] Eigen::MatrixXd apply_scaler(const Scaler& scaler, const Eigen::MatrixXd& X);

/// Debug export; header row is "L<pos>_F<freq>" per column plus final "y".
void write_feature_csv(const FeatureMatrix& features, const std::filesystem::path& path);

} // namespace freespan::preprocess
