#include "freespan/preprocess.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace freespan::preprocess {

namespace {

std::vector<double> taper_weights(long window_len, Taper taper) {
    std::vector<double> w(static_cast<std::size_t>(window_len), 1.0);
    if (taper == Taper::hann) {
        // periodic Hann, the spectral-analysis convention
        for (long i = 0; i < window_len; ++i)
            w[static_cast<std::size_t>(i)] =
                0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                      static_cast<double>(window_len)));
    }
    return w;
}

std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

} // namespace

dasio::DasRecord select_segment(const dasio::DasRecord& record, double start_m, double length_m) {
    const double end_m = start_m + length_m;
    Eigen::Index first = -1;
    Eigen::Index count = 0;
    for (Eigen::Index c = 0; c < record.n_channels(); ++c) {
        const double pos = record.channel_position(c);
        if (pos >= start_m && pos < end_m) {
            if (first < 0) first = c;
            ++count;
        }
    }
    if (count == 0) throw std::runtime_error("segment outside record");

    dasio::DasRecord out;
    out.samples = record.samples.middleCols(first, count);
    out.fs = record.fs;
    out.channel_spacing = record.channel_spacing;
    out.first_channel_position = record.channel_position(first);
    return out;
}

Spectrogram stft_frames(const dasio::DasRecord& record, double window_s, double hop_s,
                        Taper taper) {
    const long window_len = std::lround(window_s * record.fs);
    const long hop = std::lround(hop_s * record.fs);
    if (window_len < 2) throw std::invalid_argument("window must cover at least 2 samples");
    if (hop < 1) throw std::invalid_argument("hop must be positive");
    if (record.n_samples() < window_len) throw std::runtime_error("record too short");

    const long n_frames = (record.n_samples() - window_len) / hop + 1;
    const long n_bins = window_len / 2 + 1;  // one-sided
    const long n_channels = record.n_channels();

    Spectrogram spec;
    spec.bin_width_hz = record.fs / static_cast<double>(window_len);
    spec.frames.assign(static_cast<std::size_t>(n_frames), Eigen::MatrixXd(n_bins, n_channels));
    spec.frame_times_s.resize(static_cast<std::size_t>(n_frames));
    spec.bin_freqs_hz.resize(static_cast<std::size_t>(n_bins));
    spec.channel_positions_m.resize(static_cast<std::size_t>(n_channels));
    for (long k = 0; k < n_bins; ++k)
        spec.bin_freqs_hz[static_cast<std::size_t>(k)] = static_cast<double>(k) * spec.bin_width_hz;
    for (long c = 0; c < n_channels; ++c)
        spec.channel_positions_m[static_cast<std::size_t>(c)] = record.channel_position(c);

    const std::vector<double> w = taper_weights(window_len, taper);

    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    std::vector<double> buf(static_cast<std::size_t>(window_len));
    std::vector<std::complex<double>> out;

    for (long f = 0; f < n_frames; ++f) {
        const long start = f * hop;
        spec.frame_times_s[static_cast<std::size_t>(f)] = static_cast<double>(start) / record.fs;
        Eigen::MatrixXd& mags = spec.frames[static_cast<std::size_t>(f)];
        for (long c = 0; c < n_channels; ++c) {
            for (long i = 0; i < window_len; ++i)
                buf[static_cast<std::size_t>(i)] =
                    static_cast<double>(record.samples(start + i, c)) * w[static_cast<std::size_t>(i)];
            fft.fwd(out, buf);
            for (long k = 0; k < n_bins; ++k)
                mags(k, c) = std::abs(out[static_cast<std::size_t>(k)]);
        }
    }
    return spec;
}

Spectrogram band_limit(const Spectrogram& spec, double f_max_hz) {
    std::vector<long> keep;
    for (long k = 0; k < spec.n_bins(); ++k) {
        const double f = spec.bin_freqs_hz[static_cast<std::size_t>(k)];
        if (f > 0.0 && f < f_max_hz) keep.push_back(k);
    }
    if (keep.empty()) throw std::runtime_error("empty band");

    Spectrogram out;
    out.bin_width_hz = spec.bin_width_hz;
    out.frame_times_s = spec.frame_times_s;
    out.channel_positions_m = spec.channel_positions_m;
    out.bin_freqs_hz.reserve(keep.size());
    for (long k : keep) out.bin_freqs_hz.push_back(spec.bin_freqs_hz[static_cast<std::size_t>(k)]);
    out.frames.reserve(spec.frames.size());
    for (const Eigen::MatrixXd& m : spec.frames) {
        Eigen::MatrixXd sel(static_cast<Eigen::Index>(keep.size()), m.cols());
        for (std::size_t r = 0; r < keep.size(); ++r) sel.row(static_cast<Eigen::Index>(r)) = m.row(keep[r]);
        out.frames.push_back(std::move(sel));
    }
    return out;
}

void FeatureAccumulator::add(const Spectrogram& spec, const dasio::TrialMetadata& meta) {
    if (!has_layout_) {
        bin_width_hz_ = spec.bin_width_hz;
        bin_freqs_hz_ = spec.bin_freqs_hz;
        channel_positions_m_ = spec.channel_positions_m;
        layout_.clear();
        for (double pos : channel_positions_m_)
            for (double f : bin_freqs_hz_) layout_.push_back({pos, f});
        has_layout_ = true;
    } else {
        const bool compatible = bin_width_hz_ == spec.bin_width_hz &&
                                bin_freqs_hz_ == spec.bin_freqs_hz &&
                                channel_positions_m_ == spec.channel_positions_m;
        if (!compatible) throw std::runtime_error("incompatible spectrograms");
    }
    for (long f = 0; f < spec.n_frames(); ++f) {
        const Eigen::MatrixXd& m = spec.frames[static_cast<std::size_t>(f)];
        // column-major flatten = all bins of channel 0, then channel 1, ...
        rows_.emplace_back(Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()));
        targets_.push_back(meta.exposure_length_m);
        window_ids_.emplace_back(meta.trial_id, f);
    }
}

FeatureMatrix FeatureAccumulator::finalize() && {
    FeatureMatrix fm;
    const long n = static_cast<long>(rows_.size());
    const long d = static_cast<long>(layout_.size());
    fm.X.resize(n, d);
    fm.y.resize(n);
    for (long i = 0; i < n; ++i) {
        fm.X.row(i) = rows_[static_cast<std::size_t>(i)].transpose();
        fm.y(i) = targets_[static_cast<std::size_t>(i)];
    }
    fm.layout = std::move(layout_);
    fm.window_ids = std::move(window_ids_);
    return fm;
}

FeatureMatrix build_feature_matrix(
    const std::vector<std::pair<const Spectrogram*, const dasio::TrialMetadata*>>& specs) {
    FeatureAccumulator acc;
    for (const auto& [spec, meta] : specs) acc.add(*spec, *meta);
    return std::move(acc).finalize();
}

Scaler fit_scaler(const Eigen::MatrixXd& X) {
    if (X.rows() < 2) throw std::runtime_error("insufficient data");
    Scaler s;
    s.means = X.colwise().mean();
    const Eigen::MatrixXd centered = X.rowwise() - s.means.transpose();
    s.stds = (centered.array().square().colwise().mean()).sqrt();
    s.stds = s.stds.cwiseMax(kStdFloor);
    return s;
}

Eigen::MatrixXd apply_scaler(const Scaler& scaler, const Eigen::MatrixXd& X) {
    if (X.cols() != scaler.means.size())
        throw std::invalid_argument("scaler dimension mismatch");
    Eigen::MatrixXd out = X.rowwise() - scaler.means.transpose();
    out.array().rowwise() /= scaler.stds.transpose().array();
    return out;
}

void write_feature_csv(const FeatureMatrix& features, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    for (std::size_t c = 0; c < features.layout.size(); ++c) {
        f << "L" << fmt_g(features.layout[c].channel_position_m) << "_F"
          << fmt_g(features.layout[c].frequency_hz) << ",";
    }
    f << "y\n";
    char buf[64];
    for (Eigen::Index i = 0; i < features.X.rows(); ++i) {
        for (Eigen::Index c = 0; c < features.X.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g,", features.X(i, c));
            f << buf;
        }
        std::snprintf(buf, sizeof(buf), "%.17g\n", features.y(i));
        f << buf;
    }
}

} // namespace freespan::preprocess
