#pragma once

#include "freespan/dasio.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace testutil {

/// Scratch directory under the test working directory, wiped on construction
/// and destruction.
class TempDir {
public:
    explicit TempDir(const std::string& name) : path_(std::filesystem::path("test_tmp") / name) {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    [[nodiscard]] const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline freespan::dasio::DasRecord random_record(std::mt19937_64& rng, Eigen::Index max_samples = 64,
                                                Eigen::Index max_channels = 6) {
    std::uniform_int_distribution<Eigen::Index> ns(1, max_samples);
    std::uniform_int_distribution<Eigen::Index> nc(1, max_channels);
    std::uniform_real_distribution<float> val(-5.0f, 5.0f);
    freespan::dasio::DasRecord rec;
    rec.samples.resize(ns(rng), nc(rng));
    for (Eigen::Index i = 0; i < rec.samples.rows(); ++i)
        for (Eigen::Index c = 0; c < rec.samples.cols(); ++c) rec.samples(i, c) = val(rng);
    std::uniform_real_distribution<double> fs(10.0, 4000.0);
    rec.fs = fs(rng);
    std::uniform_real_distribution<double> spacing(0.1, 2.0);
    rec.channel_spacing = spacing(rng);
    std::uniform_real_distribution<double> pos(0.0, 100.0);
    rec.first_channel_position = pos(rng);
    return rec;
}

inline freespan::dasio::TrialMetadata metadata_for(const freespan::dasio::DasRecord& rec,
                                                   const std::string& trial_id = "t1",
                                                   const std::string& section_id = "S1",
                                                   int trial_index = 1) {
    freespan::dasio::TrialMetadata m;
    m.trial_id = trial_id;
    m.section_id = section_id;
    m.exposure_length_m = 6.0;
    m.wave_height_m = 0.15;
    m.wave_period_s = 1.25;
    m.trial_index = trial_index;
    m.duration_s = rec.duration_s();
    return m;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return std::move(ss).str();
}

} // namespace testutil
