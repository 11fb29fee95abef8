#include "freespan/dasio.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace freespan::dasio {

namespace {

constexpr char kMagic[4] = {'D', 'A', 'S', '1'};
constexpr std::uint16_t kFormatVersion = 1;

void put_bytes(std::string& out, const void* p, std::size_t n) {
    out.append(static_cast<const char*>(p), n);
}

void put_u16(std::string& out, std::uint16_t v) {
    const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
    put_bytes(out, b, 2);
}

void put_u32(std::string& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    put_bytes(out, b, 4);
}

void put_u64(std::string& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    put_bytes(out, b, 8);
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

class Cursor {
public:
    Cursor(const std::string& data) : data_(data) {}

    std::uint16_t u16() { return static_cast<std::uint16_t>(u8() | (u8() << 8)); }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    float f32() { return std::bit_cast<float>(u32()); }
    void raw(char* dst, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) dst[i] = static_cast<char>(u8());
    }

private:
    std::uint8_t u8() { return static_cast<std::uint8_t>(data_[pos_++]); }
    const std::string& data_;
    std::size_t pos_ = 0;
};

void atomic_write(const std::filesystem::path& path, const std::string& bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open for writing: " + tmp.string());
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return std::move(ss).str();
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string_view label_name(Label l) {
    return l == Label::anomalous ? "anomalous" : "normal";
}

void validate_record(const DasRecord& record) {
    if (record.samples.rows() < 1 || record.samples.cols() < 1)
        throw std::invalid_argument("record must have at least one sample and one channel");
    if (!(record.fs > 0.0)) throw std::invalid_argument("fs must be positive");
    if (!(record.channel_spacing > 0.0))
        throw std::invalid_argument("channel_spacing must be positive");
    if (!std::isfinite(record.first_channel_position))
        throw std::invalid_argument("first_channel_position must be finite");
    if (!record.samples.allFinite()) throw std::invalid_argument("non-finite sample");
}

void validate_metadata(const TrialMetadata& meta, const DasRecord& record) {
    if (!(meta.exposure_length_m > 0.0)) throw std::runtime_error("invalid metadata: exposure_length_m must be positive");
    if (!(meta.wave_period_s > 0.0)) throw std::runtime_error("invalid metadata: wave_period_s must be positive");
    if (!(meta.wave_height_m >= 0.0)) throw std::runtime_error("invalid metadata: wave_height_m must be nonnegative");
    if (meta.trial_index < 1) throw std::runtime_error("invalid metadata: trial_index must be >= 1");
    // duration must agree with the paired record within one sample period
    const double expected = record.duration_s();
    if (std::abs(meta.duration_s - expected) > 1.0 / record.fs + 1e-12)
        throw std::runtime_error("invalid metadata: duration_s inconsistent with record");
}

void write_trial(const DasRecord& record, const TrialMetadata& meta,
                 const std::filesystem::path& path) {
    validate_record(record);
    validate_metadata(meta, record);

    const auto n_samples = static_cast<std::uint64_t>(record.samples.rows());
    const auto n_channels = static_cast<std::uint32_t>(record.samples.cols());

    std::string bytes;
    bytes.reserve(kTrialHeaderBytes + n_samples * n_channels * 4);
    put_bytes(bytes, kMagic, 4);
    put_u16(bytes, kFormatVersion);
    put_u32(bytes, n_channels);
    put_u64(bytes, n_samples);
    put_f64(bytes, record.fs);
    put_f64(bytes, record.channel_spacing);
    put_f64(bytes, record.first_channel_position);
    // row-major (time-major) float32 payload
    for (Eigen::Index i = 0; i < record.samples.rows(); ++i)
        for (Eigen::Index c = 0; c < record.samples.cols(); ++c)
            put_f32(bytes, record.samples(i, c));

    std::filesystem::path das_path = path;
    das_path += ".das";
    atomic_write(das_path, bytes);

    nlohmann::json j;
    j["trial_id"] = meta.trial_id;
    j["section_id"] = meta.section_id;
    j["exposure_length_m"] = meta.exposure_length_m;
    j["wave_height_m"] = meta.wave_height_m;
    j["wave_period_s"] = meta.wave_period_s;
    j["trial_index"] = meta.trial_index;
    j["duration_s"] = meta.duration_s;
    std::filesystem::path json_path = path;
    json_path += ".json";
    atomic_write(json_path, j.dump(2) + "\n");
}

std::pair<DasRecord, TrialMetadata> read_trial(const std::filesystem::path& path) {
    std::filesystem::path das_path = path;
    das_path += ".das";
    std::filesystem::path json_path = path;
    json_path += ".json";

    const std::string bytes = read_file(das_path);
    if (bytes.size() < 4 || bytes.compare(0, 4, kMagic, 4) != 0)
        throw std::runtime_error("not a DAS trial file: " + das_path.string());
    if (bytes.size() < kTrialHeaderBytes)
        throw std::runtime_error("length mismatch: truncated header in " + das_path.string());

    Cursor cur(bytes);
    char magic[4];
    cur.raw(magic, 4);
    const std::uint16_t version = cur.u16();
    if (version != kFormatVersion)
        throw std::runtime_error("unsupported DAS format version " + std::to_string(version));
    const std::uint32_t n_channels = cur.u32();
    const std::uint64_t n_samples = cur.u64();

    DasRecord record;
    record.fs = cur.f64();
    record.channel_spacing = cur.f64();
    record.first_channel_position = cur.f64();

    if (n_channels < 1 || n_samples < 1 || !(record.fs > 0.0) || !(record.channel_spacing > 0.0))
        throw std::runtime_error("invalid trial header in " + das_path.string());

    const std::size_t expected = kTrialHeaderBytes + static_cast<std::size_t>(n_samples) * n_channels * 4;
    if (bytes.size() != expected)
        throw std::runtime_error("length mismatch: header claims " + std::to_string(expected) +
                                 " bytes, file has " + std::to_string(bytes.size()));

    record.samples.resize(static_cast<Eigen::Index>(n_samples), static_cast<Eigen::Index>(n_channels));
    for (Eigen::Index i = 0; i < record.samples.rows(); ++i)
        for (Eigen::Index c = 0; c < record.samples.cols(); ++c)
            record.samples(i, c) = cur.f32();
    if (!record.samples.allFinite())
        throw std::runtime_error("non-finite sample in " + das_path.string());

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(json_path));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("invalid metadata: " + std::string(e.what()));
    }
    TrialMetadata meta;
    try {
        meta.trial_id = j.at("trial_id").get<std::string>();
        meta.section_id = j.at("section_id").get<std::string>();
        meta.exposure_length_m = j.at("exposure_length_m").get<double>();
        meta.wave_height_m = j.at("wave_height_m").get<double>();
        meta.wave_period_s = j.at("wave_period_s").get<double>();
        meta.trial_index = j.at("trial_index").get<int>();
        meta.duration_s = j.at("duration_s").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("invalid metadata: " + std::string(e.what()));
    }
    validate_metadata(meta, record);
    return {std::move(record), meta};
}

ReportSummary summarize(const AnomalyReport& report) {
    ReportSummary s;
    s.n_windows = static_cast<long>(report.rows.size());
    if (report.rows.empty()) return s;

    std::map<double, DeltaSummary> per_delta;
    double score_sum = 0.0;
    long anomalous = 0;
    for (const ReportRow& r : report.rows) {
        score_sum += r.anomaly_score;
        if (r.label == Label::anomalous) ++anomalous;
        DeltaSummary& d = per_delta[r.delta_l_m];
        d.delta_l_m = r.delta_l_m;
        d.n_windows += 1;
        d.mean_score += r.anomaly_score;
        d.fraction_anomalous += (r.label == Label::anomalous) ? 1.0 : 0.0;
    }
    s.mean_score = score_sum / static_cast<double>(s.n_windows);
    s.fraction_anomalous = static_cast<double>(anomalous) / static_cast<double>(s.n_windows);
    for (auto& [_, d] : per_delta) {
        d.mean_score /= static_cast<double>(d.n_windows);
        d.fraction_anomalous /= static_cast<double>(d.n_windows);
        s.per_delta.push_back(d);
    }
    return s;
}

void write_report_csv(const AnomalyReport& report, const std::filesystem::path& path) {
    std::string out = "trial_id,section_id,window_index,anomaly_score,label,delta_l_m,"
                      "exposure_m,predicted_exposure_m\n";
    std::map<std::string, double> trial_delta;
    for (const ReportRow& r : report.rows) {
        const bool consistent = (r.label == Label::anomalous) == (r.anomaly_score < 0.0);
        if (!consistent)
            throw std::logic_error("report row violates label-score consistency");
        const auto [it, inserted] = trial_delta.emplace(r.trial_id, r.delta_l_m);
        if (!inserted && it->second != r.delta_l_m)
            throw std::logic_error("delta_l_m differs within trial " + r.trial_id);
        out += r.trial_id;
        out += ',';
        out += r.section_id;
        out += ',';
        out += std::to_string(r.window_index);
        out += ',';
        out += fmt_double(r.anomaly_score);
        out += ',';
        out += label_name(r.label);
        out += ',';
        out += fmt_double(r.delta_l_m);
        out += ',';
        out += fmt_double(r.exposure_m);
        out += ',';
        out += fmt_double(r.predicted_exposure_m);
        out += '\n';
    }
    atomic_write(path, out);
}

AnomalyReport read_report_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path.string());
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty report file: " + path.string());

    AnomalyReport report;
    std::map<std::string, double> trial_delta;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 8)
            throw std::runtime_error("malformed report row: " + line);
        ReportRow r;
        r.trial_id = fields[0];
        r.section_id = fields[1];
        r.window_index = std::stol(fields[2]);
        r.anomaly_score = std::stod(fields[3]);
        if (fields[4] == "anomalous") r.label = Label::anomalous;
        else if (fields[4] == "normal") r.label = Label::normal;
        else throw std::runtime_error("unknown label: " + fields[4]);
        r.delta_l_m = std::stod(fields[5]);
        r.exposure_m = std::stod(fields[6]);
        r.predicted_exposure_m = std::stod(fields[7]);
        if ((r.label == Label::anomalous) != (r.anomaly_score < 0.0))
            throw std::runtime_error("report row violates label-score consistency: " + line);
        const auto [it, inserted] = trial_delta.emplace(r.trial_id, r.delta_l_m);
        if (!inserted && it->second != r.delta_l_m)
            throw std::runtime_error("delta_l_m differs within trial " + r.trial_id);
        report.rows.push_back(std::move(r));
    }
    return report;
}

std::string report_summary_json(const ReportSummary& summary) {
    nlohmann::json j;
    j["n_windows"] = summary.n_windows;
    j["mean_score"] = summary.mean_score;
    j["fraction_anomalous"] = summary.fraction_anomalous;
    j["per_delta"] = nlohmann::json::array();
    for (const DeltaSummary& d : summary.per_delta) {
        nlohmann::json e;
        e["delta_l_m"] = d.delta_l_m;
        e["n_windows"] = d.n_windows;
        e["mean_score"] = d.mean_score;
        e["fraction_anomalous"] = d.fraction_anomalous;
        j["per_delta"].push_back(e);
    }
    return j.dump(2) + "\n";
}

} // namespace freespan::dasio
