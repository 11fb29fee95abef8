#include "freespan/simulator.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace freespan::simulator {

namespace {

/// Gaussian stream with a fully specified mapping from the mt19937_64 bit
/// stream (std::normal_distribution is implementation-defined; Box-Muller on
/// explicit 53-bit uniforms is not).
class NormalRng {
public:
    explicit NormalRng(std::uint64_t seed) : eng_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

void validate(const SimConfig& cfg) {
    if (!(cfg.exposure_length_m > 0.0)) throw std::invalid_argument("exposure_length_m must be positive");
    if (!(cfg.ei > 0.0)) throw std::invalid_argument("ei must be positive");
    if (!(cfg.mu > 0.0)) throw std::invalid_argument("mu must be positive");
    if (cfg.n_modes < 1) throw std::invalid_argument("n_modes must be >= 1");
    if (!(cfg.modal_damping > 0.0 && cfg.modal_damping < 1.0))
        throw std::invalid_argument("modal_damping must be in (0, 1)");
    if (!(cfg.fs > 0.0)) throw std::invalid_argument("fs must be positive");
    if (!(cfg.duration_s > 0.0)) throw std::invalid_argument("duration_s must be positive");
    if (cfg.n_channels < 1) throw std::invalid_argument("n_channels must be >= 1");
    if (!(cfg.channel_spacing_m > 0.0)) throw std::invalid_argument("channel_spacing_m must be positive");
    if (!(cfg.wave_period_s > 0.0)) throw std::invalid_argument("wave_period_s must be positive");
    if (!(cfg.wave_height_m >= 0.0)) throw std::invalid_argument("wave_height_m must be nonnegative");
    if (!(cfg.noise_rms >= 0.0)) throw std::invalid_argument("noise_rms must be nonnegative");
    if (!(cfg.resonance_skirt >= 0.0 && cfg.resonance_skirt <= 1.0))
        throw std::invalid_argument("resonance_skirt must be in [0, 1]");
    if (!(cfg.leak_fraction >= 0.0)) throw std::invalid_argument("leak_fraction must be nonnegative");
}

} // namespace

std::vector<double> natural_frequencies(double length_m, double ei, double mu, int n_modes) {
    if (!(length_m > 0.0) || !(ei > 0.0) || !(mu > 0.0) || n_modes < 1)
        throw std::invalid_argument("invalid beam parameters");
    std::vector<double> f(static_cast<std::size_t>(n_modes));
    const double base = std::numbers::pi / (2.0 * length_m * length_m) * std::sqrt(ei / mu);
    for (int n = 1; n <= n_modes; ++n)
        f[static_cast<std::size_t>(n - 1)] = static_cast<double>(n) * static_cast<double>(n) * base;
    return f;
}

double mode_shape(int n, double length_m, double x_m) {
    if (n < 1 || !(length_m > 0.0)) throw std::invalid_argument("invalid mode shape arguments");
    if (x_m < 0.0 || x_m > length_m) return 0.0;
    return std::sin(static_cast<double>(n) * std::numbers::pi * x_m / length_m);
}

double magnification_factor(double freq_ratio, double damping_ratio) {
    const double r2 = freq_ratio * freq_ratio;
    const double a = 1.0 - r2;
    const double b = 2.0 * damping_ratio * freq_ratio;
    return 1.0 / std::sqrt(a * a + b * b);
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
    std::uint64_t x = base ^ (salt + 0x9E3779B97F4A7C15ULL);
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::pair<dasio::DasRecord, dasio::TrialMetadata> simulate_trial(const SimConfig& cfg) {
    validate(cfg);

    const auto n_samples = static_cast<Eigen::Index>(std::llround(cfg.duration_s * cfg.fs));
    const Eigen::Index n_channels = cfg.n_channels;
    const double span_l = cfg.exposure_length_m;
    const std::vector<double> freqs = natural_frequencies(span_l, cfg.ei, cfg.mu, cfg.n_modes);
    const double f_wave = 1.0 / cfg.wave_period_s;
    const double zeta = cfg.modal_damping;

    NormalRng rng(cfg.seed);

    // Per-mode sustained resonant components. Under regular-wave excitation
    // the modal response is reproducible trial to trial, so each mode gets a
    // stable line at its damped frequency with a per-trial random phase, plus
    // a small stochastic skirt (white noise through a resonator with poles at
    // the damped frequency) for realization texture. Modes at or above
    // ~Nyquist would alias and are dropped. A fixed burn-in lets the filter
    // reach stationarity before t = 0.
    const Eigen::Index burn_in = static_cast<Eigen::Index>(std::llround(20.0 * cfg.fs));
    std::vector<Eigen::VectorXd> resonant(static_cast<std::size_t>(cfg.n_modes));
    std::vector<bool> mode_active(static_cast<std::size_t>(cfg.n_modes), false);
    const double skirt = cfg.resonance_skirt;
    const double line_scale = std::sqrt(std::max(0.0, 1.0 - skirt * skirt)) * std::numbers::sqrt2;
    for (int m = 0; m < cfg.n_modes; ++m) {
        const double f_n = freqs[static_cast<std::size_t>(m)];
        if (f_n >= 0.45 * cfg.fs) continue;  // would alias
        mode_active[static_cast<std::size_t>(m)] = true;
        const double omega = 2.0 * std::numbers::pi * f_n;
        const double f_damped = f_n * std::sqrt(1.0 - zeta * zeta);
        const double phase = 2.0 * std::numbers::pi * rng.uniform01();

        Eigen::VectorXd g(n_samples);
        for (Eigen::Index t = 0; t < n_samples; ++t)
            g(t) = line_scale *
                   std::sin(2.0 * std::numbers::pi * f_damped * static_cast<double>(t) / cfg.fs +
                            phase);

        if (skirt > 0.0) {
            const double pole_r = std::exp(-zeta * omega / cfg.fs);
            const double pole_theta = omega * std::sqrt(1.0 - zeta * zeta) / cfg.fs;
            const double a1 = 2.0 * pole_r * std::cos(pole_theta);
            const double a2 = -pole_r * pole_r;
            Eigen::VectorXd s(n_samples);
            double y1 = 0.0, y2 = 0.0;
            for (Eigen::Index t = -burn_in; t < n_samples; ++t) {
                const double y = a1 * y1 + a2 * y2 + rng.next();
                y2 = y1;
                y1 = y;
                if (t >= 0) s(t) = y;
            }
            const double rms = std::sqrt(s.squaredNorm() / static_cast<double>(n_samples));
            if (rms > 0.0) g += (skirt / rms) * s;
        }
        resonant[static_cast<std::size_t>(m)] = std::move(g);
    }

    Eigen::VectorXd steady(n_samples);
    for (Eigen::Index t = 0; t < n_samples; ++t)
        steady(t) = std::sin(2.0 * std::numbers::pi * f_wave * static_cast<double>(t) / cfg.fs);

    // Per-mode time base: wave-frequency sinusoid plus the resonant band.
    std::vector<Eigen::VectorXd> mode_base(static_cast<std::size_t>(cfg.n_modes));
    for (int m = 0; m < cfg.n_modes; ++m) {
        if (mode_active[static_cast<std::size_t>(m)])
            mode_base[static_cast<std::size_t>(m)] =
                steady + cfg.resonance_mix * resonant[static_cast<std::size_t>(m)];
        else
            mode_base[static_cast<std::size_t>(m)] = steady;
    }

    Eigen::MatrixXd response = Eigen::MatrixXd::Zero(n_samples, n_channels);
    for (Eigen::Index c = 0; c < n_channels; ++c) {
        const double pos = static_cast<double>(c) * cfg.channel_spacing_m;
        const double xi = pos - cfg.span_start_m;
        const bool inside = xi >= 0.0 && xi <= span_l;
        for (int m = 0; m < cfg.n_modes; ++m) {
            const double amp = magnification_factor(
                f_wave / freqs[static_cast<std::size_t>(m)], zeta);
            const double shape = inside ? mode_shape(m + 1, span_l, xi) : cfg.leak_fraction;
            const double coeff = cfg.wave_height_m * amp * shape;
            if (coeff != 0.0)
                response.col(c).noalias() += coeff * mode_base[static_cast<std::size_t>(m)];
        }
    }

    // gauge-length smoothing: channel c averages channels c-1 and c
    if (cfg.gauge_smoothing && n_channels > 1) {
        for (Eigen::Index c = n_channels - 1; c >= 1; --c)
            response.col(c) = 0.5 * (response.col(c - 1) + response.col(c));
    }

    const double peak = response.cwiseAbs().maxCoeff();
    const double noise_sigma = cfg.noise_rms * peak;
    if (noise_sigma > 0.0) {
        for (Eigen::Index c = 0; c < n_channels; ++c)
            for (Eigen::Index t = 0; t < n_samples; ++t)
                response(t, c) += noise_sigma * rng.next();
    }

    dasio::DasRecord record;
    record.samples = response.cast<float>();
    record.fs = cfg.fs;
    record.channel_spacing = cfg.channel_spacing_m;
    record.first_channel_position = 0.0;

    dasio::TrialMetadata meta;
    meta.trial_id = cfg.trial_id;
    meta.section_id = cfg.section_id;
    meta.exposure_length_m = cfg.exposure_length_m;
    meta.wave_height_m = cfg.wave_height_m;
    meta.wave_period_s = cfg.wave_period_s;
    meta.trial_index = cfg.trial_index;
    meta.duration_s = record.duration_s();
    return {std::move(record), meta};
}

} // namespace freespan::simulator
