#pragma once

#include "freespan/dasio.hpp"
#include "freespan/preprocess.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

/// Independent reference implementations used to check the production code.
/// Everything here is brute force on purpose; none of it shares a code path
/// with the library.
namespace oracles {

/// Per-frame tapered DFT by direct summation.
inline Eigen::MatrixXd naive_frame_dft(const freespan::dasio::DasRecord& rec, long start,
                                       long window_len, freespan::preprocess::Taper taper) {
    const long n_bins = window_len / 2 + 1;
    Eigen::MatrixXd mags(n_bins, rec.n_channels());
    for (Eigen::Index c = 0; c < rec.n_channels(); ++c) {
        for (long k = 0; k < n_bins; ++k) {
            std::complex<double> sum = 0.0;
            for (long i = 0; i < window_len; ++i) {
                double w = 1.0;
                if (taper == freespan::preprocess::Taper::hann)
                    w = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                              static_cast<double>(window_len)));
                const double x = static_cast<double>(rec.samples(start + i, c)) * w;
                const double phase = -2.0 * std::numbers::pi * static_cast<double>(k) *
                                     static_cast<double>(i) / static_cast<double>(window_len);
                sum += x * std::complex<double>(std::cos(phase), std::sin(phase));
            }
            mags(k, c) = std::abs(sum);
        }
    }
    return mags;
}

inline Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& pts, double gamma) {
    const Eigen::Index n = pts.rows();
    Eigen::MatrixXd q(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            q(i, j) = std::exp(-gamma * (pts.row(i) - pts.row(j)).squaredNorm());
    return q;
}

struct DualSolution {
    Eigen::VectorXd alpha;
    double rho = 0.0;
    double objective = 0.0;
};

/// Exhaustive active-set enumeration of the one-class SVM dual: every
/// assignment of each alpha_i to {0, C, free} is tried, the free block is
/// solved linearly, and the KKT-feasible candidate with the smallest
/// objective wins.
inline std::optional<DualSolution> brute_force_dual(const Eigen::MatrixXd& q, double nu) {
    const Eigen::Index n = q.rows();
    const double c_bound = 1.0 / (nu * static_cast<double>(n));
    const double tol = 1e-9;

    std::optional<DualSolution> best;
    std::vector<int> state(static_cast<std::size_t>(n), 0);
    const long total = static_cast<long>(std::pow(3.0, static_cast<double>(n)));
    for (long code = 0; code < total; ++code) {
        long rest = code;
        for (Eigen::Index i = 0; i < n; ++i) {
            state[static_cast<std::size_t>(i)] = static_cast<int>(rest % 3);
            rest /= 3;
        }
        std::vector<Eigen::Index> free_set, c_set;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (state[static_cast<std::size_t>(i)] == 1) c_set.push_back(i);
            else if (state[static_cast<std::size_t>(i)] == 2) free_set.push_back(i);
        }
        const double fixed_mass = c_bound * static_cast<double>(c_set.size());
        if (fixed_mass > 1.0 + tol) continue;

        Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i : c_set) alpha(i) = c_bound;
        double rho = 0.0;

        if (free_set.empty()) {
            if (std::abs(fixed_mass - 1.0) > tol) continue;
        } else {
            const auto f = static_cast<Eigen::Index>(free_set.size());
            Eigen::MatrixXd sys(f + 1, f + 1);
            Eigen::VectorXd rhs(f + 1);
            for (Eigen::Index r = 0; r < f; ++r) {
                for (Eigen::Index c = 0; c < f; ++c) sys(r, c) = q(free_set[r], free_set[c]);
                sys(r, f) = -1.0;
                double fixed_grad = 0.0;
                for (Eigen::Index i : c_set) fixed_grad += q(free_set[r], i) * c_bound;
                rhs(r) = -fixed_grad;
            }
            for (Eigen::Index c = 0; c < f; ++c) sys(f, c) = 1.0;
            sys(f, f) = 0.0;
            rhs(f) = 1.0 - fixed_mass;

            const Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
            if (!lu.isInvertible()) continue;
            const Eigen::VectorXd sol = lu.solve(rhs);
            bool feasible = true;
            for (Eigen::Index r = 0; r < f; ++r) {
                if (sol(r) < -tol || sol(r) > c_bound + tol) feasible = false;
                alpha(free_set[r]) = sol(r);
            }
            if (!feasible) continue;
            rho = sol(f);
        }

        const Eigen::VectorXd grad = q * alpha;
        if (free_set.empty()) {
            double lo = -std::numeric_limits<double>::infinity();
            double hi = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < n; ++i) {
                if (state[static_cast<std::size_t>(i)] == 1) lo = std::max(lo, grad(i));
                else hi = std::min(hi, grad(i));
            }
            if (lo > hi + tol) continue;
            rho = std::isfinite(lo) && std::isfinite(hi) ? 0.5 * (lo + hi)
                                                         : (std::isfinite(lo) ? lo : hi);
        } else {
            bool kkt = true;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (state[static_cast<std::size_t>(i)] == 0 && grad(i) < rho - tol) kkt = false;
                if (state[static_cast<std::size_t>(i)] == 1 && grad(i) > rho + tol) kkt = false;
            }
            if (!kkt) continue;
        }

        const double objective = 0.5 * alpha.dot(q * alpha);
        if (!best || objective < best->objective - 1e-12)
            best = DualSolution{alpha, rho, objective};
    }
    return best;
}

/// Exact two-sided Mann-Whitney p by walking every labeling of the pooled
/// ranks (tie-free case).
inline double enumerated_two_sided_p(long n_a, long n_b, double u_obs) {
    const long total = n_a + n_b;
    std::vector<long> pick(static_cast<std::size_t>(n_a));
    for (long i = 0; i < n_a; ++i) pick[static_cast<std::size_t>(i)] = i;
    std::vector<double> counts(static_cast<std::size_t>(n_a * n_b + 1), 0.0);
    while (true) {
        long u = 0;
        long chosen_seen = 0;
        std::vector<bool> is_a(static_cast<std::size_t>(total), false);
        for (long p : pick) is_a[static_cast<std::size_t>(p)] = true;
        for (long pos = 0; pos < total; ++pos) {
            if (is_a[static_cast<std::size_t>(pos)]) {
                u += pos - chosen_seen;
                ++chosen_seen;
            }
        }
        counts[static_cast<std::size_t>(u)] += 1.0;
        long i = n_a - 1;
        while (i >= 0 && pick[static_cast<std::size_t>(i)] == total - n_a + i) --i;
        if (i < 0) break;
        ++pick[static_cast<std::size_t>(i)];
        for (long j = i + 1; j < n_a; ++j)
            pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
    }
    double all = 0.0, le = 0.0, ge = 0.0;
    for (std::size_t v = 0; v < counts.size(); ++v) {
        all += counts[v];
        if (static_cast<double>(v) <= u_obs) le += counts[v];
        if (static_cast<double>(v) >= u_obs) ge += counts[v];
    }
    return std::min(1.0, 2.0 * std::min(le, ge) / all);
}

} // namespace oracles
