#include "freespan/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace freespan::stats {

namespace detail {

double u_statistic(std::span<const double> a, std::span<const double> b) {
    double u = 0.0;
    for (double av : a)
        for (double bv : b) {
            if (av > bv) u += 1.0;
            else if (av == bv) u += 0.5;
        }
    return u;
}

bool has_ties(std::span<const double> a, std::span<const double> b) {
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    return std::adjacent_find(pooled.begin(), pooled.end()) != pooled.end();
}

// Count of arrangements of n_a/n_b tie-free values with U statistic = u.
// Recurrence on the largest pooled element: it is either from a (beats all
// m b's) or from b.
static std::vector<double> u_counts(long n, long m) {
    const long u_max = n * m;
    // c[i][j][u] flattened over u; iterate i (a-count) outer, j (b-count) inner
    std::vector<std::vector<double>> cur(static_cast<std::size_t>(m + 1)),
        prev(static_cast<std::size_t>(m + 1));
    for (long j = 0; j <= m; ++j)
        prev[static_cast<std::size_t>(j)] = std::vector<double>(static_cast<std::size_t>(u_max + 1), 0.0);
    for (long j = 0; j <= m; ++j) prev[static_cast<std::size_t>(j)][0] = 1.0;  // i = 0
    for (long i = 1; i <= n; ++i) {
        for (long j = 0; j <= m; ++j)
            cur[static_cast<std::size_t>(j)] =
                std::vector<double>(static_cast<std::size_t>(u_max + 1), 0.0);
        cur[0][0] = 1.0;  // j = 0: only u = 0
        for (long j = 1; j <= m; ++j) {
            for (long u = 0; u <= i * j; ++u) {
                double v = cur[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(u)];
                if (u >= j) v += prev[static_cast<std::size_t>(j)][static_cast<std::size_t>(u - j)];
                cur[static_cast<std::size_t>(j)][static_cast<std::size_t>(u)] = v;
            }
        }
        std::swap(cur, prev);
    }
    return prev[static_cast<std::size_t>(m)];
}

double exact_two_sided_p(double u, long n_a, long n_b) {
    const std::vector<double> counts = u_counts(n_a, n_b);
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const long u_obs = std::lround(u);
    double le = 0.0, ge = 0.0;
    for (long v = 0; v < static_cast<long>(counts.size()); ++v) {
        if (v <= u_obs) le += counts[static_cast<std::size_t>(v)];
        if (v >= u_obs) ge += counts[static_cast<std::size_t>(v)];
    }
    return std::min(1.0, 2.0 * std::min(le, ge) / total);
}

double normal_two_sided_p(double u, std::span<const double> a, std::span<const double> b) {
    const double n = static_cast<double>(a.size());
    const double m = static_cast<double>(b.size());
    const double big_n = n + m;
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    double tie_term = 0.0;
    for (std::size_t i = 0; i < pooled.size();) {
        std::size_t j = i;
        while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    const double mean = n * m / 2.0;
    const double var =
        n * m / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
    if (var <= 0.0) return 1.0;  // everything tied
    double diff = u - mean;
    // continuity correction toward the mean
    if (diff > 0.5) diff -= 0.5;
    else if (diff < -0.5) diff += 0.5;
    else diff = 0.0;
    const double z = diff / std::sqrt(var);
    return std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
}

} // namespace detail

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("empty sample");
    TestResult r;
    r.statistic = detail::u_statistic(a, b);
    const long n = static_cast<long>(a.size());
    const long m = static_cast<long>(b.size());
    if (n * m <= 400 && !detail::has_ties(a, b)) {
        r.method = PMethod::exact;
        r.p_value = detail::exact_two_sided_p(r.statistic, n, m);
    } else {
        r.method = PMethod::normal_approx;
        r.p_value = detail::normal_two_sided_p(r.statistic, a, b);
    }
    return r;
}

std::vector<double> holm_correct(const std::vector<double>& p_values) {
    const std::size_t m = p_values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return p_values[i] < p_values[j]; });
    std::vector<double> adjusted(m, 0.0);
    double running = 0.0;
    for (std::size_t rank = 0; rank < m; ++rank) {
        const double stepped =
            std::min(1.0, static_cast<double>(m - rank) * p_values[order[rank]]);
        running = std::max(running, stepped);
        adjusted[order[rank]] = running;
    }
    return adjusted;
}

double cliffs_delta(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("empty sample");
    long greater = 0, less = 0;
    for (double av : a)
        for (double bv : b) {
            if (av > bv) ++greater;
            else if (av < bv) ++less;
        }
    return static_cast<double>(greater - less) /
           (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("length mismatch");
    if (x.size() < 2) throw std::invalid_argument("need at least 2 points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw std::runtime_error("undefined correlation");
    return sxy / std::sqrt(sxx * syy);
}

BinaryMetrics binary_metrics(const std::vector<bool>& predicted, const std::vector<bool>& truth) {
    if (predicted.size() != truth.size()) throw std::invalid_argument("length mismatch");
    if (predicted.empty()) throw std::invalid_argument("empty labels");
    BinaryMetrics m;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i] && truth[i]) ++m.tp;
        else if (predicted[i] && !truth[i]) ++m.fp;
        else if (!predicted[i] && truth[i]) ++m.fn;
        else ++m.tn;
    }
    const double total = static_cast<double>(predicted.size());
    m.accuracy = static_cast<double>(m.tp + m.tn) / total;
    m.precision = (m.tp + m.fp) > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
    m.recall = (m.tp + m.fn) > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

double mae(std::span<const double> y_true, std::span<const double> y_pred) {
    if (y_true.size() != y_pred.size()) throw std::invalid_argument("length mismatch");
    if (y_true.empty()) throw std::invalid_argument("empty sample");
    double s = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) s += std::abs(y_true[i] - y_pred[i]);
    return s / static_cast<double>(y_true.size());
}

} // namespace freespan::stats
