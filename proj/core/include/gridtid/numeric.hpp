#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace gridtid {

// log(sum(exp(a_i))) without overflow; -inf for an empty/degenerate input.
inline double log_sum_exp(const Eigen::VectorXd& a) {
    if (a.size() == 0) return -std::numeric_limits<double>::infinity();
    const double m = a.maxCoeff();
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) s += std::exp(a[i] - m);
    return m + std::log(s);
}

// Linear-interpolation empirical quantile (q in [0,1]); q=1 gives the max,
// q=0.5 the median (mean of the middle pair for even counts).
inline double quantile(std::vector<double> xs, double q) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    if (n == 1) return xs[0];
    const double h = q * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, n - 1);
    const double w = h - static_cast<double>(lo);
    return xs[lo] + w * (xs[hi] - xs[lo]);
}

inline double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b) {
    const auto n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sab / std::sqrt(saa * sbb);
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Shortest decimal form that round-trips a double; used by every text
// emitter so repeated runs stay byte-identical.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace gridtid
