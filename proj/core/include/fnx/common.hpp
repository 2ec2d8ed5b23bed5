// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fnx {

inline constexpr int kMaxDim = 3;

/// Small fixed-capacity point; grids in this toolkit are 1-, 2- or 3-dimensional.
struct Point {
    std::array<double, kMaxDim> x{};
    int n = 0;

    Point() = default;
    Point(std::initializer_list<double> c) {
        n = static_cast<int>(c.size());
        int i = 0;
        for (double v : c) x[static_cast<size_t>(i++)] = v;
    }
    static Point of(std::span<const double> c) {
        Point p;
        p.n = static_cast<int>(c.size());
        for (int i = 0; i < p.n; ++i) p.x[static_cast<size_t>(i)] = c[static_cast<size_t>(i)];
        return p;
    }
    double& operator[](int i) { return x[static_cast<size_t>(i)]; }
    double operator[](int i) const { return x[static_cast<size_t>(i)]; }
    std::span<const double> span() const { return {x.data(), static_cast<size_t>(n)}; }
};

inline double norm2(const Point& p) {
    double s = 0;
    for (int i = 0; i < p.n; ++i) s += p[i] * p[i];
    return std::sqrt(s);
}

inline double dist2(const Point& a, const Point& b) {
    double s = 0;
    for (int i = 0; i < a.n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

/// Error taxonomy; the CLI maps kinds to exit codes (config=2, hypothesis=3, others=1).
enum class ErrorKind { config, hypothesis, grid, numeric };

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

  private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail_config(const std::string& msg) { throw Error(ErrorKind::config, msg); }
[[noreturn]] inline void fail_hypothesis(const std::string& msg) { throw Error(ErrorKind::hypothesis, msg); }
[[noreturn]] inline void fail_grid(const std::string& msg) { throw Error(ErrorKind::grid, msg); }
[[noreturn]] inline void fail_numeric(const std::string& msg) { throw Error(ErrorKind::numeric, msg); }

inline size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

inline bool is_pow2(size_t n) { return n > 0 && (n & (n - 1)) == 0; }

/// FNV-1a, used for config hashes in kernel bundle manifests and reports.
inline uint64_t fnv1a(std::string_view s, uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

/// Runs fn(i) for i in [0, n). Honors FNX_THREADS (default: hardware concurrency).
/// Work items must be independent; nested calls run serially.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

int max_threads();

}  // namespace fnx
