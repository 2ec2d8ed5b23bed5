// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "fnx/common.hpp"

namespace fnx {

/// Values above this threshold are treated as +infinity when a field is used
/// as an exponent (the token "inf" evaluates to 1e300).
inline constexpr double kInfExponent = 1e12;

namespace detail {
struct ExprNode;
}

/// A scalar field on R^n defined by a parsed expression in the variables x1..xn.
/// Immutable after parse; evaluation is pure and thread-safe.
class ScalarField {
  public:
    ScalarField() = default;

    /// Parses `src` against the expression grammar. Throws Error(config) with a
    /// position on syntax errors, unknown identifiers, or variable index > dim.
    static ScalarField parse(const std::string& src, int dim);

    /// Constant field convenience.
    static ScalarField constant(double value, int dim);

    double eval(std::span<const double> x) const;
    double eval(const Point& p) const { return eval(p.span()); }

    int dim() const { return dim_; }
    const std::string& source() const { return source_; }
    bool valid() const { return static_cast<bool>(root_); }

    /// Canonical fully parenthesized rendering; parse(print(f)) evaluates
    /// identically to f.
    std::string print() const;

  private:
    std::shared_ptr<const detail::ExprNode> root_;
    std::string source_;
    int dim_ = 0;
};

/// Sampled regularity estimates for an exponent/smoothness field.
/// All constants are lattice maxima: refining the (nested) lattice can only
/// grow them, so they certify lower bounds on the true constants.
struct RegularityReport {
    double inf = 0.0;         ///< sampled minimum
    double sup = 0.0;         ///< sampled maximum
    double clog_local = 0.0;  ///< max |f(x)-f(y)| * log(e + 1/|x-y|)
    double g_infinity = 0.0;  ///< mean over the outermost sampled shell (or override)
    double clog_global = 0.0; ///< max |f(x)-g_inf| * log(e + |x|)
    long samples_per_axis = 0;
};

/// Axis-aligned box [lo_i, hi_i]^dim used for sampling studies.
struct Box {
    std::array<double, kMaxDim> lo{};
    std::array<double, kMaxDim> hi{};
    int dim = 0;

    static Box cube(double lo, double hi, int dim) {
        Box b;
        b.dim = dim;
        for (int i = 0; i < dim; ++i) {
            b.lo[static_cast<size_t>(i)] = lo;
            b.hi[static_cast<size_t>(i)] = hi;
        }
        return b;
    }
};

using FieldFn = std::function<double(std::span<const double>)>;

/// Sampled (min, max) over a corner-aligned uniform lattice with `samples`
/// points per axis. Lattices nest under samples -> 2*samples-1, making the
/// estimates monotone under refinement. Throws Error(numeric) if the field is
/// non-finite at a lattice point.
std::pair<double, double> field_range(const ScalarField& f, const Box& box, long samples);
std::pair<double, double> field_range(const FieldFn& f, const Box& box, long samples);

/// Log-Holder constants estimated over all lattice pairs (local) and against
/// g_infinity (global). `g_inf_override` replaces the outer-shell average.
RegularityReport estimate_log_holder(const ScalarField& f, const Box& box, long samples,
                                     std::optional<double> g_inf_override = std::nullopt);
RegularityReport estimate_log_holder(const FieldFn& f, int dim, const Box& box, long samples,
                                     std::optional<double> g_inf_override = std::nullopt);

}  // namespace fnx
