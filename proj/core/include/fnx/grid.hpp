// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <string>

#include "fnx/common.hpp"
#include "fnx/expr.hpp"

namespace fnx {

/// Uniform box grid. Values are attached to cell centers
///   center_d(i) = origin_d + (i + 1/2) h,   i = 0..dims_d-1,
/// with one spacing h shared by all axes. Storage is row-major (last axis
/// fastest), matching the FNXG file layout.
///
/// Two lattice conventions appear throughout the toolkit:
///  - function grids cover the working box: origin = box lower corner;
///  - kernel grids sit on the difference lattice {m h}: origin is shifted by
///    -h/2 so that cell centers land on integer multiples of h (differences of
///    function-grid centers). Convolving a function grid against a kernel grid
///    then returns values on the function grid itself.
struct GridGeometry {
    int ndim = 0;
    std::array<long, kMaxDim> dims{};
    std::array<double, kMaxDim> origin{};
    double spacing = 0.0;

    static GridGeometry over_box(const Box& box, long cells_per_axis);
    /// Difference-lattice grid matching `base` (same dims and spacing).
    static GridGeometry kernel_lattice(const GridGeometry& base);
    /// Same lattice type, dims and origin scaled by `factor` subdivisions.
    GridGeometry refined(long factor) const;

    long cells() const {
        long n = 1;
        for (int d = 0; d < ndim; ++d) n *= dims[static_cast<size_t>(d)];
        return n;
    }
    double center(int axis, long i) const {
        return origin[static_cast<size_t>(axis)] + (static_cast<double>(i) + 0.5) * spacing;
    }
    Point center(std::span<const long> idx) const {
        Point p;
        p.n = ndim;
        for (int d = 0; d < ndim; ++d) p[d] = center(d, idx[static_cast<size_t>(d)]);
        return p;
    }
    double cell_volume() const {
        double v = 1.0;
        for (int d = 0; d < ndim; ++d) v *= spacing;
        return v;
    }
    long flat(std::span<const long> idx) const {
        long f = 0;
        for (int d = 0; d < ndim; ++d) f = f * dims[static_cast<size_t>(d)] + idx[static_cast<size_t>(d)];
        return f;
    }
    void unflat(long f, std::span<long> idx) const {
        for (int d = ndim - 1; d >= 0; --d) {
            idx[static_cast<size_t>(d)] = f % dims[static_cast<size_t>(d)];
            f /= dims[static_cast<size_t>(d)];
        }
    }
    bool same_layout(const GridGeometry& o) const;       // dims and spacing match
    bool same_grid(const GridGeometry& o, double tol = 1e-9) const;  // plus origins
};

class GridFunction {
  public:
    GridFunction() = default;
    /// Validates value count and finiteness (NaN/Inf rejected).
    GridFunction(GridGeometry geom, std::vector<double> values);

    const GridGeometry& geom() const { return geom_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    double operator[](long i) const { return values_[static_cast<size_t>(i)]; }
    double& operator[](long i) { return values_[static_cast<size_t>(i)]; }
    long cells() const { return geom_.cells(); }

    double max_abs() const;
    double sum_abs() const;

  private:
    GridGeometry geom_;
    std::vector<double> values_;
};

using PointFn = std::function<double(std::span<const double>)>;

/// Midpoint sampling: values[i] = fn(center_i). Throws on non-finite values.
GridFunction sample(const PointFn& fn, const GridGeometry& geom);
GridFunction sample(const ScalarField& f, const GridGeometry& geom);

/// Multi-index for moment integrals; order() == |beta|.
struct MultiIndex {
    std::array<int, kMaxDim> beta{};
    int ndim = 0;

    static MultiIndex zero(int ndim) {
        MultiIndex m;
        m.ndim = ndim;
        return m;
    }
    int order() const {
        int s = 0;
        for (int d = 0; d < ndim; ++d) s += beta[static_cast<size_t>(d)];
        return s;
    }
};

/// All multi-indices with |beta| < order_bound, graded lexicographic.
std::vector<MultiIndex> multi_indices_below(int order_bound, int ndim);

/// Midpoint-rule value of  ∫ x^beta f(x) dx. |beta| <= 12.
double moment(const GridFunction& f, const MultiIndex& beta);
inline double integral(const GridFunction& f) { return moment(f, MultiIndex::zero(f.geom().ndim)); }

/// Separable cubic (Catmull-Rom) interpolation; zero outside the grid.
double interp_cubic(const GridFunction& f, const Point& p);

/// Dyadic dilate 2^{jn} f(2^j x) resampled on f's own grid. With an analytic
/// generator the dilate is sampled exactly at any j; otherwise cubic
/// interpolation is used and j is rejected when the dilated support would span
/// fewer than 4 cells per axis.
GridFunction dyadic_dilate(const GridFunction& f, int j, const PointFn* generator = nullptr);

/// Box-filter reduction onto `coarse` (weights = cell overlap fractions).
/// Works for both lattice conventions; requires spacing ratio to be integral.
GridFunction downsample_average(const GridFunction& fine, const GridGeometry& coarse);

/// Point-decimation onto `coarse`: picks the fine sample at each coarse center
/// (requires the coarse centers to lie on the fine center lattice).
GridFunction downsample_decimate(const GridFunction& fine, const GridGeometry& coarse);

// --- FNXG binary grid file format (little-endian) ---------------------------
// magic "FNXG", u32 version=1, u8 ndim, u8 iscomplex,
// per axis { u64 count, f64 origin, f64 spacing }, then f64 values row-major
// (re,im pairs if complex).
void write_fnxg(const std::string& path, const GridFunction& re, const GridFunction* im = nullptr);

struct GridFile {
    GridFunction re;
    std::optional<GridFunction> im;
};
GridFile read_fnxg(const std::string& path);

/// CSV export (n = 1 only): header "x,value", one row per cell.
void write_csv_1d(const std::string& path, const GridFunction& f);

}  // namespace fnx
