// SPDX-License-Identifier: Apache-2.0
// Independent oracles used by the test suites. These deliberately avoid the
// library's FFT path: direct summation and dense quadrature only.
#pragma once

#include <cmath>
#include <vector>

#include "fnx/fft.hpp"
#include "fnx/grid.hpp"

namespace fnx::oracles {

/// Direct-summation linear convolution with the same index/lattice law as
/// fnx::convolve. O(N^2); use on small grids only.
inline GridFunction convolve_direct(const GridFunction& f, const GridFunction& g) {
    const GridGeometry& gf = f.geom();
    const GridGeometry& gg = g.geom();
    if (!gf.same_layout(gg)) fail_grid("convolve_direct: grid mismatch");
    const int nd = gf.ndim;
    const double h = gf.spacing;
    const double hn = std::pow(h, nd);

    GridGeometry out = gf;
    std::array<long, kMaxDim> K{};
    for (int d = 0; d < nd; ++d) {
        const double o_sum = gf.origin[static_cast<size_t>(d)] + gg.origin[static_cast<size_t>(d)];
        const double kf = (gf.origin[static_cast<size_t>(d)] - o_sum - h / 2.0) / h + 0.5;
        K[static_cast<size_t>(d)] = static_cast<long>(std::floor(kf + 1e-9));
        out.origin[static_cast<size_t>(d)] =
            o_sum + h / 2.0 + static_cast<double>(K[static_cast<size_t>(d)]) * h;
    }

    std::vector<double> vals(static_cast<size_t>(out.cells()), 0.0);
    std::array<long, kMaxDim> oi{}, ji{}, gi{};
    for (long o = 0; o < out.cells(); ++o) {
        out.unflat(o, {oi.data(), static_cast<size_t>(nd)});
        double acc = 0.0;
        for (long j = 0; j < f.cells(); ++j) {
            if (f[j] == 0.0) continue;
            gf.unflat(j, {ji.data(), static_cast<size_t>(nd)});
            bool in = true;
            for (int d = 0; d < nd; ++d) {
                const long s = oi[static_cast<size_t>(d)] + K[static_cast<size_t>(d)] -
                               ji[static_cast<size_t>(d)];
                if (s < 0 || s >= gg.dims[static_cast<size_t>(d)]) {
                    in = false;
                    break;
                }
                gi[static_cast<size_t>(d)] = s;
            }
            if (in) acc += f[j] * g[gg.flat({gi.data(), static_cast<size_t>(nd)})];
        }
        vals[static_cast<size_t>(o)] = acc * hn;
    }
    return GridFunction(out, std::move(vals));
}

/// Dense midpoint quadrature of fn over [lo, hi] with `cells` cells (1D).
inline double quad_1d(const std::function<double(double)>& fn, double lo, double hi, long cells) {
    const double h = (hi - lo) / static_cast<double>(cells);
    double acc = 0.0;
    for (long i = 0; i < cells; ++i) acc += fn(lo + (static_cast<double>(i) + 0.5) * h);
    return acc * h;
}

inline double max_abs_diff(const GridFunction& a, const GridFunction& b) {
    double m = 0.0;
    for (long i = 0; i < a.cells(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace fnx::oracles
