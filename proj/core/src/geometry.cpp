// SPDX-License-Identifier: Apache-2.0
#include "fnx/geometry.hpp"

#include <sstream>

namespace fnx {

Domain::Domain(ScalarField omega, double lipschitz_A, int dim, const Box& box,
               long validation_samples)
    : omega_(std::move(omega)), lipschitz_A_(lipschitz_A), dim_(dim) {
    if (dim < 1 || dim > kMaxDim) fail_config("Domain: dim must be in [1, 3]");
    if (lipschitz_A <= 0) fail_config("Domain: Lipschitz constant must be positive");
    if (omega_.dim() != dim - 1)
        fail_config("Domain: omega must be a field on R^{n-1} (wrong arity)");
    if (dim == 1) return;  // omega constant; nothing to validate

    // Sample the Lipschitz quotient on a lattice over the first n-1 axes.
    Box bprime;
    bprime.dim = dim - 1;
    for (int d = 0; d + 1 < dim; ++d) {
        bprime.lo[static_cast<size_t>(d)] = box.lo[static_cast<size_t>(d)];
        bprime.hi[static_cast<size_t>(d)] = box.hi[static_cast<size_t>(d)];
    }
    const long s = validation_samples;
    std::vector<Point> pts;
    std::vector<double> vals;
    if (dim - 1 == 1) {
        pts.reserve(static_cast<size_t>(s));
        for (long i = 0; i < s; ++i) {
            Point p;
            p.n = 1;
            p[0] = bprime.lo[0] + (bprime.hi[0] - bprime.lo[0]) * static_cast<double>(i) /
                                      static_cast<double>(s - 1);
            pts.push_back(p);
        }
    } else {
        const long side = std::max<long>(2, static_cast<long>(std::lround(std::sqrt(static_cast<double>(s)))));
        for (long i = 0; i < side; ++i)
            for (long j = 0; j < side; ++j) {
                Point p;
                p.n = 2;
                p[0] = bprime.lo[0] + (bprime.hi[0] - bprime.lo[0]) * static_cast<double>(i) /
                                          static_cast<double>(side - 1);
                p[1] = bprime.lo[1] + (bprime.hi[1] - bprime.lo[1]) * static_cast<double>(j) /
                                          static_cast<double>(side - 1);
                pts.push_back(p);
            }
    }
    vals.reserve(pts.size());
    for (const auto& p : pts) {
        const double v = omega_.eval(p.span());
        if (!std::isfinite(v)) fail_numeric("Domain: omega evaluation failed");
        vals.push_back(v);
    }
    double worst = 0.0;
    for (size_t i = 0; i < pts.size(); ++i)
        for (size_t j = i + 1; j < pts.size(); ++j) {
            const double d = dist2(pts[i], pts[j]);
            if (d <= 0) continue;
            worst = std::max(worst, std::abs(vals[i] - vals[j]) / d);
        }
    if (worst > lipschitz_A + 1e-9) {
        std::ostringstream os;
        os << "Domain: sampled Lipschitz quotient " << worst << " exceeds declared A = "
           << lipschitz_A;
        fail_config(os.str());
    }
}

double Domain::boundary_height(std::span<const double> x_prime) const {
    return omega_.eval(x_prime);
}

bool Domain::contains(std::span<const double> x) const {
    return x[static_cast<size_t>(dim_ - 1)] > boundary_height(x.first(static_cast<size_t>(dim_ - 1)));
}

Point Domain::reflect(std::span<const double> x) const {
    Point out = Point::of(x);
    const double w = boundary_height(x.first(static_cast<size_t>(dim_ - 1)));
    out[dim_ - 1] = 2.0 * w - x[static_cast<size_t>(dim_ - 1)];
    return out;
}

std::vector<uint8_t> Domain::mask(const GridGeometry& geom) const {
    if (geom.ndim != dim_) fail_grid("Domain::mask: grid dimension mismatch");
    std::vector<uint8_t> m(static_cast<size_t>(geom.cells()), 0);
    parallel_for(static_cast<size_t>(geom.cells()), [&](size_t i) {
        std::array<long, kMaxDim> idx{};
        geom.unflat(static_cast<long>(i), {idx.data(), static_cast<size_t>(geom.ndim)});
        const Point p = geom.center({idx.data(), static_cast<size_t>(geom.ndim)});
        m[i] = contains(p.span()) ? 1 : 0;
    });
    return m;
}

GridFunction zero_extend(const GridFunction& f, const std::vector<uint8_t>& mask) {
    if (mask.size() != f.values().size()) fail_grid("zero_extend: mask size mismatch");
    std::vector<double> vals(f.values());
    for (size_t i = 0; i < vals.size(); ++i)
        if (!mask[i]) vals[i] = 0.0;
    return GridFunction(f.geom(), std::move(vals));
}

}  // namespace fnx
