// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fnx/expr.hpp"
#include "fnx/grid.hpp"

namespace fnx {

/// Open cone |x'| < A^{-1} x_n (sign +1) or its reflection -K (sign -1).
/// For n = 1 the cone degenerates to the half-line sign * x_1 > 0.
struct Cone {
    double aperture_A = 1.0;
    int dim = 2;
    int sign = +1;

    bool contains(std::span<const double> x) const {
        double xn = x[static_cast<size_t>(dim - 1)] * sign;
        double r2 = 0.0;
        for (int d = 0; d + 1 < dim; ++d) {
            const double c = x[static_cast<size_t>(d)] * sign;
            r2 += c * c;
        }
        return xn > 0 && r2 < (xn / aperture_A) * (xn / aperture_A);
    }
    Cone reflected() const {
        Cone c = *this;
        c.sign = -sign;
        return c;
    }
};

/// Special Lipschitz domain Omega = { (x', x_n) : x_n > omega(x') } with
/// Lipschitz bound |omega(x') - omega(y')| <= A |x' - y'|. For n = 1 omega is
/// a constant and Omega = (omega, inf).
class Domain {
  public:
    /// Validates the declared Lipschitz constant by sampling the quotient on a
    /// lattice over box' (the first n-1 axes of `box`), default 64 per axis.
    /// Throws Error(config) if the sampled quotient exceeds A by more than 1e-9.
    Domain(ScalarField omega, double lipschitz_A, int dim, const Box& box,
           long validation_samples = 64);

    int dim() const { return dim_; }
    double lipschitz_A() const { return lipschitz_A_; }
    const ScalarField& omega() const { return omega_; }
    Cone cone() const { return Cone{lipschitz_A_, dim_, +1}; }

    double boundary_height(std::span<const double> x_prime) const;

    /// Strict membership x_n > omega(x') (Omega is open).
    bool contains(std::span<const double> x) const;
    bool contains(const Point& p) const { return contains(p.span()); }

    /// Reflection across the boundary graph: (x', 2 omega(x') - x_n).
    Point reflect(std::span<const double> x) const;
    Point reflect(const Point& p) const { return reflect(p.span()); }

    /// 0/1 membership mask at cell centers of `geom` (cached per geometry by
    /// callers; this computes fresh).
    std::vector<uint8_t> mask(const GridGeometry& geom) const;

  private:
    ScalarField omega_;
    double lipschitz_A_;
    int dim_;
};

/// Zero-extension: keeps values at cells whose center lies in Omega, zeroes
/// the rest. restrict == the same masking, so restrict(zero_extend(f)) == f
/// exactly on Omega cells.
GridFunction zero_extend(const GridFunction& f, const std::vector<uint8_t>& mask);
inline GridFunction zero_extend(const GridFunction& f, const Domain& d) {
    return zero_extend(f, d.mask(f.geom()));
}

}  // namespace fnx
