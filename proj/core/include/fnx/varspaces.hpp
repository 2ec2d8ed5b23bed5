// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "fnx/expr.hpp"
#include "fnx/fft.hpp"
#include "fnx/grid.hpp"

namespace fnx {

/// Which mixed norm a computation targets: ell_q(L_p) (Besov order) or
/// L_p(ell_q) (Triebel-Lizorkin order).
enum class MixedOrder { lq_of_Lp, Lp_of_lq };

/// Exponent pair plus order tag; domain_mask (optional) restricts every
/// integral/sup to the masked cells.
struct MixedNormSpec {
    ScalarField p;
    ScalarField q;
    MixedOrder order = MixedOrder::lq_of_Lp;
    const std::vector<uint8_t>* domain_mask = nullptr;  // not owned

    MixedNormSpec() = default;
    MixedNormSpec(ScalarField p_, ScalarField q_, MixedOrder o)
        : p(std::move(p_)), q(std::move(q_)), order(o) {}
};

/// Scale-indexed sequence (f_nu)_{nu=0..N} on one shared grid.
class FunctionSequence {
  public:
    FunctionSequence() = default;
    explicit FunctionSequence(std::vector<GridFunction> entries);

    const GridFunction& operator[](size_t i) const { return entries_[i]; }
    GridFunction& operator[](size_t i) { return entries_[i]; }
    size_t size() const { return entries_.size(); }
    const GridGeometry& geom() const { return entries_.front().geom(); }
    const std::vector<GridFunction>& entries() const { return entries_; }
    void push_back(GridFunction f);

  private:
    std::vector<GridFunction> entries_;
};

/// Exponent samples cached on a grid; p values above kInfExponent are treated
/// as infinity cells of the modular.
struct ExponentSamples {
    std::vector<double> p;       // p(x_i)
    std::vector<uint8_t> is_inf; // p(x_i) = infinity
    double p_minus = 0.0;
    double p_plus = 0.0;         // over finite cells
    static ExponentSamples make(const ScalarField& p, const GridGeometry& geom,
                                const std::vector<uint8_t>* mask);
};

/// Modular  rho_p(f) = Integral_{p<inf} |f|^{p(x)} dx + ess-sup_{p=inf} |f|,
/// restricted to the mask when given.
double modular_lp(const GridFunction& f, const ScalarField& p,
                  const std::vector<uint8_t>* mask = nullptr);

/// Luxemburg norm inf{ lambda > 0 : rho_p(f/lambda) <= 1 } by bisection to
/// relative width 1e-10; returns 0 for f == 0. Throws Error(numeric) when no
/// bracket exists (degenerate mask).
double luxemburg(const GridFunction& f, const ScalarField& p,
                 const std::vector<uint8_t>* mask = nullptr);

/// Mixed norms. lq_of_Lp uses the simplified inner expression when
/// q+ < infinity and per-nu inner bisection otherwise (cross-checked in
/// tests); Lp_of_lq takes the pointwise ell_{q(x)} norm first. Constant
/// q = infinity is handled by the sup convention; non-constant exponents
/// reaching infinity in lq_of_Lp are refused.
double norm_lq_of_Lp(const FunctionSequence& seq, const MixedNormSpec& spec);
double norm_Lp_of_lq(const FunctionSequence& seq, const MixedNormSpec& spec);
double mixed_norm(const FunctionSequence& seq, const MixedNormSpec& spec);

/// H_l = sum_j 2^{-|j-l| delta} h_j (exact finite sum).
FunctionSequence hardy_transform(const FunctionSequence& seq, double delta);

/// Entrywise mollification f_nu * eta_{nu,m} with
/// eta_{nu,m}(x) = 2^{n nu} (1 + 2^nu |x|)^{-m}; requires m > n. The kernel is
/// truncated by the working box; the lost tail mass fraction is recorded.
struct MollifyInfo {
    double max_tail_fraction = 0.0;
};
FunctionSequence eta_mollify(const FunctionSequence& seq, double m, MollifyInfo* info = nullptr);

/// Sampled eta_{nu,m} on the kernel lattice of `base`.
GridFunction eta_kernel(int nu, double m, const GridGeometry& base);

}  // namespace fnx
