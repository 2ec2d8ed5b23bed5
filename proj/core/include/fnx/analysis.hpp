// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fnx/geometry.hpp"
#include "fnx/kernels.hpp"
#include "fnx/varspaces.hpp"
#include "fnx/weights.hpp"

namespace fnx {

/// Parameters of the Peetre-side characterizations.
struct AnalysisParams {
    double a = 0.0;       ///< Peetre exponent
    MixedOrder space = MixedOrder::Lp_of_lq;  ///< B = lq_of_Lp, F = Lp_of_lq
    int jmax = 8;
    std::optional<double> r;  ///< r-trick exponent (F-case window n/(a-alpha) < r < min(p-,q-))

    bool is_besov() const { return space == MixedOrder::lq_of_Lp; }
};

/// Certified constants the hypothesis guards consume.
struct SpaceConstants {
    double p_minus = 1.0, p_plus = 1.0;
    double q_minus = 1.0, q_plus = 1.0;
    double clog_inv_q = 0.0;  ///< sampled global log-Holder constant of 1/q
    double alpha = 0.0, alpha1 = 0.0, alpha2 = 0.0;

    static SpaceConstants measure(const MixedNormSpec& spec, const WeightSequence& w,
                                  const Box& box, long samples = 33);
};

/// Smallest admissible Peetre exponent for the case; B: (n+clog(1/q))/p- + alpha,
/// F: n/min(p-,q-) + alpha.
double required_peetre_a(bool besov, int dim, const SpaceConstants& c);
/// Thm(ext) moment bound: (n + clog(1/q))/min(p-,q-) + alpha - alpha1.
double required_psi_moments(int dim, const SpaceConstants& c);
/// Throws Error(hypothesis) with the required minimum when a is too small or
/// the kernel moment orders violate the theorem hypotheses.
void check_analysis_hypotheses(const AnalysisParams& params, const KernelSystem& system,
                               int dim, const SpaceConstants& c);

/// Hierarchical max pyramid answering sup_y g(y) / (1 + s |y - x|)^a exactly
/// on the grid (branch-and-bound over block maxima).
class MaxPyramid {
  public:
    explicit MaxPyramid(const GridFunction& abs_values);
    MaxPyramid(const GridFunction& abs_values, const std::vector<uint8_t>& mask);

    /// max over grid cells y (with mask, if given) of v(y)/(1+s|y-x|)^a
    double query(const Point& x, double s, double a) const;
    GridFunction transform(double s, double a) const;  // query at every cell
    GridFunction transform(double s, double a, const std::vector<uint8_t>& eval_mask) const;

  private:
    struct Level {
        std::array<long, kMaxDim> dims{};
        std::vector<double> maxv;
    };
    GridGeometry geom_;
    std::vector<Level> levels_;  // levels_[0] = cell data
};

/// (Psi_k^* f)_a on R^n: sup_y |conv_k(y)| / (1 + 2^k |y-x|)^a over the grid.
GridFunction peetre_maximal_rn(const GridFunction& f, const KernelSystem& system, int k, double a);
/// Domain version: sup restricted to Omega cells; output zero outside Omega.
GridFunction peetre_maximal_domain(const GridFunction& f, const KernelSystem& system, int k,
                                   double a, const Domain& d);

struct NormReport {
    double value = 0.0;
    std::vector<std::pair<int, double>> per_scale;
    int truncation_j = 0;
    double grid_h = 0.0;
    AnalysisParams params;
};

struct LocalMeansReport {
    NormReport convolution;
    NormReport peetre;
};

/// Fourier-decomposition norm on R^n (smooth dyadic decomposition of unity).
NormReport norm_fourier_rn(const GridFunction& f, const MixedNormSpec& spec,
                           const WeightSequence& w, const AnalysisParams& params);

/// Local-means norm on R^n from the kernel system; both the plain-convolution
/// and the Peetre-maximal versions.
LocalMeansReport norm_localmeans_rn(const GridFunction& f, const KernelSystem& system,
                                    const MixedNormSpec& spec, const WeightSequence& w,
                                    const AnalysisParams& params, const SpaceConstants& c);

/// Intrinsic norms on Omega (mask from d); f is taken as given on Omega cells.
NormReport intrinsic_norm_peetre(const GridFunction& f, const Domain& d, const KernelSystem& system,
                                 const MixedNormSpec& spec, const WeightSequence& w,
                                 const AnalysisParams& params, const SpaceConstants& c);
NormReport intrinsic_norm_localmeans(const GridFunction& f, const Domain& d,
                                     const KernelSystem& system, const MixedNormSpec& spec,
                                     const WeightSequence& w, const AnalysisParams& params);

/// Scale convolutions Phi_k * f for k = 0..jmax (shared spectra path).
FunctionSequence scale_convolutions(const GridFunction& f, const KernelSystem& system,
                                    const SystemSpectra& sp, int jmax);

}  // namespace fnx
