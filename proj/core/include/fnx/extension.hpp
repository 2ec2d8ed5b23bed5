// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fnx/analysis.hpp"

namespace fnx {

/// Envelope sequence G^j(x) = sup_y |g^j(y)| / (1 + 2^j |x-y|)^a.
struct Envelope {
    std::vector<GridFunction> levels;
    double a = 0.0;
};

Envelope envelope(const FunctionSequence& seq, double a);

/// X-norm of the envelope: mixed norm of (w_j G^j).
double envelope_x_norm(const Envelope& e, const MixedNormSpec& spec, const WeightSequence& w);

/// Truncated extension  E f = sum_{j<=J} Psi_j * (Phi_j * f)_Omega.
/// f is read on Omega cells only (cone support); hypotheses are checked when
/// `constants` is given: L_phi > alpha2 and L_psi > (n+clog(1/q))/min(p-,q-)
/// + alpha - alpha1, refused with the required minima otherwise.
GridFunction extend(const GridFunction& f, const Domain& d, const KernelSystem& system, int J,
                    const SpaceConstants* constants = nullptr);

struct ExtensionReport {
    std::string member;
    double restriction_residual = 0.0;      ///< interior sup |Ef - f| / sup |f|
    double exact_interior_residual = 0.0;   ///< vs the unmasked Calderon partial sum
    double norm_ratio = 0.0;                ///< ||Ef||_{A(R^n)} / intrinsic norm
    double rn_norm = 0.0;
    double intrinsic_norm = 0.0;
    int truncation_j = 0;
};

/// Interior restriction residual of Ef against f on Omega cells with margin
/// 2 * 2^{-J} * support_radius from the boundary, plus the exact-interior
/// identity residual against the plain Calderon partial sum.
ExtensionReport restriction_check(const GridFunction& f, const GridFunction& ef, const Domain& d,
                                  const KernelSystem& system, const SystemSpectra& sp, int J);

/// Per-member empirical operator norms ||Ef|| / intrinsic norm over a family.
std::vector<ExtensionReport> boundedness_study(const std::vector<GridFunction>& family,
                                               const std::vector<std::string>& names,
                                               const Domain& d, const KernelSystem& system,
                                               const MixedNormSpec& spec, const WeightSequence& w,
                                               const AnalysisParams& params,
                                               const SpaceConstants& c);

struct UniformityRow {
    std::string config_name;
    bool accepted = false;
    double required_L = 0.0;
    double max_ratio = 0.0;
    double min_ratio = 0.0;
};

/// One exponent/smoothness configuration of the uniformity study.
struct UniformityConfig {
    std::string name;
    MixedNormSpec spec;
    WeightSequence weights;
    AnalysisParams params;
    SpaceConstants constants;
};

/// Runs the single highest-L system across configs; configs whose required
/// moment bound exceeds the system's L_psi are reported as out of reach.
std::vector<UniformityRow> uniformity_study(const std::vector<UniformityConfig>& configs,
                                            const std::vector<GridFunction>& family,
                                            const std::vector<std::string>& names, const Domain& d,
                                            const KernelSystem& system);

}  // namespace fnx
