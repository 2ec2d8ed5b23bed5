// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fnx/expr.hpp"
#include "fnx/grid.hpp"

namespace fnx {

/// Certificate for the two admissibility conditions of a weight sequence:
///  (1) w_j(x) <= Cw w_j(y) (1 + 2^j |x-y|)^alpha  for the declared alpha,
///  (2) 2^{alpha1} w_j(x) <= w_{j+1}(x) <= 2^{alpha2} w_j(x).
struct WeightCertificate {
    bool pass = false;
    double alpha = 0.0;
    double Cw = 0.0;
    long samples_per_axis = 0;
    std::string witness;  // nonempty on failure
};

/// 2-microlocal weight sequence (w_j)_{j=0..jmax} with growth envelope
/// (alpha1, alpha2) and off-diagonal parameter alpha.
struct WeightSequence {
    int jmax = 8;
    std::function<double(int, std::span<const double>)> evaluator;
    double alpha = 0.0;
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    double Cw = 1.0;

    double operator()(int j, std::span<const double> x) const { return evaluator(j, x); }
    GridFunction sample_level(int j, const GridGeometry& geom) const;
};

/// w_j(x) = 2^{j s(x)}; alpha1/alpha2 from the sampled range of s, alpha
/// certified by grid search. Throws Error(numeric) if |s| is unbounded on the
/// box (sampled range beyond 1e6).
WeightSequence weight_from_smoothness(const ScalarField& s, int jmax, const Box& box,
                                      long samples = 33);

/// Checks conditions (1)-(2) on a corner-aligned lattice. Condition (2) is
/// checked exactly (up to 1e-12 slack); condition (1) reports the sampled
/// Cw for the declared alpha. Failure is a result, not an error.
WeightCertificate certify_admissible(const WeightSequence& w, const Box& box, long samples);

/// Smallest alpha on the lattice {0, 0.25, ..., 8} whose sampled Cw is stable
/// under sample refinement (ratio <= 1.1 between s and 2s-1 samples), together
/// with that Cw. Returns alpha = 8 with the measured Cw if none stabilizes.
std::pair<double, double> certify_alpha(const WeightSequence& w, const Box& box, long samples);

}  // namespace fnx
