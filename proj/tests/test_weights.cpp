// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "fnx/weights.hpp"

using namespace fnx;

TEST_CASE("weight_from_smoothness: constant s") {
    Box b = Box::cube(-1, 1, 2);
    auto w0 = weight_from_smoothness(ScalarField::parse("0", 2), 8, b);
    double p[2] = {0.3, -0.2};
    for (int j = 0; j <= 8; ++j) CHECK(w0.evaluator(j, {p, 2}) == 1.0);
    CHECK(w0.alpha == 0.0);
    CHECK(w0.alpha1 == 0.0);
    CHECK(w0.alpha2 == 0.0);

    auto w = weight_from_smoothness(ScalarField::parse("1.5", 2), 4, b);
    CHECK(w.alpha1 == doctest::Approx(1.5));
    CHECK(w.alpha2 == doctest::Approx(1.5));
    CHECK(w.alpha == 0.0);
    CHECK(w.evaluator(2, {p, 2}) == doctest::Approx(std::pow(2.0, 3.0)));

    auto cert = certify_admissible(w, b, 17);
    CHECK(cert.pass);
    CHECK(cert.Cw == doctest::Approx(1.0));
}

TEST_CASE("weight_from_smoothness: variable s certifies a finite alpha") {
    Box b = Box::cube(-1, 1, 2);
    auto w = weight_from_smoothness(ScalarField::parse("1 + 1/(1 + x1^2)", 2), 6, b);
    CHECK(w.alpha1 == doctest::Approx(1.5).epsilon(0.05));  // sampled inf of s on the box
    CHECK(w.alpha2 == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(w.alpha >= 0.0);
    CHECK(w.alpha <= 8.0);
    CHECK(std::isfinite(w.Cw));

    // alpha certificate stable under refinement: rerun with more samples
    auto [alpha2, cw2] = certify_alpha(w, b, 25);
    CHECK(std::abs(alpha2 - w.alpha) <= 0.25 + 1e-12);
    (void)cw2;
}

TEST_CASE("unbounded smoothness field is rejected") {
    Box b = Box::cube(-1, 1, 1);
    CHECK_THROWS_AS(weight_from_smoothness(ScalarField::parse("1/(x1-0.5)^2", 1), 4, b), Error);
}

TEST_CASE("certify_admissible: custom weight with spatial growth") {
    Box b = Box::cube(-1, 1, 2);
    WeightSequence w;
    w.jmax = 6;
    w.evaluator = [](int j, std::span<const double> x) {
        const double r = std::hypot(x[0], x[1]);
        return std::pow(2.0, j) * (1.0 + r);
    };
    w.alpha1 = 1.0;
    w.alpha2 = 1.0;
    w.alpha = 1.0;
    auto cert = certify_admissible(w, b, 17);
    CHECK(cert.pass);
    CHECK(cert.Cw >= 1.0);
    // pair-enumeration oracle: the sampled minimum alpha for boundedness is ~1
    auto [alpha, cw] = certify_alpha(w, b, 17);
    CHECK(alpha <= 2.0);
    CHECK(std::isfinite(cw));
}

TEST_CASE("monotonicity violation fails with a witness") {
    WeightSequence w;
    w.jmax = 3;
    w.evaluator = [](int j, std::span<const double> x) {
        if (j == 1 && x[0] > 0.5) return 0.1;  // dips below 2^{alpha1} w_0
        return std::pow(2.0, j);
    };
    w.alpha1 = 1.0;
    w.alpha2 = 1.0;
    w.alpha = 0.0;
    auto cert = certify_admissible(w, Box::cube(-1, 1, 1), 17);
    CHECK_FALSE(cert.pass);
    CHECK(cert.witness.find("condition (2)") != std::string::npos);
}

TEST_CASE("doubling samples never turns fail into pass (nested maxima)") {
    WeightSequence w;
    w.jmax = 4;
    w.evaluator = [](int j, std::span<const double> x) {
        return std::pow(2.0, j * (1.0 + 0.3 * std::sin(5 * x[0])));
    };
    w.alpha1 = 0.7;
    w.alpha2 = 1.3;
    w.alpha = 0.5;
    auto c17 = certify_admissible(w, Box::cube(-1, 1, 1), 17);
    auto c33 = certify_admissible(w, Box::cube(-1, 1, 1), 33);
    if (!c17.pass) CHECK_FALSE(c33.pass);
    if (c17.pass && c33.pass) CHECK(c33.Cw >= c17.Cw - 1e-12);
}

TEST_CASE("dyadic transfer inequality from the admissibility envelope") {
    // w_l(x) <= c w_j(x) 2^{-alpha1 (j-l)} for j >= l (and the alpha2 mirror),
    // with c = 1 for exact 2^{js(x)} weights.
    Box b = Box::cube(-1, 1, 2);
    auto w = weight_from_smoothness(ScalarField::parse("0.5 + 0.25/(1 + x1^2)", 2), 8, b);
    double pts[4][2] = {{0.1, 0.2}, {-0.7, 0.9}, {0.5, -0.5}, {0.0, 0.0}};
    for (auto& p : pts) {
        for (int l = 0; l <= 8; ++l)
            for (int j = l; j <= 8; ++j) {
                const double wl = w.evaluator(l, {p, 2});
                const double wj = w.evaluator(j, {p, 2});
                CHECK(wl <= wj * std::pow(2.0, -w.alpha1 * (j - l)) * (1.0 + 1e-12));
                CHECK(wl >= wj * std::pow(2.0, -w.alpha2 * (j - l)) * (1.0 - 1e-12));
            }
    }
}
