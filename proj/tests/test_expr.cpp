// SPDX-License-Identifier: Apache-2.0
#include <random>

#include "doctest.h"
#include "fnx/expr.hpp"

using namespace fnx;

TEST_CASE("parse: constants and direct substitution") {
    auto f = ScalarField::parse("2.0", 1);
    double x = 0.37;
    CHECK(f.eval({&x, 1}) == 2.0);
    x = -41.0;
    CHECK(f.eval({&x, 1}) == 2.0);

    auto g = ScalarField::parse("2 + 1/(1 + x1^2)", 1);
    x = 0.0;
    CHECK(g.eval({&x, 1}) == doctest::Approx(3.0).epsilon(1e-15));
    x = 1e8;
    CHECK(g.eval({&x, 1}) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("parse: operators, precedence and grammar quirks") {
    double x = 2.0;
    CHECK(ScalarField::parse("1 + 2*3", 1).eval({&x, 1}) == 7.0);
    CHECK(ScalarField::parse("2^3^2", 1).eval({&x, 1}) == 512.0);  // right associative
    CHECK(ScalarField::parse("2^-2", 1).eval({&x, 1}) == 0.25);
    // per the grammar, "-" binds to base before "^": (-2)^2
    CHECK(ScalarField::parse("-2^2", 1).eval({&x, 1}) == 4.0);
    CHECK(ScalarField::parse("min2(x1, 3)", 1).eval({&x, 1}) == 2.0);
    CHECK(ScalarField::parse("max2(x1, 3)", 1).eval({&x, 1}) == 3.0);
    CHECK(ScalarField::parse("pi", 1).eval({&x, 1}) == doctest::Approx(3.14159265358979));
    CHECK(ScalarField::parse("abs(-x1)", 1).eval({&x, 1}) == 2.0);
}

TEST_CASE("parse: errors carry position and kind") {
    CHECK_THROWS_AS(ScalarField::parse("2 + x7", 2), Error);
    CHECK_THROWS_AS(ScalarField::parse("2 + ", 1), Error);
    CHECK_THROWS_AS(ScalarField::parse("foo(1)", 1), Error);
    CHECK_THROWS_AS(ScalarField::parse("min2(1)", 1), Error);
    try {
        ScalarField::parse("2 + x7", 2);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::config);
        CHECK(std::string(e.what()).find("x7") != std::string::npos);
    }
}

TEST_CASE("parse-print-parse round trip evaluates identically") {
    const char* sources[] = {
        "2 + 1/(1 + x1^2)",
        "0.2*sin(3*x1) - cos(x2/2)^2",
        "sqrt(abs(x1)) + exp(-x2^2) * log(2 + x1^2)",
        "max2(1.5, min2(x1, 2 + x2))",
        "-x1^2 + 3",
    };
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (const char* src : sources) {
        auto f = ScalarField::parse(src, 2);
        auto g = ScalarField::parse(f.print(), 2);
        for (int k = 0; k < 100; ++k) {
            double x[2] = {u(rng), u(rng)};
            const double a = f.eval({x, 2});
            const double b = g.eval({x, 2});
            if (std::isfinite(a)) {
                CHECK(std::abs(a - b) <= 1e-15 * std::max(1.0, std::abs(a)));
            }
        }
    }
}

TEST_CASE("field_range: sampled min/max") {
    Box b1 = Box::cube(-1, 1, 1);
    auto c = ScalarField::parse("2.0", 1);
    auto [lo, hi] = field_range(c, b1, 11);
    CHECK(lo == 2.0);
    CHECK(hi == 2.0);

    auto lin = ScalarField::parse("3 - x1", 1);
    auto [l2, h2] = field_range(lin, Box::cube(0, 1, 1), 11);
    CHECK(l2 == doctest::Approx(2.0));
    CHECK(h2 == doctest::Approx(3.0));

    // dense-sampling oracle at 10^6 points fixes the expected sampled range
    auto f = ScalarField::parse("2 + 1/(1+x1^2)", 1);
    auto [fl, fh] = field_range(f, Box::cube(-10, 10, 1), 1001);
    CHECK(fh == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(fl == doctest::Approx(2.0 / 1.0 + 1.0 / 101.0 - 0.0).epsilon(1e-3));  // ~2.0099
    CHECK(fl == doctest::Approx(2.009901).epsilon(1e-4));
}

TEST_CASE("field_range: monotone under nested refinement") {
    auto f = ScalarField::parse("2 + sin(7*x1)*cos(3*x2)", 2);
    Box b = Box::cube(-2, 2, 2);
    long s = 9;
    auto [lo0, hi0] = field_range(f, b, s);
    for (int level = 0; level < 3; ++level) {
        s = 2 * s - 1;
        auto [lo, hi] = field_range(f, b, s);
        CHECK(lo <= lo0 + 1e-15);
        CHECK(hi >= hi0 - 1e-15);
        lo0 = lo;
        hi0 = hi;
    }
}

TEST_CASE("sampled range of a + b*sin(x1) converges at rate O(1/samples)") {
    auto f = ScalarField::parse("1.5 + 0.5*sin(x1)", 1);
    Box b = Box::cube(-7, 7, 1);
    double prev_err = 1e9;
    for (long s : {101, 201, 401, 801}) {
        auto [lo, hi] = field_range(f, b, s);
        const double err = std::max(std::abs(lo - 1.0), std::abs(hi - 2.0));
        CHECK(err < prev_err + 1e-12);
        prev_err = err;
    }
    CHECK(prev_err < 1e-4);
}

TEST_CASE("estimate_log_holder: constant field gives exactly (0, c, 0)") {
    auto f = ScalarField::parse("2.5", 2);
    auto rep = estimate_log_holder(f, Box::cube(-3, 3, 2), 9);
    CHECK(rep.clog_local == 0.0);
    CHECK(rep.clog_global == 0.0);
    CHECK(rep.g_infinity == 2.5);
    CHECK(rep.inf == 2.5);
    CHECK(rep.sup == 2.5);
}

TEST_CASE("estimate_log_holder: smooth decaying field has stable constants") {
    auto f = ScalarField::parse("2 + 1/(1+x1^2)", 1);
    auto r1 = estimate_log_holder(f, Box::cube(-100, 100, 1), 501);
    auto r2 = estimate_log_holder(f, Box::cube(-100, 100, 1), 1001);
    CHECK(r1.g_infinity == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(r2.clog_global > 0.0);
    CHECK(std::isfinite(r2.clog_global));
    // stable to ~2 significant digits under doubling
    CHECK(r2.clog_global == doctest::Approx(r1.clog_global).epsilon(0.05));
    CHECK(r2.clog_local == doctest::Approx(r1.clog_local).epsilon(0.25));
}

TEST_CASE("estimate_log_holder: Holder-continuous sqrt converges (it IS log-Holder)") {
    // |sqrt(t) - 0| * log(e + 1/t) -> 0 as t -> 0, so the estimate stabilizes;
    // the sampled sup is pinned by the coarse pair (0, 1): 1 * log(e + 1).
    auto f = ScalarField::parse("abs(x1)^(1/2)", 1);
    const double pinned = std::log(std::exp(1.0) + 1.0);
    long s = 65;
    double last = 0.0;
    for (int level = 0; level < 4; ++level) {
        auto rep = estimate_log_holder(f, Box::cube(-1, 1, 1), s);
        CHECK(rep.clog_local >= last - 1e-15);  // monotone under nested refinement
        last = rep.clog_local;
        s = 2 * s - 1;
    }
    CHECK(last == doctest::Approx(pinned).epsilon(1e-6));
}

TEST_CASE("estimate_log_holder: detects a non-log-Holder field by divergence") {
    // f = 1/sqrt(log(e + 1/|x|)) is continuous at 0 but has modulus worse
    // than 1/log: |f(t) - f(0)| * log(e + 1/t) = sqrt(log(e + 1/t)) -> inf.
    auto f = ScalarField::parse("1/sqrt(log(e + 1/abs(x1)))", 1);
    double prev = 0.0;
    long s = 65;
    for (int level = 0; level < 4; ++level) {
        auto rep = estimate_log_holder(f, Box::cube(-1, 1, 1), s);
        CHECK(rep.clog_local > prev + 1e-3);
        prev = rep.clog_local;
        s = 2 * s - 1;
    }
    CHECK(prev > 2.0);
}

TEST_CASE("g_infinity override is honored") {
    auto f = ScalarField::parse("2 + 1/(1+x1^2)", 1);
    auto rep = estimate_log_holder(f, Box::cube(-50, 50, 1), 201, 2.0);
    CHECK(rep.g_infinity == 2.0);
}
