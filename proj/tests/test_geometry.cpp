// SPDX-License-Identifier: Apache-2.0
#include <random>

#include "doctest.h"
#include "fnx/geometry.hpp"
#include "oracles.hpp"

using namespace fnx;

namespace {
Domain half_plane() {
    return Domain(ScalarField::parse("0", 1), 1.0, 2, Box::cube(-1, 1, 2));
}
Domain v_graph() {
    return Domain(ScalarField::parse("abs(x1)", 1), 1.0, 2, Box::cube(-1, 1, 2));
}
}  // namespace

TEST_CASE("make_domain: half-plane, V-graph, Lipschitz violation") {
    auto hp = half_plane();
    double in_pt[2] = {0.0, 0.5};
    CHECK(hp.contains({in_pt, 2}));

    auto v = v_graph();
    double a[2] = {0.0, 1.0};
    double b[2] = {0.0, -1.0};
    CHECK(v.contains({a, 2}));
    CHECK_FALSE(v.contains({b, 2}));

    CHECK_THROWS_AS(Domain(ScalarField::parse("2*abs(x1)", 1), 1.0, 2, Box::cube(-1, 1, 2)), Error);
    // wrong arity: omega must live on R^{n-1}
    CHECK_THROWS_AS(Domain(ScalarField::parse("x1+x2", 2), 1.0, 2, Box::cube(-1, 1, 2)), Error);
}

TEST_CASE("contains: boundary excluded (Omega open)") {
    auto hp = half_plane();
    double p1[2] = {0.3, 0.1};
    double p2[2] = {0.3, 0.0};
    CHECK(hp.contains({p1, 2}));
    CHECK_FALSE(hp.contains({p2, 2}));

    auto v = v_graph();
    double p3[2] = {1.0, 1.0};
    double p4[2] = {1.0, 1.5};
    CHECK_FALSE(v.contains({p3, 2}));
    CHECK(v.contains({p4, 2}));
}

TEST_CASE("cone membership and homogeneity") {
    Cone k{1.0, 2, +1};
    double a[2] = {0.0, 1.0};
    double b[2] = {2.0, 1.0};
    double c[2] = {0.0, -1.0};
    CHECK(k.contains({a, 2}));
    CHECK_FALSE(k.contains({b, 2}));
    CHECK(k.reflected().contains({c, 2}));

    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> t(0.01, 100.0);
    for (int i = 0; i < 1000; ++i) {
        double x[2] = {u(rng), u(rng)};
        double s = t(rng);
        double sx[2] = {s * x[0], s * x[1]};
        CHECK(k.contains({x, 2}) == k.contains({sx, 2}));
    }
}

TEST_CASE("reflect: formula, fixed points, involution") {
    auto hp = half_plane();
    double x[2] = {0.5, -0.3};
    auto r = hp.reflect({x, 2});
    CHECK(r[0] == 0.5);
    CHECK(r[1] == doctest::Approx(0.3));

    auto v = v_graph();
    double y[2] = {1.0, 0.0};
    auto rv = v.reflect({y, 2});
    CHECK(rv[0] == 1.0);
    CHECK(rv[1] == doctest::Approx(2.0));

    double on_graph[2] = {0.25, 0.25};
    auto fg = v.reflect({on_graph, 2});
    CHECK(fg[1] == doctest::Approx(0.25));

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto wavy = Domain(ScalarField::parse("0.2*sin(3*x1)", 1), 0.6, 2, Box::cube(-1, 1, 2));
    for (int i = 0; i < 200; ++i) {
        double p[2] = {u(rng), u(rng)};
        auto rr = wavy.reflect(wavy.reflect({p, 2}).span());
        CHECK(std::abs(rr[0] - p[0]) <= 1e-14);
        CHECK(std::abs(rr[1] - p[1]) <= 1e-13);
    }
}

TEST_CASE("cone property: x in Omega, k in K implies x + k in Omega") {
    auto wavy = Domain(ScalarField::parse("0.2*sin(3*x1)", 1), 0.6, 2, Box::cube(-1, 1, 2));
    const Cone k = wavy.cone();
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int found = 0;
    while (found < 1000) {
        double x[2] = {u(rng), u(rng)};
        double kk[2] = {u(rng), std::abs(u(rng))};
        if (!wavy.contains({x, 2}) || !k.contains({kk, 2})) continue;
        double y[2] = {x[0] + kk[0], x[1] + kk[1]};
        CHECK(wavy.contains({y, 2}));
        ++found;
    }
}

TEST_CASE("reflection distance bound |x~ - y| <= B |x - y| with stable B") {
    auto wavy = Domain(ScalarField::parse("0.2*sin(3*x1)", 1), 0.6, 2, Box::cube(-1, 1, 2));
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto measure_B = [&](int count) {
        double worst = 0.0;
        int n = 0;
        while (n < count) {
            double x[2] = {u(rng), u(rng)};
            double y[2] = {u(rng), u(rng)};
            if (wavy.contains({x, 2}) || !wavy.contains({y, 2})) continue;  // x outside closure-ish
            auto xr = wavy.reflect({x, 2});
            const double num = std::hypot(xr[0] - y[0], xr[1] - y[1]);
            const double den = std::hypot(x[0] - y[0], x[1] - y[1]);
            if (den < 1e-9) continue;
            worst = std::max(worst, num / den);
            ++n;
        }
        return worst;
    };
    const double b1 = measure_B(2000);
    const double b2 = measure_B(4000);
    CHECK(b1 > 0);
    CHECK(std::isfinite(b2));
    CHECK(std::abs(b2 - b1) <= 0.05 * std::max(b1, b2) + 0.2);  // stable under doubling
}

TEST_CASE("zero_extend: indicator, zero, quadrature split and restrict identity") {
    auto hp = half_plane();
    auto g = GridGeometry::over_box(Box::cube(-1, 1, 2), 32);
    auto mask = hp.mask(g);

    auto ones = sample([](std::span<const double>) { return 1.0; }, g);
    auto ind = zero_extend(ones, mask);
    long upper = 0;
    for (size_t i = 0; i < mask.size(); ++i) upper += mask[i];
    CHECK(integral(ind) == doctest::Approx(static_cast<double>(upper) * g.cell_volume()));
    CHECK(upper == g.cells() / 2);  // half-plane splits the grid evenly

    auto zeros = sample([](std::span<const double>) { return 0.0; }, g);
    CHECK(zero_extend(zeros, mask).max_abs() == 0.0);

    auto gauss = sample(
        [](std::span<const double> x) { return std::exp(-3 * (x[0] * x[0] + x[1] * x[1])); }, g);
    auto ge = zero_extend(gauss, mask);
    double masked_sum = 0.0;
    for (long i = 0; i < gauss.cells(); ++i)
        if (mask[static_cast<size_t>(i)]) masked_sum += gauss[i];
    CHECK(integral(ge) == doctest::Approx(masked_sum * g.cell_volume()).epsilon(1e-14));

    auto ge2 = zero_extend(ge, mask);  // restrict(zero_extend(f)) == f
    CHECK(oracles::max_abs_diff(ge2, ge) == 0.0);
}

TEST_CASE("n=1 smoke domain: Omega = (c, inf)") {
    Domain line(ScalarField::parse("0.25", 0), 1.0, 1, Box::cube(-1, 1, 1));
    double a = 0.5, b = 0.0;
    CHECK(line.contains({&a, 1}));
    CHECK_FALSE(line.contains({&b, 1}));
    auto r = line.reflect({&b, 1});
    CHECK(r[0] == doctest::Approx(0.5));
}
