// SPDX-License-Identifier: Apache-2.0
#include "fnx/weights.hpp"

#include <sstream>

namespace fnx {

namespace {

std::vector<Point> corner_lattice(const Box& box, long s) {
    std::vector<Point> pts;
    long total = 1;
    for (int d = 0; d < box.dim; ++d) total *= s;
    pts.reserve(static_cast<size_t>(total));
    std::array<long, kMaxDim> idx{};
    for (long k = 0; k < total; ++k) {
        Point p;
        p.n = box.dim;
        for (int d = 0; d < box.dim; ++d) {
            const double lo = box.lo[static_cast<size_t>(d)], hi = box.hi[static_cast<size_t>(d)];
            p[d] = lo + (hi - lo) * static_cast<double>(idx[static_cast<size_t>(d)]) /
                            static_cast<double>(s - 1);
        }
        pts.push_back(p);
        for (int d = 0; d < box.dim; ++d) {
            if (++idx[static_cast<size_t>(d)] < s) break;
            idx[static_cast<size_t>(d)] = 0;
        }
    }
    return pts;
}

double sampled_cw(const WeightSequence& w, const std::vector<Point>& pts, double alpha) {
    const size_t n = pts.size();
    std::vector<double> level(n);
    double cw = 0.0;
    for (int j = 0; j <= w.jmax; ++j) {
        const double twoj = std::pow(2.0, j);
        for (size_t i = 0; i < n; ++i) level[i] = w.evaluator(j, pts[i].span());
        std::vector<double> per_i(n, 0.0);
        parallel_for(n, [&](size_t i) {
            double m = 0.0;
            for (size_t k = 0; k < n; ++k) {
                if (k == i) continue;
                const double q =
                    level[i] / (level[k] * std::pow(1.0 + twoj * dist2(pts[i], pts[k]), alpha));
                m = std::max(m, q);
            }
            per_i[i] = m;
        });
        for (double m : per_i) cw = std::max(cw, m);
    }
    return std::max(cw, 1.0);  // x == y gives quotient 1
}

}  // namespace

GridFunction WeightSequence::sample_level(int j, const GridGeometry& geom) const {
    return sample([&](std::span<const double> x) { return evaluator(j, x); }, geom);
}

WeightSequence weight_from_smoothness(const ScalarField& s, int jmax, const Box& box,
                                      long samples) {
    if (jmax < 1) fail_config("weight_from_smoothness: jmax must be >= 1");
    const auto [lo, hi] = field_range(s, box, std::max<long>(samples, 17));
    if (std::max(std::abs(lo), std::abs(hi)) > 1e6)
        fail_numeric("weight_from_smoothness: smoothness field unbounded on box");
    WeightSequence w;
    w.jmax = jmax;
    ScalarField sf = s;
    w.evaluator = [sf](int j, std::span<const double> x) {
        return std::pow(2.0, static_cast<double>(j) * sf.eval(x));
    };
    w.alpha1 = lo;
    w.alpha2 = hi;
    auto [alpha, cw] = certify_alpha(w, box, samples);
    w.alpha = alpha;
    w.Cw = cw;
    return w;
}

WeightCertificate certify_admissible(const WeightSequence& w, const Box& box, long samples) {
    if (samples < 16) fail_config("certify_admissible: need >= 16 samples per axis");
    WeightCertificate cert;
    cert.samples_per_axis = samples;
    cert.alpha = w.alpha;
    const std::vector<Point> pts = corner_lattice(box, samples);

    // condition (2): dyadic monotonicity envelope at every sampled (x, j)
    const double f1 = std::pow(2.0, w.alpha1), f2 = std::pow(2.0, w.alpha2);
    for (int j = 0; j < w.jmax; ++j) {
        for (const auto& p : pts) {
            const double a = w.evaluator(j, p.span());
            const double b = w.evaluator(j + 1, p.span());
            if (a <= 0 || b <= 0) {
                cert.witness = "nonpositive weight value";
                return cert;
            }
            if (b < f1 * a * (1.0 - 1e-12) || b > f2 * a * (1.0 + 1e-12)) {
                std::ostringstream os;
                os << "condition (2) fails at j=" << j << ", x=(";
                for (int d = 0; d < p.n; ++d) os << (d ? "," : "") << p[d];
                os << "): ratio " << b / a << " outside [2^a1, 2^a2]";
                cert.witness = os.str();
                return cert;
            }
        }
    }

    cert.Cw = sampled_cw(w, pts, w.alpha);
    cert.pass = std::isfinite(cert.Cw);
    if (!cert.pass) cert.witness = "condition (1) produced a non-finite constant";
    return cert;
}

std::pair<double, double> certify_alpha(const WeightSequence& w, const Box& box, long samples) {
    const std::vector<Point> coarse = corner_lattice(box, std::max<long>(9, samples / 2 + 1));
    const std::vector<Point> fine = corner_lattice(box, std::max<long>(17, samples));
    for (double alpha = 0.0; alpha <= 8.0 + 1e-9; alpha += 0.25) {
        const double c_coarse = sampled_cw(w, coarse, alpha);
        const double c_fine = sampled_cw(w, fine, alpha);
        if (c_fine <= 1.1 * c_coarse) return {alpha, c_fine};
    }
    return {8.0, sampled_cw(w, fine, 8.0)};
}

}  // namespace fnx
