// SPDX-License-Identifier: Apache-2.0
#include "fnx/family.hpp"

#include <random>

#include "fnx/kernels.hpp"

namespace fnx {

namespace {

// exactly 0 for t <= 0, 1 for t >= 1, Gevrey transition
double smooth_step(double t) {
    auto rho = [](double s) { return s > 0 ? std::exp(-1.0 / s) : 0.0; };
    const double a = rho(t);
    const double b = rho(1.0 - t);
    return a + b > 0 ? a / (a + b) : 0.0;
}

// 1 inside |x| <= 0.35, 0 outside |x| >= 0.5
double window(std::span<const double> x) {
    double r2 = 0.0;
    for (double c : x) r2 += c * c;
    return smooth_cutoff_1_2(std::sqrt(r2) / 0.25);
}

}  // namespace

std::vector<FamilyMember> standard_family(int dim, int count, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uc(-0.08, 0.08);
    std::uniform_real_distribution<double> usig(0.12, 0.30);
    std::uniform_real_distribution<double> uamp(0.6, 1.8);
    std::uniform_real_distribution<double> ufreq(4.0, 14.0);
    std::uniform_real_distribution<double> uphase(0.0, 6.28318530717958);
    std::uniform_real_distribution<double> uwidth(0.10, 0.2);

    std::vector<FamilyMember> out;
    out.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        const int kind = i % 4;
        Point c;
        c.n = dim;
        for (int d = 0; d < dim; ++d) c[d] = uc(rng);
        const double sig = usig(rng);
        const double amp = uamp(rng);
        char buf[64];
        switch (kind) {
            case 0: {  // truncated Gaussian
                std::snprintf(buf, sizeof buf, "gauss_%02d", i);
                out.push_back({buf, [c, sig, amp, dim](std::span<const double> x) {
                                   double r2 = 0.0;
                                   for (int d = 0; d < dim; ++d) {
                                       const double t = x[static_cast<size_t>(d)] - c[d];
                                       r2 += t * t;
                                   }
                                   return amp * std::exp(-r2 / (sig * sig)) * window(x);
                               }});
                break;
            }
            case 1: {  // modulated Gaussian
                const double k = ufreq(rng);
                const double ph = uphase(rng);
                std::snprintf(buf, sizeof buf, "modgauss_%02d", i);
                out.push_back({buf, [c, sig, amp, k, ph, dim](std::span<const double> x) {
                                   double r2 = 0.0;
                                   for (int d = 0; d < dim; ++d) {
                                       const double t = x[static_cast<size_t>(d)] - c[d];
                                       r2 += t * t;
                                   }
                                   return amp * std::exp(-r2 / (sig * sig)) *
                                          std::cos(k * x[0] + ph) * window(x);
                               }});
                break;
            }
            case 2: {  // shifted bump
                const double w = 0.5 * sig + 0.08;
                std::snprintf(buf, sizeof buf, "bump_%02d", i);
                out.push_back({buf, [c, w, amp, dim](std::span<const double> x) {
                                   double r2 = 0.0;
                                   for (int d = 0; d < dim; ++d) {
                                       const double t = x[static_cast<size_t>(d)] - c[d];
                                       r2 += t * t;
                                   }
                                   return amp * bump_profile(std::sqrt(r2) / w);
                               }});
                break;
            }
            default: {  // smoothed ramp against a Gaussian envelope
                const double w = uwidth(rng);
                const double b = uc(rng);
                std::snprintf(buf, sizeof buf, "ramp_%02d", i);
                out.push_back({buf, [b, w, amp, sig, dim](std::span<const double> x) {
                                   double r2 = 0.0;
                                   for (int d = 0; d < dim; ++d)
                                       r2 += x[static_cast<size_t>(d)] * x[static_cast<size_t>(d)];
                                   const double env = std::exp(-r2 / (2.0 * sig * sig));
                                   return amp * smooth_step((x[0] - b) / w + 0.5) * env * window(x);
                               }});
                break;
            }
        }
    }
    return out;
}

GridFunction sample_member(const FamilyMember& m, const GridGeometry& geom) {
    return sample(m.fn, geom);
}

}  // namespace fnx
