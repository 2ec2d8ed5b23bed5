// SPDX-License-Identifier: Apache-2.0
#include "fnx/varspaces.hpp"

#include <sstream>

namespace fnx {

FunctionSequence::FunctionSequence(std::vector<GridFunction> entries)
    : entries_(std::move(entries)) {
    if (entries_.empty()) fail_grid("FunctionSequence: empty");
    for (const auto& e : entries_)
        if (!e.geom().same_grid(entries_.front().geom()))
            fail_grid("FunctionSequence: entries must share one grid");
}

void FunctionSequence::push_back(GridFunction f) {
    if (!entries_.empty() && !f.geom().same_grid(entries_.front().geom()))
        fail_grid("FunctionSequence: entries must share one grid");
    entries_.push_back(std::move(f));
}

ExponentSamples ExponentSamples::make(const ScalarField& p, const GridGeometry& geom,
                                      const std::vector<uint8_t>* mask) {
    ExponentSamples s;
    const long n = geom.cells();
    s.p.resize(static_cast<size_t>(n));
    s.is_inf.assign(static_cast<size_t>(n), 0);
    double lo = 1e300, hi = -1e300;
    std::array<long, kMaxDim> idx{};
    for (long i = 0; i < n; ++i) {
        if (mask && !(*mask)[static_cast<size_t>(i)]) {
            s.p[static_cast<size_t>(i)] = 1.0;
            continue;
        }
        geom.unflat(i, {idx.data(), static_cast<size_t>(geom.ndim)});
        const Point x = geom.center({idx.data(), static_cast<size_t>(geom.ndim)});
        const double v = p.eval(x.span());
        if (!std::isfinite(v) || v <= 0) fail_numeric("exponent field must be positive and finite");
        if (v > kInfExponent) {
            s.is_inf[static_cast<size_t>(i)] = 1;
            s.p[static_cast<size_t>(i)] = v;
        } else {
            s.p[static_cast<size_t>(i)] = v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    s.p_minus = lo;
    s.p_plus = hi;
    return s;
}

namespace {

// Modular evaluated along rays lambda -> rho(f / lambda): a finite sum
//   h^n * sum_i exp(a_i - b_i * log(lambda))
// plus an ess-sup part max_i exp(a_i - b_i * log(lambda)). Monotone
// nonincreasing in lambda whenever all b_i > 0.
struct ModularRay {
    std::vector<double> a_fin, b_fin;
    std::vector<double> a_sup, b_sup;
    double cell_volume = 0.0;

    double eval_log(double L) const {
        double acc = 0.0;
        const size_t n = a_fin.size();
        for (size_t i = 0; i < n; ++i) acc += std::exp(a_fin[i] - b_fin[i] * L);
        acc *= cell_volume;
        double sup = 0.0;
        for (size_t i = 0; i < a_sup.size(); ++i)
            sup = std::max(sup, std::exp(a_sup[i] - b_sup[i] * L));
        return acc + sup;
    }
    bool empty() const { return a_fin.empty() && a_sup.empty(); }
};

// Solves rho(lambda) = 1 for the smallest lambda with rho <= 1, to relative
// width `rel`. Expects rho monotone nonincreasing on log-lambda.
double solve_unit_modular(const ModularRay& ray, double sup_abs, double measure, double rel) {
    if (ray.empty() || sup_abs == 0.0) return 0.0;
    double hi = std::max(1.0, sup_abs) * (1.0 + measure);
    double lo = 1e-12;
    // expand geometrically on bracketing failure
    int guard = 0;
    while (ray.eval_log(std::log(hi)) > 1.0) {
        hi *= 8.0;
        if (++guard > 200) fail_numeric("luxemburg: no upper bracket (modular stays above 1)");
    }
    guard = 0;
    while (ray.eval_log(std::log(lo)) <= 1.0) {
        lo /= 8.0;
        if (lo < 1e-300)
            fail_numeric("luxemburg: modular <= 1 for all lambda down to 1e-300 (degenerate mask)");
        ++guard;
        if (guard > 200) break;
    }
    // log-space bisection; trace stays monotone by construction
    double prev = 1e300;
    while (hi / lo - 1.0 > rel) {
        const double mid = std::sqrt(hi * lo);
        const double v = ray.eval_log(std::log(mid));
        if (v > prev + 1e-9 * std::max(1.0, prev))
            fail_numeric("luxemburg: modular not monotone along the bisection trace");
        if (v <= 1.0)
            hi = mid;
        else {
            lo = mid;
            prev = v;
        }
    }
    return std::sqrt(hi * lo);
}

constexpr double kLogZero = -745.0;  // exp() underflows to 0 well below this

void append_cell(ModularRay& ray, double log_abs_f, double p_val, bool p_inf, double b_fin_exp,
                 double b_sup_exp) {
    if (log_abs_f <= kLogZero) return;
    if (p_inf)
        ray.a_sup.push_back(log_abs_f), ray.b_sup.push_back(b_sup_exp);
    else
        ray.a_fin.push_back(p_val * log_abs_f), ray.b_fin.push_back(b_fin_exp);
}

double log_abs(double v) {
    const double a = std::abs(v);
    return a > 0 ? std::log(a) : kLogZero * 2;
}

long masked_cells(const GridGeometry& geom, const std::vector<uint8_t>* mask) {
    if (!mask) return geom.cells();
    long n = 0;
    for (uint8_t m : *mask) n += m;
    return n;
}

}  // namespace

double modular_lp(const GridFunction& f, const ScalarField& p, const std::vector<uint8_t>* mask) {
    const auto es = ExponentSamples::make(p, f.geom(), mask);
    const double hn = f.geom().cell_volume();
    double acc = 0.0, sup = 0.0;
    for (long i = 0; i < f.cells(); ++i) {
        if (mask && !(*mask)[static_cast<size_t>(i)]) continue;
        const double v = std::abs(f[i]);
        if (es.is_inf[static_cast<size_t>(i)])
            sup = std::max(sup, v);
        else if (v > 0)
            acc += std::pow(v, es.p[static_cast<size_t>(i)]);
    }
    return acc * hn + sup;
}

double luxemburg(const GridFunction& f, const ScalarField& p, const std::vector<uint8_t>* mask) {
    const auto es = ExponentSamples::make(p, f.geom(), mask);
    ModularRay ray;
    ray.cell_volume = f.geom().cell_volume();
    double sup_abs = 0.0;
    for (long i = 0; i < f.cells(); ++i) {
        if (mask && !(*mask)[static_cast<size_t>(i)]) continue;
        const double la = log_abs(f[i]);
        sup_abs = std::max(sup_abs, std::abs(f[i]));
        append_cell(ray, la, es.p[static_cast<size_t>(i)], es.is_inf[static_cast<size_t>(i)] != 0,
                    es.p[static_cast<size_t>(i)], 1.0);
    }
    const double measure =
        static_cast<double>(masked_cells(f.geom(), mask)) * f.geom().cell_volume();
    return solve_unit_modular(ray, sup_abs, measure, 1e-10);
}

namespace {

// Inner quantity of the mixed ell_q(L_p) modular for one entry f_nu at outer
// scale mu: inf{ lambda > 0 : rho_p( (f_nu / mu) / lambda^{1/q} ) <= 1 }.
// Integrand: |f/mu|^{p} lambda^{-p/q}; sup part over p = inf cells.
struct LqLpEntry {
    std::vector<double> pa;     // p_i * log|f_i|
    std::vector<double> p_;     // p_i
    std::vector<double> pq;     // p_i / q_i
    std::vector<double> sup_a;  // log|f_i| on p = inf cells
    std::vector<double> sup_q;  // 1/q_i on those cells
    double sup_abs = 0.0;
    double cell_volume = 0.0;

    double inner_inf(double log_mu, double measure) const {
        ModularRay ray;
        ray.cell_volume = cell_volume;
        ray.a_fin.reserve(pa.size());
        ray.b_fin.reserve(pa.size());
        for (size_t i = 0; i < pa.size(); ++i) {
            ray.a_fin.push_back(pa[i] - p_[i] * log_mu);
            ray.b_fin.push_back(pq[i]);
        }
        for (size_t i = 0; i < sup_a.size(); ++i) {
            ray.a_sup.push_back(sup_a[i] - log_mu);
            ray.b_sup.push_back(sup_q[i]);
        }
        const double s = sup_abs * std::exp(-log_mu);
        return solve_unit_modular(ray, std::max(s, 1.0), measure, 1e-12);
    }
};

}  // namespace

double norm_lq_of_Lp(const FunctionSequence& seq, const MixedNormSpec& spec) {
    const GridGeometry& geom = seq.geom();
    const auto* mask = spec.domain_mask;
    const auto ep = ExponentSamples::make(spec.p, geom, mask);
    const auto eq = ExponentSamples::make(spec.q, geom, mask);

    bool q_has_inf = false, q_all_inf = true;
    for (long i = 0; i < geom.cells(); ++i) {
        if (mask && !(*mask)[static_cast<size_t>(i)]) continue;
        q_has_inf = q_has_inf || eq.is_inf[static_cast<size_t>(i)];
        q_all_inf = q_all_inf && eq.is_inf[static_cast<size_t>(i)];
    }
    if (q_all_inf) {  // sup convention for q == infinity
        double m = 0.0;
        for (const auto& f : seq.entries()) m = std::max(m, luxemburg(f, spec.p, mask));
        return m;
    }
    if (q_has_inf)
        fail_hypothesis(
            "norm_lq_of_Lp: q(x) attaining infinity on part of the domain is not supported "
            "(only constant q = inf); use a finite q or the sup convention");

    const double measure = static_cast<double>(masked_cells(geom, mask)) * geom.cell_volume();

    std::vector<LqLpEntry> entries(seq.size());
    double sup_abs_all = 0.0;
    for (size_t nu = 0; nu < seq.size(); ++nu) {
        LqLpEntry& e = entries[nu];
        e.cell_volume = geom.cell_volume();
        const GridFunction& f = seq[nu];
        for (long i = 0; i < geom.cells(); ++i) {
            if (mask && !(*mask)[static_cast<size_t>(i)]) continue;
            const double la = log_abs(f[i]);
            if (la <= kLogZero) continue;
            const double pi = ep.p[static_cast<size_t>(i)];
            const double qi = eq.p[static_cast<size_t>(i)];
            if (ep.is_inf[static_cast<size_t>(i)]) {
                e.sup_a.push_back(la);
                e.sup_q.push_back(1.0 / qi);
                e.sup_abs = std::max(e.sup_abs, std::abs(f[i]));
            } else {
                e.pa.push_back(pi * la);
                e.p_.push_back(pi);
                e.pq.push_back(pi / qi);
            }
        }
        sup_abs_all = std::max(sup_abs_all, f.max_abs());
    }
    if (sup_abs_all == 0.0) return 0.0;

    auto rho = [&](double log_mu) {
        std::vector<double> inner(entries.size(), 0.0);
        parallel_for(entries.size(), [&](size_t nu) {
            inner[nu] = entries[nu].inner_inf(log_mu, measure);
        });
        double acc = 0.0;
        for (double v : inner) acc += v;
        return acc;
    };

    // outer Luxemburg norm on mu, log-space bisection
    double hi = std::max(1.0, sup_abs_all) * (1.0 + measure) * (1.0 + static_cast<double>(seq.size()));
    double lo = 1e-12;
    int guard = 0;
    while (rho(std::log(hi)) > 1.0) {
        hi *= 8.0;
        if (++guard > 200) fail_numeric("norm_lq_of_Lp: no upper bracket");
    }
    guard = 0;
    while (rho(std::log(lo)) <= 1.0) {
        lo /= 8.0;
        if (lo < 1e-300) fail_numeric("norm_lq_of_Lp: modular <= 1 for all mu (degenerate)");
        if (++guard > 200) break;
    }
    while (hi / lo - 1.0 > 1e-10) {
        const double mid = std::sqrt(hi * lo);
        if (rho(std::log(mid)) <= 1.0)
            hi = mid;
        else
            lo = mid;
    }
    return std::sqrt(hi * lo);
}

double norm_Lp_of_lq(const FunctionSequence& seq, const MixedNormSpec& spec) {
    const GridGeometry& geom = seq.geom();
    const auto* mask = spec.domain_mask;
    const auto eq = ExponentSamples::make(spec.q, geom, mask);

    // pointwise ell_{q(x)} reduction (sup over nu where q = inf)
    std::vector<double> g(static_cast<size_t>(geom.cells()), 0.0);
    parallel_for(static_cast<size_t>(geom.cells()), [&](size_t i) {
        if (mask && !(*mask)[i]) return;
        if (eq.is_inf[i]) {
            double m = 0.0;
            for (const auto& f : seq.entries()) m = std::max(m, std::abs(f[static_cast<long>(i)]));
            g[i] = m;
        } else {
            const double qi = eq.p[i];
            double acc = 0.0;
            for (const auto& f : seq.entries()) {
                const double v = std::abs(f[static_cast<long>(i)]);
                if (v > 0) acc += std::pow(v, qi);
            }
            g[i] = acc > 0 ? std::pow(acc, 1.0 / qi) : 0.0;
        }
    });
    return luxemburg(GridFunction(geom, std::move(g)), spec.p, mask);
}

double mixed_norm(const FunctionSequence& seq, const MixedNormSpec& spec) {
    return spec.order == MixedOrder::lq_of_Lp ? norm_lq_of_Lp(seq, spec)
                                              : norm_Lp_of_lq(seq, spec);
}

FunctionSequence hardy_transform(const FunctionSequence& seq, double delta) {
    if (delta <= 0) fail_config("hardy_transform: delta must be positive");
    const long n = static_cast<long>(seq.size());
    std::vector<GridFunction> out;
    out.reserve(static_cast<size_t>(n));
    for (long l = 0; l < n; ++l) {
        std::vector<double> acc(static_cast<size_t>(seq.geom().cells()), 0.0);
        for (long j = 0; j < n; ++j) {
            const double w = std::pow(2.0, -std::abs(static_cast<double>(j - l)) * delta);
            const GridFunction& hj = seq[static_cast<size_t>(j)];
            for (long i = 0; i < hj.cells(); ++i) acc[static_cast<size_t>(i)] += w * hj[i];
        }
        out.emplace_back(seq.geom(), std::move(acc));
    }
    return FunctionSequence(std::move(out));
}

GridFunction eta_kernel(int nu, double m, const GridGeometry& base) {
    const GridGeometry kg = GridGeometry::kernel_lattice(base);
    const double s = std::pow(2.0, nu);
    const double amp = std::pow(2.0, nu * base.ndim);
    const double h = kg.spacing;
    auto eta = [&](std::span<const double> x) {
        double r2 = 0.0;
        for (double c : x) r2 += c * c;
        return amp * std::pow(1.0 + s * std::sqrt(r2), -m);
    };
    // The |x| kink at the origin dominates the midpoint quadrature error;
    // cell-average the near-origin cells by subsampling.
    const double near = 4.0 * std::max(h, 1.0 / s);
    const int sub = 32;
    return sample(
        [&](std::span<const double> x) {
            double rmax = 0.0;
            for (double c : x) rmax = std::max(rmax, std::abs(c));
            if (rmax > near) return eta(x);
            double acc = 0.0;
            std::array<double, kMaxDim> y{};
            std::array<int, kMaxDim> k{};
            const int nd = static_cast<int>(x.size());
            long total = 1;
            for (int d = 0; d < nd; ++d) total *= sub;
            for (long t = 0; t < total; ++t) {
                for (int d = 0; d < nd; ++d)
                    y[static_cast<size_t>(d)] =
                        x[static_cast<size_t>(d)] +
                        ((static_cast<double>(k[static_cast<size_t>(d)]) + 0.5) / sub - 0.5) * h;
                acc += eta({y.data(), static_cast<size_t>(nd)});
                for (int d = 0; d < nd; ++d) {
                    if (++k[static_cast<size_t>(d)] < sub) break;
                    k[static_cast<size_t>(d)] = 0;
                }
            }
            return acc / static_cast<double>(total);
        },
        kg);
}

FunctionSequence eta_mollify(const FunctionSequence& seq, double m, MollifyInfo* info) {
    const int n = seq.geom().ndim;
    if (m <= n) fail_config("eta_mollify: requires m > n for integrability");
    // exact mass of eta (independent of nu): n=1: 2/(m-1); n=2: 2*pi/((m-1)(m-2))
    double exact_mass = 0.0;
    if (n == 1)
        exact_mass = 2.0 / (m - 1.0);
    else if (n == 2)
        exact_mass = 2.0 * std::acos(-1.0) / ((m - 1.0) * (m - 2.0));
    double worst_tail = 0.0;
    std::vector<GridFunction> out;
    out.reserve(seq.size());
    for (size_t nu = 0; nu < seq.size(); ++nu) {
        auto eta = eta_kernel(static_cast<int>(nu), m, seq.geom());
        if (exact_mass > 0)
            worst_tail = std::max(worst_tail, std::abs(1.0 - integral(eta) / exact_mass));
        ConvolveInfo ci;
        out.push_back(convolve(seq[nu], eta, &ci));
    }
    if (info) info->max_tail_fraction = worst_tail;
    return FunctionSequence(std::move(out));
}

}  // namespace fnx
