// SPDX-License-Identifier: Apache-2.0
#include "fnx/analysis.hpp"

#include <sstream>

namespace fnx {

SpaceConstants SpaceConstants::measure(const MixedNormSpec& spec, const WeightSequence& w,
                                       const Box& box, long samples) {
    SpaceConstants c;
    auto [pl, ph] = field_range(spec.p, box, samples);
    auto [ql, qh] = field_range(spec.q, box, samples);
    c.p_minus = pl;
    c.p_plus = ph;
    c.q_minus = ql;
    c.q_plus = qh;
    const ScalarField q = spec.q;
    auto inv_q = [q](std::span<const double> x) {
        const double v = q.eval(x);
        return v > kInfExponent ? 0.0 : 1.0 / v;
    };
    c.clog_inv_q = estimate_log_holder(inv_q, box.dim, box, samples).clog_global;
    c.alpha = w.alpha;
    c.alpha1 = w.alpha1;
    c.alpha2 = w.alpha2;
    return c;
}

double required_peetre_a(bool besov, int dim, const SpaceConstants& c) {
    if (besov) return (static_cast<double>(dim) + c.clog_inv_q) / c.p_minus + c.alpha;
    return static_cast<double>(dim) / std::min(c.p_minus, c.q_minus) + c.alpha;
}

double required_psi_moments(int dim, const SpaceConstants& c) {
    return (static_cast<double>(dim) + c.clog_inv_q) / std::min(c.p_minus, c.q_minus) + c.alpha -
           c.alpha1;
}

void check_analysis_hypotheses(const AnalysisParams& params, const KernelSystem& system, int dim,
                               const SpaceConstants& c) {
    const double amin = required_peetre_a(params.is_besov(), dim, c);
    if (params.a <= amin) {
        std::ostringstream os;
        os << "peetre exponent too small: required a > " << amin << ", got " << params.a;
        fail_hypothesis(os.str());
    }
    if (static_cast<double>(system.L_phi()) <= c.alpha2) {
        std::ostringstream os;
        os << "kernel moment order violates L_phi > alpha2: required L_phi > " << c.alpha2
           << ", got " << system.L_phi();
        fail_hypothesis(os.str());
    }
}

// ---- max pyramid --------------------------------------------------------------

MaxPyramid::MaxPyramid(const GridFunction& abs_values)
    : MaxPyramid(abs_values, std::vector<uint8_t>()) {}

MaxPyramid::MaxPyramid(const GridFunction& abs_values, const std::vector<uint8_t>& mask)
    : geom_(abs_values.geom()) {
    const int nd = geom_.ndim;
    Level base;
    base.dims = geom_.dims;
    base.maxv.resize(static_cast<size_t>(geom_.cells()));
    for (long i = 0; i < geom_.cells(); ++i) {
        const bool keep = mask.empty() || mask[static_cast<size_t>(i)];
        base.maxv[static_cast<size_t>(i)] = keep ? std::abs(abs_values[i]) : 0.0;
    }
    levels_.push_back(std::move(base));
    for (;;) {
        const Level& prev = levels_.back();
        bool done = true;
        Level next;
        long cells = 1;
        for (int d = 0; d < nd; ++d) {
            next.dims[static_cast<size_t>(d)] = (prev.dims[static_cast<size_t>(d)] + 1) / 2;
            done = done && next.dims[static_cast<size_t>(d)] == 1;
            cells *= next.dims[static_cast<size_t>(d)];
        }
        next.maxv.assign(static_cast<size_t>(cells), 0.0);
        std::array<long, kMaxDim> idx{};
        for (long i = 0; i < static_cast<long>(prev.maxv.size()); ++i) {
            long f = i;
            for (int d = nd - 1; d >= 0; --d) {
                idx[static_cast<size_t>(d)] = f % prev.dims[static_cast<size_t>(d)];
                f /= prev.dims[static_cast<size_t>(d)];
            }
            long pf = 0;
            for (int d = 0; d < nd; ++d) pf = pf * next.dims[static_cast<size_t>(d)] + idx[static_cast<size_t>(d)] / 2;
            next.maxv[static_cast<size_t>(pf)] =
                std::max(next.maxv[static_cast<size_t>(pf)], prev.maxv[static_cast<size_t>(i)]);
        }
        levels_.push_back(std::move(next));
        if (done || levels_.size() > 40) break;
    }
}

double MaxPyramid::query(const Point& x, double s, double a) const {
    const int nd = geom_.ndim;
    const int top = static_cast<int>(levels_.size()) - 1;

    struct Node {
        int level;
        long flat;
    };
    std::vector<Node> stack;
    stack.push_back({top, 0});
    double best = 0.0;

    std::array<long, kMaxDim> idx{};
    while (!stack.empty()) {
        const Node node = stack.back();
        stack.pop_back();
        const Level& lv = levels_[static_cast<size_t>(node.level)];
        const double v = lv.maxv[static_cast<size_t>(node.flat)];
        if (v <= best * 1e-300 || v == 0.0) continue;
        long f = node.flat;
        for (int d = nd - 1; d >= 0; --d) {
            idx[static_cast<size_t>(d)] = f % lv.dims[static_cast<size_t>(d)];
            f /= lv.dims[static_cast<size_t>(d)];
        }
        // min distance from x to the block's cell centers
        const long width = 1l << node.level;
        double dist2acc = 0.0;
        for (int d = 0; d < nd; ++d) {
            const long lo_cell = idx[static_cast<size_t>(d)] * width;
            const long hi_cell =
                std::min(lo_cell + width - 1, geom_.dims[static_cast<size_t>(d)] - 1);
            const double lo = geom_.center(d, lo_cell);
            const double hi = geom_.center(d, hi_cell);
            const double xd = x[d];
            const double c = std::clamp(xd, lo, hi);
            dist2acc += (xd - c) * (xd - c);
        }
        const double bound = v / std::pow(1.0 + s * std::sqrt(dist2acc), a);
        if (bound <= best) continue;
        if (node.level == 0) {
            best = bound;  // distance is exact at the cell level
            continue;
        }
        // push children
        const Level& ch = levels_[static_cast<size_t>(node.level - 1)];
        std::array<long, kMaxDim> cidx{};
        const long combos = 1l << nd;
        for (long m = 0; m < combos; ++m) {
            bool ok = true;
            for (int d = 0; d < nd; ++d) {
                cidx[static_cast<size_t>(d)] = 2 * idx[static_cast<size_t>(d)] + ((m >> d) & 1);
                ok = ok && cidx[static_cast<size_t>(d)] < ch.dims[static_cast<size_t>(d)];
            }
            if (!ok) continue;
            long cf = 0;
            for (int d = 0; d < nd; ++d) cf = cf * ch.dims[static_cast<size_t>(d)] + cidx[static_cast<size_t>(d)];
            stack.push_back({node.level - 1, cf});
        }
    }
    return best;
}

GridFunction MaxPyramid::transform(double s, double a) const {
    return transform(s, a, std::vector<uint8_t>());
}

GridFunction MaxPyramid::transform(double s, double a, const std::vector<uint8_t>& eval_mask) const {
    std::vector<double> out(static_cast<size_t>(geom_.cells()), 0.0);
    parallel_for(static_cast<size_t>(geom_.cells()), [&](size_t i) {
        if (!eval_mask.empty() && !eval_mask[i]) return;
        std::array<long, kMaxDim> idx{};
        geom_.unflat(static_cast<long>(i), {idx.data(), static_cast<size_t>(geom_.ndim)});
        const Point x = geom_.center({idx.data(), static_cast<size_t>(geom_.ndim)});
        out[i] = query(x, s, a);
    });
    return GridFunction(geom_, std::move(out));
}

// ---- convolution helpers ------------------------------------------------------

FunctionSequence scale_convolutions(const GridFunction& f, const KernelSystem& system,
                                    const SystemSpectra& sp, int jmax) {
    const fft::Workspace& ws = sp.workspace();
    auto fhat = ws.forward(f);
    std::vector<GridFunction> entries;
    entries.reserve(static_cast<size_t>(jmax) + 1);
    for (int k = 0; k <= jmax; ++k) {
        auto term = ws.multiply(fhat, sp.phi_hat(k));
        entries.push_back(ws.inverse(term, f.geom()));
    }
    (void)system;
    return FunctionSequence(std::move(entries));
}

GridFunction peetre_maximal_rn(const GridFunction& f, const KernelSystem& system, int k, double a) {
    if (a <= 0) fail_config("peetre_maximal: a must be positive");
    if (k > system.jmax()) fail_config("peetre_maximal: k > jmax");
    SystemSpectra sp(system, f.geom());
    auto conv = scale_convolutions(f, system, sp, k)[static_cast<size_t>(k)];
    MaxPyramid pyr(conv);
    return pyr.transform(std::pow(2.0, k), a);
}

GridFunction peetre_maximal_domain(const GridFunction& f, const KernelSystem& system, int k,
                                   double a, const Domain& d) {
    if (a <= 0) fail_config("peetre_maximal: a must be positive");
    const auto mask = d.mask(f.geom());
    SystemSpectra sp(system, f.geom());
    auto conv = scale_convolutions(zero_extend(f, mask), system, sp, k)[static_cast<size_t>(k)];
    MaxPyramid pyr(conv, mask);
    return pyr.transform(std::pow(2.0, k), a, mask);
}

// ---- norms ---------------------------------------------------------------------

namespace {

NormReport assemble_norm(std::vector<GridFunction> entries, const MixedNormSpec& spec,
                         const AnalysisParams& params, double grid_h) {
    NormReport rep;
    rep.params = params;
    rep.truncation_j = params.jmax;
    rep.grid_h = grid_h;
    for (size_t j = 0; j < entries.size(); ++j)
        rep.per_scale.emplace_back(static_cast<int>(j),
                                   luxemburg(entries[j], spec.p, spec.domain_mask));
    rep.value = mixed_norm(FunctionSequence(std::move(entries)), spec);
    return rep;
}

GridFunction scale_by_weight(const GridFunction& g, const WeightSequence& w, int j) {
    auto wj = w.sample_level(j, g.geom());
    std::vector<double> v(static_cast<size_t>(g.cells()));
    for (long i = 0; i < g.cells(); ++i) v[static_cast<size_t>(i)] = wj[i] * g[i];
    return GridFunction(g.geom(), std::move(v));
}

}  // namespace

NormReport norm_fourier_rn(const GridFunction& f, const MixedNormSpec& spec,
                           const WeightSequence& w, const AnalysisParams& params) {
    const GridGeometry& g = f.geom();
    if (!params.is_besov()) {
        // F-case needs p+, q+ < infinity
        const Box box = Box::cube(g.origin[0], g.origin[0] + g.spacing * static_cast<double>(g.dims[0]),
                                  g.ndim);
        auto [pl, ph] = field_range(spec.p, box, 17);
        auto [ql, qh] = field_range(spec.q, box, 17);
        (void)pl;
        (void)ql;
        if (ph > kInfExponent || qh > kInfExponent)
            fail_hypothesis("norm_fourier_rn: F-case requires p+, q+ < infinity");
    }
    const double nyquist = std::acos(-1.0) / g.spacing;
    if (std::pow(2.0, params.jmax) > 2.0 * nyquist)
        fail_config("norm_fourier_rn: truncation j beyond grid Nyquist");

    fft::Workspace ws(g);
    auto fhat = ws.forward(f);
    std::array<std::vector<double>, kMaxDim> freqs;
    for (int d = 0; d < g.ndim; ++d) freqs[static_cast<size_t>(d)] = ws.bin_frequencies(d);

    auto cutoff = [&](double t) { return smooth_cutoff_1_2(t); };
    std::vector<GridFunction> entries;
    for (int j = 0; j <= params.jmax; ++j) {
        auto piece = fhat;
        // varphi_j = varphi0(2^-j xi) - varphi0(2^-j+1 xi); varphi_0 at j = 0
        const double s = std::pow(0.5, j);
        std::array<long, kMaxDim> idx{};
        const auto pd = ws.padded_dims();
        for (size_t bin = 0; bin < piece.data.size(); ++bin) {
            long fidx = static_cast<long>(bin);
            for (int d = g.ndim - 1; d >= 0; --d) {
                idx[static_cast<size_t>(d)] = fidx % pd[static_cast<size_t>(d)];
                fidx /= pd[static_cast<size_t>(d)];
            }
            double r2 = 0.0;
            for (int d = 0; d < g.ndim; ++d) {
                const double xi = freqs[static_cast<size_t>(d)][static_cast<size_t>(idx[static_cast<size_t>(d)])];
                r2 += xi * xi;
            }
            const double r = std::sqrt(r2);
            const double m = j == 0 ? cutoff(r) : cutoff(s * r) - cutoff(2.0 * s * r);
            piece.data[bin] *= m;
        }
        auto pj = ws.inverse(piece, g);
        entries.push_back(scale_by_weight(pj, w, j));
    }
    return assemble_norm(std::move(entries), spec, params, g.spacing);
}

LocalMeansReport norm_localmeans_rn(const GridFunction& f, const KernelSystem& system,
                                    const MixedNormSpec& spec, const WeightSequence& w,
                                    const AnalysisParams& params, const SpaceConstants& c) {
    check_analysis_hypotheses(params, system, f.geom().ndim, c);
    SystemSpectra sp(system, f.geom());
    auto convs = scale_convolutions(f, system, sp, params.jmax);

    std::vector<GridFunction> plain, peetre;
    for (int k = 0; k <= params.jmax; ++k) {
        plain.push_back(scale_by_weight(convs[static_cast<size_t>(k)], w, k));
        MaxPyramid pyr(convs[static_cast<size_t>(k)]);
        peetre.push_back(scale_by_weight(pyr.transform(std::pow(2.0, k), params.a), w, k));
    }
    LocalMeansReport rep;
    rep.convolution = assemble_norm(std::move(plain), spec, params, f.geom().spacing);
    rep.peetre = assemble_norm(std::move(peetre), spec, params, f.geom().spacing);
    return rep;
}

NormReport intrinsic_norm_peetre(const GridFunction& f, const Domain& d, const KernelSystem& system,
                                 const MixedNormSpec& spec, const WeightSequence& w,
                                 const AnalysisParams& params, const SpaceConstants& c) {
    check_analysis_hypotheses(params, system, f.geom().ndim, c);
    const auto mask = d.mask(f.geom());
    SystemSpectra sp(system, f.geom());
    auto convs = scale_convolutions(zero_extend(f, mask), system, sp, params.jmax);

    MixedNormSpec masked = spec;
    masked.domain_mask = &mask;
    std::vector<GridFunction> entries;
    for (int k = 0; k <= params.jmax; ++k) {
        MaxPyramid pyr(convs[static_cast<size_t>(k)], mask);
        entries.push_back(scale_by_weight(pyr.transform(std::pow(2.0, k), params.a, mask), w, k));
    }
    return assemble_norm(std::move(entries), masked, params, f.geom().spacing);
}

NormReport intrinsic_norm_localmeans(const GridFunction& f, const Domain& d,
                                     const KernelSystem& system, const MixedNormSpec& spec,
                                     const WeightSequence& w, const AnalysisParams& params) {
    if (static_cast<double>(system.L_phi()) <= w.alpha2)
        fail_hypothesis("intrinsic_norm_localmeans: requires L_phi > alpha2");
    const auto mask = d.mask(f.geom());

    // cone support assertion: convolutions at Omega cells may only read
    // Omega samples, which holds iff the kernels vanish outside -K
    const Cone mk = system.cone();
    for (int k = 0; k <= std::min(2, params.jmax); ++k) {
        const auto& ker = system.scale(k).phi;
        const GridGeometry& kg = ker.geom();
        std::array<long, kMaxDim> idx{};
        for (long i = 0; i < ker.cells(); ++i) {
            if (ker[i] == 0.0) continue;
            kg.unflat(i, {idx.data(), static_cast<size_t>(kg.ndim)});
            const Point p = kg.center({idx.data(), static_cast<size_t>(kg.ndim)});
            if (!mk.contains(p.span()))
                fail_numeric("intrinsic_norm_localmeans: kernel leaks outside the cone");
        }
    }

    SystemSpectra sp(system, f.geom());
    auto convs = scale_convolutions(zero_extend(f, mask), system, sp, params.jmax);
    MixedNormSpec masked = spec;
    masked.domain_mask = &mask;
    std::vector<GridFunction> entries;
    for (int k = 0; k <= params.jmax; ++k)
        entries.push_back(scale_by_weight(zero_extend(convs[static_cast<size_t>(k)], mask), w, k));
    return assemble_norm(std::move(entries), masked, params, f.geom().spacing);
}

}  // namespace fnx
