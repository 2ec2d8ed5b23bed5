// SPDX-License-Identifier: Apache-2.0
#include "fnx/extension.hpp"

#include <sstream>

namespace fnx {

Envelope envelope(const FunctionSequence& seq, double a) {
    if (a <= 0) fail_config("envelope: a must be positive");
    Envelope e;
    e.a = a;
    for (size_t j = 0; j < seq.size(); ++j) {
        MaxPyramid pyr(seq[j]);
        e.levels.push_back(pyr.transform(std::pow(2.0, static_cast<int>(j)), a));
    }
    return e;
}

double envelope_x_norm(const Envelope& e, const MixedNormSpec& spec, const WeightSequence& w) {
    std::vector<GridFunction> entries;
    for (size_t j = 0; j < e.levels.size(); ++j) {
        auto wj = w.sample_level(static_cast<int>(j), e.levels[j].geom());
        std::vector<double> v(static_cast<size_t>(wj.cells()));
        for (long i = 0; i < wj.cells(); ++i) v[static_cast<size_t>(i)] = wj[i] * e.levels[j][i];
        entries.emplace_back(e.levels[j].geom(), std::move(v));
    }
    return mixed_norm(FunctionSequence(std::move(entries)), spec);
}

GridFunction extend(const GridFunction& f, const Domain& d, const KernelSystem& system, int J,
                    const SpaceConstants* constants) {
    if (J > system.jmax()) fail_config("extend: J > jmax");
    if (std::abs(system.config().aperture_A - d.lipschitz_A()) > 1e-12)
        fail_hypothesis("extend: kernel cone aperture does not match the domain");
    if (constants) {
        if (static_cast<double>(system.L_phi()) <= constants->alpha2) {
            std::ostringstream os;
            os << "extend: requires L_phi > alpha2 = " << constants->alpha2;
            fail_hypothesis(os.str());
        }
        const double need = required_psi_moments(f.geom().ndim, *constants);
        if (static_cast<double>(system.L_psi()) <= need) {
            std::ostringstream os;
            os << "extend: requires L_psi > " << need << ", got " << system.L_psi();
            fail_hypothesis(os.str());
        }
    }

    const auto mask = d.mask(f.geom());
    const GridFunction fo = zero_extend(f, mask);
    SystemSpectra sp(system, f.geom());
    const fft::Workspace& ws = sp.workspace();
    auto fhat = ws.forward(fo);

    fft::Workspace::Spectrum acc;
    bool first = true;
    for (int j = 0; j <= J; ++j) {
        auto conv = ws.multiply(fhat, sp.phi_hat(j));
        auto masked = zero_extend(ws.inverse(conv, f.geom()), mask);
        auto term = ws.forward(masked);
        ws.multiply_inplace(term, sp.psi_hat(j));
        if (first) {
            acc = std::move(term);
            first = false;
        } else {
            ws.add_inplace(acc, term);
        }
    }
    return ws.inverse(acc, f.geom());
}

ExtensionReport restriction_check(const GridFunction& f, const GridFunction& ef, const Domain& d,
                                  const KernelSystem& system, const SystemSpectra& sp, int J) {
    ExtensionReport rep;
    rep.truncation_j = J;
    const GridGeometry& g = f.geom();
    const auto mask = d.mask(g);
    const double margin = 2.0 * std::pow(0.5, J) * system.support_radius();

    // plain Calderon partial sum of the zero-extension
    const fft::Workspace& ws = sp.workspace();
    auto fo = zero_extend(f, mask);
    auto fhat = ws.forward(fo);
    fft::Workspace::Spectrum acc;
    for (int j = 0; j <= J; ++j) {
        auto term = ws.multiply(fhat, sp.phi_hat(j));
        ws.multiply_inplace(term, sp.psi_hat(j));
        if (j == 0)
            acc = std::move(term);
        else
            ws.add_inplace(acc, term);
    }
    auto calderon = ws.inverse(acc, g);

    double fsup = 0.0, worst = 0.0, worst_exact = 0.0;
    std::array<long, kMaxDim> idx{};
    const double full_margin = system.support_radius();
    for (long i = 0; i < g.cells(); ++i) {
        if (!mask[static_cast<size_t>(i)]) continue;
        g.unflat(i, {idx.data(), static_cast<size_t>(g.ndim)});
        const Point x = g.center({idx.data(), static_cast<size_t>(g.ndim)});
        bool inside_box = true;
        for (int dd = 0; dd < g.ndim; ++dd) {
            const double lo = g.origin[static_cast<size_t>(dd)] + full_margin;
            const double hi = g.origin[static_cast<size_t>(dd)] +
                              g.spacing * static_cast<double>(g.dims[static_cast<size_t>(dd)]) -
                              full_margin;
            inside_box = inside_box && x[dd] >= lo && x[dd] <= hi;
        }
        if (!inside_box) continue;
        // distance to the boundary graph (vertical distance bounds it)
        std::array<double, kMaxDim> xp{};
        for (int dd = 0; dd + 1 < g.ndim; ++dd) xp[static_cast<size_t>(dd)] = x[dd];
        const double dist =
            (x[g.ndim - 1] - d.boundary_height({xp.data(), static_cast<size_t>(g.ndim - 1)})) /
            std::sqrt(1.0 + d.lipschitz_A() * d.lipschitz_A());
        if (dist <= margin) continue;
        fsup = std::max(fsup, std::abs(f[i]));
        worst = std::max(worst, std::abs(ef[i] - f[i]));
        worst_exact = std::max(worst_exact, std::abs(ef[i] - calderon[i]));
    }
    if (fsup == 0.0) fail_config("restriction_check: f vanishes on the interior region");
    rep.restriction_residual = worst / fsup;
    rep.exact_interior_residual = worst_exact / fsup;
    return rep;
}

std::vector<ExtensionReport> boundedness_study(const std::vector<GridFunction>& family,
                                               const std::vector<std::string>& names,
                                               const Domain& d, const KernelSystem& system,
                                               const MixedNormSpec& spec, const WeightSequence& w,
                                               const AnalysisParams& params,
                                               const SpaceConstants& c) {
    std::vector<ExtensionReport> out;
    SystemSpectra sp(system, family.front().geom());
    for (size_t m = 0; m < family.size(); ++m) {
        const GridFunction& f = family[m];
        auto ef = extend(f, d, system, params.jmax, &c);
        auto rep = restriction_check(f, ef, d, system, sp, params.jmax);
        rep.member = m < names.size() ? names[m] : "f" + std::to_string(m);
        auto lm = norm_localmeans_rn(ef, system, spec, w, params, c);
        rep.rn_norm = lm.convolution.value;
        rep.intrinsic_norm = intrinsic_norm_peetre(f, d, system, spec, w, params, c).value;
        rep.norm_ratio = rep.intrinsic_norm > 0 ? rep.rn_norm / rep.intrinsic_norm : 0.0;
        out.push_back(std::move(rep));
    }
    return out;
}

std::vector<UniformityRow> uniformity_study(const std::vector<UniformityConfig>& configs,
                                            const std::vector<GridFunction>& family,
                                            const std::vector<std::string>& names, const Domain& d,
                                            const KernelSystem& system) {
    std::vector<UniformityRow> rows;
    for (const auto& cfg : configs) {
        UniformityRow row;
        row.config_name = cfg.name;
        row.required_L = required_psi_moments(family.front().geom().ndim, cfg.constants);
        if (static_cast<double>(system.L_psi()) <= row.required_L) {
            row.accepted = false;  // out of reach for this finite-L system
            rows.push_back(row);
            continue;
        }
        row.accepted = true;
        auto reports = boundedness_study(family, names, d, system, cfg.spec, cfg.weights,
                                         cfg.params, cfg.constants);
        double lo = 1e300, hi = 0.0;
        for (const auto& r : reports) {
            if (r.norm_ratio <= 0) continue;
            lo = std::min(lo, r.norm_ratio);
            hi = std::max(hi, r.norm_ratio);
        }
        row.min_ratio = lo;
        row.max_ratio = hi;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace fnx
