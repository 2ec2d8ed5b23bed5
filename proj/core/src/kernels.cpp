// SPDX-License-Identifier: Apache-2.0
#include "fnx/kernels.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>


namespace fnx {

double bump_profile(double t) {
    return std::abs(t) < 1.0 ? std::exp(-1.0 / (1.0 - t * t)) : 0.0;
}

double smooth_cutoff_1_2(double t) {
    auto rho = [](double s) { return s > 0 ? std::exp(-1.0 / s) : 0.0; };
    const double a = rho(2.0 - t);
    const double b = rho(t - 1.0);
    return a + b > 0 ? a / (a + b) : 0.0;
}

namespace {

// ---- dense solvers ----------------------------------------------------------

// LU with partial pivoting; solves in place. Used for the KKT system of the
// constrained identity fit.
std::vector<double> solve_lu(std::vector<double> A, std::vector<double> b, size_t n,
                             const char* what) {
    std::vector<size_t> piv(n);
    for (size_t k = 0; k < n; ++k) {
        size_t p = k;
        for (size_t i = k + 1; i < n; ++i)
            if (std::abs(A[i * n + k]) > std::abs(A[p * n + k])) p = i;
        if (A[p * n + k] == 0.0) fail_numeric(std::string(what) + ": singular system");
        piv[k] = p;
        if (p != k) {
            for (size_t j = 0; j < n; ++j) std::swap(A[k * n + j], A[p * n + j]);
            std::swap(b[k], b[p]);
        }
        const double d = A[k * n + k];
        for (size_t i = k + 1; i < n; ++i) {
            const double m = A[i * n + k] / d;
            if (m == 0.0) continue;
            A[i * n + k] = m;
            for (size_t j = k + 1; j < n; ++j) A[i * n + j] -= m * A[k * n + j];
            b[i] -= m * b[k];
        }
    }
    for (size_t ii = n; ii-- > 0;) {
        double v = b[ii];
        for (size_t j = ii + 1; j < n; ++j) v -= A[ii * n + j] * b[j];
        b[ii] = v / A[ii * n + ii];
    }
    return b;
}

// ---- radial tables ----------------------------------------------------------

struct RadialTable {
    double rmax = 0.0;
    double dr = 0.0;
    double mass1 = 0.0;  // integral of v(|x|) over R^1
    double mass2 = 0.0;  // integral over R^2
    std::vector<double> v;

    void compute_mass() {
        double m1 = 0.0, m2 = 0.0;
        for (size_t i = 0; i < v.size(); ++i) {
            const double r = static_cast<double>(i) * dr;
            m1 += v[i] * dr;
            m2 += v[i] * 2.0 * std::acos(-1.0) * r * dr;
        }
        mass1 = 2.0 * m1;
        mass2 = m2;
    }
    double mass(int nd) const { return nd == 1 ? mass1 : mass2; }

    double eval(double r) const {
        if (r < 0) r = -r;
        if (r >= rmax || v.size() < 4) return 0.0;
        const double u = r / dr;
        const double fl = std::floor(u);
        long i = static_cast<long>(fl);
        const double t = u - fl;
        const long n = static_cast<long>(v.size());
        // Catmull-Rom with clamped ends
        auto at = [&](long k) { return v[static_cast<size_t>(std::clamp(k, 0l, n - 1))]; };
        const double fm1 = at(i - 1), f0 = at(i), f1 = at(i + 1), f2 = at(i + 2);
        const double a = -0.5 * fm1 + 1.5 * f0 - 1.5 * f1 + 0.5 * f2;
        const double b = fm1 - 2.5 * f0 + 2.0 * f1 - 0.5 * f2;
        const double c = -0.5 * fm1 + 0.5 * f1;
        return ((a * t + b) * t + c) * t + f0;
    }
};

// Cached J0 table; Hankel quadratures stay fast without calling the libm
// Bessel routine per point.
const RadialTable& j0_table() {
    static const RadialTable table = [] {
        RadialTable t;
        t.rmax = 360.0;
        const size_t n = 1 << 20;
        t.dr = t.rmax / static_cast<double>(n - 1);
        t.v.resize(n);
        parallel_for(n, [&](size_t i) {
            t.v[i] = std::cyl_bessel_j(0.0, static_cast<double>(i) * t.dr);
        });
        return t;
    }();
    return table;
}

double j0_fast(double x) {
    const RadialTable& t = j0_table();
    return x < t.rmax ? t.eval(x) : std::cyl_bessel_j(0.0, x);
}

// Forward transform of a radial profile g supported in [0, rho]:
//   n=2: ghat(s) = 2 pi Int g(r) J0(s r) r dr,   n=1: 2 Int g(r) cos(s r) dr.
RadialTable radial_fourier(const std::function<double(double)>& g, double rho, int nd,
                           double smax, size_t ns) {
    const size_t nr = 2048;
    const double dr = rho / static_cast<double>(nr);
    std::vector<double> gr(nr), r(nr);
    for (size_t i = 0; i < nr; ++i) {
        r[i] = (static_cast<double>(i) + 0.5) * dr;
        gr[i] = g(r[i]);
    }
    RadialTable out;
    out.rmax = smax;
    out.dr = smax / static_cast<double>(ns - 1);
    out.v.resize(ns);
    const double two_pi = 2.0 * std::acos(-1.0);
    parallel_for(ns, [&](size_t k) {
        const double s = static_cast<double>(k) * out.dr;
        double acc = 0.0;
        if (nd == 2) {
            for (size_t i = 0; i < nr; ++i) acc += gr[i] * j0_fast(s * r[i]) * r[i];
            acc *= two_pi * dr;
        } else {
            for (size_t i = 0; i < nr; ++i) acc += gr[i] * std::cos(s * r[i]);
            acc *= 2.0 * dr;
        }
        out.v[k] = acc;
    });
    return out;
}

// ---- scatter kernels (sums of radial pieces) --------------------------------

struct Piece {
    Point center;
    double cull_radius;  // support radius of this piece
    double weight;
    double argscale;     // table argument = argscale * |x - center|
    const RadialTable* table;
};

struct ScatterKernel {
    std::vector<Piece> pieces;
    int nd = 2;

    double eval(std::span<const double> x) const {
        double acc = 0.0;
        for (const auto& p : pieces) {
            double r2 = 0.0;
            for (int d = 0; d < nd; ++d) {
                const double c = x[static_cast<size_t>(d)] - p.center[d];
                r2 += c * c;
            }
            if (r2 >= p.cull_radius * p.cull_radius) continue;
            acc += p.weight * p.table->eval(p.argscale * std::sqrt(r2));
        }
        return acc;
    }

    ScatterKernel dilated(int j) const {
        ScatterKernel out;
        out.nd = nd;
        out.pieces = pieces;
        const double shrink = std::pow(2.0, -j);
        const double amp = std::pow(2.0, j * nd);
        for (auto& p : out.pieces) {
            for (int d = 0; d < nd; ++d) p.center[d] *= shrink;
            p.cull_radius *= shrink;
            p.weight *= amp;
            p.argscale /= shrink;
        }
        return out;
    }

    double support_radius() const {
        double r = 0.0;
        for (const auto& p : pieces) r = std::max(r, norm2(p.center) + p.cull_radius);
        return r;
    }

    PointFn as_fn() const {
        ScatterKernel copy = *this;
        return [copy](std::span<const double> x) { return copy.eval(x); };
    }
};

// Adds the kernel onto a grid. Pieces well above the grid scale are point
// sampled; marginal pieces are subsample-averaged per cell; sub-cell pieces
// deposit their exact mass bilinearly, so dyadic dilates stay mass-faithful
// at every scale instead of degenerating into sampling noise.
// Parallel over rows of each piece's bounding box (deterministic: each row is
// touched by exactly one task).
void scatter_add(const ScatterKernel& k, GridFunction& g, const Cone* keep_inside = nullptr) {
    const GridGeometry& geom = g.geom();
    const int nd = geom.ndim;
    const double h = geom.spacing;
    const double cellvol = geom.cell_volume();
    for (const auto& p : k.pieces) {
        if (p.cull_radius < 0.5 * h) {
            // bilinear mass deposition; weights whose corner cell sits outside
            // the cone are redirected to the deepest admissible corner so the
            // support mask never cuts deposited mass
            const double mass = p.weight * p.table->mass(nd) / std::pow(p.argscale, nd);
            if (mass == 0.0) continue;
            std::array<long, kMaxDim> i0{};
            std::array<double, kMaxDim> fr{};
            bool in = true;
            for (int d = 0; d < nd; ++d) {
                const double u = (p.center[d] - geom.origin[static_cast<size_t>(d)]) / h - 0.5;
                const double fl = std::floor(u);
                i0[static_cast<size_t>(d)] = static_cast<long>(fl);
                fr[static_cast<size_t>(d)] = u - fl;
                in = in && i0[static_cast<size_t>(d)] >= -1 &&
                     i0[static_cast<size_t>(d)] < geom.dims[static_cast<size_t>(d)];
            }
            if (!in) continue;
            const long corners = 1l << nd;
            long best = -1;
            double best_depth = -1e300;
            double spill = 0.0;
            for (long c = 0; c < corners; ++c) {
                std::array<long, kMaxDim> idx{};
                double w = 1.0;
                bool ok = true;
                for (int d = 0; d < nd; ++d) {
                    const long bit = (c >> d) & 1;
                    idx[static_cast<size_t>(d)] = i0[static_cast<size_t>(d)] + bit;
                    w *= bit ? fr[static_cast<size_t>(d)] : 1.0 - fr[static_cast<size_t>(d)];
                    ok = ok && idx[static_cast<size_t>(d)] >= 0 &&
                         idx[static_cast<size_t>(d)] < geom.dims[static_cast<size_t>(d)];
                }
                if (!ok) continue;
                const long flat = geom.flat({idx.data(), static_cast<size_t>(nd)});
                const Point x = geom.center({idx.data(), static_cast<size_t>(nd)});
                const bool admissible = !keep_inside || keep_inside->contains(x.span());
                if (admissible) {
                    if (w != 0.0) g[flat] += mass * w / cellvol;
                    const double depth = keep_inside ? -norm2(x) : 0.0;
                    if (depth > best_depth) {
                        best_depth = depth;
                        best = flat;
                    }
                } else {
                    spill += w;
                }
            }
            if (spill != 0.0 && best >= 0) g[best] += mass * spill / cellvol;
            continue;
        }
        const int sub = p.cull_radius < 3.0 * h ? 8 : 1;
        std::array<long, kMaxDim> lo{}, hi{};
        bool empty = false;
        for (int d = 0; d < nd; ++d) {
            const double o = geom.origin[static_cast<size_t>(d)];
            const double c = p.center[d];
            lo[static_cast<size_t>(d)] = std::max(
                0l, static_cast<long>(std::floor((c - p.cull_radius - o) / h - 1.0)));
            hi[static_cast<size_t>(d)] = std::min(
                geom.dims[static_cast<size_t>(d)] - 1,
                static_cast<long>(std::ceil((c + p.cull_radius - o) / h)));
            empty = empty || hi[static_cast<size_t>(d)] < lo[static_cast<size_t>(d)];
        }
        if (empty) continue;
        auto cell_value = [&](const Point& x) {
            if (sub == 1) {
                double r2 = 0.0;
                for (int d = 0; d < nd; ++d) {
                    const double c = x[d] - p.center[d];
                    r2 += c * c;
                }
                if (r2 >= p.cull_radius * p.cull_radius) return 0.0;
                return p.weight * p.table->eval(p.argscale * std::sqrt(r2));
            }
            double acc = 0.0;
            std::array<int, kMaxDim> kk{};
            long total = 1;
            for (int d = 0; d < nd; ++d) total *= sub;
            for (long t = 0; t < total; ++t) {
                double r2 = 0.0;
                for (int d = 0; d < nd; ++d) {
                    const double y = x[d] +
                                     ((static_cast<double>(kk[static_cast<size_t>(d)]) + 0.5) / sub -
                                      0.5) *
                                         h -
                                     p.center[d];
                    r2 += y * y;
                }
                if (r2 < p.cull_radius * p.cull_radius)
                    acc += p.table->eval(p.argscale * std::sqrt(r2));
                for (int d = 0; d < nd; ++d) {
                    if (++kk[static_cast<size_t>(d)] < sub) break;
                    kk[static_cast<size_t>(d)] = 0;
                }
            }
            return p.weight * acc / static_cast<double>(total);
        };
        const long rows = (nd == 1) ? 1 : hi[0] - lo[0] + 1;
        parallel_for(static_cast<size_t>(rows), [&](size_t ri) {
            std::array<long, kMaxDim> idx{};
            idx[0] = lo[0] + static_cast<long>(ri);
            if (nd == 1) {
                for (long i = lo[0]; i <= hi[0]; ++i) {
                    idx[0] = i;
                    const Point x = geom.center({idx.data(), 1});
                    const double v = cell_value(x);
                    if (v != 0.0) g[geom.flat({idx.data(), 1})] += v;
                }
                return;
            }
            for (long i1 = lo[1]; i1 <= hi[1]; ++i1) {
                idx[1] = i1;
                for (long i2 = (nd > 2 ? lo[2] : 0); i2 <= (nd > 2 ? hi[2] : 0); ++i2) {
                    if (nd > 2) idx[2] = i2;
                    const Point x = geom.center({idx.data(), static_cast<size_t>(nd)});
                    const double v = cell_value(x);
                    if (v != 0.0) g[geom.flat({idx.data(), static_cast<size_t>(nd)})] += v;
                }
            }
        });
    }
}

GridFunction sample_kernel(const ScatterKernel& k, const GridGeometry& geom,
                           const Cone* keep_inside = nullptr) {
    GridFunction g(geom, std::vector<double>(static_cast<size_t>(geom.cells()), 0.0));
    scatter_add(k, g, keep_inside);
    return g;
}

double cone_distance(std::span<const double> x, double A, int nd) {
    // distance to the boundary of -K for interior points (negative outside-ish)
    const double xn = x[static_cast<size_t>(nd - 1)];
    if (nd == 1) return -xn;
    double rp = 0.0;
    for (int d = 0; d + 1 < nd; ++d) rp += x[static_cast<size_t>(d)] * x[static_cast<size_t>(d)];
    rp = std::sqrt(rp);
    return (-xn - A * rp) / std::sqrt(1.0 + A * A);
}

}  // namespace

// ---- system implementation ---------------------------------------------------

struct KernelSystem::Impl {
    int nd = 2;
    int R = 4;
    double bump_rho = 0.0;
    double bump_depth = 0.0;
    Point xc;
    std::vector<double> binom_sign;           // c_i for b^{*i}, i = 1..R
    std::vector<RadialTable> conv_profiles;   // g^{*i}
    RadialTable ghat;                         // centered bump transform
    RadialTable qhat;                         // atom transform
    RadialTable atom_table;                   // atom radial profile
    double atom_rho = 0.0;
    struct Atom {
        Point t;
        double scale;   // dyadic radius factor
        bool mirrored;  // paired with (-t1, t2..): shared coefficient
    };
    std::vector<Atom> atoms;
    size_t n_psi_atoms = 0;  // atoms[0..n) form Psi; Psi0 uses all of them
    std::vector<double> coef0, coef;          // Psi0 and Psi atom coefficients
    ScatterKernel phi0_k, phi_k, psi0_k, psi_k;

    std::complex<double> bhat(std::span<const double> xi) const {
        double r2 = 0.0, dot = 0.0;
        for (int d = 0; d < nd; ++d) {
            r2 += xi[static_cast<size_t>(d)] * xi[static_cast<size_t>(d)];
            dot += xi[static_cast<size_t>(d)] * xc[d];
        }
        const double mag = ghat.eval(std::sqrt(r2));
        return std::polar(mag, -dot);
    }
    std::complex<double> phi0_hat(std::span<const double> xi) const {
        const std::complex<double> one{1.0, 0.0};
        std::complex<double> h = one - bhat(xi);
        std::complex<double> hp = one;
        for (int i = 0; i < R; ++i) hp *= h;
        return one - hp;
    }
    std::complex<double> phi_hat(std::span<const double> xi) const {
        std::array<double, kMaxDim> two{};
        for (int d = 0; d < nd; ++d) two[static_cast<size_t>(d)] = 2.0 * xi[static_cast<size_t>(d)];
        return phi0_hat(xi) - phi0_hat({two.data(), static_cast<size_t>(nd)});
    }
    std::complex<double> psi0_hat_eval(std::span<const double> xi) const {
        return atom_sum_hat(xi, coef0);
    }
    std::complex<double> atom_basis_hat(std::span<const double> xi, const Atom& a) const {
        double r2 = 0.0;
        for (int d = 0; d < nd; ++d) r2 += xi[static_cast<size_t>(d)] * xi[static_cast<size_t>(d)];
        const double mag = qhat.eval(a.scale * std::sqrt(r2));
        if (mag == 0.0) return {0.0, 0.0};
        double dot = 0.0;
        for (int d = 0; d < nd; ++d) dot += xi[static_cast<size_t>(d)] * a.t[d];
        std::complex<double> ph = std::polar(1.0, -dot);
        if (a.mirrored) {
            const double dot2 = dot - 2.0 * xi[0] * a.t[0];
            ph += std::polar(1.0, -dot2);
        }
        return mag * ph;
    }
    std::complex<double> atom_sum_hat(std::span<const double> xi, const std::vector<double>& y) const {
        std::complex<double> acc{0.0, 0.0};
        const size_t n = std::min(y.size(), atoms.size());
        for (size_t k = 0; k < n; ++k) {
            if (y[k] == 0.0) continue;
            acc += y[k] * atom_basis_hat(xi, atoms[k]);
        }
        return acc;
    }
};

double KernelSystem::bump_scale() const { return impl_->bump_rho; }

const KernelScale& KernelSystem::scale(int j) const {
    if (j < 0 || j > cfg_.jmax) fail_config("kernel scale out of range (j > jmax)");
    return scales_[static_cast<size_t>(j)];
}

std::complex<double> KernelSystem::phi0_hat(std::span<const double> xi) const {
    return impl_->phi0_hat(xi);
}
std::complex<double> KernelSystem::phi_hat(std::span<const double> xi) const {
    return impl_->phi_hat(xi);
}
std::complex<double> KernelSystem::psi0_hat(std::span<const double> xi) const {
    return impl_->psi0_hat_eval(xi);
}
std::complex<double> KernelSystem::psi_hat(std::span<const double> xi) const {
    return impl_->atom_sum_hat(xi, impl_->coef);
}

namespace {

// Moment verification on a dedicated patch over the kernel support; the patch
// resolution is chosen so quadrature aliasing sits well below the tolerance.
MomentReport patch_moments(const ScatterKernel& k, int order, double tol, int nd) {
    const double radius = k.support_radius() * 1.02 + 1e-9;
    const long dims = nd == 1 ? 1 << 16 : 4096;
    GridGeometry patch;
    patch.ndim = nd;
    patch.spacing = 2.0 * radius / static_cast<double>(dims);
    for (int d = 0; d < nd; ++d) {
        patch.dims[static_cast<size_t>(d)] = dims;
        patch.origin[static_cast<size_t>(d)] =
            -(static_cast<double>(dims / 2) + 0.5) * patch.spacing;
    }
    GridFunction g = sample_kernel(k, patch);
    MomentReport rep;
    rep.order_checked = order;
    const double l1 = g.sum_abs() * patch.cell_volume();
    double worst = 0.0;
    for (const auto& beta : multi_indices_below(order, nd)) {
        const double m = moment(g, beta);
        const double scale = tol * l1 * std::pow(radius, beta.order());
        worst = std::max(worst, std::abs(m) / scale);
    }
    rep.worst_normalized = worst;
    rep.pass = worst <= 1.0;
    return rep;
}

}  // namespace

KernelSystem KernelSystem::construct(const KernelSystemConfig& cfg_in) {
    KernelSystemConfig cfg = cfg_in;
    const int nd = cfg.base.ndim;
    if (cfg.L_phi < 1 || cfg.L_psi < 1) fail_config("kernels: moment orders must be >= 1");
    const double box_half = 0.5 * cfg.base.spacing * static_cast<double>(cfg.base.dims[0]);
    if (cfg.phi_radius <= 0) cfg.phi_radius = 0.30 * box_half;
    if (cfg.psi_radius <= 0) cfg.psi_radius = 0.80 * box_half;

    auto impl = std::make_shared<Impl>();
    impl->nd = nd;
    impl->R = cfg.L_phi;
    const int R = impl->R;
    const double sin_theta = 1.0 / std::sqrt(1.0 + cfg.aperture_A * cfg.aperture_A);
    // keep a 1.5-cell strip between every piece and the cone boundary so the
    // box-averaged samples never smear across the strict support mask
    const double cone_strip = 1.5 * cfg.base.spacing;
    const double r_out_budget = cfg.phi_radius / R;
    impl->bump_rho = (r_out_budget * sin_theta - cone_strip) / (1.0 + sin_theta);
    impl->bump_depth = r_out_budget - impl->bump_rho;
    const double rho = impl->bump_rho;
    impl->xc.n = nd;
    impl->xc[nd - 1] = -impl->bump_depth;
    if (rho < 2.0 * cfg.base.spacing)
        fail_config("kernels: bump under-resolved on the shared grid; enlarge phi_radius");

    // centered bump profile normalized to unit mass
    double mass = 0.0;
    {
        const size_t nr = 4096;
        const double dr = rho / static_cast<double>(nr);
        for (size_t i = 0; i < nr; ++i) {
            const double r = (static_cast<double>(i) + 0.5) * dr;
            const double g = bump_profile(r / rho);
            mass += (nd == 2 ? 2.0 * std::acos(-1.0) * r : 2.0) * g * dr;
        }
    }
    const double bump_amp = 1.0 / mass;
    auto g_profile = [rho, bump_amp](double r) { return bump_amp * bump_profile(r / rho); };

    // \hat g table; the bump transform is numerically zero beyond s rho ~ 300
    const double smax = 320.0 / rho;
    impl->ghat = radial_fourier(g_profile, rho, nd, smax, 1 << 14);

    // g^{*i} profiles from a local patch (difference-lattice grid so the axis
    // is sampled exactly)
    {
        const double patch_radius = 1.25 * static_cast<double>(R) * rho;
        const long dims = 1024;
        GridGeometry patch;
        patch.ndim = nd;
        patch.spacing = 2.0 * patch_radius / static_cast<double>(dims);
        for (int d = 0; d < nd; ++d) {
            patch.dims[static_cast<size_t>(d)] = dims;
            patch.origin[static_cast<size_t>(d)] =
                -(static_cast<double>(dims / 2) + 0.5) * patch.spacing;
        }
        auto gc = sample(
            [&](std::span<const double> x) {
                double r2 = 0.0;
                for (double c : x) r2 += c * c;
                return g_profile(std::sqrt(r2));
            },
            patch);
        impl->conv_profiles.resize(static_cast<size_t>(R) + 1);
        GridFunction power = gc;
        for (int i = 1; i <= R; ++i) {
            if (i > 1) {
                ConvolveInfo ci;
                power = convolve(power, gc, &ci);
            }
            RadialTable t;
            t.dr = patch.spacing;
            t.rmax = (static_cast<double>(dims / 2) - 2.0) * patch.spacing;
            t.v.resize(static_cast<size_t>(dims / 2));
            std::array<long, kMaxDim> idx{};
            for (int d = 1; d < nd; ++d) idx[static_cast<size_t>(d)] = dims / 2;
            for (long m = 0; m < dims / 2; ++m) {
                idx[0] = dims / 2 + m;
                t.v[static_cast<size_t>(m)] = power[patch.flat({idx.data(), static_cast<size_t>(nd)})];
            }
            t.compute_mass();
            impl->conv_profiles[static_cast<size_t>(i)] = std::move(t);
        }
    }

    // Phi0 = sum_i C(R,i) (-1)^{i+1} b^{*i}; Phi = Phi0 - 2^{-n} Phi0(./2)
    impl->binom_sign.resize(static_cast<size_t>(R) + 1, 0.0);
    {
        double bin = 1.0;
        for (int i = 1; i <= R; ++i) {
            bin = bin * (R - i + 1) / i;
            impl->binom_sign[static_cast<size_t>(i)] = ((i % 2) ? 1.0 : -1.0) * bin;
        }
    }
    impl->phi0_k.nd = nd;
    for (int i = 1; i <= R; ++i) {
        Piece p;
        p.center.n = nd;
        p.center[nd - 1] = -static_cast<double>(i) * impl->bump_depth;
        p.cull_radius = static_cast<double>(i) * rho * (1.0 + 1e-12);
        p.weight = impl->binom_sign[static_cast<size_t>(i)];
        p.argscale = 1.0;
        p.table = &impl->conv_profiles[static_cast<size_t>(i)];
        impl->phi0_k.pieces.push_back(p);
    }
    impl->phi_k = impl->phi0_k;
    for (int i = 1; i <= R; ++i) {
        Piece p = impl->phi0_k.pieces[static_cast<size_t>(i - 1)];
        for (int d = 0; d < nd; ++d) p.center[d] *= 2.0;
        p.cull_radius *= 2.0;
        p.weight *= -std::pow(2.0, -nd);
        p.argscale = 0.5;
        impl->phi_k.pieces.push_back(p);
    }

    // ---- Psi0 / Psi atoms and the identity fit --------------------------------
    // Multi-scale mirrored dictionary: translated bumps at dyadically
    // shrinking radii, the smaller ones concentrated near the cone vertex.
    impl->atom_rho = std::max(1.3 * rho, 3.5 * cfg.base.spacing);
    {
        double atom_mass = 0.0;
        const size_t nr = 2048;
        const double dra = impl->atom_rho / static_cast<double>(nr);
        for (size_t i = 0; i < nr; ++i) {
            const double r = (static_cast<double>(i) + 0.5) * dra;
            atom_mass +=
                (nd == 2 ? 2.0 * std::acos(-1.0) * r : 2.0) * bump_profile(r / impl->atom_rho) * dra;
        }
        const double amp = 1.0 / atom_mass;
        impl->atom_table.dr = impl->atom_rho / 2047.0;
        impl->atom_table.rmax = impl->atom_rho;
        impl->atom_table.v.resize(2048);
        for (size_t i = 0; i < 2048; ++i)
            impl->atom_table.v[i] =
                amp * bump_profile(static_cast<double>(i) * impl->atom_table.dr / impl->atom_rho);
        impl->atom_table.compute_mass();
        impl->qhat = radial_fourier([&](double r) { return amp * bump_profile(r / impl->atom_rho); },
                                    impl->atom_rho, nd, smax, 1 << 14);
    }
    {
        // Psi atoms first (these are dilated), then Psi0-only atoms
        for (int sc = 0; sc < 3; ++sc) {
            const double s = std::pow(0.5, sc);
            const double rho_s = impl->atom_rho * s;
            if (sc > 0 && rho_s < 2.8 * cfg.base.spacing) break;
            const double spacing = (sc == 0 ? 0.66 : 0.6) * rho_s;
            const double margin = 1.02 * rho_s + cone_strip;
            const double reach = sc == 0 ? cfg.psi_radius : cfg.psi_radius * std::pow(0.55, sc);
            const long range = static_cast<long>(std::ceil(reach / spacing)) + 1;
            const long lo2 = nd >= 2 ? -range : 0, hi2 = nd >= 2 ? range : 0;
            for (long i1 = 0; i1 <= range; ++i1) {  // x1 >= 0; mirrored pairs
                for (long i2 = lo2; i2 <= hi2; ++i2) {
                    Point t;
                    t.n = nd;
                    t[0] = nd >= 2 ? static_cast<double>(i1) * spacing
                                   : static_cast<double>(i2) * spacing;
                    if (nd >= 2) t[nd - 1] = static_cast<double>(i2) * spacing;
                    if (norm2(t) > reach) continue;
                    if (norm2(t) + rho_s > cfg.psi_radius) continue;
                    if (cone_distance(t.span(), cfg.aperture_A, nd) < margin) continue;
                    impl->atoms.push_back({t, s, nd >= 2 && t[0] > 0.0});
                }
                if (nd == 1) break;
            }
        }
        impl->n_psi_atoms = impl->atoms.size();
        for (int sc = 0; sc < 3; ++sc) {
            const double s = std::pow(0.5, sc) / 1.3;  // slightly offset radii
            const double rho_s = impl->atom_rho * s;
            if (rho_s < 2.8 * cfg.base.spacing) break;
            const double spacing = 0.62 * rho_s;
            const double margin = 1.02 * rho_s + cone_strip;
            const double reach = cfg.psi_radius * std::pow(0.55, sc);
            const long range = static_cast<long>(std::ceil(reach / spacing)) + 1;
            const long lo2 = nd >= 2 ? -range : 0, hi2 = nd >= 2 ? range : 0;
            for (long i1 = 0; i1 <= range; ++i1) {
                for (long i2 = lo2; i2 <= hi2; ++i2) {
                    Point t;
                    t.n = nd;
                    t[0] = nd >= 2 ? static_cast<double>(i1) * spacing
                                   : static_cast<double>(i2) * spacing;
                    if (nd >= 2) t[nd - 1] = static_cast<double>(i2) * spacing;
                    if (norm2(t) > reach) continue;
                    if (norm2(t) + rho_s > cfg.psi_radius) continue;
                    if (cone_distance(t.span(), cfg.aperture_A, nd) < margin) continue;
                    impl->atoms.push_back({t, s, nd >= 2 && t[0] > 0.0});
                }
                if (nd == 1) break;
            }
        }
    }
    if (impl->n_psi_atoms < 8) fail_config("kernels: psi_radius leaves too few atom sites");

    const size_t na_all = impl->atoms.size();
    const size_t na_psi = impl->n_psi_atoms;
    const size_t ncols = na_all + na_psi;  // [coef0; coef]

    // frequency samples: log radii resolve the dyadic low band, linear radii
    // resolve the atom-phase scale pi/psi_radius up to just past Nyquist; the
    // angular count grows with the radius to track the atom phases. Weights
    // taper above the band the standard family occupies.
    const double nyquist = std::acos(-1.0) / cfg.base.spacing;
    const double xi_max = 1.05 * nyquist;
    const double band_edge = 0.55 * nyquist;
    std::vector<Point> xis;
    std::vector<double> xi_weight;
    {
        std::vector<double> radii{0.0};
        const double knee = 2.0 / impl->atom_rho;
        for (int p = 16 * cfg.fit_radial_per_octave; p >= 0; --p) {
            const double r = knee * std::pow(0.5, static_cast<double>(p) /
                                                      static_cast<double>(cfg.fit_radial_per_octave));
            if (r < xi_max) radii.push_back(r);
        }
        const double dr_lin = std::acos(-1.0) / (2.0 * cfg.psi_radius);
        for (double r = knee + dr_lin; r <= xi_max; r += dr_lin) radii.push_back(r);
        for (double r : radii) {
            int nang = 1;
            if (nd >= 2) {
                nang = std::clamp(static_cast<int>(std::ceil(r * cfg.psi_radius)),
                                  cfg.fit_angles, 72);
            }
            for (int q = 0; q < (r == 0.0 ? 1 : nang); ++q) {
                Point xi;
                xi.n = nd;
                if (nd == 1) {
                    xi[0] = r;
                } else {
                    const double th = std::acos(-1.0) * (static_cast<double>(q) + 0.5) /
                                      static_cast<double>(nang);
                    xi[0] = r * std::cos(th);
                    xi[1] = r * std::sin(th);
                }
                xis.push_back(xi);
                double w = 1.0;
                if (r == 0.0)
                    w = 1024.0;
                else if (r > band_edge)
                    w = std::max(0.1, 1.0 - 0.9 * (r - band_edge) / (xi_max - band_edge));
                else if (r > 2.0 && r < 0.2 * nyquist)
                    w = 8.0;  // the standard family concentrates here
                xi_weight.push_back(w);
            }
        }
    }

    // cached complex rows of the design matrix (shared across IRLS passes)
    std::vector<std::vector<std::complex<double>>> row_cache(xis.size());
    std::vector<std::complex<double>> rhs_cache(xis.size(), {1.0, 0.0});
    parallel_for(xis.size(), [&](size_t xi_i) {
        const Point& xi = xis[xi_i];
        std::vector<std::complex<double>> row(ncols, {0.0, 0.0});
        const auto p0h = impl->phi0_hat(xi.span());
        for (size_t k = 0; k < na_all; ++k)
            row[k] = impl->atom_basis_hat(xi.span(), impl->atoms[k]) * p0h;
        for (int j = 1; j <= cfg.fit_jmax; ++j) {
            Point z = xi;
            const double sc = std::pow(0.5, j);
            for (int d = 0; d < nd; ++d) z[d] *= sc;
            const auto ph = impl->phi_hat(z.span());
            if (std::abs(ph) == 0.0) continue;
            for (size_t k = 0; k < na_psi; ++k)
                row[na_all + k] += impl->atom_basis_hat(z.span(), impl->atoms[k]) * ph;
        }
        row_cache[xi_i] = std::move(row);
    });

    // hard constraints: Psi moments vanish for |beta| < L_psi; Psi0 has unit
    // mass and vanishing moments for 1 <= |beta| < L_phi (so T - 1 = O(xi^R)
    // at zero frequency, as in the exact pair).
    std::vector<std::vector<double>> constraints;
    std::vector<double> constraint_rhs;
    {
        const long dims = nd == 1 ? 1 << 14 : 1024;
        GridGeometry patch;
        patch.ndim = nd;
        patch.spacing = 2.0 * impl->atom_rho * 1.05 / static_cast<double>(dims);
        for (int d = 0; d < nd; ++d) {
            patch.dims[static_cast<size_t>(d)] = dims;
            patch.origin[static_cast<size_t>(d)] =
                -(static_cast<double>(dims / 2) + 0.5) * patch.spacing;
        }
        auto atom_c = sample(
            [&](std::span<const double> x) {
                double rr = 0.0;
                for (double c : x) rr += c * c;
                return impl->atom_table.eval(std::sqrt(rr));
            },
            patch);
        const int max_order = std::max(cfg.L_psi, cfg.L_phi);
        std::map<std::array<int, kMaxDim>, double> central;
        for (const auto& b : multi_indices_below(max_order, nd)) central[b.beta] = moment(atom_c, b);
        auto binom = [](int n_, int k_) {
            double r = 1.0;
            for (int i = 0; i < k_; ++i) r = r * (n_ - i) / (i + 1.0);
            return r;
        };
        auto atom_moment = [&](const Impl::Atom& a, const MultiIndex& beta) {
            double acc = 0.0;
            const int copies = a.mirrored ? 2 : 1;
            for (int c = 0; c < copies; ++c) {
                Point t = a.t;
                if (c == 1) t[0] = -t[0];
                for (const auto& gamma : multi_indices_below(beta.order() + 1, nd)) {
                    bool leq = true;
                    for (int d = 0; d < nd; ++d)
                        leq = leq &&
                              gamma.beta[static_cast<size_t>(d)] <= beta.beta[static_cast<size_t>(d)];
                    if (!leq) continue;
                    double term = central[gamma.beta] * std::pow(a.scale, gamma.order());
                    if (term == 0.0) continue;
                    for (int d = 0; d < nd; ++d) {
                        const int bd = beta.beta[static_cast<size_t>(d)];
                        const int gd = gamma.beta[static_cast<size_t>(d)];
                        term *= binom(bd, gd) * std::pow(t[d], bd - gd);
                    }
                    acc += term;
                }
            }
            return acc;
        };
        for (const auto& beta : multi_indices_below(cfg.L_psi, nd)) {
            std::vector<double> row(ncols, 0.0);
            bool nonzero = false;
            for (size_t k = 0; k < na_psi; ++k) {
                row[na_all + k] = atom_moment(impl->atoms[k], beta);
                nonzero = nonzero || row[na_all + k] != 0.0;
            }
            if (nonzero) {
                constraints.push_back(std::move(row));
                constraint_rhs.push_back(0.0);
            }
        }
        for (const auto& beta : multi_indices_below(cfg.L_phi, nd)) {
            std::vector<double> row(ncols, 0.0);
            bool nonzero = false;
            for (size_t k = 0; k < na_all; ++k) {
                row[k] = atom_moment(impl->atoms[k], beta);
                nonzero = nonzero || row[k] != 0.0;
            }
            if (nonzero) {
                constraints.push_back(std::move(row));
                constraint_rhs.push_back(beta.order() == 0 ? 1.0 : 0.0);
            }
        }
    }
    const size_t ncon = constraints.size();

    // weighted normal equations + KKT solve; two IRLS reweighting passes pull
    // the least-squares answer toward the sup-norm target
    std::vector<double> sol_x(ncols, 0.0);
    std::vector<double> w = xi_weight;
    for (int pass = 0; pass < 2; ++pass) {
        std::vector<double> ATA(ncols * ncols, 0.0), ATb(ncols, 0.0);
        const size_t nblocks = std::min<size_t>(ncols, 64);
        parallel_for(nblocks, [&](size_t blk) {
            const size_t a0 = blk * ncols / nblocks;
            const size_t a1 = (blk + 1) * ncols / nblocks;
            for (size_t xi_i = 0; xi_i < xis.size(); ++xi_i) {
                const auto& row = row_cache[xi_i];
                const double wi = w[xi_i];
                const std::complex<double> rhs_i = rhs_cache[xi_i];
                for (size_t a = a0; a < a1; ++a) {
                    const std::complex<double> ra = row[a];
                    if (ra.real() == 0.0 && ra.imag() == 0.0) continue;
                    ATb[a] += wi * (ra.real() * rhs_i.real() + ra.imag() * rhs_i.imag());
                    for (size_t b = a; b < ncols; ++b) {
                        const std::complex<double> rb = row[b];
                        ATA[a * ncols + b] += wi * (ra.real() * rb.real() + ra.imag() * rb.imag());
                    }
                }
            }
        });
        for (size_t a = 0; a < ncols; ++a)
            for (size_t b = 0; b < a; ++b) ATA[a * ncols + b] = ATA[b * ncols + a];

        // column equilibration keeps the normal equations well conditioned in
        // spite of the atom-envelope disparity across the band
        std::vector<double> colscale(ncols, 1.0);
        for (size_t a = 0; a < ncols; ++a) {
            const double d = std::sqrt(ATA[a * ncols + a]);
            colscale[a] = d > 1e-150 ? 1.0 / d : 1.0;
        }
        const double ridge = cfg.fit_ridge;
        const size_t nk = ncols + ncon;
        std::vector<double> K(nk * nk, 0.0), rhs(nk, 0.0);
        for (size_t a = 0; a < ncols; ++a) {
            rhs[a] = ATb[a] * colscale[a];
            for (size_t b = 0; b < ncols; ++b)
                K[a * nk + b] = ATA[a * ncols + b] * colscale[a] * colscale[b];
            K[a * nk + a] += ridge;
        }
        for (size_t ci = 0; ci < ncon; ++ci) {
            // scale constraint rows to unit norm as well
            double cn = 0.0;
            for (size_t a = 0; a < ncols; ++a) {
                const double v = constraints[ci][a] * colscale[a];
                cn += v * v;
            }
            cn = cn > 0 ? 1.0 / std::sqrt(cn) : 1.0;
            rhs[ncols + ci] = constraint_rhs[ci] * cn;
            for (size_t a = 0; a < ncols; ++a) {
                const double v = constraints[ci][a] * colscale[a] * cn;
                K[(ncols + ci) * nk + a] = v;
                K[a * nk + ncols + ci] = v;
            }
        }
        const auto sol = solve_lu(std::move(K), std::move(rhs), nk, "construct_psi fit");
        sol_x.assign(sol.begin(), sol.begin() + static_cast<long>(ncols));
        for (size_t a = 0; a < ncols; ++a) sol_x[a] *= colscale[a];
        if (std::getenv("FNX_DEBUG_FIT")) {
            double mx = 0.0, mean = 0.0, cmax = 0.0;
            for (size_t xi_i = 0; xi_i < xis.size(); ++xi_i) {
                const auto& row = row_cache[xi_i];
                std::complex<double> t{0.0, 0.0};
                for (size_t a = 0; a < ncols; ++a) t += row[a] * sol_x[a];
                const double rres = std::abs(t - rhs_cache[xi_i]);
                mx = std::max(mx, rres);
                mean += rres;
            }
            for (double v : sol_x) cmax = std::max(cmax, std::abs(v));
            std::fprintf(stderr, "fit pass %d: rows %zu cols %zu max|res| %.3e mean %.3e max|coef| %.3e\n",
                         pass, xis.size(), ncols, mx, mean / xis.size(), cmax);
        }
        if (pass == 1) break;
        // reweight by the current residual magnitudes
        double mean_res = 0.0;
        std::vector<double> res(xis.size(), 0.0);
        for (size_t xi_i = 0; xi_i < xis.size(); ++xi_i) {
            const auto& row = row_cache[xi_i];
            std::complex<double> t{0.0, 0.0};
            for (size_t a = 0; a < ncols; ++a) t += row[a] * sol_x[a];
            res[xi_i] = std::abs(t - rhs_cache[xi_i]);
            mean_res += res[xi_i];
        }
        mean_res /= static_cast<double>(xis.size());
        for (size_t xi_i = 0; xi_i < xis.size(); ++xi_i)
            w[xi_i] = xi_weight[xi_i] * (1.0 + res[xi_i] / (mean_res + 1e-300));
    }
    impl->coef0.assign(sol_x.begin(), sol_x.begin() + static_cast<long>(na_all));
    impl->coef.assign(sol_x.begin() + static_cast<long>(na_all), sol_x.end());

    impl->psi0_k.nd = nd;
    impl->psi_k.nd = nd;
    for (size_t k = 0; k < na_all; ++k) {
        const auto& a = impl->atoms[k];
        const int copies = a.mirrored ? 2 : 1;
        for (int c = 0; c < copies; ++c) {
            Piece p;
            p.center = a.t;
            if (c == 1) p.center[0] = -p.center[0];
            p.cull_radius = impl->atom_rho * a.scale;
            p.argscale = 1.0 / a.scale;
            p.table = &impl->atom_table;
            const double amp = std::pow(a.scale, -nd);
            p.weight = impl->coef0[k] * amp;
            if (p.weight != 0.0) impl->psi0_k.pieces.push_back(p);
            if (k < na_psi) {
                p.weight = impl->coef[k] * amp;
                if (p.weight != 0.0) impl->psi_k.pieces.push_back(p);
            }
        }
    }

    // ---- assemble the system ---------------------------------------------------
    KernelSystem sys;
    sys.cfg_ = cfg;
    sys.impl_ = impl;
    sys.gen_phi0_ = impl->phi0_k.as_fn();
    sys.gen_phi_ = impl->phi_k.as_fn();
    sys.gen_psi0_ = impl->psi0_k.as_fn();
    sys.gen_psi_ = impl->psi_k.as_fn();
    sys.support_radius_ = std::max({impl->phi_k.support_radius(), impl->psi_k.support_radius(),
                                    impl->psi0_k.support_radius()}) +
                          1.5 * cfg.base.spacing;

    // identity-fit verification scan (offset radii/angles vs the fit samples),
    // restricted to the weighted band
    {
        double worst = 0.0;
        const int nang = nd == 1 ? 1 : 2 * 96 + 1;
        for (int p = 0; p <= 22 * 7; ++p) {
            const double r = band_edge * std::pow(0.5, static_cast<double>(p) / 7.0) * 0.93;
            for (int q = 0; q < nang; ++q) {
                Point xi;
                xi.n = nd;
                if (nd == 1) {
                    xi[0] = r;
                } else {
                    const double th = std::acos(-1.0) * (static_cast<double>(q) + 0.25) /
                                      static_cast<double>(nang);
                    xi[0] = r * std::cos(th);
                    xi[1] = r * std::sin(th);
                }
                std::complex<double> T = impl->psi0_hat_eval(xi.span()) *
                                         impl->phi0_hat(xi.span());
                for (int j = 1; j <= cfg.fit_jmax; ++j) {
                    Point z = xi;
                    const double sc = std::pow(0.5, j);
                    for (int d = 0; d < nd; ++d) z[d] *= sc;
                    T += impl->atom_sum_hat(z.span(), impl->coef) * impl->phi_hat(z.span());
                }
                worst = std::max(worst, std::abs(T - 1.0));
            }
        }
        sys.fit_residual_ = worst;
    }

    // per-scale kernels on the shared lattice
    const GridGeometry coarse = GridGeometry::kernel_lattice(cfg.base);
    const GridGeometry fine4 = GridGeometry::kernel_lattice(cfg.base.refined(4));
    const Cone minus_k = Cone{cfg.aperture_A, nd, -1};
    auto to_lattice = [&](const ScatterKernel& k) {
        GridFunction g = cfg.average_downsample
                             ? downsample_average(sample_kernel(k, fine4, &minus_k), coarse)
                             : sample_kernel(k, coarse, &minus_k);
        // averaging smears by up to a cell across the support boundary; the
        // cone-support invariant is strict, so transfer smeared mass to the
        // nearest in-cone neighbor and zero everything outside
        const double R = k.support_radius() + 1.5 * coarse.spacing;
        std::array<long, kMaxDim> idx{}, nb{};
        for (long i = 0; i < g.cells(); ++i) {
            if (g[i] == 0.0) continue;
            coarse.unflat(i, {idx.data(), static_cast<size_t>(nd)});
            const Point p = coarse.center({idx.data(), static_cast<size_t>(nd)});
            if (norm2(p) >= R) {
                g[i] = 0.0;
                continue;
            }
            if (minus_k.contains(p.span())) continue;
            long best = -1;
            double best_depth = -1e300;
            const long reach = 2;
            std::array<long, kMaxDim> off{};
            for (int d = 0; d < nd; ++d) off[static_cast<size_t>(d)] = -reach;
            for (;;) {
                bool ok = true;
                for (int d = 0; d < nd; ++d) {
                    nb[static_cast<size_t>(d)] = idx[static_cast<size_t>(d)] + off[static_cast<size_t>(d)];
                    ok = ok && nb[static_cast<size_t>(d)] >= 0 &&
                         nb[static_cast<size_t>(d)] < coarse.dims[static_cast<size_t>(d)];
                }
                if (ok) {
                    const Point q = coarse.center({nb.data(), static_cast<size_t>(nd)});
                    if (minus_k.contains(q.span()) && norm2(q) < R) {
                        const double depth = -dist2(p, q);
                        if (depth > best_depth) {
                            best_depth = depth;
                            best = coarse.flat({nb.data(), static_cast<size_t>(nd)});
                        }
                    }
                }
                int d = 0;
                for (; d < nd; ++d) {
                    if (++off[static_cast<size_t>(d)] <= reach) break;
                    off[static_cast<size_t>(d)] = -reach;
                }
                if (d == nd) break;
            }
            if (best >= 0) g[best] += g[i];
            g[i] = 0.0;
        }
        return g;
    };
    sys.scales_.resize(static_cast<size_t>(cfg.jmax) + 1);
    for (int j = 0; j <= cfg.jmax; ++j) {
        auto& sc = sys.scales_[static_cast<size_t>(j)];
        sc.phi = to_lattice((j == 0 ? impl->phi0_k : impl->phi_k).dilated(j));
        if (j <= cfg.pair_jmax) {
            sc.psi = to_lattice((j == 0 ? impl->psi0_k : impl->psi_k).dilated(j));
        } else {
            // the reproducing pair carries no scales the grid cannot represent
            sc.psi = GridFunction(coarse, std::vector<double>(static_cast<size_t>(coarse.cells()), 0.0));
        }
        const double extent =
            2.0 * (j == 0 ? impl->phi0_k : impl->phi_k).support_radius() * std::pow(0.5, j);
        sc.resolved = extent / cfg.base.spacing >= 4.0;
    }
    sys.phi_base_ = to_lattice(impl->phi_k);
    sys.psi_base_ = to_lattice(impl->psi_k);
    sys.resolved_jmax_ = 0;
    for (int j = 0; j <= cfg.jmax; ++j)
        if (sys.scales_[static_cast<size_t>(j)].resolved) sys.resolved_jmax_ = j;

    {
        std::ostringstream os;
        os << nd << "|" << cfg.base.dims[0] << "|" << cfg.base.spacing << "|" << cfg.aperture_A
           << "|" << cfg.L_phi << "|" << cfg.L_psi << "|" << cfg.phi_radius << "|"
           << cfg.psi_radius << "|" << cfg.jmax << "|" << cfg.average_downsample << "|"
           << cfg.fit_angles << "|" << cfg.fit_radial_per_octave << "|" << cfg.fit_ridge << "|"
           << cfg.fit_jmax << "|" << cfg.pair_jmax;
        sys.config_hash_ = fnv1a(os.str());
    }
    sys.tauber_epsilon_ = tauberian_check(sys);
    return sys;
}

MomentReport KernelSystem::verify_phi_moments(double tol) const {
    return patch_moments(impl_->phi_k, cfg_.L_phi, tol, cfg_.base.ndim);
}

MomentReport KernelSystem::verify_psi_moments(double tol) const {
    return patch_moments(impl_->psi_k, cfg_.L_psi, tol, cfg_.base.ndim);
}

double tauberian_epsilon_from(const GridFunction& phi0_samples, const GridFunction& phi1_samples,
                              double cap) {
    const GridGeometry& lattice = phi0_samples.geom();
    const int nd = lattice.ndim;
    if (!phi1_samples.geom().same_grid(lattice)) fail_grid("tauberian: lattice mismatch");

    auto dft_mag = [&](const GridFunction& f) {
        std::vector<std::complex<double>> buf(static_cast<size_t>(f.cells()));
        for (long i = 0; i < f.cells(); ++i) buf[static_cast<size_t>(i)] = f[i];
        fft::transform(buf.data(), {lattice.dims.data(), static_cast<size_t>(nd)}, -1);
        std::vector<double> mag(buf.size());
        const double hn = lattice.cell_volume();
        for (size_t i = 0; i < buf.size(); ++i) mag[i] = std::abs(buf[i]) * hn;
        return mag;
    };
    const auto m0 = dft_mag(phi0_samples);
    const auto m1 = dft_mag(phi1_samples);

    const double two_pi = 2.0 * std::acos(-1.0);
    struct Bin {
        double r, a0, a1;
    };
    std::vector<Bin> bins;
    std::array<long, kMaxDim> idx{};
    for (long i = 0; i < lattice.cells(); ++i) {
        lattice.unflat(i, {idx.data(), static_cast<size_t>(nd)});
        double r2 = 0.0;
        for (int d = 0; d < nd; ++d) {
            const long P = lattice.dims[static_cast<size_t>(d)];
            const long k = idx[static_cast<size_t>(d)];
            const long kk = (k <= P / 2) ? k : k - P;
            const double xi = two_pi * static_cast<double>(kk) / (static_cast<double>(P) * lattice.spacing);
            r2 += xi * xi;
        }
        const double r = std::sqrt(r2);
        if (r > 2.5 * cap) continue;
        bins.push_back({r, m0[static_cast<size_t>(i)], m1[static_cast<size_t>(i)]});
    }
    std::sort(bins.begin(), bins.end(), [](const Bin& a, const Bin& b) { return a.r < b.r; });
    const double tol = 1e-9 * bins.front().a0;
    if (bins.front().r != 0.0 || bins.front().a0 < 1e-12)
        fail_numeric("tauberian_check: Phi0_hat(0) vanishes (degenerate kernel)");

    std::vector<double> prefix_min(bins.size());
    double m = 1e300;
    for (size_t i = 0; i < bins.size(); ++i) {
        m = std::min(m, bins[i].a0);
        prefix_min[i] = m;
    }
    auto annulus_ok = [&](double eps) {
        bool any = false;
        for (const auto& b : bins) {
            if (b.r <= eps / 2 || b.r >= 2 * eps) continue;
            any = true;
            if (b.a1 <= tol) return false;
        }
        return any;
    };
    double best = 0.0;
    for (size_t i = 0; i < bins.size(); ++i) {
        const double eps = bins[i].r;
        if (eps <= 0 || eps > cap) continue;
        if (prefix_min[i] > tol && annulus_ok(eps)) best = std::max(best, eps);
    }
    if (best <= 0) fail_numeric("tauberian_check: no positive epsilon found");
    return best;
}

double tauberian_check(const KernelSystem& system) {
    const KernelSystemConfig& cfg = system.config();
    const int nd = cfg.base.ndim;
    const GridGeometry lattice = GridGeometry::kernel_lattice(cfg.base);
    auto phi0_s = sample(system.phi0_generator(), lattice);
    const PointFn& gen_phi = system.phi_generator();
    auto phi1_s = sample(
        [&gen_phi, nd](std::span<const double> x) {
            std::array<double, kMaxDim> sx{};
            for (int d = 0; d < nd; ++d) sx[static_cast<size_t>(d)] = 2.0 * x[static_cast<size_t>(d)];
            return std::pow(2.0, nd) * gen_phi({sx.data(), static_cast<size_t>(nd)});
        },
        lattice);
    const double nyquist = std::acos(-1.0) / lattice.spacing;
    const double cap = std::min(2.0 * std::acos(-1.0) / system.bump_scale(), 0.5 * nyquist);
    return tauberian_epsilon_from(phi0_s, phi1_s, cap);
}

SystemSpectra::SystemSpectra(const KernelSystem& system, const GridGeometry& base) : ws_(base) {
    const int jmax = system.jmax();
    phi_hat_.reserve(static_cast<size_t>(jmax) + 1);
    psi_hat_.reserve(static_cast<size_t>(jmax) + 1);
    for (int j = 0; j <= jmax; ++j) {
        phi_hat_.push_back(ws_.forward(system.scale(j).phi));
        psi_hat_.push_back(ws_.forward(system.scale(j).psi));
    }
}

std::vector<double> calderon_residual_curve(const KernelSystem& system, const SystemSpectra& sp,
                                            const GridFunction& f, int Jmax) {
    if (Jmax > system.jmax()) fail_config("calderon_residual: J > jmax");
    if (f.max_abs() == 0.0) fail_config("calderon_residual: f must be nonzero");
    const fft::Workspace& ws = sp.workspace();
    auto fhat = ws.forward(f);

    const GridGeometry& g = f.geom();
    const double margin = system.support_radius();
    std::vector<long> region;
    std::array<long, kMaxDim> idx{};
    for (long i = 0; i < g.cells(); ++i) {
        g.unflat(i, {idx.data(), static_cast<size_t>(g.ndim)});
        bool in = true;
        for (int d = 0; d < g.ndim; ++d) {
            const double x = g.center(d, idx[static_cast<size_t>(d)]);
            const double lo = g.origin[static_cast<size_t>(d)] + margin;
            const double hi = g.origin[static_cast<size_t>(d)] +
                              g.spacing * static_cast<double>(g.dims[static_cast<size_t>(d)]) - margin;
            in = in && x >= lo && x <= hi;
        }
        if (in) region.push_back(i);
    }
    if (region.empty()) fail_config("calderon_residual: margin leaves no interior cells");
    double fsup = 0.0;
    for (long i : region) fsup = std::max(fsup, std::abs(f[i]));
    if (fsup == 0.0) fail_config("calderon_residual: f vanishes on the interior region");

    std::vector<double> out;
    out.reserve(static_cast<size_t>(Jmax) + 1);
    fft::Workspace::Spectrum acc;
    for (int j = 0; j <= Jmax; ++j) {
        auto term = ws.multiply(fhat, sp.phi_hat(j));
        ws.multiply_inplace(term, sp.psi_hat(j));
        if (j == 0)
            acc = std::move(term);
        else
            ws.add_inplace(acc, term);
        auto partial = ws.inverse(acc, g);
        double worst = 0.0;
        for (long i : region) worst = std::max(worst, std::abs(partial[i] - f[i]));
        out.push_back(worst / fsup);
    }
    return out;
}

double calderon_residual(const KernelSystem& system, const GridFunction& f, int J) {
    SystemSpectra sp(system, f.geom());
    return calderon_residual_curve(system, sp, f, J).back();
}

std::vector<KernelSystem> universal_system(const KernelSystemConfig& base_cfg, int Lmax) {
    if (Lmax < 1 || Lmax > 8) fail_config("universal_system: Lmax must be in [1, 8]");
    std::vector<KernelSystem> out;
    out.reserve(static_cast<size_t>(Lmax));
    for (int L = 1; L <= Lmax; ++L) {
        KernelSystemConfig cfg = base_cfg;
        cfg.L_phi = L;
        cfg.L_psi = L;
        out.push_back(KernelSystem::construct(cfg));
    }
    return out;
}

void write_kernel_bundle(const std::string& dir, const KernelSystem& system) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    write_fnxg(dir + "/phi0.fnxg", system.phi0());
    write_fnxg(dir + "/phi.fnxg", system.phi_base());
    write_fnxg(dir + "/psi0.fnxg", system.psi0());
    write_fnxg(dir + "/psi.fnxg", system.psi_base());
    std::ofstream os(dir + "/manifest.txt");
    os << "fnx-kernel-bundle 1\n";
    os << "L_phi " << system.L_phi() << "\n";
    os << "L_psi " << system.L_psi() << "\n";
    os << "aperture " << system.config().aperture_A << "\n";
    os << "phi_radius " << system.config().phi_radius << "\n";
    os << "psi_radius " << system.config().psi_radius << "\n";
    os << "support_radius " << system.support_radius() << "\n";
    os << "tauber_epsilon " << system.tauberian_epsilon() << "\n";
    os << "identity_fit " << system.identity_fit_residual() << "\n";
    os << "config_hash " << std::hex << system.config_hash() << std::dec << "\n";
}

BundleCheck check_kernel_bundle(const std::string& dir, const KernelSystemConfig& cfg) {
    BundleCheck out;
    std::ifstream is(dir + "/manifest.txt");
    if (!is) {
        out.detail = "missing manifest";
        return out;
    }
    std::string header;
    std::getline(is, header);
    std::map<std::string, std::string> kv;
    std::string key, value;
    while (is >> key >> value) kv[key] = value;

    // deterministic rebuild makes the comparison exact
    KernelSystem sys = KernelSystem::construct(cfg);
    auto phi0 = read_fnxg(dir + "/phi0.fnxg").re;
    auto psi = read_fnxg(dir + "/psi.fnxg").re;
    double dmax = 0.0;
    for (long i = 0; i < phi0.cells(); ++i) dmax = std::max(dmax, std::abs(phi0[i] - sys.phi0()[i]));
    for (long i = 0; i < psi.cells(); ++i) dmax = std::max(dmax, std::abs(psi[i] - sys.psi_base()[i]));
    const auto mp = sys.verify_phi_moments();
    const auto mq = sys.verify_psi_moments();
    std::ostringstream os;
    os << "max kernel deviation " << dmax << "; phi moments worst " << mp.worst_normalized
       << "; psi moments worst " << mq.worst_normalized << "; tauber " << sys.tauberian_epsilon();
    out.detail = os.str();
    const uint64_t manifest_hash =
        kv.count("config_hash") ? std::stoull(kv["config_hash"], nullptr, 16) : 0;
    out.pass = dmax == 0.0 && mp.pass && mq.pass && manifest_hash == sys.config_hash();
    return out;
}

}  // namespace fnx
