// SPDX-License-Identifier: Apache-2.0
#include "fnx/fft.hpp"

#include <fftw3.h>

#include <cstdio>
#include <map>
#include <mutex>

namespace fnx {
namespace fft {

namespace {

struct PlanKey {
    std::array<long, kMaxDim> dims;
    int ndim;
    int sign;
    bool operator<(const PlanKey& o) const {
        if (ndim != o.ndim) return ndim < o.ndim;
        if (sign != o.sign) return sign < o.sign;
        return dims < o.dims;
    }
};

// Plan creation is serialized; execution via the new-array interface is
// thread-safe. Plans are created unaligned and in-place so they can run on any
// std::vector buffer.
class PlanCache {
  public:
    fftw_plan get(std::span<const long> dims, int sign) {
        PlanKey key{};
        key.ndim = static_cast<int>(dims.size());
        key.sign = sign;
        for (int d = 0; d < key.ndim; ++d) key.dims[static_cast<size_t>(d)] = dims[static_cast<size_t>(d)];
        std::lock_guard lock(mutex_);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        long total = 1;
        for (int d = 0; d < key.ndim; ++d) total *= key.dims[static_cast<size_t>(d)];
        std::vector<std::complex<double>> scratch(static_cast<size_t>(total));
        int n[kMaxDim];
        for (int d = 0; d < key.ndim; ++d) n[d] = static_cast<int>(key.dims[static_cast<size_t>(d)]);
        fftw_plan p = fftw_plan_dft(key.ndim, n, reinterpret_cast<fftw_complex*>(scratch.data()),
                                    reinterpret_cast<fftw_complex*>(scratch.data()), sign,
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!p) fail_numeric("fftw: plan creation failed");
        plans_.emplace(key, p);
        return p;
    }

  private:
    std::mutex mutex_;
    std::map<PlanKey, fftw_plan> plans_;
};

PlanCache& plan_cache() {
    static PlanCache c;
    return c;
}

}  // namespace

void transform(std::complex<double>* data, std::span<const long> dims, int sign) {
    fftw_plan p = plan_cache().get(dims, sign);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data), reinterpret_cast<fftw_complex*>(data));
}

Workspace::Workspace(const GridGeometry& base) : base_(base) {
    pcells_ = 1;
    for (int d = 0; d < base.ndim; ++d) {
        pdims_[static_cast<size_t>(d)] =
            static_cast<long>(next_pow2(2 * static_cast<size_t>(base.dims[static_cast<size_t>(d)])));
        pcells_ *= pdims_[static_cast<size_t>(d)];
    }
}

Workspace::Spectrum Workspace::forward(const GridFunction& f) const {
    if (!f.geom().same_layout(base_)) fail_grid("fft workspace: grid mismatch");
    Spectrum s;
    s.factors = 1;
    for (int d = 0; d < base_.ndim; ++d)
        s.origin_sum[static_cast<size_t>(d)] = f.geom().origin[static_cast<size_t>(d)];
    s.data.assign(static_cast<size_t>(pcells_), {0.0, 0.0});
    const int nd = base_.ndim;
    std::array<long, kMaxDim> idx{};
    for (long i = 0; i < f.cells(); ++i) {
        f.geom().unflat(i, {idx.data(), static_cast<size_t>(nd)});
        long pf = 0;
        for (int d = 0; d < nd; ++d) pf = pf * pdims_[static_cast<size_t>(d)] + idx[static_cast<size_t>(d)];
        s.data[static_cast<size_t>(pf)] = f[i];
    }
    transform(s.data.data(), padded_dims(), FFTW_FORWARD);
    return s;
}

Workspace::Spectrum Workspace::multiply(const Spectrum& a, const Spectrum& b) const {
    Spectrum out = a;
    multiply_inplace(out, b);
    return out;
}

void Workspace::multiply_inplace(Spectrum& a, const Spectrum& b) const {
    const double hn = std::pow(base_.spacing, base_.ndim);
    for (size_t i = 0; i < a.data.size(); ++i) a.data[i] *= b.data[i] * hn;
    for (int d = 0; d < base_.ndim; ++d)
        a.origin_sum[static_cast<size_t>(d)] += b.origin_sum[static_cast<size_t>(d)];
    a.factors += b.factors;
}

void Workspace::add_inplace(Spectrum& a, const Spectrum& b, double scale) const {
    if (a.factors != b.factors) fail_grid("fft workspace: adding spectra with different factor counts");
    for (int d = 0; d < base_.ndim; ++d)
        if (std::abs(a.origin_sum[static_cast<size_t>(d)] - b.origin_sum[static_cast<size_t>(d)]) >
            1e-9)
            fail_grid("fft workspace: adding spectra with different origins");
    for (size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i] * scale;
}

GridFunction Workspace::inverse(const Spectrum& s, const GridGeometry& out_geom) const {
    if (!out_geom.same_layout(base_)) fail_grid("fft workspace: output grid mismatch");
    std::vector<std::complex<double>> buf = s.data;
    transform(buf.data(), padded_dims(), FFTW_BACKWARD);
    const double norm = 1.0 / static_cast<double>(pcells_);
    const int nd = base_.ndim;
    const double h = base_.spacing;
    // index s corresponds to point origin_sum + factors*(h/2) + s*h per axis
    std::array<long, kMaxDim> shift{};
    for (int d = 0; d < nd; ++d) {
        const double a = s.origin_sum[static_cast<size_t>(d)] + s.factors * h / 2.0;
        const double want = out_geom.center(d, 0);
        const double kf = (want - a) / h;
        const long k = static_cast<long>(std::llround(kf));
        if (std::abs(kf - static_cast<double>(k)) > 1e-6)
            fail_grid("fft workspace: output grid not on the convolution lattice");
        shift[static_cast<size_t>(d)] = k;
    }
    std::vector<double> vals(static_cast<size_t>(out_geom.cells()));
    std::array<long, kMaxDim> idx{};
    for (long i = 0; i < out_geom.cells(); ++i) {
        out_geom.unflat(i, {idx.data(), static_cast<size_t>(nd)});
        long pf = 0;
        bool in = true;
        for (int d = 0; d < nd; ++d) {
            const long k = idx[static_cast<size_t>(d)] + shift[static_cast<size_t>(d)];
            const long P = pdims_[static_cast<size_t>(d)];
            if (k < 0 || k >= P) {
                in = false;
                break;
            }
            pf = pf * P + k;
        }
        vals[static_cast<size_t>(i)] = in ? buf[static_cast<size_t>(pf)].real() * norm : 0.0;
    }
    return GridFunction(out_geom, std::move(vals));
}

std::vector<double> Workspace::bin_frequencies(int axis) const {
    const long P = pdims_[static_cast<size_t>(axis)];
    const double dxi = 2.0 * std::acos(-1.0) / (static_cast<double>(P) * base_.spacing);
    std::vector<double> xi(static_cast<size_t>(P));
    for (long k = 0; k < P; ++k) {
        const long kk = (k <= P / 2) ? k : k - P;
        xi[static_cast<size_t>(k)] = static_cast<double>(kk) * dxi;
    }
    return xi;
}

}  // namespace fft

GridFunction convolve(const GridFunction& f, const GridFunction& g, ConvolveInfo* info) {
    const GridGeometry& gf = f.geom();
    const GridGeometry& gg = g.geom();
    if (!gf.same_layout(gg)) fail_grid("convolve: grid mismatch (dims/spacing differ)");
    const int nd = gf.ndim;
    const double h = gf.spacing;

    std::array<long, kMaxDim> pdims{};
    long pcells = 1;
    for (int d = 0; d < nd; ++d) {
        pdims[static_cast<size_t>(d)] = static_cast<long>(next_pow2(
            static_cast<size_t>(gf.dims[static_cast<size_t>(d)] + gg.dims[static_cast<size_t>(d)])));
        pcells *= pdims[static_cast<size_t>(d)];
    }
    std::vector<std::complex<double>> A(static_cast<size_t>(pcells), {0, 0});
    std::vector<std::complex<double>> B(static_cast<size_t>(pcells), {0, 0});
    std::array<long, kMaxDim> idx{};
    auto embed = [&](const GridFunction& src, std::vector<std::complex<double>>& dst) {
        for (long i = 0; i < src.cells(); ++i) {
            src.geom().unflat(i, {idx.data(), static_cast<size_t>(nd)});
            long pf = 0;
            for (int d = 0; d < nd; ++d)
                pf = pf * pdims[static_cast<size_t>(d)] + idx[static_cast<size_t>(d)];
            dst[static_cast<size_t>(pf)] = src[i];
        }
    };
    embed(f, A);
    embed(g, B);
    const std::span<const long> pspan{pdims.data(), static_cast<size_t>(nd)};
    fft::transform(A.data(), pspan, -1);
    fft::transform(B.data(), pspan, -1);
    const double hn = std::pow(h, nd);
    for (size_t i = 0; i < A.size(); ++i) A[i] *= B[i];
    fft::transform(A.data(), pspan, +1);
    const double norm = hn / static_cast<double>(pcells);

    // output grid: origin_out = origin_f + origin_g + h/2 + K h, K integral,
    // chosen so the output window lies closest to f's grid
    GridGeometry out = gf;
    std::array<long, kMaxDim> K{};
    for (int d = 0; d < nd; ++d) {
        const double o_sum = gf.origin[static_cast<size_t>(d)] + gg.origin[static_cast<size_t>(d)];
        const double kf = (gf.origin[static_cast<size_t>(d)] - o_sum - h / 2.0) / h + 0.5;
        K[static_cast<size_t>(d)] = static_cast<long>(std::floor(kf + 1e-9));
        out.origin[static_cast<size_t>(d)] =
            o_sum + h / 2.0 + static_cast<double>(K[static_cast<size_t>(d)]) * h;
    }

    std::vector<double> vals(static_cast<size_t>(out.cells()));
    double kept_mass = 0.0;
    for (long i = 0; i < out.cells(); ++i) {
        out.unflat(i, {idx.data(), static_cast<size_t>(nd)});
        long pf = 0;
        bool in = true;
        for (int d = 0; d < nd; ++d) {
            const long k = idx[static_cast<size_t>(d)] + K[static_cast<size_t>(d)];
            if (k < 0 || k >= pdims[static_cast<size_t>(d)]) {
                in = false;
                break;
            }
            pf = pf * pdims[static_cast<size_t>(d)] + k;
        }
        const double v = in ? A[static_cast<size_t>(pf)].real() * norm : 0.0;
        vals[static_cast<size_t>(i)] = v;
        kept_mass += std::abs(v);
    }
    double total_mass = 0.0;
    for (const auto& c : A) total_mass += std::abs(c.real()) * norm;
    const double cropped = total_mass > 0 ? std::max(0.0, (total_mass - kept_mass) / total_mass) : 0.0;
    if (info) {
        info->cropped_fraction = cropped;
    } else if (cropped > 1e-12) {
        std::fprintf(stderr, "fnx: convolve support overflow, cropped mass fraction %.3e\n", cropped);
    }
    return GridFunction(out, std::move(vals));
}

}  // namespace fnx
