// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>

#include "fnx/grid.hpp"

namespace fnx {

/// Extra outputs of convolve(); cropped_fraction is the |mass| of the exact
/// linear-convolution result that falls outside the returned window, relative
/// to its total |mass|.
struct ConvolveInfo {
    double cropped_fraction = 0.0;
};

/// Linear (zero-padded, non-circular) convolution via FFT:
///   out ≈ (f * g)(p),  out[i] = h^n Σ_j f[j] g[i-j]  up to index bookkeeping.
/// Requires identical dims and spacing. The output grid follows the lattice
/// law origin_out = origin_f + origin_g + h/2 (+ integer shift chosen closest
/// to f's grid); convolving against a kernel-lattice grid returns f's grid
/// exactly. Pads each axis to the next power of two >= sum of extents.
/// A support-overflow warning is recorded in `info` (or printed once to stderr
/// when info == nullptr) if the cropped mass fraction exceeds 1e-12.
GridFunction convolve(const GridFunction& f, const GridFunction& g, ConvolveInfo* info = nullptr);

namespace fft {

/// In-place c2c FFT over row-major dims; sign = -1 forward, +1 backward
/// (unnormalized, FFTW convention). Plans are cached and shared.
void transform(std::complex<double>* data, std::span<const long> dims, int sign);

/// Fixed padded spectral workspace over a base geometry. Used by the kernel
/// and analysis modules to compose several convolutions with one final
/// inverse transform. Padded dims are 2x base dims (power of two), which keeps
/// every composition linear as long as the combined support stays inside the
/// doubled box.
class Workspace {
  public:
    explicit Workspace(const GridGeometry& base);

    struct Spectrum {
        std::vector<std::complex<double>> data;
        std::array<double, kMaxDim> origin_sum{};  // sum of factor origins
        int factors = 0;                            // number of convolved grids
    };

    const GridGeometry& base() const { return base_; }
    std::span<const long> padded_dims() const { return {pdims_.data(), static_cast<size_t>(base_.ndim)}; }
    long padded_cells() const { return pcells_; }

    Spectrum forward(const GridFunction& f) const;
    /// Pointwise product, carrying the h^n convolution factor.
    Spectrum multiply(const Spectrum& a, const Spectrum& b) const;
    void multiply_inplace(Spectrum& a, const Spectrum& b) const;
    void add_inplace(Spectrum& a, const Spectrum& b, double scale = 1.0) const;
    /// Inverse transform cropped onto `out_geom` (must be lattice-compatible).
    GridFunction inverse(const Spectrum& s, const GridGeometry& out_geom) const;

    /// Multiplier diagonal: DFT bin frequencies xi_k per axis (fftshift-free,
    /// k in [0..P): xi = 2*pi*k/(P*h) wrapped to (-pi/h, pi/h]).
    std::vector<double> bin_frequencies(int axis) const;

  private:
    GridGeometry base_;
    std::array<long, kMaxDim> pdims_{};
    long pcells_ = 0;
};

}  // namespace fft
}  // namespace fnx
