// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>

#include "fnx/fft.hpp"
#include "fnx/geometry.hpp"
#include "fnx/grid.hpp"

namespace fnx {

/// Smooth compactly supported profile exp(-1/(1-t^2)) on |t| < 1.
double bump_profile(double t);
/// C-infinity transition: 1 for t <= 1, 0 for t >= 2.
double smooth_cutoff_1_2(double t);

struct KernelSystemConfig {
    GridGeometry base;        ///< shared function grid (box grid, power-of-two dims)
    double aperture_A = 1.0;  ///< domain cone aperture; kernels live in -K
    int L_phi = 4;            ///< vanishing-moment order of Phi (exact by construction)
    int L_psi = 6;            ///< vanishing-moment order of Psi (hard constraints in the fit)
    double phi_radius = 0.0;  ///< Phi0 support budget; default 0.40 * box half-width
    double psi_radius = 0.0;  ///< Psi support budget; default 0.80 * box half-width
    int jmax = 8;
    /// dyadic horizon of the identity fit (how many Psi shifts the fitted
    /// reproducing identity assumes)
    int fit_jmax = 6;
    /// finest scale carried by the sampled pair: Psi_j = 0 for j > pair_jmax.
    /// The grid cannot represent the deeper scales' atoms, and truncating
    /// here keeps the residual curve flat (hence nonincreasing) beyond it.
    int pair_jmax = 2;
    bool average_downsample = true;  ///< subsample-average kernels onto the shared lattice

    // identity-fit controls
    int fit_angles = 16;            ///< minimum angular samples (n = 2)
    int fit_radial_per_octave = 8;  ///< radial samples per octave (low band)
    double fit_ridge = 1e-9;        ///< Tikhonov weight on atom coefficients
};

/// One dyadic scale of the system on the shared kernel lattice.
struct KernelScale {
    GridFunction phi;
    GridFunction psi;
    bool resolved = true;  ///< support spans >= 4 shared-grid cells per axis
};

struct MomentReport {
    int order_checked = 0;
    double worst_normalized = 0.0;  ///< max |moment| / (tol ||k||_1 radius^{|b|})
    bool pass = false;
};

/// Kernel family (Phi0, Phi, Psi0, Psi): cone-supported, compactly supported,
/// with prescribed vanishing moments and an approximate Calderon reproducing
/// pair.
///
///  - Phi0 = delta - (delta - b)^{*R} expanded into binomial combinations of
///    self-convolutions of a positive normalized bump b placed strictly inside
///    -K. This gives supp Phi0 in -K, integral 1, vanishing moments
///    1 <= |beta| < R = L_phi exactly, and ||Phi0||_1 <= 2^R - 1.
///  - Phi = Phi0 - 2^{-n} Phi0(./2).
///  - Psi0, Psi are sums of translated bump atoms inside -K, solved by least
///    squares on the frequency-domain identity
///      Psi0_hat Phi0_hat + sum_j Psi_hat(2^{-j}.) Phi_hat(2^{-j}.) = 1
///    with the moment conditions on Psi as hard linear constraints.
///
/// All four kernels have closed-form generators (radial-profile tables), so
/// every dyadic scale is sampled analytically.
class KernelSystem {
  public:
    static KernelSystem construct(const KernelSystemConfig& cfg);

    const KernelSystemConfig& config() const { return cfg_; }
    Cone cone() const { return Cone{cfg_.aperture_A, cfg_.base.ndim, -1}; }
    int L_phi() const { return cfg_.L_phi; }
    int L_psi() const { return cfg_.L_psi; }
    int jmax() const { return cfg_.jmax; }
    double support_radius() const { return support_radius_; }
    double tauberian_epsilon() const { return tauber_epsilon_; }
    /// radius of the generating bump b (the kernel-intrinsic length scale)
    double bump_scale() const;
    /// max |1 - T(xi)| over the verification scan of the reproducing identity
    double identity_fit_residual() const { return fit_residual_; }
    uint64_t config_hash() const { return config_hash_; }

    /// Base kernels on the shared kernel lattice.
    const GridFunction& phi0() const { return scales_[0].phi; }
    const GridFunction& psi0() const { return scales_[0].psi; }
    const GridFunction& phi_base() const { return phi_base_; }
    const GridFunction& psi_base() const { return psi_base_; }

    /// Scale-j pair (j = 0 is the start pair Phi0, Psi0).
    const KernelScale& scale(int j) const;
    int resolved_jmax() const { return resolved_jmax_; }

    /// Closed-form generators; exact at any dyadic scale.
    const PointFn& phi0_generator() const { return gen_phi0_; }
    const PointFn& phi_generator() const { return gen_phi_; }
    const PointFn& psi0_generator() const { return gen_psi0_; }
    const PointFn& psi_generator() const { return gen_psi_; }

    /// Continuum Fourier transforms on the table-backed path (radial-exact).
    std::complex<double> phi0_hat(std::span<const double> xi) const;
    std::complex<double> phi_hat(std::span<const double> xi) const;
    std::complex<double> psi0_hat(std::span<const double> xi) const;
    std::complex<double> psi_hat(std::span<const double> xi) const;

    /// Moments verified by quadrature on a dedicated patch over the support.
    MomentReport verify_phi_moments(double tol = 1e-7) const;
    MomentReport verify_psi_moments(double tol = 1e-7) const;

  private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
    KernelSystemConfig cfg_;
    std::vector<KernelScale> scales_;
    GridFunction phi_base_, psi_base_;
    PointFn gen_phi0_, gen_phi_, gen_psi0_, gen_psi_;
    int resolved_jmax_ = 0;
    double support_radius_ = 0.0;
    double tauber_epsilon_ = 0.0;
    double fit_residual_ = 0.0;
    uint64_t config_hash_ = 0;
};

/// Largest sampled epsilon (capped at the kernel-intrinsic scale 2*pi/rho) with
/// |Phi0_hat| > 0 on {|xi| < eps} and |Phi1_hat| > 0 on {eps/2 < |xi| < 2 eps},
/// where Phi1 = 2^n Phi(2x); computed from FFTs of the lattice-sampled kernels.
double tauberian_check(const KernelSystem& system);

/// Scan on already-sampled start kernels (phi0, phi1 on one lattice).
double tauberian_epsilon_from(const GridFunction& phi0_samples, const GridFunction& phi1_samples,
                              double cap);

/// Cached per-scale kernel spectra on a workspace over the shared grid.
class SystemSpectra {
  public:
    SystemSpectra(const KernelSystem& system, const GridGeometry& base);
    const fft::Workspace& workspace() const { return ws_; }
    const fft::Workspace::Spectrum& phi_hat(int j) const { return phi_hat_[static_cast<size_t>(j)]; }
    const fft::Workspace::Spectrum& psi_hat(int j) const { return psi_hat_[static_cast<size_t>(j)]; }
    int jmax() const { return static_cast<int>(phi_hat_.size()) - 1; }

  private:
    fft::Workspace ws_;
    std::vector<fft::Workspace::Spectrum> phi_hat_, psi_hat_;
};

/// Relative sup-norm Calderon residual on the interior box (margin =
/// support_radius):  || sum_{j<=J} Psi_j * Phi_j * f  -  f ||_inf / ||f||_inf.
double calderon_residual(const KernelSystem& system, const GridFunction& f, int J);

/// Residuals for J = 0..Jmax computed incrementally (one inverse FFT per J).
std::vector<double> calderon_residual_curve(const KernelSystem& system, const SystemSpectra& sp,
                                            const GridFunction& f, int Jmax);

/// Family of systems with L_phi = L_psi = L for L = 1..Lmax, sharing cone,
/// radii and grids.
std::vector<KernelSystem> universal_system(const KernelSystemConfig& base_cfg, int Lmax);

/// Kernel bundle: one FNXG file per kernel plus a text manifest.
void write_kernel_bundle(const std::string& dir, const KernelSystem& system);

struct BundleCheck {
    bool pass = false;
    std::string detail;
};
/// Re-verifies moments, support and the Tauberian epsilon of an on-disk bundle
/// against a rebuild from the same config.
BundleCheck check_kernel_bundle(const std::string& dir, const KernelSystemConfig& cfg);

}  // namespace fnx
