#pragma once

#include <filesystem>
#include <vector>

#include "qmscat/fft.hpp"

namespace qmscat::wavelets {

struct MorletParams {
  int J = 9;           // dyadic scales; grid is 2^J x 2^J
  int L = 16;          // orientations covering (-pi/2, pi/2]
  double xi0 = 0.92 * 3.14159265358979323846;  // rad/pixel
  double sigma = 0.6;  // spatial envelope std at j=0, pixels
  double slant = 1.0;  // envelope anisotropy; 1 = isotropic

  void validate() const;
  int n() const { return 1 << J; }
  /// theta_l = -pi/2 + pi (l+1) / L
  double theta(int l) const;
};

/// Frequency-domain Morlet bank plus Gaussian low-pass. Filters are
/// real-valued in frequency (the spatial wavelets satisfy
/// psi(-u) = conj(psi(u))), stored after the global Littlewood-Paley
/// rescaling that puts the upper frame bound at exactly 1.
struct FilterBank {
  MorletParams params;
  std::vector<std::vector<RealGrid>> psi_hat;  // [j][l]
  RealGrid phi_hat;
  double frame_constant = 1.0;  // measured c
  double lp_scale = 1.0;        // filters were multiplied by sqrt(lp_scale),
                                // pinning the LP max on the covered ball at 1

  int n() const { return params.n(); }
};

/// Builds the bank. The admissibility constant is chosen against the
/// periodized Gaussians, so every psi_hat vanishes at frequency zero to
/// machine precision (its continuum value is exp(-sigma^2 xi0^2 / 2)).
/// Warns (does not fail) when the j=0 filter leaks past Nyquist, i.e.
/// xi0 + 3/sigma > pi; the leaked tail is folded by periodization and
/// shows up in the measured frame constant.
FilterBank build_morlet_bank(const MorletParams& p);

/// Littlewood-Paley sum |phi_hat|^2 + (pi/L) sum_{j,l} |psi_hat|^2 over
/// the frequency grid, symmetrized over +-omega (the effective response
/// for real inputs), evaluated on the stored (rescaled) filters.
RealGrid littlewood_paley_sum(const FilterBank& fb);

/// c = 1 - min/max of the LP sum over nonzero frequencies of the covered
/// ball |omega| <= xi0, the region where the truncated scale set j >= 0
/// can satisfy the Littlewood-Paley condition. Warns when c > 0.25.
double measure_frame_constant(const FilterBank& fb);

/// Analytic periodized filter value at frequency (wx, wy) rad/pixel for
/// scale j and an arbitrary (continuous) orientation.
double analytic_psi_hat(const MorletParams& p, int j, double theta, double wx,
                        double wy);

void save_bank(const FilterBank& fb, const std::filesystem::path& base_path);
FilterBank load_bank(const std::filesystem::path& base_path);

/// Radial profile h with sum_j 2^{2j} h(2^j a) = a^{-2} for all a > 0:
/// h(a) = a^{-2} chi(a) where chi is a cosine-squared window in log2
/// scale, supported on [1/2, 2], with sum_j chi(2^j a) = 1.
struct TheoryWavelet {
  int n_radial = 0;
  std::vector<double> alpha;  // sampled table over [2^-j_range, 2^j_range]
  std::vector<double> value;

  double window(double a) const;      // chi(a)
  double operator()(double a) const;  // h(a)
};

TheoryWavelet build_theory_wavelet(int j_range, int n_radial);

}  // namespace qmscat::wavelets
