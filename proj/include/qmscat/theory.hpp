#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "qmscat/filterbank.hpp"
#include "qmscat/io.hpp"

namespace qmscat::theory {

/// 3D charge configuration smoothed by an isotropic Gaussian of width
/// sigma_g per axis; sigma_g = 0 means point charges.
struct ChargeConfig3D {
  std::vector<double> charges;
  std::vector<Eigen::Vector3d> positions;  // Bohr
  double sigma_g = 0.0;

  void validate() const;
  double l1_norm() const;  // sum |z_k|
  bool empty() const { return charges.empty(); }
};

/// Seeded random Gaussian config: n_charges in [2, max_charges], charges
/// in [0.5, 3], positions in a ball of radius diameter/2, sigma_g in
/// [sigma_lo, sigma_hi].
ChargeConfig3D random_gaussian_config(std::uint64_t seed, int max_charges = 6,
                                      double sigma_lo = 0.25,
                                      double sigma_hi = 2.0,
                                      double diameter = 8.0);

/// Coulomb energy of the smoothed density, closed form:
/// U = sum_{k,l} z_k z_l E(|r_k - r_l|) with E(d) = erf(d / (2 sigma_g)) / d
/// and E(0) = 1 / (sigma_g sqrt(pi)). Includes the self terms (k = l);
/// requires sigma_g > 0.
double coulomb_energy_gaussian(const ChargeConfig3D& cfg);

/// Same energy without the k = l self terms; defined for sigma_g = 0 too,
/// where it reduces to sum_{k != l} z_k z_l / |r_k - r_l|.
double coulomb_energy_offdiag(const ChargeConfig3D& cfg);

/// Independent oracle: radial frequency quadrature of
/// U = (2 pi^2)^{-1} int_0^inf S(alpha) d alpha. Requires sigma_g > 0.
double coulomb_energy_quadrature(const ChargeConfig3D& cfg,
                                 double rel_tol = 1e-9);

/// Sphere-averaged squared Fourier modulus
/// S(alpha) = 4 pi g(alpha)^2 sum_{k,l} z_k z_l sinc(alpha |r_k - r_l|)
/// with g(alpha) = exp(-sigma_g^2 alpha^2 / 2).
double fourier_invariant(const ChargeConfig3D& cfg, double alpha,
                         bool include_self = true);

/// Monte-Carlo oracle for fourier_invariant: averages |rho_hat(alpha eta)|^2
/// over uniform sphere directions. Returns the estimate and fills
/// std_error when non-null.
double fourier_invariant_monte_carlo(const ChargeConfig3D& cfg, double alpha,
                                     int n_samples, std::uint64_t seed,
                                     double* std_error = nullptr);

struct RegressionEstimate {
  double value = 0.0;
  long term_count = 0;
};

/// Trapezoid estimate over the radial invariants sampled at k epsilon,
/// k = 1 .. ceil(eps^-2): value = eps / (4 pi^2) * (S(eps) +
/// 2 sum_interior + S(1/eps)). Requires 0 < eps < 1 and sigma_g > 0.
RegressionEstimate fourier_regression_estimate(const ChargeConfig3D& cfg,
                                               double eps);

/// 2^{2j} ||rho * psi_j||_2^2 for the exact Littlewood-Paley wavelet:
/// the radial integral of S(alpha) 2^{2j} h(2^j alpha) (4 pi)^{-1}
/// (2 pi)^{-3} 4 pi alpha^2 over the support of h.
double wavelet_invariant(const ChargeConfig3D& cfg, int j,
                         const wavelets::TheoryWavelet& h,
                         bool include_self = true, double rel_tol = 1e-9);

/// Truncated dyadic sum 4 pi sum_{j = ceil(2 log2 eps)}^{floor(-log2 eps)}
/// of the wavelet invariants; point-charge configs are evaluated in
/// self-energy-subtracted mode.
RegressionEstimate wavelet_regression_estimate(const ChargeConfig3D& cfg,
                                               double eps,
                                               const wavelets::TheoryWavelet& h);

/// Full dyadic sum 4 pi sum_j 2^{2j} ||rho * psi_j||_2^2 over an explicit
/// scale range.
double wavelet_identity_sum(const ChargeConfig3D& cfg,
                            const wavelets::TheoryWavelet& h, int j_lo,
                            int j_hi, bool include_self = true);

/// As above with the range extended adaptively until the remaining terms
/// are negligible.
double wavelet_identity_sum(const ChargeConfig3D& cfg,
                            const wavelets::TheoryWavelet& h);

/// Tail bounds: (low, high) with
///   low  = int_{alpha < eps} S(alpha) d alpha
///   high = sum_{j <= 2 log2 eps} 2^{2j} ||rho * psi_j||_2^2.
/// Both are O(eps) ||rho||_1^2. Requires sigma_g > 0 (or an empty config).
std::pair<double, double> lemma_cut_bounds(const ChargeConfig3D& cfg,
                                           double eps,
                                           const wavelets::TheoryWavelet& h);

/// Least-squares slope of log2(err) against log2(eps).
double fitted_loglog_slope(const std::vector<double>& eps,
                           const std::vector<double>& err);

struct ConvergenceReport {
  std::vector<double> eps_grid;  // strictly decreasing
  std::vector<double> fourier_error;
  std::vector<long> fourier_terms;
  std::vector<double> wavelet_error;
  std::vector<long> wavelet_terms;
  double fourier_slope = 0.0;
  double wavelet_slope = 0.0;
  double oracle_energy = 0.0;
  std::string note;

  io::json to_json() const;
  std::string to_csv() const;
};

/// Errors of both truncated estimates against the erf closed form over an
/// epsilon grid, with fitted log-log slopes.
ConvergenceReport convergence_study(const ChargeConfig3D& cfg,
                                    const std::vector<double>& eps_grid,
                                    const wavelets::TheoryWavelet& h);

}  // namespace qmscat::theory
