#include "qmscat/filterbank.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "qmscat/io.hpp"

namespace qmscat::wavelets {

namespace {

constexpr double pi = std::numbers::pi;

int alias_order(int j) { return j == 0 ? 3 : (j == 1 ? 2 : 1); }

/// Periodized anisotropic Gaussian sum_m exp(-|S R^T (2^j (w + 2 pi m) - c)|^2 / 2)
/// evaluated at a single frequency. Used for slant != 1 and the analytic
/// reference; the bank builder uses the separable fast path below.
double periodized_gaussian(double wx, double wy, double cx, double cy,
                           double scale, double sigma, double slant,
                           double cos_t, double sin_t, int order) {
  double acc = 0.0;
  for (int my = -order; my <= order; ++my) {
    for (int mx = -order; mx <= order; ++mx) {
      const double vx = scale * (wx + 2.0 * pi * mx) - cx;
      const double vy = scale * (wy + 2.0 * pi * my) - cy;
      // Rotate into the filter frame; the perpendicular axis is widened
      // in frequency by 1/slant.
      const double a = cos_t * vx + sin_t * vy;
      const double b = -sin_t * vx + cos_t * vy;
      acc += std::exp(-0.5 * sigma * sigma *
                      (a * a + b * b / (slant * slant)));
    }
  }
  return acc;
}

}  // namespace

void MorletParams::validate() const {
  if (J < 2) throw std::invalid_argument("MorletParams: J must be >= 2");
  if (L < 2 || L % 2 != 0)
    throw std::invalid_argument("MorletParams: L must be even and >= 2");
  if (!(xi0 > 0.0 && xi0 < pi))
    throw std::invalid_argument("MorletParams: xi0 must be in (0, pi)");
  if (!(sigma > 0.0)) throw std::invalid_argument("MorletParams: sigma <= 0");
  if (!(slant > 0.0)) throw std::invalid_argument("MorletParams: slant <= 0");
}

double MorletParams::theta(int l) const {
  return -0.5 * pi + pi * static_cast<double>(l + 1) / L;
}

double analytic_psi_hat(const MorletParams& p, int j, double theta, double wx,
                        double wy) {
  const double scale = static_cast<double>(1 << j);
  const double cos_t = std::cos(theta), sin_t = std::sin(theta);
  const double cx = p.xi0 * cos_t, cy = p.xi0 * sin_t;
  const int order = alias_order(j);
  const double signal = periodized_gaussian(wx, wy, cx, cy, scale, p.sigma,
                                            p.slant, cos_t, sin_t, order);
  const double dc = periodized_gaussian(0.0, 0.0, cx, cy, scale, p.sigma,
                                        p.slant, cos_t, sin_t, order);
  const double gauss = periodized_gaussian(wx, wy, 0.0, 0.0, scale, p.sigma,
                                           p.slant, cos_t, sin_t, order);
  const double gauss0 = periodized_gaussian(0.0, 0.0, 0.0, 0.0, scale, p.sigma,
                                            p.slant, cos_t, sin_t, order);
  const double admissibility = dc / gauss0;
  return signal - admissibility * gauss;
}

namespace {

/// Separable (isotropic envelope) filter construction: each periodization
/// alias is an outer product of two 1D Gaussians.
RealGrid build_filter_separable(const MorletParams& p, int j, int l) {
  const int n = p.n();
  const double scale = static_cast<double>(1 << j);
  const double theta = p.theta(l);
  const double cx = p.xi0 * std::cos(theta), cy = p.xi0 * std::sin(theta);
  const int order = alias_order(j);
  const double s2 = p.sigma * p.sigma;

  const auto axis_factors = [&](double center) {
    // factors[m][k] = exp(-sigma^2 (scale (w_k + 2 pi m) - center)^2 / 2)
    std::vector<Eigen::ArrayXd> factors;
    for (int m = -order; m <= order; ++m) {
      Eigen::ArrayXd f(n);
      for (int k = 0; k < n; ++k) {
        const double w = 2.0 * pi * signed_freq(k, n) / n;
        const double v = scale * (w + 2.0 * pi * m) - center;
        f[k] = std::exp(-0.5 * s2 * v * v);
      }
      factors.push_back(std::move(f));
    }
    return factors;
  };

  const auto fx_sig = axis_factors(cx);
  const auto fy_sig = axis_factors(cy);
  const auto fx_dc = axis_factors(0.0);
  const auto fy_dc = axis_factors(0.0);

  RealGrid signal = RealGrid::Zero(n, n);
  RealGrid gauss = RealGrid::Zero(n, n);
  double signal0 = 0.0, gauss0 = 0.0;
  for (int my = 0; my < 2 * order + 1; ++my) {
    for (int mx = 0; mx < 2 * order + 1; ++mx) {
      signal += (fy_sig[my].matrix() * fx_sig[mx].matrix().transpose()).array();
      gauss += (fy_dc[my].matrix() * fx_dc[mx].matrix().transpose()).array();
      signal0 += fy_sig[my][0] * fx_sig[mx][0];
      gauss0 += fy_dc[my][0] * fx_dc[mx][0];
    }
  }
  const double admissibility = signal0 / gauss0;
  return signal - admissibility * gauss;
}

RealGrid build_filter_generic(const MorletParams& p, int j, int l) {
  const int n = p.n();
  RealGrid out(n, n);
  const double theta = p.theta(l);
  for (int ky = 0; ky < n; ++ky) {
    const double wy = 2.0 * pi * signed_freq(ky, n) / n;
    for (int kx = 0; kx < n; ++kx) {
      const double wx = 2.0 * pi * signed_freq(kx, n) / n;
      out(ky, kx) = analytic_psi_hat(p, j, theta, wx, wy);
    }
  }
  return out;
}

}  // namespace

FilterBank build_morlet_bank(const MorletParams& p) {
  p.validate();
  if (p.xi0 + 3.0 / p.sigma > pi)
    std::cerr << "[qmscat] warning: j=0 Morlet support xi0 + 3/sigma = "
              << p.xi0 + 3.0 / p.sigma
              << " exceeds Nyquist pi; the tail is folded by periodization "
                 "and absorbed into the measured frame constant\n";

  const int n = p.n();
  FilterBank fb;
  fb.params = p;
  fb.psi_hat.resize(p.J);
  for (int j = 0; j < p.J; ++j) {
    fb.psi_hat[j].reserve(p.L);
    for (int l = 0; l < p.L; ++l) {
      RealGrid f = p.slant == 1.0 ? build_filter_separable(p, j, l)
                                  : build_filter_generic(p, j, l);
      fb.psi_hat[j].push_back(std::move(f));
    }
  }

  // Low-pass: isotropic Gaussian with spatial std sigma 2^{J-1} pixels,
  // normalized to exact unit DC gain.
  {
    const double sig_phi = p.sigma * static_cast<double>(1 << (p.J - 1));
    fb.phi_hat.resize(n, n);
    Eigen::ArrayXd axis(n);
    double axis0 = 0.0;
    for (int k = 0; k < n; ++k) {
      const double w = 2.0 * pi * signed_freq(k, n) / n;
      double acc = 0.0;
      for (int m = -1; m <= 1; ++m) {
        const double v = w + 2.0 * pi * m;
        acc += std::exp(-0.5 * sig_phi * sig_phi * v * v);
      }
      axis[k] = acc;
      if (k == 0) axis0 = acc;
    }
    fb.phi_hat = (axis.matrix() * axis.matrix().transpose()).array() /
                 (axis0 * axis0);
  }

  // Global rescale pinning the Littlewood-Paley maximum over the covered
  // frequency ball to exactly 1, which makes it the upper frame bound for
  // densities with no energy past the coverage ball.
  RealGrid lp = littlewood_paley_sum(fb);
  double lp_max = 0.0;
  const auto on_ball = [&](int kx, int ky) {
    const double wx = 2.0 * pi * signed_freq(kx, n) / n;
    const double wy = 2.0 * pi * signed_freq(ky, n) / n;
    return wx * wx + wy * wy <= p.xi0 * p.xi0 + 1e-12;
  };
  for (int ky = 0; ky < n; ++ky)
    for (int kx = 0; kx < n; ++kx)
      if (on_ball(kx, ky)) lp_max = std::max(lp_max, lp(ky, kx));
  const double scale = 1.0 / std::sqrt(lp_max);
  for (auto& row : fb.psi_hat)
    for (auto& f : row) f *= scale;
  fb.phi_hat *= scale;
  fb.lp_scale = 1.0 / lp_max;

  fb.frame_constant = measure_frame_constant(fb);
  return fb;
}

RealGrid littlewood_paley_sum(const FilterBank& fb) {
  const int n = fb.n();
  // Symmetrized over +-omega: real inputs carry identical spectral mass
  // at mirrored frequencies, so this is the effective response of the
  // half-circle orientation set.
  RealGrid acc = RealGrid::Zero(n, n);
  for (const auto& row : fb.psi_hat) {
    for (const auto& f : row) {
      for (int ky = 0; ky < n; ++ky) {
        const int kyn = (n - ky) % n;
        for (int kx = 0; kx < n; ++kx) {
          const int kxn = (n - kx) % n;
          acc(ky, kx) +=
              0.5 * (f(ky, kx) * f(ky, kx) + f(kyn, kxn) * f(kyn, kxn));
        }
      }
    }
  }
  RealGrid lp = fb.phi_hat.square();
  lp += acc * (pi / fb.params.L);
  return lp;
}

double measure_frame_constant(const FilterBank& fb) {
  RealGrid lp = littlewood_paley_sum(fb);
  const int n = fb.n();
  const double xi0 = fb.params.xi0;
  // The truncated scale set j >= 0 only claims coverage inside the ball
  // |omega| <= xi0; the continuum condition over all of R^2 would need
  // scales j < 0 as well.
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (int ky = 0; ky < n; ++ky) {
    const double wy = 2.0 * pi * signed_freq(ky, n) / n;
    for (int kx = 0; kx < n; ++kx) {
      const double wx = 2.0 * pi * signed_freq(kx, n) / n;
      if (kx == 0 && ky == 0) continue;
      if (wx * wx + wy * wy > xi0 * xi0 + 1e-12) continue;
      lo = std::min(lo, lp(ky, kx));
      hi = std::max(hi, lp(ky, kx));
    }
  }
  const double c = 1.0 - lo / hi;
  if (c > 0.25)
    std::cerr << "[qmscat] warning: Littlewood-Paley frame constant c = " << c
              << " exceeds 0.25; the transform loses a significant energy "
                 "fraction at some frequencies\n";
  return c;
}

void save_bank(const FilterBank& fb, const std::filesystem::path& base_path) {
  io::json meta;
  meta["J"] = fb.params.J;
  meta["L"] = fb.params.L;
  meta["xi0"] = fb.params.xi0;
  meta["sigma"] = fb.params.sigma;
  meta["slant"] = fb.params.slant;
  meta["frame_constant"] = fb.frame_constant;
  meta["lp_scale"] = fb.lp_scale;
  io::write_json(base_path.string() + ".json", meta);

  const std::size_t cells = static_cast<std::size_t>(fb.n()) * fb.n();
  std::vector<double> blob;
  blob.reserve((static_cast<std::size_t>(fb.params.J) * fb.params.L + 1) *
               cells);
  blob.insert(blob.end(), fb.phi_hat.data(), fb.phi_hat.data() + cells);
  for (const auto& row : fb.psi_hat)
    for (const auto& f : row)
      blob.insert(blob.end(), f.data(), f.data() + cells);
  io::write_f64(base_path.string() + ".f64", blob.data(), blob.size());
}

FilterBank load_bank(const std::filesystem::path& base_path) {
  const auto meta = io::read_json(base_path.string() + ".json");
  FilterBank fb;
  fb.params.J = meta.at("J").get<int>();
  fb.params.L = meta.at("L").get<int>();
  fb.params.xi0 = meta.at("xi0").get<double>();
  fb.params.sigma = meta.at("sigma").get<double>();
  fb.params.slant = meta.at("slant").get<double>();
  fb.frame_constant = meta.at("frame_constant").get<double>();
  fb.lp_scale = meta.at("lp_scale").get<double>();
  fb.params.validate();

  const int n = fb.n();
  const std::size_t cells = static_cast<std::size_t>(n) * n;
  const auto blob = io::read_f64(base_path.string() + ".f64");
  if (blob.size() !=
      (static_cast<std::size_t>(fb.params.J) * fb.params.L + 1) * cells)
    throw std::runtime_error("filter blob size mismatch: " +
                             base_path.string());
  std::size_t off = 0;
  fb.phi_hat.resize(n, n);
  std::copy_n(blob.data() + off, cells, fb.phi_hat.data());
  off += cells;
  fb.psi_hat.resize(fb.params.J);
  for (int j = 0; j < fb.params.J; ++j) {
    for (int l = 0; l < fb.params.L; ++l) {
      RealGrid f(n, n);
      std::copy_n(blob.data() + off, cells, f.data());
      off += cells;
      fb.psi_hat[j].push_back(std::move(f));
    }
  }
  return fb;
}

double TheoryWavelet::window(double a) const {
  if (a <= 0.0) return 0.0;
  const double t = std::log2(a);
  if (t <= -1.0 || t >= 1.0) return 0.0;
  const double c = std::cos(0.5 * pi * t);
  return c * c;
}

double TheoryWavelet::operator()(double a) const {
  if (a <= 0.0) return 0.0;
  const double w = window(a);
  return w == 0.0 ? 0.0 : w / (a * a);
}

TheoryWavelet build_theory_wavelet(int j_range, int n_radial) {
  if (n_radial < 64)
    throw std::invalid_argument("build_theory_wavelet: n_radial must be >= 64");
  if (j_range < 1)
    throw std::invalid_argument("build_theory_wavelet: j_range must be >= 1");
  TheoryWavelet w;
  w.n_radial = n_radial;
  w.alpha.resize(n_radial);
  w.value.resize(n_radial);
  const double lo = -j_range, hi = j_range;
  for (int i = 0; i < n_radial; ++i) {
    const double t = lo + (hi - lo) * i / (n_radial - 1);
    w.alpha[i] = std::exp2(t);
    w.value[i] = w(w.alpha[i]);
  }
  return w;
}

}  // namespace qmscat::wavelets
