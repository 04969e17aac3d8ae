#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "qmscat/fft.hpp"
#include "qmscat/filterbank.hpp"
#include "qmscat/io.hpp"

using namespace qmscat;
using namespace qmscat::wavelets;

namespace {

constexpr double pi = std::numbers::pi;

FilterBank small_bank(int J = 6, int L = 16) {
  MorletParams p;
  p.J = J;
  p.L = L;
  return build_morlet_bank(p);
}

RealGrid random_smooth_density(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0.25 * n, 0.75 * n);
  std::uniform_real_distribution<double> width(2.0, 5.0);
  std::uniform_real_distribution<double> amp(0.5, 2.0);
  RealGrid rho = RealGrid::Zero(n, n);
  for (int b = 0; b < 5; ++b) {
    const double cx = pos(rng), cy = pos(rng), s = width(rng), a = amp(rng);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        rho(y, x) +=
            a * std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) /
                         (2.0 * s * s));
  }
  return rho;
}

}  // namespace

TEST_CASE("parameter validation") {
  MorletParams p;
  p.J = 1;
  CHECK_THROWS(build_morlet_bank(p));
  p = MorletParams{};
  p.L = 7;
  CHECK_THROWS(build_morlet_bank(p));
  p = MorletParams{};
  p.xi0 = 3.5;
  CHECK_THROWS(build_morlet_bank(p));
  p = MorletParams{};
  p.sigma = 0.0;
  CHECK_THROWS(build_morlet_bank(p));
}

TEST_CASE("all wavelets have exactly zero mean") {
  const FilterBank fb = small_bank();
  double worst = 0.0;
  for (const auto& row : fb.psi_hat)
    for (const auto& f : row) worst = std::max(worst, std::abs(f(0, 0)));
  CHECK(worst < 1e-12);
}

TEST_CASE("low-pass peaks at DC and the stored bank keeps the LP max at 1") {
  const FilterBank fb = small_bank();
  const RealGrid lp = littlewood_paley_sum(fb);
  // The rescale pins the covered-ball maximum at 1; DC carries
  // phi_hat(0)^2 which the rescale may only lower.
  CHECK(lp.maxCoeff() <= 1.0 + 1e-12);
  CHECK(fb.phi_hat(0, 0) ==
        doctest::Approx(std::sqrt(fb.lp_scale)).epsilon(1e-12));
  CHECK(fb.phi_hat.maxCoeff() == doctest::Approx(fb.phi_hat(0, 0)));
}

TEST_CASE("default bank at J=6 stays within the frame budget") {
  const FilterBank fb = small_bank();
  CHECK(fb.frame_constant <= 0.25);
  CHECK(fb.frame_constant >= 0.0);
  CHECK(measure_frame_constant(fb) ==
        doctest::Approx(fb.frame_constant).epsilon(1e-12));
}

TEST_CASE("degenerate L=2 J=2 bank warns but builds") {
  MorletParams p;
  p.J = 2;
  p.L = 2;
  const FilterBank fb = build_morlet_bank(p);  // warning on stderr, no throw
  CHECK(fb.frame_constant < 1.0);
  CHECK(fb.frame_constant > 0.25);
}

TEST_CASE("rotating the bank index equals rotating the analytic filter") {
  const FilterBank fb = small_bank(5, 8);
  const MorletParams& p = fb.params;
  const int n = fb.n();
  const double step = pi / p.L;
  for (const int j : {0, 2}) {
    for (const int l : {0, 3}) {
      // Evaluate the analytic formula at frequencies rotated by -pi/L and
      // compare with the next orientation index.
      double worst = 0.0, scale = 0.0;
      for (int ky = 0; ky < n; ++ky) {
        for (int kx = 0; kx < n; ++kx) {
          const double wx = 2.0 * pi * signed_freq(kx, n) / n;
          const double wy = 2.0 * pi * signed_freq(ky, n) / n;
          const double c = std::cos(-step), s = std::sin(-step);
          const double rx = c * wx - s * wy;
          const double ry = s * wx + c * wy;
          const double rotated = analytic_psi_hat(p, j, p.theta(l), rx, ry);
          const double next =
              analytic_psi_hat(p, j, p.theta(l + 1), wx, wy);
          worst = std::max(worst, std::abs(rotated - next));
          scale = std::max(scale, std::abs(next));
        }
      }
      CHECK(worst / scale < 1e-3);
    }
  }
}

TEST_CASE("stored filters match the analytic evaluation") {
  const FilterBank fb = small_bank(5, 8);
  const int n = fb.n();
  const double s = std::sqrt(fb.lp_scale);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int trial = 0; trial < 50; ++trial) {
    const int kx = pick(rng), ky = pick(rng);
    const int j = trial % fb.params.J, l = trial % fb.params.L;
    const double wx = 2.0 * pi * signed_freq(kx, n) / n;
    const double wy = 2.0 * pi * signed_freq(ky, n) / n;
    const double expected =
        s * analytic_psi_hat(fb.params, j, fb.params.theta(l), wx, wy);
    CHECK(fb.psi_hat[j][l](ky, kx) ==
          doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("frame bounds hold on random smooth densities") {
  const FilterBank fb = small_bank();
  const int n = fb.n();
  Fft2d fft(n);
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const RealGrid rho = random_smooth_density(n, rng);
    const ComplexGrid rho_hat = fft.forward(rho);
    const double total = rho.square().sum();

    double energy = 0.0;  // ||rho * phi||^2 + (pi/L) sum ||rho * psi||^2
    {
      ComplexGrid prod = rho_hat * fb.phi_hat.cast<std::complex<double>>();
      energy += fft.inverse(prod).abs2().sum();
    }
    for (const auto& row : fb.psi_hat)
      for (const auto& f : row) {
        ComplexGrid prod = rho_hat * f.cast<std::complex<double>>();
        energy += (pi / fb.params.L) * fft.inverse(prod).abs2().sum();
      }
    CHECK(energy <= (1.0 + 1e-9) * total);
    CHECK(energy >= (1.0 - fb.frame_constant) * total);
  }
}

TEST_CASE("wavelet modulus is invariant under a half-turn of orientation") {
  const FilterBank fb = small_bank(5, 8);
  const int n = fb.n();
  Fft2d fft(n);
  std::mt19937_64 rng(11);
  const RealGrid rho = random_smooth_density(n, rng);
  const ComplexGrid rho_hat = fft.forward(rho);

  const int j = 1, l = 2;
  ComplexGrid prod = rho_hat * fb.psi_hat[j][l].cast<std::complex<double>>();
  const RealGrid mod = fft.inverse(prod).abs();

  // Filter rotated by pi, built from the analytic formula.
  RealGrid opposite(n, n);
  const double s = std::sqrt(fb.lp_scale);
  for (int ky = 0; ky < n; ++ky)
    for (int kx = 0; kx < n; ++kx) {
      const double wx = 2.0 * pi * signed_freq(kx, n) / n;
      const double wy = 2.0 * pi * signed_freq(ky, n) / n;
      opposite(ky, kx) =
          s * analytic_psi_hat(fb.params, j, fb.params.theta(l) + pi, wx, wy);
    }
  prod = rho_hat * opposite.cast<std::complex<double>>();
  const RealGrid mod_pi = fft.inverse(prod).abs();
  CHECK(((mod - mod_pi).abs().maxCoeff()) < 1e-12 * mod.maxCoeff());
}

TEST_CASE("filter cache round-trips bit-exactly") {
  const FilterBank fb = small_bank(4, 4);
  const auto dir = std::filesystem::temp_directory_path() / "qmscat_fb_tests";
  std::filesystem::create_directories(dir);
  save_bank(fb, dir / "bank");
  const FilterBank loaded = load_bank(dir / "bank");
  CHECK(loaded.frame_constant == fb.frame_constant);
  CHECK(loaded.lp_scale == fb.lp_scale);
  CHECK((loaded.phi_hat == fb.phi_hat).all());
  for (int j = 0; j < fb.params.J; ++j)
    for (int l = 0; l < fb.params.L; ++l)
      CHECK((loaded.psi_hat[j][l] == fb.psi_hat[j][l]).all());
}

TEST_CASE("theory wavelet satisfies the exact dyadic identity") {
  const TheoryWavelet h = build_theory_wavelet(10, 128);

  // chi partitions unity at dyadic points.
  CHECK(h.window(1.0) + h.window(2.0) + h.window(0.5) ==
        doctest::Approx(1.0).epsilon(1e-15));
  // support of h is [1/2, 2]
  CHECK(h(0.49) == 0.0);
  CHECK(h(2.01) == 0.0);
  CHECK(h(1.0) > 0.0);

  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> expo(-10.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = std::exp2(expo(rng));
    double sum = 0.0;
    for (int j = -20; j <= 20; ++j)
      sum += std::exp2(2.0 * j) * h(std::exp2(j) * a);
    CHECK(sum == doctest::Approx(1.0 / (a * a)).epsilon(1e-10));
  }
}

TEST_CASE("theory wavelet rejects too-short tables") {
  CHECK_THROWS(build_theory_wavelet(10, 32));
}
