#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "qmscat/invariants.hpp"

using namespace qmscat;
using namespace qmscat::invariants;

namespace {

constexpr double pi = std::numbers::pi;

const wavelets::FilterBank& bank6() {
  static wavelets::FilterBank fb = [] {
    wavelets::MorletParams p;
    p.J = 6;
    return wavelets::build_morlet_bank(p);
  }();
  return fb;
}

density::ProfileTable& table16() {
  static density::ProfileTable t = [] {
    density::ProfileTable t;
    for (const int z : {1, 6, 7, 8}) t.by_z[z] = density::analytic_profile(z);
    return t;
  }();
  return t;
}

Molecule test_molecule(std::uint64_t seed, int n_atoms = 5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(-3.0, 3.0);
  const int charges[4] = {1, 6, 7, 8};
  Molecule m;
  m.id = "mol" + std::to_string(seed);
  while (static_cast<int>(m.atoms.size()) < n_atoms) {
    Atom a{charges[rng() % 4], {pos(rng), pos(rng)}};
    bool clash = false;
    for (const auto& b : m.atoms)
      if ((a.position - b.position).norm() < 1.2) clash = true;
    if (!clash) m.atoms.push_back(a);
  }
  return m;
}

FeaturizeContext context(DictKind kind, const std::string& channels,
                         int J = 6) {
  FeaturizeContext ctx;
  ctx.kind = kind;
  ctx.spec = density::ChannelSpec::parse(channels);
  ctx.raster.J = J;
  ctx.raster.h = 28.0 / (1 << J);
  ctx.profiles = &table16();
  ctx.bank = &bank6();
  return ctx;
}

RealGrid centered_gaussian(int n, double sigma_px) {
  RealGrid rho(n, n);
  const double c = 0.5 * n - 0.5;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      rho(y, x) = std::exp(-((x - c) * (x - c) + (y - c) * (y - c)) /
                           (2.0 * sigma_px * sigma_px));
  return rho;
}

double rel_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += a[i] * a[i];
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("wavelet modulus of zero is zero, isotropic input is angle-flat") {
  const auto& fb = bank6();
  const int n = fb.n();
  const RealGrid zero = RealGrid::Zero(n, n);
  auto u = wavelet_modulus(zero, fb);
  double worst = 0.0;
  for (const auto& row : u)
    for (const auto& g : row) worst = std::max(worst, g.maxCoeff());
  CHECK(worst == 0.0);

  const RealGrid bump = centered_gaussian(n, 3.0);
  u = wavelet_modulus(bump, fb);
  for (int j = 0; j < fb.params.J; ++j) {
    const double ref = u[j][0].abs().sum();
    for (int l = 1; l < fb.params.L; ++l) {
      const double cur = u[j][l].abs().sum();
      if (ref > 1e-9)
        CHECK(std::abs(cur - ref) / ref < 1e-6);
    }
  }
}

TEST_CASE("wavelet modulus commutes with cyclic shifts") {
  const auto& fb = bank6();
  const int n = fb.n();
  RealGrid rho = centered_gaussian(n, 2.5);
  auto u = wavelet_modulus(rho, fb);

  RealGrid shifted(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) shifted((y + 1) % n, x) = rho(y, x);
  auto us = wavelet_modulus(shifted, fb);

  double worst = 0.0;
  for (int j = 0; j < fb.params.J; ++j)
    for (int l = 0; l < fb.params.L; ++l)
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
          worst = std::max(worst,
                           std::abs(us[j][l]((y + 1) % n, x) - u[j][l](y, x)));
  CHECK(worst < 1e-10);
}

TEST_CASE("size mismatch is rejected") {
  const auto& fb = bank6();
  const RealGrid wrong = RealGrid::Zero(16, 16);
  CHECK_THROWS(wavelet_modulus(wrong, fb));
  CHECK_THROWS(wavelet_dictionary(wrong, fb, 1.0));
  CHECK_THROWS(scattering_dictionary(wrong, fb, 1.0));
  CHECK_THROWS(fourier_dictionary(wrong, 6, 1.0));
}

TEST_CASE("dictionary cardinalities follow the closed-form counts") {
  // (2J+1) wavelet values; (L/2+1) J (J-1) second-order values;
  // 2 * 2^{J-1} Fourier values; all per channel.
  const auto& fb = bank6();
  const int n = fb.n();
  const RealGrid rho = centered_gaussian(n, 2.0);
  CHECK(wavelet_dictionary(rho, fb, 0.4).size() == 13);       // J=6
  CHECK(scattering_dictionary(rho, fb, 0.4).size() == 270);   // 9*30
  CHECK(fourier_dictionary(rho, 6, 0.4).size() == 64);        // 2*32

  const auto table =
      descriptor_table(DictKind::scattering,
                       density::ChannelSpec::parse("core,valence"), 6, 16);
  CHECK(table.size() == 2 * (1 + 12 + 270));
  const auto table9 =
      descriptor_table(DictKind::scattering,
                       density::ChannelSpec::parse("valence"), 9, 16);
  CHECK(table9.size() == 667);
}

TEST_CASE("mass feature equals total channel charge") {
  auto ctx = context(DictKind::wavelet, "atomic");
  const Molecule m = test_molecule(1);
  const auto fv = featurize(m, ctx);
  double charge = 0.0;
  for (const auto& a : m.atoms) charge += a.charge;
  CHECK(fv.values[0] == doctest::Approx(charge).epsilon(1e-3));
}

TEST_CASE("featurize is deterministic and permutation invariant, bit for bit") {
  auto ctx = context(DictKind::scattering, "core,valence");
  Molecule m = test_molecule(2);
  const auto base = featurize(m, ctx);
  CHECK(featurize(m, ctx).values == base.values);

  std::mt19937_64 rng(3);
  std::shuffle(m.atoms.begin(), m.atoms.end(), rng);
  CHECK(featurize(m, ctx).values == base.values);
}

TEST_CASE("integer-cell translation changes features below 1e-9") {
  auto ctx = context(DictKind::scattering, "atomic");
  Molecule m = test_molecule(4);
  const auto base = featurize(m, ctx);
  Molecule moved = m;
  for (auto& a : moved.atoms)
    a.position += Eigen::Vector2d(2 * ctx.raster.h, -3 * ctx.raster.h);
  const auto shifted = featurize(moved, ctx);
  CHECK(rel_l2(base.values, shifted.values) < 1e-9);
}

TEST_CASE("reflection invariance is exact to 1e-10") {
  for (const auto kind : {DictKind::wavelet, DictKind::scattering}) {
    auto ctx = context(kind, "atomic");
    Molecule m = test_molecule(5);
    const auto base = featurize(m, ctx);
    Molecule refl = m;
    const double yc = m.centroid().y();
    for (auto& a : refl.atoms) a.position.y() = 2.0 * yc - a.position.y();
    const auto mirrored = featurize(refl, ctx);
    CHECK(rel_l2(base.values, mirrored.values) < 1e-10);
  }
}

TEST_CASE("fourier dictionary: constant density has no annulus energy") {
  const int J = 6, n = 1 << J;
  const RealGrid rho = RealGrid::Constant(n, n, 0.7);
  const auto values = fourier_dictionary(rho, J, 0.4);
  for (const double v : values) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("fourier dictionary is translation invariant") {
  const int J = 6, n = 1 << J;
  const RealGrid rho = centered_gaussian(n, 2.5);
  RealGrid shifted(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) shifted(y, (x + 5) % n) = rho(y, x);
  const auto a = fourier_dictionary(rho, J, 0.4);
  const auto b = fourier_dictionary(shifted, J, 0.4);
  CHECK(rel_l2(a, b) < 1e-10);
}

TEST_CASE("rotation by 30 degrees moves atomic fourier features below 2%") {
  auto ctx = context(DictKind::fourier, "atomic", 7);
  ctx.bank = nullptr;
  Molecule m = test_molecule(6);
  const auto base = featurize(m, ctx);
  Molecule rot = m;
  const double th = pi / 6.0;
  const Eigen::Vector2d c = m.centroid();
  for (auto& a : rot.atoms) {
    const Eigen::Vector2d d = a.position - c;
    a.position = c + Eigen::Vector2d(std::cos(th) * d.x() - std::sin(th) * d.y(),
                                     std::sin(th) * d.x() + std::cos(th) * d.y());
  }
  const auto rotated = featurize(rot, ctx);
  CHECK(rel_l2(base.values, rotated.values) < 0.02);
}

TEST_CASE("second-order energy concentrates above the first scale") {
  // || |rho*psi_j| * psi_j' ||_2^2 for j' <= j should be well below the
  // j' = j+1 value; informational, logged not asserted.
  const auto& fb = bank6();
  auto ctx = context(DictKind::scattering, "atomic");
  const Molecule m = test_molecule(7);
  const auto grid = density::rasterize(m, ctx.spec, *ctx.profiles, ctx.raster);
  auto u = wavelet_modulus(grid.values[0], fb);

  Fft2d fft(fb.n());
  const int j = 2;
  const auto second_energy = [&](int jp) {
    double acc = 0.0;
    for (int l = 0; l < fb.params.L; ++l) {
      const ComplexGrid uhat = fft.forward(u[j][l]);
      ComplexGrid prod =
          uhat * fb.psi_hat[jp][l].cast<std::complex<double>>();
      acc += fft.inverse(prod).abs2().sum();
    }
    return acc;
  };
  const double same = second_energy(j);
  const double below = second_energy(j - 1);
  const double above = second_energy(j + 1);
  MESSAGE("second-order energies: j'=j-1 ", below, ", j'=j ", same,
          ", j'=j+1 ", above);
  CHECK(above > same);
}

TEST_CASE("feature matrix save/load round-trips bit-exactly") {
  auto ctx = context(DictKind::wavelet, "core,valence");
  Dataset ds;
  for (int i = 0; i < 3; ++i) {
    Molecule m = test_molecule(10 + i, 4);
    m.id = "m" + std::to_string(i);
    m.energy = -10.0 * i;
    ds.molecules.push_back(std::move(m));
    ds.fold_of["m" + std::to_string(i)] = i % 5;
  }
  const FeatureMatrix fm = featurize_dataset(ds, ctx);
  CHECK(fm.rows() == 3);
  CHECK(fm.cols() == 2 * 13);

  const auto dir =
      std::filesystem::temp_directory_path() / "qmscat_feature_tests";
  std::filesystem::create_directories(dir);
  io::json meta;
  meta["note"] = "test";
  save_features(fm, meta, dir / "features");
  io::json meta2;
  const FeatureMatrix loaded = load_features(dir / "features", &meta2);
  CHECK(meta2 == meta);
  CHECK(loaded.ids == fm.ids);
  CHECK(loaded.table.items == fm.table.items);
  CHECK((loaded.values.array() == fm.values.array()).all());
}

TEST_CASE("descriptor labels carry the provenance") {
  FeatureDescriptor d;
  d.order = 2;
  d.channel = density::Channel::valence;
  d.norm_p = 2;
  d.j = 1;
  d.jp = 4;
  d.t = 3;
  CHECK(d.label() == "valence|o2|j1|j'4|t3|L2");
  FeatureDescriptor f;
  f.channel = density::Channel::core;
  f.norm_p = 1;
  f.k = 17;
  CHECK(f.label() == "core|F|k17|L1");
}
