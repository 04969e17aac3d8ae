#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "qmscat/density.hpp"
#include "qmscat/io.hpp"

using namespace qmscat;
using namespace qmscat::density;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const auto dir = fs::temp_directory_path() / "qmscat_density_tests";
  fs::create_directories(dir);
  return dir;
}

ProfileTable analytic_table(std::initializer_list<int> elements) {
  ProfileTable t;
  for (const int z : elements) t.by_z[z] = analytic_profile(z);
  return t;
}

Molecule ch4_like() {
  // Planar CH4-like fragment: one carbon with four hydrogens around it.
  Molecule m;
  m.id = "ch4ish";
  m.atoms = {{6, {0.0, 0.0}},
             {1, {2.0, 0.0}},
             {1, {-2.0, 0.0}},
             {1, {0.0, 2.0}},
             {1, {0.0, -2.0}}};
  return m;
}

}  // namespace

TEST_CASE("planar restriction multiplies by 2 alpha") {
  RadialProfile p = analytic_profile(1);
  const RadialProfile2D q = restrict_to_2d(p);
  // find a sample near alpha = 2 and check the factor directly
  for (std::size_t i = 0; i < p.radius.size(); ++i) {
    CHECK(q.rho_total[i] == doctest::Approx(2.0 * p.radius[i] * p.rho_total[i])
                                .epsilon(1e-15));
  }
  CHECK(q.rho_total.front() == 0.0);  // 2 alpha vanishes at the origin
}

TEST_CASE("hydrogen-like exponential profile keeps unit mass in 2d") {
  // rho_3d(a) = exp(-2a)/pi integrates to 1 over R^3.
  RadialProfile p;
  p.z = 1;
  const int n = 800;
  for (int i = 0; i < n; ++i) {
    const double a = 12.0 * i / (n - 1);
    p.radius.push_back(a);
    const double v = std::exp(-2.0 * a) / std::numbers::pi;
    p.rho_total.push_back(v);
    p.rho_core.push_back(0.0);
    p.rho_val.push_back(v);
  }
  const RadialProfile2D q = restrict_to_2d(p);
  CHECK(q.mass_2d(q.rho_total) == doctest::Approx(1.0).epsilon(1e-3));

  // Independent 512-point trapezoid oracle of int 2 pi a rho_2d da.
  const int m = 512;
  double oracle = 0.0;
  double prev = 0.0;
  for (int i = 1; i < m; ++i) {
    const double a = 12.0 * i / (m - 1);
    const double prev_a = 12.0 * (i - 1) / (m - 1);
    const double f = 2.0 * std::numbers::pi * a * 2.0 * a *
                     std::exp(-2.0 * a) / std::numbers::pi;
    oracle += 0.5 * (a - prev_a) * (f + prev);
    prev = f;
  }
  CHECK(oracle == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("analytic profiles follow the shell occupancy table") {
  const RadialProfile h = analytic_profile(1);
  CHECK(h.mass_3d(h.rho_core) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(h.mass_3d(h.rho_val) == doctest::Approx(1.0).epsilon(1e-3));

  const RadialProfile c = analytic_profile(6);
  CHECK(c.mass_3d(c.rho_core) == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(c.mass_3d(c.rho_val) == doctest::Approx(4.0).epsilon(1e-3));

  // Noble-gas core counts for the elements this artifact covers.
  CHECK(core_electron_count(1) == 0);
  CHECK(core_electron_count(6) == 2);
  CHECK(core_electron_count(7) == 2);
  CHECK(core_electron_count(8) == 2);
  CHECK(core_electron_count(16) == 10);
  CHECK(core_electron_count(17) == 10);
}

TEST_CASE("profile CSV loads one profile per element") {
  const auto path = temp_dir() / "profiles.csv";
  std::string text = "z,radius,rho_total,rho_core,rho_val\n";
  for (const int z : {1, 6, 7, 8, 16, 17}) {
    const RadialProfile p = analytic_profile(z);
    for (std::size_t i = 0; i < p.radius.size(); ++i) {
      text += std::to_string(z) + "," + std::to_string(p.radius[i]) + "," +
              std::to_string(p.rho_total[i]) + "," +
              std::to_string(p.rho_core[i]) + "," +
              std::to_string(p.rho_val[i]) + "\n";
    }
  }
  io::write_text(path, text);
  const ProfileTable table = load_profiles(path);
  CHECK(table.by_z.size() == 6);
  for (const int z : {1, 6, 7, 8, 16, 17}) CHECK(table.has(z));
}

TEST_CASE("non-monotone radii are rejected") {
  const auto path = temp_dir() / "bad_profile.csv";
  io::write_text(path,
                 "z,radius,rho_total,rho_core,rho_val\n"
                 "1,0.0,0.3,0,0.3\n"
                 "1,0.5,0.2,0,0.2\n"
                 "1,0.4,0.1,0,0.1\n");
  CHECK_THROWS(load_profiles(path));
}

TEST_CASE("dirac channel splats one hydrogen onto 4 cells with unit mass") {
  Molecule m;
  m.id = "h";
  m.atoms = {{1, {0.35, -0.2}}};
  ProfileTable empty;
  RasterParams params{.J = 5, .h = 0.25};
  const DensityGrid g =
      rasterize(m, ChannelSpec::parse("dirac"), empty, params);
  int nonzero = 0;
  for (int y = 0; y < g.n(); ++y)
    for (int x = 0; x < g.n(); ++x)
      if (g.values[0](y, x) != 0.0) ++nonzero;
  CHECK(nonzero == 4);
  CHECK(g.mass(0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("rasterize is bit-identical under atom permutations") {
  auto table = analytic_table({1, 6});
  Molecule m = ch4_like();
  RasterParams params{.J = 6, .h = 0.55};
  const auto spec = ChannelSpec::parse("dirac,atomic,core,valence");
  const DensityGrid base = rasterize(m, spec, table, params);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(m.atoms.begin(), m.atoms.end(), rng);
    const DensityGrid g = rasterize(m, spec, table, params);
    for (std::size_t c = 0; c < g.values.size(); ++c)
      CHECK((g.values[c] == base.values[c]).all());
  }
}

TEST_CASE("channel masses match the expected electron counts") {
  auto table = analytic_table({1, 6});
  const Molecule m = ch4_like();
  RasterParams params{.J = 7, .h = 0.28};
  const auto spec = ChannelSpec::parse("dirac,atomic,core,valence");
  const DensityGrid g = rasterize(m, spec, table, params);
  CHECK(g.mass(0) == doctest::Approx(10.0).epsilon(1e-12));  // dirac exact
  CHECK(g.mass(1) == doctest::Approx(10.0).epsilon(1e-3));   // atomic
  CHECK(g.mass(2) == doctest::Approx(2.0).epsilon(1e-3));    // core
  CHECK(g.mass(3) == doctest::Approx(8.0).epsilon(1e-3));    // valence
}

TEST_CASE("integer-cell translation cyclically shifts the raster") {
  auto table = analytic_table({1, 6});
  Molecule m = ch4_like();
  const double h = 0.5;
  RasterParams params{.J = 6, .h = h};
  // Fix the origin so the translation is visible as a shift.
  params.origin_override = Eigen::Vector2d(-16.0, -16.0);
  const auto spec = ChannelSpec::parse("dirac,atomic");
  const DensityGrid base = rasterize(m, spec, table, params);

  const int p = 3, q = -2;
  for (auto& a : m.atoms) a.position += Eigen::Vector2d(p * h, q * h);
  const DensityGrid moved = rasterize(m, spec, table, params);

  const int n = base.n();
  double max_diff = 0.0;
  for (std::size_t c = 0; c < base.values.size(); ++c)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const double expected = base.values[c](y, x);
        const double got =
            moved.values[c](((y + q) % n + n) % n, ((x + p) % n + n) % n);
        max_diff = std::max(max_diff, std::abs(expected - got));
      }
  CHECK(max_diff < 1e-12);
}

TEST_CASE("reflection about the box horizontal axis reverses rows") {
  auto table = analytic_table({1, 6});
  Molecule m;
  m.id = "asym";
  // Dyadic coordinates keep the reflection arithmetic exact.
  m.atoms = {{6, {0.0, 0.25}}, {1, {1.5, 1.25}}, {1, {-2.25, -0.75}}};
  RasterParams params{.J = 6, .h = 0.5};
  const auto spec = ChannelSpec::parse("dirac,atomic");
  const DensityGrid base = rasterize(m, spec, table, params);

  const double yc = m.centroid().y();
  Molecule r = m;
  for (auto& a : r.atoms) a.position.y() = 2.0 * yc - a.position.y();
  const DensityGrid refl = rasterize(r, spec, table, params);

  const int n = base.n();
  for (std::size_t c = 0; c < base.values.size(); ++c)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        CHECK(refl.values[c](y, x) == base.values[c](n - 1 - y, x));
}

TEST_CASE("margin violation and missing profiles raise errors") {
  auto table = analytic_table({1});
  Molecule wide;
  wide.id = "wide";
  wide.atoms = {{1, {-12.0, 0.0}}, {1, {12.0, 0.0}}};
  RasterParams tight{.J = 5, .h = 0.5};  // box 16 Bohr, content much wider
  CHECK_THROWS(rasterize(wide, ChannelSpec::parse("atomic"), table, tight));

  Molecule carbon;
  carbon.id = "c";
  carbon.atoms = {{6, {0.0, 0.0}}, {1, {1.0, 1.0}}};
  RasterParams params{.J = 6, .h = 0.6};
  CHECK_THROWS(rasterize(carbon, ChannelSpec::parse("atomic"), table, params));
  table.allow_analytic = true;
  CHECK_NOTHROW(rasterize(carbon, ChannelSpec::parse("atomic"), table, params));
}

TEST_CASE("grid cache round-trips bit-exactly") {
  auto table = analytic_table({1, 6});
  const Molecule m = ch4_like();
  RasterParams params{.J = 6, .h = 0.55};
  const auto spec = ChannelSpec::parse("core,valence");
  const DensityGrid g = rasterize(m, spec, table, params);
  const auto base = temp_dir() / "grid_cache";
  save_grid(g, base);
  const DensityGrid loaded = load_grid(base);
  CHECK(loaded.J == g.J);
  CHECK(loaded.h == g.h);
  CHECK(loaded.origin == g.origin);
  REQUIRE(loaded.channels == g.channels);
  for (std::size_t c = 0; c < g.values.size(); ++c)
    CHECK((loaded.values[c] == g.values[c]).all());
}

TEST_CASE("default spacing leaves the quarter-box margin") {
  auto table = analytic_table({1, 6});
  const Molecule m = ch4_like();
  double support = 0.0;
  for (const auto& a : m.atoms)
    support = std::max(support, table.get(a.charge).radius.back());
  const double h = default_spacing(m.diameter(), support, 7);
  RasterParams params{.J = 7, .h = h};
  CHECK_NOTHROW(rasterize(m, ChannelSpec::parse("atomic"), table, params));
}
