#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "qmscat/io.hpp"
#include "qmscat/molecule.hpp"
#include "qmscat/numeric.hpp"

using namespace qmscat;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const auto dir = fs::temp_directory_path() / "qmscat_mol_tests";
  fs::create_directories(dir);
  return dir;
}

Molecule h2() {
  Molecule m;
  m.id = "h2";
  m.atoms = {{1, {0.0, 0.0}}, {1, {1.4, 0.0}}};
  m.energy = -104.2;
  return m;
}

Molecule random_molecule(std::mt19937_64& rng, int n_atoms) {
  std::uniform_real_distribution<double> pos(-4.0, 4.0);
  std::uniform_int_distribution<int> charge(1, 8);
  Molecule m;
  m.id = "rand";
  for (int k = 0; k < n_atoms; ++k)
    m.atoms.push_back({charge(rng), {pos(rng), pos(rng)}});
  return m;
}

}  // namespace

TEST_CASE("nuclear repulsion on textbook configurations") {
  Molecule two;
  two.id = "two";
  two.atoms = {{1, {0.0, 0.0}}, {1, {1.0, 0.0}}};
  CHECK(nuclear_repulsion(two) == doctest::Approx(1.0).epsilon(1e-14));

  Molecule tri;
  tri.id = "tri";
  const double s = 2.0;
  tri.atoms = {{1, {0.0, 0.0}},
               {1, {s, 0.0}},
               {1, {0.5 * s, 0.5 * s * std::sqrt(3.0)}}};
  CHECK(nuclear_repulsion(tri) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("nuclear repulsion matches the brute-force ordered-pair loop") {
  std::mt19937_64 rng(42);
  const Molecule m = random_molecule(rng, 5);
  double brute = 0.0;
  for (std::size_t k = 0; k < m.atoms.size(); ++k)
    for (std::size_t l = 0; l < m.atoms.size(); ++l)
      if (k != l)
        brute += 0.5 * m.atoms[k].charge * m.atoms[l].charge /
                 (m.atoms[k].position - m.atoms[l].position).norm();
  CHECK(nuclear_repulsion(m) == doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("nuclear repulsion is bit-identical under atom permutations") {
  std::mt19937_64 rng(7);
  Molecule m = random_molecule(rng, 6);
  const double base = nuclear_repulsion(m);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(m.atoms.begin(), m.atoms.end(), rng);
    CHECK(nuclear_repulsion(m) == base);  // exact
  }
}

TEST_CASE("dataset of one molecule gets fold 0") {
  const auto path = temp_dir() / "one.csv";
  Dataset ds;
  ds.molecules = {h2()};
  save_dataset(ds, path, DatasetFormat::csv);
  const Dataset loaded = load_dataset(path, DatasetFormat::csv);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded.fold("h2") == 0);
  CHECK(loaded.molecules[0].energy == doctest::Approx(-104.2));
  CHECK(loaded.molecules[0].atoms[1].position.x() == doctest::Approx(1.4));
}

TEST_CASE("454 molecules split into folds of 91,91,91,91,90") {
  Dataset ds;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 454; ++i) {
    Molecule m = random_molecule(rng, 3);
    m.id = "m" + std::to_string(i);
    m.energy = -100.0 - i;
    ds.molecules.push_back(std::move(m));
  }
  const auto path = temp_dir() / "planar454.csv";
  save_dataset(ds, path, DatasetFormat::csv);

  LoadOptions opts;
  opts.fold_seed = 11;
  const Dataset loaded = load_dataset(path, DatasetFormat::csv, opts);
  const auto sizes = loaded.fold_sizes(5);
  CHECK(sizes == std::vector<int>{91, 91, 91, 91, 90});

  // Deterministic: a second load reproduces the assignment exactly.
  const Dataset again = load_dataset(path, DatasetFormat::csv, opts);
  CHECK(again.fold_of == loaded.fold_of);

  // A different seed moves molecules around.
  LoadOptions other = opts;
  other.fold_seed = 12;
  CHECK(load_dataset(path, DatasetFormat::csv, other).fold_of !=
        loaded.fold_of);
}

TEST_CASE("zero charge is a domain error") {
  const auto path = temp_dir() / "bad.csv";
  io::write_text(path, "bad,2,0,1,0,0,1,0,-1\n");
  CHECK_THROWS_AS(load_dataset(path, DatasetFormat::csv), std::domain_error);
}

TEST_CASE("coincident atoms are a domain error") {
  Molecule m;
  m.id = "dup";
  m.atoms = {{1, {0.5, 0.5}}, {1, {0.5, 0.5}}};
  CHECK_THROWS_AS(validate_molecule(m), std::domain_error);
  CHECK_THROWS_AS(nuclear_repulsion(m), std::domain_error);
}

TEST_CASE("csv and json round-trips preserve geometry") {
  Dataset ds;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 12; ++i) {
    Molecule m = random_molecule(rng, 2 + i % 4);
    m.id = "m" + std::to_string(i);
    if (i % 3 != 0) m.energy = -50.0 * i;
    ds.molecules.push_back(std::move(m));
  }
  LoadOptions opts;
  opts.fold_seed = 5;

  for (const auto format : {DatasetFormat::csv, DatasetFormat::json}) {
    const auto path =
        temp_dir() / (format == DatasetFormat::csv ? "rt.csv" : "rt.json");
    save_dataset(ds, path, format);
    const Dataset loaded = load_dataset(path, format, opts);
    REQUIRE(loaded.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto& a = ds.molecules[i];
      const auto& b = loaded.molecules[i];
      CHECK(a.id == b.id);
      REQUIRE(a.atoms.size() == b.atoms.size());
      for (std::size_t k = 0; k < a.atoms.size(); ++k) {
        CHECK(a.atoms[k].charge == b.atoms[k].charge);
        CHECK(std::abs(a.atoms[k].position.x() - b.atoms[k].position.x()) <=
              1e-12 * std::max(1.0, std::abs(a.atoms[k].position.x())));
        CHECK(std::abs(a.atoms[k].position.y() - b.atoms[k].position.y()) <=
              1e-12 * std::max(1.0, std::abs(a.atoms[k].position.y())));
      }
      CHECK(a.energy.has_value() == b.energy.has_value());
      if (a.energy) CHECK(*a.energy == doctest::Approx(*b.energy));
    }
    // Folds stored in the file win over reassignment.
    const auto path2 = temp_dir() / "rt2.csv";
    save_dataset(loaded, path2, DatasetFormat::csv);
    LoadOptions reseeded;
    reseeded.fold_seed = 999;
    CHECK(load_dataset(path2, DatasetFormat::csv, reseeded).fold_of ==
          loaded.fold_of);
  }
}

TEST_CASE("require_targets flags missing energies") {
  Dataset ds;
  ds.molecules = {h2()};
  ds.molecules[0].energy.reset();
  ds.fold_of["h2"] = 0;
  CHECK_THROWS(require_targets(ds));
  ds.molecules[0].energy = -104.2;
  CHECK_NOTHROW(require_targets(ds));
}

TEST_CASE("stratified fold assignment balances molecule sizes") {
  Dataset ds;
  std::mt19937_64 rng(9);
  for (int i = 0; i < 50; ++i) {
    Molecule m = random_molecule(rng, 2 + (i % 10));
    m.id = "m" + std::to_string(i);
    ds.molecules.push_back(std::move(m));
  }
  const auto path = temp_dir() / "strat.csv";
  save_dataset(ds, path, DatasetFormat::csv);
  LoadOptions opts;
  opts.stratify_by_size = true;
  const Dataset loaded = load_dataset(path, DatasetFormat::csv, opts);
  std::vector<double> mean(5, 0.0);
  std::vector<int> count(5, 0);
  for (const auto& m : loaded.molecules) {
    const int f = loaded.fold(m.id);
    mean[f] += static_cast<double>(m.atoms.size());
    ++count[f];
  }
  for (int f = 0; f < 5; ++f) mean[f] /= count[f];
  const auto [lo, hi] = std::minmax_element(mean.begin(), mean.end());
  CHECK(*hi - *lo < 1.5);
}
