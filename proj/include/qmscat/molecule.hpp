#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace qmscat {

/// One nucleus: proton count and planar position in Bohr.
struct Atom {
  int charge = 0;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
};

struct Molecule {
  std::string id;
  std::vector<Atom> atoms;
  std::optional<double> energy;  // atomization energy, kcal/mol

  int total_charge() const;
  /// Largest pairwise distance between atoms, Bohr.
  double diameter() const;
  Eigen::Vector2d centroid() const;
};

void validate_molecule(const Molecule& m);

/// Index permutation sorting atoms by (charge, x, y). Used wherever a
/// result must be bit-identical under relabeling of the atom list.
std::vector<int> canonical_atom_order(const Molecule& m);

/// 0.5 * sum_{k != l} z_k z_l / |r_k - r_l|, in Hartree (positions Bohr).
/// Accumulation follows the canonical atom order, so the value is
/// bit-identical under permutations of the atom list.
double nuclear_repulsion(const Molecule& m);

struct Dataset {
  std::vector<Molecule> molecules;
  std::map<std::string, int> fold_of;  // id -> fold in {0..n_folds-1}

  std::size_t size() const { return molecules.size(); }
  int fold(const std::string& id) const;
  std::vector<int> fold_sizes(int n_folds) const;
};

enum class DatasetFormat { csv, json };

struct LoadOptions {
  std::uint64_t fold_seed = 0;
  int n_folds = 5;
  /// Assign folds grouping molecules of similar atom count together
  /// before the seeded shuffle within groups. Off by default.
  bool stratify_by_size = false;
};

/// Reads a dataset file. CSV rows are
///   id,n_atoms,z_1..z_n,x_1,y_1,..,x_n,y_n[,energy[,fold]]
/// (energy may be blank; '#' lines are comments). The JSON schema is the
/// object written by save_dataset. Molecules without a fold in the file
/// get one from a seeded shuffle into n_folds folds.
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     const LoadOptions& opts = {});

void save_dataset(const Dataset& ds, const std::filesystem::path& path,
                  DatasetFormat format);

/// Throws unless every molecule carries a target energy.
void require_targets(const Dataset& ds);

}  // namespace qmscat
