#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qmscat/io.hpp"

namespace qmscat {

/// Full pipeline configuration. File format is TOML (flat sections,
/// string/number/bool/array values) or JSON with the same section layout;
/// command-line flags override file values.
struct RunConfig {
  // [dataset]
  std::string dataset_path;
  std::string dataset_format = "csv";
  std::uint64_t fold_seed = 0;
  bool stratify = false;

  // [density]
  std::string channels = "core,valence";
  std::string profiles_path;
  bool allow_analytic_profiles = false;
  int grid_J = 9;
  double spacing = 0.0;  // Bohr; 0 = derived from the dataset

  // [filterbank]
  int angles_L = 16;
  double xi0 = 0.92 * 3.14159265358979323846;
  double sigma = 0.6;
  double slant = 1.0;

  // [regress]
  std::string dict = "scattering";
  int m_max = 3 * (1 << 9);
  double beta = 0.0;  // 0 = 90 for <= 1000 molecules, else 80
  int bags = 10;
  std::string criterion = "MAE";
  std::uint64_t seed = 0;

  // [krr]
  int krr_replicas = 8;
  double krr_noise = 1.0;
  std::vector<double> krr_sigma_grid;   // empty = defaults 2^4 .. 2^14
  std::vector<double> krr_lambda_grid;  // empty = defaults 1e-8 .. 1e-1

  // [analyze]
  int draws = 100;
  int m_per_draw = 1 << 9;
  double train_fraction = 0.8;
  std::string group_by = "scale_pair";

  // [theory]
  std::vector<double> eps_grid = {0.25, 0.125, 0.0625, 0.03125, 0.015625};
  std::uint64_t theory_seed = 0;

  // [io]
  std::string cache_dir = ".qmscat-cache";
  std::string out_dir = "out";

  static RunConfig load(const std::filesystem::path& path);
  static RunConfig from_json(const io::json& j);
  io::json to_json() const;

  /// Canonical serialization; identical configs hash identically.
  std::string canonical_string() const;
  std::uint64_t config_hash() const;
  /// Hash over the keys that determine feature values (dataset, channels,
  /// profiles, grid, filter params, dictionary); keys outside this set do
  /// not invalidate the feature cache.
  std::uint64_t feature_cache_hash() const;
};

/// Parses the supported TOML subset into a JSON object of sections.
io::json parse_toml_subset(const std::string& text);

}  // namespace qmscat
