#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qmscat/molecule.hpp"

namespace qmscat::density {

using Grid = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic,
                          Eigen::RowMajor>;

enum class Channel { dirac, atomic, core, valence };

std::string channel_name(Channel c);
Channel channel_from_name(const std::string& name);

/// Ordered, duplicate-free subset of density channels.
struct ChannelSpec {
  std::vector<Channel> channels;

  static ChannelSpec parse(const std::string& comma_separated);
  std::string to_string() const;
};

/// Radial electronic density of one isolated atom, 3D (per Bohr^3).
/// rho_core + rho_val = rho_total pointwise; int 4 pi a^2 rho_total da = z.
struct RadialProfile {
  int z = 0;
  std::vector<double> radius;     // strictly increasing from 0, Bohr
  std::vector<double> rho_total;
  std::vector<double> rho_core;
  std::vector<double> rho_val;

  double mass_3d(const std::vector<double>& rho) const;  // trapezoid
  void validate() const;
};

/// Planar restriction of a RadialProfile (per Bohr^2),
/// rho_2d(a) = 2 a rho_3d(a).
struct RadialProfile2D {
  int z = 0;
  std::vector<double> radius;
  std::vector<double> rho_total;
  std::vector<double> rho_core;
  std::vector<double> rho_val;

  double mass_2d(const std::vector<double>& rho) const;  // trapezoid
  double support() const { return radius.empty() ? 0.0 : radius.back(); }
  /// Linear interpolation, zero beyond the last sample.
  double eval(const std::vector<double>& rho, double r) const;
};

RadialProfile2D restrict_to_2d(const RadialProfile& p);

struct ProfileTable {
  std::map<int, RadialProfile> by_z;
  /// Build synthetic per-shell Gaussian profiles for elements missing
  /// from the table. Off unless requested on the command line.
  bool allow_analytic = false;

  const RadialProfile& get(int z) const;
  bool has(int z) const;
  /// Largest 2D support over the elements of the molecule; dirac-only
  /// channel specs report 0.
  double max_support(const std::vector<int>& elements) const;
};

/// Parses a profile CSV with header z,radius,rho_total,rho_core,rho_val.
ProfileTable load_profiles(const std::filesystem::path& path);

/// Per-shell normalized Gaussian profile with a noble-gas core/valence
/// split. Shell к has occupancy from the 2/8/8 filling and width
/// n^2 / max(z - inner electrons, 1) Bohr.
RadialProfile analytic_profile(int z);

/// Noble-gas core electron count for element z.
int core_electron_count(int z);

struct RasterParams {
  int J = 9;        // grid is 2^J x 2^J
  double h = 0.0;   // cell size, Bohr (0 = caller resolves via default_spacing)
  /// Fixed grid origin; by default the origin is chosen per molecule so
  /// that the centroid sits at the box center.
  std::optional<Eigen::Vector2d> origin_override;
};

/// Default global spacing for a dataset: the raster content (molecule
/// diameter plus profile support on both sides) fills half the box, which
/// leaves the quarter-box periodic margin on each side.
double default_spacing(double max_diameter, double max_support, int J);

/// Multi-channel raster of the non-interacting density.
struct DensityGrid {
  int J = 0;
  double h = 0.0;
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();  // position of cell (0,0) corner
  std::vector<Channel> channels;
  std::vector<Grid> values;  // one 2^J x 2^J array per channel, >= 0

  int n() const { return 1 << J; }
  const Grid& channel(Channel c) const;
  /// h^2 * sum over cells.
  double mass(std::size_t channel_index) const;
};

/// Samples each channel at cell centers; atoms accumulate in canonical
/// order so permuted atom lists give bit-identical grids. The dirac
/// channel splats each charge bilinearly over the 4 nearest cells.
/// Throws if the content does not fit the quarter-box margin or a
/// profile is missing.
DensityGrid rasterize(const Molecule& m, const ChannelSpec& spec,
                      const ProfileTable& profiles, const RasterParams& params);

/// float64 blob + JSON sidecar; bit-exact round-trip.
void save_grid(const DensityGrid& g, const std::filesystem::path& base_path);
DensityGrid load_grid(const std::filesystem::path& base_path);

}  // namespace qmscat::density
