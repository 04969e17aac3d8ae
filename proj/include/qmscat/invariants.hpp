#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qmscat/density.hpp"
#include "qmscat/filterbank.hpp"
#include "qmscat/io.hpp"
#include "qmscat/molecule.hpp"

namespace qmscat::invariants {

enum class DictKind { fourier, wavelet, scattering };

std::string dict_name(DictKind k);
DictKind dict_from_name(const std::string& name);

/// Provenance of one invariant coefficient.
struct FeatureDescriptor {
  int order = 0;  // 0: total mass, 1: wavelet, 2: scattering; Fourier uses k
  density::Channel channel = density::Channel::atomic;
  int norm_p = 1;  // 1 or 2
  int j = -1;      // first scale (order >= 1)
  int jp = -1;     // second scale (order 2), j < jp
  int t = -1;      // angle index, theta' = t pi / L, t in 0..L/2 (order 2)
  int k = -1;      // radial frequency bin (Fourier dictionary)

  std::string label() const;
  bool operator==(const FeatureDescriptor&) const = default;
};

struct DescriptorTable {
  std::vector<FeatureDescriptor> items;

  std::size_t size() const { return items.size(); }
  io::json to_json() const;
  static DescriptorTable from_json(const io::json& j);
};

struct FeatureVector {
  std::string molecule_id;
  std::vector<double> values;
};

/// Wavelet modulus U[j][l](u) = |(rho * psi_{j,l})(u)| for every scale and
/// orientation. Heavy at J=9 (stores J*L grids); the dictionary routines
/// below stream instead.
std::vector<std::vector<RealGrid>> wavelet_modulus(
    const RealGrid& rho, const wavelets::FilterBank& fb);

/// {||rho||_1, ||rho*psi_j||_1, ||rho*psi_j||_2^2}_{j<J}: 2J+1 values.
/// Norms carry the angular weight pi/L and the cell area h^2.
std::vector<double> wavelet_dictionary(const RealGrid& rho,
                                       const wavelets::FilterBank& fb,
                                       double h);

/// Second-order scattering values for all (j < j', t, p), reflection
/// symmetrized over +-theta'. (L/2+1) J (J-1) values, ordered by
/// (j, j', t, p).
std::vector<double> scattering_dictionary(const RealGrid& rho,
                                          const wavelets::FilterBank& fb,
                                          double h);

/// Radial Fourier modulus dictionary: annulus averages of h^2 |rho_hat|
/// and its square, bins k = 1 .. 2^{J-1}, ordered by (k, p).
std::vector<double> fourier_dictionary(const RealGrid& rho, int J, double h);

/// Descriptor list matching the value layout produced by featurize.
DescriptorTable descriptor_table(DictKind kind,
                                 const density::ChannelSpec& spec, int J,
                                 int L);

struct FeaturizeContext {
  DictKind kind = DictKind::scattering;
  density::ChannelSpec spec;
  density::RasterParams raster;
  const density::ProfileTable* profiles = nullptr;
  const wavelets::FilterBank* bank = nullptr;  // unused for fourier
};

FeatureVector featurize(const Molecule& m, const FeaturizeContext& ctx);

struct FeatureMatrix {
  DescriptorTable table;
  std::vector<std::string> ids;
  Eigen::MatrixXd values;  // rows = molecules, cols = descriptors

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

FeatureMatrix featurize_dataset(const Dataset& ds,
                                const FeaturizeContext& ctx);

/// Feature cache: JSON (descriptor table, ids, meta) + row-major float64
/// matrix; bit-exact round-trip.
void save_features(const FeatureMatrix& fm, const io::json& meta,
                   const std::filesystem::path& base_path);
FeatureMatrix load_features(const std::filesystem::path& base_path,
                            io::json* meta_out = nullptr);

}  // namespace qmscat::invariants
