#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qmscat/invariants.hpp"
#include "qmscat/regress.hpp"

namespace qmscat::analyze {

/// One training draw: orthogonal weights in selection order. Descriptors
/// that were never selected carry weight exactly zero.
struct WeightDraw {
  std::vector<int> selected;       // descriptor indices, selection order
  std::vector<double> w_tilde;     // matching orthogonal weights
  int n_train = 0;
};

struct WeightStudy {
  invariants::DescriptorTable table;
  std::vector<WeightDraw> draws;

  std::size_t n_features() const { return table.size(); }
};

/// Repeatedly draws a seeded random train_fraction of the rows, fits OLS
/// to m_per_draw terms and records the weights.
WeightStudy run_weight_study(const Eigen::MatrixXd& features,
                             const Eigen::VectorXd& targets,
                             const invariants::DescriptorTable& table,
                             int n_draws, int m_per_draw,
                             double train_fraction, std::uint64_t seed);

/// E_l(|w_k^l| / sqrt(n)) per descriptor, zero when never selected.
std::vector<double> mean_weight_magnitudes(const WeightStudy& study);

enum class GroupKey { scale_pair, order, norm, channel };

GroupKey group_key_from_name(const std::string& name);
std::string group_label(const invariants::FeatureDescriptor& d, GroupKey key);

/// Sums of mean magnitudes grouped by the key. The groups partition the
/// descriptors, so the values add up to the total mean magnitude.
std::map<std::string, double> aggregate(const WeightStudy& study,
                                        GroupKey key);

std::string aggregate_csv(const std::map<std::string, double>& groups,
                          const std::string& key_name);

struct DecayFit {
  double a = 0.0;  // log2 E ~ a (log2 m)^2 + b log2 m + c
  double b = 0.0;
  double c = 0.0;
  double r_squared = 0.0;
  std::vector<double> mean_magnitude;  // per selection step m = 1..M
};

/// Quadratic fit of log2 E_l(|w_{k_m}|/sqrt(n)) against log2 m. Requires
/// at least 8 selection steps; throws on a degenerate (constant) profile.
DecayFit fit_decay_law(const WeightStudy& study);

/// Fit the same quadratic to an externally supplied magnitude sequence
/// (index m = 1..size).
DecayFit fit_decay_law(const std::vector<double>& mean_magnitude);

}  // namespace qmscat::analyze
