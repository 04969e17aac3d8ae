#include "qmscat/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "qmscat/numeric.hpp"

namespace qmscat::analyze {

WeightStudy run_weight_study(const Eigen::MatrixXd& features,
                             const Eigen::VectorXd& targets,
                             const invariants::DescriptorTable& table,
                             int n_draws, int m_per_draw,
                             double train_fraction, std::uint64_t seed) {
  if (static_cast<std::size_t>(features.cols()) != table.size())
    throw std::invalid_argument("run_weight_study: table/matrix mismatch");
  if (n_draws < 1) throw std::invalid_argument("run_weight_study: n_draws < 1");
  const Eigen::Index n = features.rows();
  const auto n_in = static_cast<Eigen::Index>(
      std::llround(train_fraction * static_cast<double>(n)));
  if (n_in < 2 || n_in > n)
    throw std::invalid_argument("run_weight_study: bad train fraction");

  WeightStudy study;
  study.table = table;
  for (int d = 0; d < n_draws; ++d) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(d)));
    std::shuffle(order.begin(), order.end(), rng);

    Eigen::MatrixXd x(n_in, features.cols());
    Eigen::VectorXd y(n_in);
    for (Eigen::Index i = 0; i < n_in; ++i) {
      x.row(i) = features.row(order[i]);
      y[i] = targets[order[i]];
    }
    const auto model = regress::ols_fit(x, y, m_per_draw);
    WeightDraw draw;
    draw.selected = model.selected;
    draw.w_tilde.assign(model.w_tilde.data(),
                        model.w_tilde.data() + model.w_tilde.size());
    draw.n_train = static_cast<int>(n_in);
    study.draws.push_back(std::move(draw));
  }
  return study;
}

std::vector<double> mean_weight_magnitudes(const WeightStudy& study) {
  if (study.draws.empty())
    throw std::invalid_argument("mean_weight_magnitudes: no draws");
  std::vector<double> acc(study.n_features(), 0.0);
  for (const auto& draw : study.draws) {
    const double inv_sqrt_n = 1.0 / std::sqrt(draw.n_train);
    for (std::size_t m = 0; m < draw.selected.size(); ++m)
      acc[draw.selected[m]] += std::abs(draw.w_tilde[m]) * inv_sqrt_n;
  }
  for (auto& v : acc) v /= static_cast<double>(study.draws.size());
  return acc;
}

GroupKey group_key_from_name(const std::string& name) {
  if (name == "scale_pair") return GroupKey::scale_pair;
  if (name == "order") return GroupKey::order;
  if (name == "norm") return GroupKey::norm;
  if (name == "channel") return GroupKey::channel;
  throw std::invalid_argument("unknown group key '" + name + "'");
}

std::string group_label(const invariants::FeatureDescriptor& d, GroupKey key) {
  switch (key) {
    case GroupKey::scale_pair:
      if (d.k >= 0) return "fourier:k" + std::to_string(d.k);
      if (d.order == 0) return "order0";
      if (d.order == 1) return "j" + std::to_string(d.j);
      return "j" + std::to_string(d.j) + ",j'" + std::to_string(d.jp);
    case GroupKey::order:
      return "order" + std::to_string(d.order);
    case GroupKey::norm:
      return d.norm_p == 1 ? "L1" : "L2";
    case GroupKey::channel:
      return density::channel_name(d.channel);
  }
  throw std::logic_error("bad group key");
}

std::map<std::string, double> aggregate(const WeightStudy& study,
                                        GroupKey key) {
  const auto magnitudes = mean_weight_magnitudes(study);
  std::map<std::string, double> groups;
  for (std::size_t k = 0; k < magnitudes.size(); ++k)
    groups[group_label(study.table.items[k], key)] += magnitudes[k];
  return groups;
}

std::string aggregate_csv(const std::map<std::string, double>& groups,
                          const std::string& key_name) {
  std::ostringstream out;
  out.precision(17);
  out << key_name << ",mean_weight_magnitude\n";
  for (const auto& [label, value] : groups) out << label << ',' << value << '\n';
  return out.str();
}

DecayFit fit_decay_law(const std::vector<double>& mean_magnitude) {
  const std::size_t steps = mean_magnitude.size();
  if (steps < 8)
    throw std::invalid_argument("fit_decay_law: need at least 8 steps");

  Eigen::MatrixXd design(steps, 3);
  Eigen::VectorXd rhs(steps);
  for (std::size_t m = 0; m < steps; ++m) {
    if (!(mean_magnitude[m] > 0.0))
      throw std::domain_error("fit_decay_law: non-positive magnitude");
    const double x = std::log2(static_cast<double>(m + 1));
    design(m, 0) = x * x;
    design(m, 1) = x;
    design(m, 2) = 1.0;
    rhs[m] = std::log2(mean_magnitude[m]);
  }
  const double y_mean = rhs.mean();
  const double ss_tot = (rhs.array() - y_mean).square().sum();
  if (ss_tot < 1e-24)
    throw std::domain_error("fit_decay_law: degenerate fit (constant magnitudes)");

  const Eigen::Vector3d coef =
      design.colPivHouseholderQr().solve(rhs);
  const double ss_res = (design * coef - rhs).squaredNorm();

  DecayFit fit;
  fit.a = coef[0];
  fit.b = coef[1];
  fit.c = coef[2];
  fit.r_squared = 1.0 - ss_res / ss_tot;
  fit.mean_magnitude = mean_magnitude;
  return fit;
}

DecayFit fit_decay_law(const WeightStudy& study) {
  if (study.draws.empty())
    throw std::invalid_argument("fit_decay_law: no draws");
  std::size_t steps = 0;
  for (const auto& d : study.draws)
    steps = std::max(steps, d.selected.size());
  std::vector<double> mean_mag(steps, 0.0);
  for (const auto& d : study.draws) {
    const double inv_sqrt_n = 1.0 / std::sqrt(d.n_train);
    for (std::size_t m = 0; m < steps; ++m)
      if (m < d.w_tilde.size())
        mean_mag[m] += std::abs(d.w_tilde[m]) * inv_sqrt_n;
  }
  for (auto& v : mean_mag) v /= static_cast<double>(study.draws.size());
  return fit_decay_law(mean_mag);
}

}  // namespace qmscat::analyze
