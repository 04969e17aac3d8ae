#include "qmscat/regress.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "qmscat/io.hpp"
#include "qmscat/numeric.hpp"

namespace qmscat::regress {

std::string criterion_name(Criterion c) {
  return c == Criterion::mae ? "MAE" : "RMSE";
}

Criterion criterion_from_name(const std::string& name) {
  if (name == "MAE" || name == "mae") return Criterion::mae;
  if (name == "RMSE" || name == "rmse") return Criterion::rmse;
  throw std::invalid_argument("unknown criterion '" + name + "'");
}

double mean_absolute_error(const Eigen::VectorXd& pred,
                           const Eigen::VectorXd& truth) {
  return (pred - truth).cwiseAbs().mean();
}

double root_mean_square_error(const Eigen::VectorXd& pred,
                              const Eigen::VectorXd& truth) {
  return std::sqrt((pred - truth).squaredNorm() / pred.size());
}

Eigen::VectorXd OlsModel::predict(const Eigen::MatrixXd& features,
                                  int m_terms) const {
  const int m = m_terms < 0 ? dimension() : std::min(m_terms, dimension());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(features.rows());
  if (m == 0) return out;
  // Dense weights of the m-term prefix: solve R v = w_tilde on the
  // leading block, then undo the normalization.
  const Eigen::VectorXd v = r_upper.topLeftCorner(m, m)
                                .triangularView<Eigen::Upper>()
                                .solve(w_tilde.head(m));
  for (int i = 0; i < m; ++i)
    out += (v[i] / scale[selected[i]]) * features.col(selected[i]);
  return out;
}

Eigen::MatrixXd OlsModel::prefix_predictions(
    const Eigen::MatrixXd& features) const {
  const int m = dimension();
  // Test-sample values of the orthogonalized selected features:
  // q_test solves q_test * R = x_test_normalized_selected.
  Eigen::MatrixXd sel(features.rows(), m);
  for (int i = 0; i < m; ++i)
    sel.col(i) = features.col(selected[i]) / scale[selected[i]];
  const Eigen::MatrixXd q_test = r_upper.topLeftCorner(m, m)
                                     .triangularView<Eigen::Upper>()
                                     .solve<Eigen::OnTheRight>(sel);
  Eigen::MatrixXd out(features.rows(), m);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(features.rows());
  for (int i = 0; i < m; ++i) {
    acc += w_tilde[i] * q_test.col(i);
    out.col(i) = acc;
  }
  return out;
}

OlsModel ols_fit(const Eigen::MatrixXd& features,
                 const Eigen::VectorXd& targets, int m_max) {
  const Eigen::Index n = features.rows();
  const Eigen::Index K = features.cols();
  if (n < 2) throw std::invalid_argument("ols_fit: need at least 2 samples");
  if (targets.size() != n)
    throw std::invalid_argument("ols_fit: target length mismatch");
  if (m_max < 1) throw std::invalid_argument("ols_fit: m_max < 1");

  OlsModel model;
  model.scale = Eigen::VectorXd::Zero(K);
  model.target_sq_norm = targets.squaredNorm();

  Eigen::MatrixXd phi(n, K);
  std::vector<bool> active(K, false);
  int dropped = 0;
  for (Eigen::Index k = 0; k < K; ++k) {
    const double s = features.col(k).norm();
    if (s > 0.0) {
      model.scale[k] = s;
      phi.col(k) = features.col(k) / s;
      active[k] = true;
    } else {
      phi.col(k).setZero();
      ++dropped;
    }
  }
  if (dropped > 0)
    std::cerr << "[qmscat] note: dropped " << dropped
              << " all-zero feature column(s) before selection\n";

  const int m_limit = static_cast<int>(std::min<Eigen::Index>(m_max, K));
  Eigen::MatrixXd q(n, m_limit);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m_limit, m_limit);
  Eigen::VectorXd w_tilde(m_limit);
  Eigen::VectorXd residual = targets;

  int m = 0;
  while (m < m_limit) {
    // Selection: best correlation with the target. Candidate columns are
    // orthogonal to span(Q), so <f, phi_k> equals <residual, phi_k>.
    int best = -1;
    double best_corr = -1.0;
    for (Eigen::Index k = 0; k < K; ++k) {
      if (!active[k]) continue;
      const double corr = std::abs(targets.dot(phi.col(k)));
      if (corr > best_corr) {
        best_corr = corr;
        best = static_cast<int>(k);
      }
    }
    if (best < 0) break;  // rank exhausted

    // Re-orthogonalize the winner against the accepted basis once more
    // before storing it; keeps Q orthonormal over long selections.
    Eigen::VectorXd qm = phi.col(best);
    if (m > 0) qm -= q.leftCols(m) * (q.leftCols(m).transpose() * qm);
    const double nu = qm.norm();
    if (nu < 1e-10) {
      active[best] = false;
      continue;
    }
    qm /= nu;

    // R column: expansion of the raw normalized column over Q.
    const Eigen::VectorXd raw = features.col(best) / model.scale[best];
    for (int a = 0; a < m; ++a) r(a, m) = q.col(a).dot(raw);
    r(m, m) = qm.dot(raw);

    q.col(m) = qm;
    const double w = targets.dot(qm);
    w_tilde[m] = w;
    residual -= w * qm;
    model.selected.push_back(best);
    model.residual_sq.push_back(residual.squaredNorm());
    active[best] = false;

    // Decorrelate and renormalize the remaining dictionary.
    for (Eigen::Index k = 0; k < K; ++k) {
      if (!active[k]) continue;
      phi.col(k) -= qm * qm.dot(phi.col(k));
      const double norm_after = phi.col(k).norm();
      if (norm_after < 1e-10) {
        active[k] = false;
        continue;
      }
      phi.col(k) /= norm_after;
    }
    ++m;
  }

  if (m < m_max && m < static_cast<int>(K))
    std::cerr << "[qmscat] note: selection stopped at rank " << m
              << " (requested " << m_max << ")\n";

  model.w_tilde = w_tilde.head(m);
  model.r_upper = r.topLeftCorner(m, m);

  // Dense weights over the original features: solve R v = w_tilde, then
  // undo the normalization.
  model.dense_weights = Eigen::VectorXd::Zero(K);
  if (m > 0) {
    const Eigen::VectorXd v = model.r_upper.triangularView<Eigen::Upper>()
                                  .solve(model.w_tilde);
    for (int i = 0; i < m; ++i)
      model.dense_weights[model.selected[i]] =
          v[i] / model.scale[model.selected[i]];
  }
  return model;
}

double BaggedModel::mean_dimension() const {
  double acc = 0.0;
  for (const auto& b : bags) acc += b.chosen_m;
  return bags.empty() ? 0.0 : acc / bags.size();
}

Eigen::VectorXd BaggedModel::predict(const Eigen::MatrixXd& features) const {
  if (bags.empty()) throw std::logic_error("empty bagged model");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(features.rows());
  for (const auto& b : bags) acc += b.model.predict(features, b.chosen_m);
  return acc / static_cast<double>(bags.size());
}

BaggedModel bagged_fit(const Eigen::MatrixXd& features,
                       const Eigen::VectorXd& targets, double beta, int n_bags,
                       int m_max, Criterion criterion, std::uint64_t seed) {
  const Eigen::Index n = features.rows();
  if (!(beta > 0.0 && beta < 100.0))
    throw std::invalid_argument("bagged_fit: beta must be in (0, 100)");
  if (n_bags < 1) throw std::invalid_argument("bagged_fit: X must be >= 1");
  const auto n_in = static_cast<Eigen::Index>(
      std::llround(static_cast<double>(n) * beta / 100.0));
  if (n_in < 2 || n - n_in < 1)
    throw std::invalid_argument(
        "bagged_fit: split leaves fewer than 2 training or 1 validation "
        "samples");

  BaggedModel model;
  model.beta = beta;
  model.criterion = criterion;
  model.seed = seed;

  for (int b = 0; b < n_bags; ++b) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
    std::shuffle(order.begin(), order.end(), rng);

    BagResult bag;
    bag.held_in.assign(order.begin(), order.begin() + n_in);
    std::vector<int> held_out(order.begin() + n_in, order.end());

    Eigen::MatrixXd x_in(n_in, features.cols());
    Eigen::VectorXd y_in(n_in);
    for (Eigen::Index i = 0; i < n_in; ++i) {
      x_in.row(i) = features.row(bag.held_in[i]);
      y_in[i] = targets[bag.held_in[i]];
    }
    Eigen::MatrixXd x_out(held_out.size(), features.cols());
    Eigen::VectorXd y_out(held_out.size());
    for (std::size_t i = 0; i < held_out.size(); ++i) {
      x_out.row(i) = features.row(held_out[i]);
      y_out[i] = targets[held_out[i]];
    }

    bag.model = ols_fit(x_in, y_in, m_max);
    const Eigen::MatrixXd curves = bag.model.prefix_predictions(x_out);
    double best = std::numeric_limits<double>::infinity();
    bag.chosen_m = 1;
    for (int m = 1; m <= bag.model.dimension(); ++m) {
      const Eigen::VectorXd pred = curves.col(m - 1);
      const double err = criterion == Criterion::mae
                             ? mean_absolute_error(pred, y_out)
                             : root_mean_square_error(pred, y_out);
      if (err < best) {
        best = err;
        bag.chosen_m = m;
      }
    }
    model.bags.push_back(std::move(bag));
  }
  return model;
}

Eigen::MatrixXd coulomb_matrix(const Molecule& m, int pad_to) {
  validate_molecule(m);
  const int n = static_cast<int>(m.atoms.size());
  if (pad_to < n)
    throw std::invalid_argument("coulomb_matrix: pad_to smaller than molecule");
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(pad_to, pad_to);
  for (int k = 0; k < n; ++k) {
    c(k, k) = 0.5 * std::pow(static_cast<double>(m.atoms[k].charge), 2.4);
    for (int l = k + 1; l < n; ++l) {
      const double v =
          static_cast<double>(m.atoms[k].charge) * m.atoms[l].charge /
          (m.atoms[k].position - m.atoms[l].position).norm();
      c(k, l) = v;
      c(l, k) = v;
    }
  }
  return c;
}

std::vector<Eigen::MatrixXd> random_sorted_matrices(const Molecule& m, int R,
                                                    double noise_scale,
                                                    std::uint64_t seed,
                                                    int pad_to) {
  if (R < 1) throw std::invalid_argument("random_sorted_matrices: R < 1");
  const int n = static_cast<int>(m.atoms.size());
  if (pad_to == 0) pad_to = n;
  const Eigen::MatrixXd base = coulomb_matrix(m, n);

  Eigen::VectorXd norms(n);
  for (int k = 0; k < n; ++k) norms[k] = base.row(k).norm();

  std::vector<Eigen::MatrixXd> out;
  out.reserve(R);
  for (int r = 0; r < R; ++r) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd noisy = norms;
    if (noise_scale > 0.0)
      for (int k = 0; k < n; ++k) noisy[k] += noise_scale * gauss(rng);

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(),
                     [&](int a, int b) { return noisy[a] > noisy[b]; });

    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(pad_to, pad_to);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) c(a, b) = base(perm[a], perm[b]);
    out.push_back(std::move(c));
  }
  return out;
}

double coulomb_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                      double sigma) {
  return std::exp(-(a - b).cwiseAbs().sum() / sigma);
}

CoulombKernelModel krr_fit(const std::vector<Molecule>& train,
                           const Eigen::VectorXd& targets, double sigma,
                           double lambda, int R, double noise_scale,
                           std::uint64_t seed) {
  if (!(sigma > 0.0) || !(lambda > 0.0))
    throw std::invalid_argument("krr_fit: sigma and lambda must be > 0");
  if (train.empty()) throw std::invalid_argument("krr_fit: empty training set");
  if (targets.size() != static_cast<Eigen::Index>(train.size()))
    throw std::invalid_argument("krr_fit: target length mismatch");

  CoulombKernelModel model;
  model.sigma = sigma;
  model.lambda = lambda;
  model.replicas = R;
  model.noise_scale = noise_scale;
  model.seed = seed;
  for (const auto& m : train)
    model.pad_to =
        std::max(model.pad_to, static_cast<int>(m.atoms.size()));

  const Eigen::Index nr = static_cast<Eigen::Index>(train.size()) * R;
  Eigen::VectorXd y(nr);
  for (std::size_t i = 0; i < train.size(); ++i) {
    auto reps = random_sorted_matrices(
        train[i], R, noise_scale,
        derive_seed(seed, static_cast<std::uint64_t>(i)), model.pad_to);
    for (int r = 0; r < R; ++r) {
      y[static_cast<Eigen::Index>(i) * R + r] = targets[i];
      model.train_matrices.push_back(std::move(reps[r]));
    }
  }

  Eigen::MatrixXd kernel(nr, nr);
  for (Eigen::Index i = 0; i < nr; ++i) {
    kernel(i, i) = 1.0 + lambda;
    for (Eigen::Index j = i + 1; j < nr; ++j) {
      const double v = coulomb_kernel(model.train_matrices[i],
                                      model.train_matrices[j], sigma);
      kernel(i, j) = v;
      kernel(j, i) = v;
    }
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(kernel);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("krr_fit: dual solve failed");
  model.alpha = ldlt.solve(y);
  if (!model.alpha.allFinite()) {
    const double dmax = ldlt.vectorD().cwiseAbs().maxCoeff();
    const double dmin = ldlt.vectorD().cwiseAbs().minCoeff();
    throw std::runtime_error(
        "krr_fit: dual solve produced non-finite coefficients (condition ~ " +
        std::to_string(dmax / std::max(dmin, 1e-300)) + ")");
  }
  return model;
}

double krr_predict(const CoulombKernelModel& model, const Molecule& m) {
  if (static_cast<int>(m.atoms.size()) > model.pad_to)
    throw std::invalid_argument(
        "krr_predict: molecule larger than the training padding");
  const auto reps = random_sorted_matrices(
      m, model.replicas, model.noise_scale,
      derive_seed(model.seed, 0x9e3779b9ull ^ io::fnv1a(m.id)), model.pad_to);
  double acc = 0.0;
  for (const auto& rep : reps) {
    double f = 0.0;
    for (std::size_t j = 0; j < model.train_matrices.size(); ++j)
      f += model.alpha[static_cast<Eigen::Index>(j)] *
           coulomb_kernel(rep, model.train_matrices[j], model.sigma);
    acc += f;
  }
  return acc / model.replicas;
}

void CvReport::finalize() {
  const auto n = static_cast<double>(folds.size());
  if (folds.empty()) return;
  double mae_acc = 0.0, rmse_acc = 0.0, dim_acc = 0.0;
  for (const auto& f : folds) {
    mae_acc += f.mae;
    rmse_acc += f.rmse;
    dim_acc += f.mean_dimension;
  }
  mae_mean = mae_acc / n;
  rmse_mean = rmse_acc / n;
  dimension_mean = dim_acc / n;
  if (folds.size() > 1) {
    double mae_var = 0.0, rmse_var = 0.0;
    for (const auto& f : folds) {
      mae_var += (f.mae - mae_mean) * (f.mae - mae_mean);
      rmse_var += (f.rmse - rmse_mean) * (f.rmse - rmse_mean);
    }
    mae_std = std::sqrt(mae_var / (n - 1.0));
    rmse_std = std::sqrt(rmse_var / (n - 1.0));
  }
}

CvReport cross_validate_sparse(const Eigen::MatrixXd& features,
                               const Eigen::VectorXd& targets,
                               const std::vector<int>& fold_of_row,
                               const SparseCvConfig& config) {
  const Eigen::Index n = features.rows();
  if (static_cast<Eigen::Index>(fold_of_row.size()) != n)
    throw std::invalid_argument("cross_validate_sparse: fold list mismatch");
  const int n_folds =
      1 + *std::max_element(fold_of_row.begin(), fold_of_row.end());
  double beta = config.beta;
  if (beta == 0.0) beta = n <= 1000 ? 90.0 : 80.0;

  CvReport report;
  report.engine = "scattering-ols";
  for (int f = 0; f < n_folds; ++f) {
    std::vector<int> train_rows, test_rows;
    for (Eigen::Index i = 0; i < n; ++i)
      (fold_of_row[i] == f ? test_rows : train_rows)
          .push_back(static_cast<int>(i));
    if (train_rows.empty() || test_rows.empty())
      throw std::runtime_error("cross_validate_sparse: empty fold " +
                               std::to_string(f));

    Eigen::MatrixXd x_train(train_rows.size(), features.cols());
    Eigen::VectorXd y_train(train_rows.size());
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
      x_train.row(i) = features.row(train_rows[i]);
      y_train[i] = targets[train_rows[i]];
    }
    Eigen::MatrixXd x_test(test_rows.size(), features.cols());
    Eigen::VectorXd y_test(test_rows.size());
    for (std::size_t i = 0; i < test_rows.size(); ++i) {
      x_test.row(i) = features.row(test_rows[i]);
      y_test[i] = targets[test_rows[i]];
    }

    const BaggedModel model =
        bagged_fit(x_train, y_train, beta, config.n_bags, config.m_max,
                   config.criterion, derive_seed(config.seed, f));
    const Eigen::VectorXd pred = model.predict(x_test);
    report.folds.push_back({f, mean_absolute_error(pred, y_test),
                            root_mean_square_error(pred, y_test),
                            model.mean_dimension()});
  }
  report.finalize();
  return report;
}

KrrCvConfig KrrCvConfig::defaults() {
  KrrCvConfig c;
  for (int e = 4; e <= 14; ++e) c.sigma_grid.push_back(std::exp2(e));
  for (int e = -8; e <= -1; ++e)
    c.lambda_grid.push_back(std::pow(10.0, e));
  return c;
}

namespace {

double krr_fold_error(const std::vector<Molecule>& train,
                      const Eigen::VectorXd& y_train,
                      const std::vector<Molecule>& test,
                      const Eigen::VectorXd& y_test, double sigma,
                      double lambda, const KrrCvConfig& cfg,
                      std::uint64_t seed) {
  const auto model =
      krr_fit(train, y_train, sigma, lambda, cfg.replicas, cfg.noise_scale,
              seed);
  Eigen::VectorXd pred(test.size());
  for (std::size_t i = 0; i < test.size(); ++i)
    pred[static_cast<Eigen::Index>(i)] = krr_predict(model, test[i]);
  return mean_absolute_error(pred, y_test);
}

}  // namespace

CvReport cross_validate_krr(const Dataset& ds, const KrrCvConfig& config) {
  require_targets(ds);
  KrrCvConfig cfg = config;
  if (cfg.sigma_grid.empty() || cfg.lambda_grid.empty()) {
    const auto d = KrrCvConfig::defaults();
    if (cfg.sigma_grid.empty()) cfg.sigma_grid = d.sigma_grid;
    if (cfg.lambda_grid.empty()) cfg.lambda_grid = d.lambda_grid;
  }

  int n_folds = 0;
  for (const auto& m : ds.molecules)
    n_folds = std::max(n_folds, ds.fold(m.id) + 1);

  CvReport report;
  report.engine = "coulomb-krr";
  for (int f = 0; f < n_folds; ++f) {
    std::vector<Molecule> train, test;
    std::vector<double> y_train_v, y_test_v;
    for (const auto& m : ds.molecules) {
      if (ds.fold(m.id) == f) {
        test.push_back(m);
        y_test_v.push_back(*m.energy);
      } else {
        train.push_back(m);
        y_train_v.push_back(*m.energy);
      }
    }
    Eigen::VectorXd y_train = Eigen::Map<Eigen::VectorXd>(
        y_train_v.data(), static_cast<Eigen::Index>(y_train_v.size()));
    Eigen::VectorXd y_test = Eigen::Map<Eigen::VectorXd>(
        y_test_v.data(), static_cast<Eigen::Index>(y_test_v.size()));

    // Inner CV over the hyperparameter grid, on the training folds only.
    double best_err = std::numeric_limits<double>::infinity();
    double best_sigma = cfg.sigma_grid.front();
    double best_lambda = cfg.lambda_grid.front();
    std::vector<int> inner_fold(train.size());
    for (std::size_t i = 0; i < train.size(); ++i)
      inner_fold[i] = static_cast<int>(i % cfg.inner_folds);
    for (const double sigma : cfg.sigma_grid) {
      for (const double lambda : cfg.lambda_grid) {
        double err_acc = 0.0;
        for (int g = 0; g < cfg.inner_folds; ++g) {
          std::vector<Molecule> itrain, itest;
          std::vector<double> iy_train, iy_test;
          for (std::size_t i = 0; i < train.size(); ++i) {
            if (inner_fold[i] == g) {
              itest.push_back(train[i]);
              iy_test.push_back(y_train[static_cast<Eigen::Index>(i)]);
            } else {
              itrain.push_back(train[i]);
              iy_train.push_back(y_train[static_cast<Eigen::Index>(i)]);
            }
          }
          err_acc += krr_fold_error(
              itrain,
              Eigen::Map<Eigen::VectorXd>(
                  iy_train.data(), static_cast<Eigen::Index>(iy_train.size())),
              itest,
              Eigen::Map<Eigen::VectorXd>(
                  iy_test.data(), static_cast<Eigen::Index>(iy_test.size())),
              sigma, lambda, cfg, derive_seed(cfg.seed, 1000 + g));
        }
        if (err_acc < best_err) {
          best_err = err_acc;
          best_sigma = sigma;
          best_lambda = lambda;
        }
      }
    }

    const auto model = krr_fit(train, y_train, best_sigma, best_lambda,
                               cfg.replicas, cfg.noise_scale,
                               derive_seed(cfg.seed, f));
    Eigen::VectorXd pred(test.size());
    for (std::size_t i = 0; i < test.size(); ++i)
      pred[static_cast<Eigen::Index>(i)] = krr_predict(model, test[i]);
    report.folds.push_back(
        {f, mean_absolute_error(pred, y_test),
         root_mean_square_error(pred, y_test),
         std::numeric_limits<double>::quiet_NaN()});
  }
  report.finalize();
  return report;
}

}  // namespace qmscat::regress
