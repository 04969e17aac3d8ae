#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qmscat/molecule.hpp"

namespace qmscat::regress {

enum class Criterion { mae, rmse };

std::string criterion_name(Criterion c);
Criterion criterion_from_name(const std::string& name);

double mean_absolute_error(const Eigen::VectorXd& pred,
                           const Eigen::VectorXd& truth);
double root_mean_square_error(const Eigen::VectorXd& pred,
                              const Eigen::VectorXd& truth);

/// Greedy orthogonal least squares model. The selected features define an
/// implicit orthonormal basis Q with raw_normalized_selected = Q * R; the
/// same fit is stored both as orthogonal weights w_tilde and as dense
/// weights over the original (unnormalized) features.
struct OlsModel {
  std::vector<int> selected;       // original column indices, selection order
  Eigen::VectorXd w_tilde;         // <f, Q_m>
  Eigen::MatrixXd r_upper;         // M x M upper triangular
  Eigen::VectorXd scale;           // per-column normalization; 0 = dropped
  Eigen::VectorXd dense_weights;   // over original features (sparse, size K)
  std::vector<double> residual_sq; // training SSE after each step
  double target_sq_norm = 0.0;

  int dimension() const { return static_cast<int>(selected.size()); }

  /// Dense-form prediction using the first m_terms selected features
  /// (all of them when m_terms < 0).
  Eigen::VectorXd predict(const Eigen::MatrixXd& features,
                          int m_terms = -1) const;
  /// Orthogonal-form predictions for every prefix: column m holds the
  /// (m+1)-term prediction. Used for bag dimension selection.
  Eigen::MatrixXd prefix_predictions(const Eigen::MatrixXd& features) const;
};

/// Forward selection exactly as stated: normalize columns to unit training
/// norm, pick the feature best correlated with the target, orthogonalize
/// and renormalize the remainder, repeat. Ties go to the lowest column
/// index; all-zero columns are dropped with a note; selection stops early
/// at the numerical rank.
OlsModel ols_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                 int m_max);

struct BagResult {
  OlsModel model;
  int chosen_m = 0;                 // validation-optimal dimension
  std::vector<int> held_in;         // training-row indices of the bag
};

struct BaggedModel {
  std::vector<BagResult> bags;
  double beta = 90.0;
  Criterion criterion = Criterion::mae;
  std::uint64_t seed = 0;

  double mean_dimension() const;
  /// Arithmetic mean of the per-bag chosen-dimension predictions.
  Eigen::VectorXd predict(const Eigen::MatrixXd& features) const;
};

BaggedModel bagged_fit(const Eigen::MatrixXd& features,
                       const Eigen::VectorXd& targets, double beta, int n_bags,
                       int m_max, Criterion criterion, std::uint64_t seed);

/// Coulomb matrix: 0.5 z^2.4 on the diagonal, z_k z_l / |r_k - r_l| off
/// it, zero-padded to pad_to rows/columns.
Eigen::MatrixXd coulomb_matrix(const Molecule& m, int pad_to);

/// Replicas of the Coulomb matrix sorted by descending row norm after
/// adding Gaussian noise (std = noise_scale) to the norms. The same
/// permutation is applied to rows and columns; ties keep the original
/// order. Sorting happens before zero padding.
std::vector<Eigen::MatrixXd> random_sorted_matrices(const Molecule& m, int R,
                                                    double noise_scale,
                                                    std::uint64_t seed,
                                                    int pad_to = 0);

struct CoulombKernelModel {
  double sigma = 1.0;
  double lambda = 1e-8;
  int replicas = 8;
  double noise_scale = 1.0;
  int pad_to = 0;
  std::uint64_t seed = 0;
  std::vector<Eigen::MatrixXd> train_matrices;  // molecule-major replica order
  Eigen::VectorXd alpha;                        // dual coefficients
};

/// Laplacian kernel on L1 distances between replica Coulomb matrices.
double coulomb_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                      double sigma);

CoulombKernelModel krr_fit(const std::vector<Molecule>& train,
                           const Eigen::VectorXd& targets, double sigma,
                           double lambda, int R, double noise_scale,
                           std::uint64_t seed);

double krr_predict(const CoulombKernelModel& model, const Molecule& m);

struct FoldMetrics {
  int fold = 0;
  double mae = 0.0;
  double rmse = 0.0;
  double mean_dimension = 0.0;  // mean bag dimension (NaN for kernel models)
};

struct CvReport {
  std::vector<FoldMetrics> folds;
  double mae_mean = 0.0, mae_std = 0.0;
  double rmse_mean = 0.0, rmse_std = 0.0;
  double dimension_mean = 0.0;
  std::string engine;

  void finalize();
};

struct SparseCvConfig {
  double beta = 0.0;  // 0 = 90 for datasets up to 1000 molecules, else 80
  int n_bags = 10;
  int m_max = 3 * (1 << 9);
  Criterion criterion = Criterion::mae;
  std::uint64_t seed = 0;
};

/// Five-fold cross validation of the bagged OLS engine on a fixed feature
/// matrix. Fold f is tested after training (including the bag dimension
/// selection) on the other folds only.
CvReport cross_validate_sparse(const Eigen::MatrixXd& features,
                               const Eigen::VectorXd& targets,
                               const std::vector<int>& fold_of_row,
                               const SparseCvConfig& config);

struct KrrCvConfig {
  std::vector<double> sigma_grid;   // defaults: 2^4 .. 2^14
  std::vector<double> lambda_grid;  // defaults: 1e-8 .. 1e-1
  int replicas = 8;
  double noise_scale = 1.0;
  int inner_folds = 4;
  std::uint64_t seed = 0;

  static KrrCvConfig defaults();
};

/// Five-fold cross validation of the Coulomb kernel baseline; the kernel
/// width and ridge are selected by inner cross validation on the training
/// folds only.
CvReport cross_validate_krr(const Dataset& ds, const KrrCvConfig& config);

}  // namespace qmscat::regress
