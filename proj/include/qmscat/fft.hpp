#pragma once

#include <complex>

#include <Eigen/Core>

namespace qmscat {

using RealGrid =
    Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexGrid = Eigen::Array<std::complex<double>, Eigen::Dynamic,
                                 Eigen::Dynamic, Eigen::RowMajor>;

/// Complex 2D FFT of fixed size n x n backed by FFTW. Plans are created
/// with FFTW_ESTIMATE so the transform is reproducible run to run.
class Fft2d {
 public:
  explicit Fft2d(int n);
  ~Fft2d();
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  int n() const { return n_; }

  ComplexGrid forward(const RealGrid& in) const;
  ComplexGrid forward(const ComplexGrid& in) const;
  /// Inverse transform, 1/n^2 normalized.
  ComplexGrid inverse(const ComplexGrid& in) const;
  /// Inverse transform into a caller buffer (avoids allocation in loops).
  void inverse(const ComplexGrid& in, ComplexGrid& out) const;

 private:
  int n_;
  void* plan_fwd_;
  void* plan_bwd_;
};

/// Signed frequency index of row/column k on an n-point grid.
inline int signed_freq(int k, int n) { return k < n / 2 ? k : k - n; }

}  // namespace qmscat
