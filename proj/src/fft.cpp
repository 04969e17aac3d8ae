#include "qmscat/fft.hpp"

#include <fftw3.h>

#include <stdexcept>

namespace qmscat {

namespace {
fftw_complex* as_fftw(std::complex<double>* p) {
  return reinterpret_cast<fftw_complex*>(p);
}
}  // namespace

Fft2d::Fft2d(int n) : n_(n) {
  if (n < 2 || (n & (n - 1)) != 0)
    throw std::invalid_argument("Fft2d: size must be a power of two >= 2");
  ComplexGrid scratch_in(n, n), scratch_out(n, n);
  scratch_in.setZero();
  // FFTW_UNALIGNED lets the plans run on any caller buffer.
  plan_fwd_ = fftw_plan_dft_2d(n, n, as_fftw(scratch_in.data()),
                               as_fftw(scratch_out.data()), FFTW_FORWARD,
                               FFTW_ESTIMATE | FFTW_UNALIGNED);
  plan_bwd_ = fftw_plan_dft_2d(n, n, as_fftw(scratch_in.data()),
                               as_fftw(scratch_out.data()), FFTW_BACKWARD,
                               FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plan_fwd_ || !plan_bwd_) throw std::runtime_error("FFTW plan failed");
}

Fft2d::~Fft2d() {
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
}

ComplexGrid Fft2d::forward(const RealGrid& in) const {
  ComplexGrid tmp = in.cast<std::complex<double>>();
  ComplexGrid out(n_, n_);
  fftw_execute_dft(static_cast<fftw_plan>(plan_fwd_), as_fftw(tmp.data()),
                   as_fftw(out.data()));
  return out;
}

ComplexGrid Fft2d::forward(const ComplexGrid& in) const {
  ComplexGrid tmp = in;  // FFTW may clobber its input
  ComplexGrid out(n_, n_);
  fftw_execute_dft(static_cast<fftw_plan>(plan_fwd_), as_fftw(tmp.data()),
                   as_fftw(out.data()));
  return out;
}

ComplexGrid Fft2d::inverse(const ComplexGrid& in) const {
  ComplexGrid out(n_, n_);
  inverse(in, out);
  return out;
}

void Fft2d::inverse(const ComplexGrid& in, ComplexGrid& out) const {
  ComplexGrid tmp = in;
  out.resize(n_, n_);
  fftw_execute_dft(static_cast<fftw_plan>(plan_bwd_), as_fftw(tmp.data()),
                   as_fftw(out.data()));
  out /= static_cast<double>(n_) * n_;
}

}  // namespace qmscat
