#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "nsfar/grid.hpp"

namespace nsfar::fft {

/// Forward r2c and backward c2r plans for one n x n size.  Plans are created
/// with FFTW_UNALIGNED so they can execute on any std::vector buffer.
class Plan2D {
public:
  explicit Plan2D(int n) : n_(n) {
    std::vector<double> re(static_cast<std::size_t>(n) * n);
    std::vector<std::complex<double>> co(static_cast<std::size_t>(n) * (n / 2 + 1));
    auto* cp = reinterpret_cast<fftw_complex*>(co.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_ = fftw_plan_dft_r2c_2d(n, n, re.data(), cp, flags);
    backward_ = fftw_plan_dft_c2r_2d(n, n, cp, re.data(), flags | FFTW_DESTROY_INPUT);
  }
  ~Plan2D() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }
  Plan2D(const Plan2D&) = delete;
  Plan2D& operator=(const Plan2D&) = delete;

  /// Unnormalized forward transform.
  void forward(const double* in, std::complex<double>* out) const {
    fftw_execute_dft_r2c(forward_, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
  }
  /// Unnormalized backward transform; `in` is overwritten.
  void backward(std::complex<double>* in, double* out) const {
    fftw_execute_dft_c2r(backward_, reinterpret_cast<fftw_complex*>(in), out);
  }
  int n() const { return n_; }

private:
  int n_;
  fftw_plan forward_{};
  fftw_plan backward_{};
};

/// Shared plan per size; FFTW planning is serialized, execution is reentrant.
inline const Plan2D& plan(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<Plan2D>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<Plan2D>(n);
  return *slot;
}

} // namespace nsfar::fft
