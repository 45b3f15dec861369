#include "gausson/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <numbers>

namespace gausson {

namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

FourierTransform::FourierTransform(std::size_t n) : n_(n) {
  std::lock_guard lock(planner_mutex());
  buffer_ = reinterpret_cast<cplx*>(fftw_malloc(sizeof(cplx) * n));
  const int len = static_cast<int>(n);
  forward_plan_ = fftw_plan_dft_1d(len, as_fftw(buffer_), as_fftw(buffer_), FFTW_FORWARD,
                                   FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_1d(len, as_fftw(buffer_), as_fftw(buffer_), FFTW_BACKWARD,
                                   FFTW_ESTIMATE);
}

FourierTransform::~FourierTransform() {
  if (buffer_ == nullptr) return;
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  fftw_free(buffer_);
}

FourierTransform::FourierTransform(FourierTransform&& other) noexcept
    : n_(other.n_),
      buffer_(other.buffer_),
      forward_plan_(other.forward_plan_),
      inverse_plan_(other.inverse_plan_) {
  other.buffer_ = nullptr;
  other.forward_plan_ = nullptr;
  other.inverse_plan_ = nullptr;
}

void FourierTransform::forward(std::span<const cplx> in, std::span<cplx> out) {
  std::copy(in.begin(), in.end(), buffer_);
  fftw_execute(static_cast<fftw_plan>(forward_plan_));
  std::copy(buffer_, buffer_ + n_, out.begin());
}

void FourierTransform::inverse(std::span<const cplx> in, std::span<cplx> out) {
  std::copy(in.begin(), in.end(), buffer_);
  fftw_execute(static_cast<fftw_plan>(inverse_plan_));
  const double scale = 1.0 / static_cast<double>(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = buffer_[i] * scale;
}

std::vector<double> wavenumbers(std::size_t n, double dx) {
  std::vector<double> k(n);
  const double dk = 2.0 * std::numbers::pi / (static_cast<double>(n) * dx);
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = static_cast<long>(i);
    const auto half = static_cast<long>(n / 2);
    k[i] = dk * static_cast<double>(j < half ? j : j - static_cast<long>(n));
  }
  return k;
}

std::vector<cplx> spectral_derivative(FourierTransform& fft, std::span<const double> k,
                                      std::span<const cplx> psi) {
  std::vector<cplx> hat(psi.size());
  fft.forward(psi, hat);
  for (std::size_t i = 0; i < hat.size(); ++i) hat[i] *= cplx(0.0, k[i]);
  // The Nyquist mode has no sign; dropping it keeps derivatives of real data real.
  if (hat.size() % 2 == 0) hat[hat.size() / 2] = 0.0;
  std::vector<cplx> out(psi.size());
  fft.inverse(hat, out);
  return out;
}

}  // namespace gausson
