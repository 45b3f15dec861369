#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace gausson {

using cplx = std::complex<double>;

// Owning 1-D complex FFT of fixed length backed by FFTW (unnormalized
// forward, normalized inverse). Plans are built with FFTW_ESTIMATE so the
// same input always yields bit-identical output. Not thread-safe per
// instance; construct one per worker.
class FourierTransform {
 public:
  explicit FourierTransform(std::size_t n);
  ~FourierTransform();
  FourierTransform(const FourierTransform&) = delete;
  FourierTransform& operator=(const FourierTransform&) = delete;
  FourierTransform(FourierTransform&& other) noexcept;
  FourierTransform& operator=(FourierTransform&&) = delete;

  std::size_t size() const { return n_; }

  void forward(std::span<const cplx> in, std::span<cplx> out);
  // Includes the 1/n factor.
  void inverse(std::span<const cplx> in, std::span<cplx> out);

 private:
  std::size_t n_;
  cplx* buffer_ = nullptr;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

// Angular wavenumbers in FFTW order for n points spaced dx apart.
std::vector<double> wavenumbers(std::size_t n, double dx);

// d psi / dx by spectral differentiation on a periodic grid.
std::vector<cplx> spectral_derivative(FourierTransform& fft, std::span<const double> k,
                                      std::span<const cplx> psi);

}  // namespace gausson
