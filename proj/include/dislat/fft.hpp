#pragma once

#include <complex>
#include <span>

#include <fftw3.h>

namespace dislat {

/// In-place complex FFT pair on an owned, FFTW-aligned buffer. Unnormalized in both directions.
/// Plans use FFTW_ESTIMATE so that repeated runs execute the same algorithm bit for bit.
class FftPlan {
 public:
  explicit FftPlan(int size);
  ~FftPlan();

  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  FftPlan(FftPlan&& other) noexcept;
  FftPlan& operator=(FftPlan&& other) noexcept;

  int size() const noexcept { return size_; }
  std::span<std::complex<double>> data() noexcept;
  std::span<const std::complex<double>> data() const noexcept;

  /// data <- sum_j data_j e^{-2 pi i j m / n}
  void forward() noexcept;
  /// data <- sum_m data_m e^{+2 pi i j m / n}
  void backward() noexcept;

 private:
  void release() noexcept;

  int size_ = 0;
  fftw_complex* buffer_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace dislat
