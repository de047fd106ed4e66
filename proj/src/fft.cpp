#include "dislat/fft.hpp"

#include <mutex>
#include <new>
#include <utility>

#include "dislat/errors.hpp"

namespace dislat {

namespace {
// The FFTW planner is not thread safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

FftPlan::FftPlan(int size) : size_(size) {
  if (size < 1) throw ConfigError("FFT size must be positive");
  std::lock_guard lock(planner_mutex());
  buffer_ = fftw_alloc_complex(static_cast<std::size_t>(size));
  if (buffer_ == nullptr) throw std::bad_alloc();
  forward_ = fftw_plan_dft_1d(size, buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
  backward_ = fftw_plan_dft_1d(size, buffer_, buffer_, FFTW_BACKWARD, FFTW_ESTIMATE);
  if (forward_ == nullptr || backward_ == nullptr) {
    if (forward_) fftw_destroy_plan(forward_);
    if (backward_) fftw_destroy_plan(backward_);
    fftw_free(buffer_);
    throw NumericError("FFTW could not create a plan");
  }
}

FftPlan::~FftPlan() { release(); }

FftPlan::FftPlan(FftPlan&& other) noexcept
    : size_(std::exchange(other.size_, 0)),
      buffer_(std::exchange(other.buffer_, nullptr)),
      forward_(std::exchange(other.forward_, nullptr)),
      backward_(std::exchange(other.backward_, nullptr)) {}

FftPlan& FftPlan::operator=(FftPlan&& other) noexcept {
  if (this != &other) {
    release();
    size_ = std::exchange(other.size_, 0);
    buffer_ = std::exchange(other.buffer_, nullptr);
    forward_ = std::exchange(other.forward_, nullptr);
    backward_ = std::exchange(other.backward_, nullptr);
  }
  return *this;
}

void FftPlan::release() noexcept {
  if (buffer_ == nullptr) return;
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(forward_);
  fftw_destroy_plan(backward_);
  fftw_free(buffer_);
  buffer_ = nullptr;
}

std::span<std::complex<double>> FftPlan::data() noexcept {
  return {reinterpret_cast<std::complex<double>*>(buffer_), static_cast<std::size_t>(size_)};
}

std::span<const std::complex<double>> FftPlan::data() const noexcept {
  return {reinterpret_cast<const std::complex<double>*>(buffer_), static_cast<std::size_t>(size_)};
}

void FftPlan::forward() noexcept { fftw_execute(forward_); }
void FftPlan::backward() noexcept { fftw_execute(backward_); }

}  // namespace dislat
