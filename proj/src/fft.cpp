#include "fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace adm3::detail {

namespace {
// The FFTW planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

Fft::Fft(std::vector<int> dims) {
  if (dims.empty()) throw std::invalid_argument("Fft needs at least one dimension");
  for (int d : dims) {
    if (d < 1) throw std::invalid_argument("Fft dimension must be positive");
    size_ *= static_cast<std::size_t>(d);
  }
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_complex* buf = fftw_alloc_complex(size_);
  if (!buf) throw std::bad_alloc();
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  const int rank = static_cast<int>(dims.size());
  fwd_ = fftw_plan_dft(rank, dims.data(), buf, buf, FFTW_FORWARD, flags);
  bwd_ = fftw_plan_dft(rank, dims.data(), buf, buf, FFTW_BACKWARD, flags);
  fftw_free(buf);
  if (!fwd_ || !bwd_) throw std::runtime_error("FFTW planning failed");
}

Fft::~Fft() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (fwd_) fftw_destroy_plan(fwd_);
  if (bwd_) fftw_destroy_plan(bwd_);
}

void Fft::forward(std::complex<double>* data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(fwd_, p, p);
}

void Fft::backward(std::complex<double>* data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(bwd_, p, p);
}

}  // namespace adm3::detail
