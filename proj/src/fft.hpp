#pragma once

#include <complex>
#include <vector>

struct fftw_plan_s;

namespace adm3::detail {

// In-place complex DFT of a row-major array (last dimension fastest).
// Forward uses exp(-2 pi i jk/n); backward is unnormalized.
class Fft {
 public:
  explicit Fft(std::vector<int> dims);
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  void forward(std::complex<double>* data) const;
  void backward(std::complex<double>* data) const;
  std::size_t size() const { return size_; }

 private:
  fftw_plan_s* fwd_ = nullptr;
  fftw_plan_s* bwd_ = nullptr;
  std::size_t size_ = 1;
};

}  // namespace adm3::detail
