#pragma once

#include <complex>
#include <cstddef>
#include <new>
#include <vector>

namespace geomark {

using Complex = std::complex<double>;

namespace detail {
void* fft_alloc(std::size_t bytes);
void fft_free(void* p) noexcept;
}  // namespace detail

/// Allocator giving the SIMD alignment FFTW plans were created with.
template <class T>
struct FftAllocator {
  using value_type = T;
  FftAllocator() = default;
  template <class U>
  FftAllocator(const FftAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) { return static_cast<T*>(detail::fft_alloc(n * sizeof(T))); }
  void deallocate(T* p, std::size_t) noexcept { detail::fft_free(p); }
  template <class U>
  friend bool operator==(const FftAllocator&, const FftAllocator<U>&) noexcept {
    return true;
  }
};

using ComplexField = std::vector<Complex, FftAllocator<Complex>>;

/// Square 2D complex DFT of size n x n. Plans are shared per size and the
/// execute calls are safe from concurrent threads.
class Fft2d {
 public:
  explicit Fft2d(int n);

  int n() const noexcept { return n_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(n_) * n_; }

  /// out[k] = sum_x in[x] exp(-2 pi i k.x / n). in and out must differ.
  void forward(const ComplexField& in, ComplexField& out) const;
  /// Unnormalized inverse: out[x] = sum_k in[k] exp(+2 pi i k.x / n).
  void inverse(const ComplexField& in, ComplexField& out) const;

 private:
  int n_;
  void* forward_plan_;
  void* inverse_plan_;
};

}  // namespace geomark
