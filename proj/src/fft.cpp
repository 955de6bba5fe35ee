#include "geomark/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

#include "geomark/errors.hpp"

namespace geomark {

namespace detail {

void* fft_alloc(std::size_t bytes) {
  void* p = fftw_malloc(bytes == 0 ? 1 : bytes);
  if (p == nullptr) throw std::bad_alloc();
  return p;
}

void fft_free(void* p) noexcept { fftw_free(p); }

}  // namespace detail

namespace {

// FFTW's planner is not thread-safe; plans live for the whole process.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::pair<fftw_plan, fftw_plan> plans_for(int n) {
  static std::map<int, std::pair<fftw_plan, fftw_plan>> cache;
  std::lock_guard lock(planner_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  const std::size_t count = static_cast<std::size_t>(n) * n;
  auto* a = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * count));
  auto* b = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * count));
  fftw_plan fwd = fftw_plan_dft_2d(n, n, a, b, FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_plan inv = fftw_plan_dft_2d(n, n, a, b, FFTW_BACKWARD, FFTW_ESTIMATE);
  fftw_free(a);
  fftw_free(b);
  if (fwd == nullptr || inv == nullptr) throw NumericalError("FFTW planning failed");
  return cache.emplace(n, std::make_pair(fwd, inv)).first->second;
}

fftw_complex* raw(const ComplexField& f) {
  return reinterpret_cast<fftw_complex*>(const_cast<Complex*>(f.data()));
}

}  // namespace

Fft2d::Fft2d(int n) : n_(n) {
  const auto [fwd, inv] = plans_for(n);
  forward_plan_ = fwd;
  inverse_plan_ = inv;
}

void Fft2d::forward(const ComplexField& in, ComplexField& out) const {
  out.resize(size());
  fftw_execute_dft(static_cast<fftw_plan>(forward_plan_), raw(in), raw(out));
}

void Fft2d::inverse(const ComplexField& in, ComplexField& out) const {
  out.resize(size());
  fftw_execute_dft(static_cast<fftw_plan>(inverse_plan_), raw(in), raw(out));
}

}  // namespace geomark
