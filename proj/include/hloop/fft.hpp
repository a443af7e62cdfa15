#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace hloop::fft {

using cplx = std::complex<double>;

namespace detail {

// FFTW planning is not thread-safe; execution with new-array functions is.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int n0, int n1, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_tuple(n0, n1, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::size_t total = static_cast<std::size_t>(n0) * static_cast<std::size_t>(n1 > 0 ? n1 : 1);
    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total));
    unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan p = n1 > 0 ? fftw_plan_dft_2d(n0, n1, buf, buf, sign, flags)
                         : fftw_plan_dft_1d(n0, buf, buf, sign, flags);
    fftw_free(buf);
    plans_.emplace(key, p);
    return p;
  }

 private:
  PlanCache() = default;
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

inline void run(std::vector<cplx>& data, int n0, int n1, int sign) {
  if (data.empty()) return;
  fftw_plan p = PlanCache::instance().get(n0, n1, sign);
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(p, ptr, ptr);
}

}  // namespace detail

// Unnormalized transforms: forward uses e^{-2πijk/N}, inverse e^{+2πijk/N}.
inline void forward(std::vector<cplx>& data) {
  detail::run(data, static_cast<int>(data.size()), 0, FFTW_FORWARD);
}
inline void inverse(std::vector<cplx>& data) {
  detail::run(data, static_cast<int>(data.size()), 0, FFTW_BACKWARD);
}

// Row-major 2D transforms of an n0 × n1 array.
inline void forward2d(std::vector<cplx>& data, int n0, int n1) {
  detail::run(data, n0, n1, FFTW_FORWARD);
}
inline void inverse2d(std::vector<cplx>& data, int n0, int n1) {
  detail::run(data, n0, n1, FFTW_BACKWARD);
}

// Signed frequency of index k in a length-n transform.
inline int frequency(std::size_t k, std::size_t n) {
  return k <= n / 2 ? static_cast<int>(k) : static_cast<int>(k) - static_cast<int>(n);
}

}  // namespace hloop::fft
