#include "oae/fft.h"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <utility>

namespace oae {
namespace {

// FFTW planning is not thread-safe; execution with new-array calls is. Plans
// are created once per size under a lock and reused.
struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

std::mutex& PlanMutex() {
  static std::mutex m;
  return m;
}

const PlanPair& PlansFor(std::size_t n) {
  static std::map<std::size_t, PlanPair> plans;
  std::lock_guard<std::mutex> lock(PlanMutex());
  auto it = plans.find(n);
  if (it != plans.end()) return it->second;
  const int len = static_cast<int>(n);
  double* real = fftw_alloc_real(n);
  fftw_complex* cplx = fftw_alloc_complex(n / 2 + 1);
  PlanPair pair;
  pair.forward = fftw_plan_dft_r2c_1d(len, real, cplx, FFTW_ESTIMATE | FFTW_UNALIGNED);
  pair.inverse = fftw_plan_dft_c2r_1d(len, cplx, real,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_DESTROY_INPUT);
  fftw_free(real);
  fftw_free(cplx);
  return plans.emplace(n, pair).first->second;
}

}  // namespace

std::size_t NextPowerOfTwo(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<std::complex<double>> RealDft(std::span<const double> input, std::size_t n_fft) {
  if (n_fft == 0) return {};
  std::vector<double> padded(n_fft, 0.0);
  std::copy_n(input.begin(), std::min(input.size(), n_fft), padded.begin());
  std::vector<std::complex<double>> out(n_fft / 2 + 1);
  const PlanPair& plans = PlansFor(n_fft);
  fftw_execute_dft_r2c(plans.forward, padded.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

std::vector<double> InverseRealDft(std::span<const std::complex<double>> spectrum,
                                   std::size_t n_fft) {
  if (n_fft == 0) return {};
  std::vector<std::complex<double>> work(n_fft / 2 + 1);
  std::copy_n(spectrum.begin(), std::min(spectrum.size(), work.size()), work.begin());
  std::vector<double> out(n_fft);
  const PlanPair& plans = PlansFor(n_fft);
  fftw_execute_dft_c2r(plans.inverse, reinterpret_cast<fftw_complex*>(work.data()), out.data());
  const double scale = 1.0 / static_cast<double>(n_fft);
  for (double& v : out) v *= scale;
  return out;
}

}  // namespace oae
