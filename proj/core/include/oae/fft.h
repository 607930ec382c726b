#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace oae {

// Forward real DFT of `input`, zero-padded (or truncated) to `n_fft` points.
// Returns bins 0..n_fft/2. Thread-safe.
std::vector<std::complex<double>> RealDft(std::span<const double> input, std::size_t n_fft);

// Inverse of RealDft for an `n_fft`-point real signal (unnormalized input
// spectrum, output scaled by 1/n_fft).
std::vector<double> InverseRealDft(std::span<const std::complex<double>> spectrum,
                                   std::size_t n_fft);

std::size_t NextPowerOfTwo(std::size_t n);

}  // namespace oae
