#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace gbq {

bool is_power_of_two(std::size_t n);

/// In-place iterative radix-2 FFT. Forward uses exp(-2 pi i k n / N);
/// the inverse applies the 1/N normalization.
void fft_inplace(std::span<std::complex<double>> data, bool inverse);

}  // namespace gbq
