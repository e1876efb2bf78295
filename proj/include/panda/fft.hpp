#pragma once

#include <complex>
#include <vector>

#include "panda/common.hpp"

namespace panda {

// Complex FFT wrappers around FFTW. Plan creation is serialized internally
// (FFTW planning is not thread safe); execution is reentrant.
std::vector<std::complex<double>> fft_forward(const std::vector<std::complex<double>>& in);
std::vector<std::complex<double>> fft_inverse(const std::vector<std::complex<double>>& in);

// Hann-windowed periodogram of a real series, mean removed first.
// Returns power at the n/2+1 non-negative frequency bins.
std::vector<double> periodogram_hann(const VectorXd& series);

// Period (in samples) of the dominant non-DC periodogram peak; falls back to
// length/20 when the spectrum carries no usable peak.
int dominant_period_samples(const VectorXd& series);

}  // namespace panda
