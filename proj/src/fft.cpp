#include "panda/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

namespace panda {

namespace {
std::mutex plan_mutex;

std::vector<std::complex<double>> run_fft(const std::vector<std::complex<double>>& in, int sign) {
    const int n = static_cast<int>(in.size());
    std::vector<std::complex<double>> out(in.size());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(plan_mutex);
        plan = fftw_plan_dft_1d(
            n,
            reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data())),
            reinterpret_cast<fftw_complex*>(out.data()), sign, FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(plan_mutex);
        fftw_destroy_plan(plan);
    }
    return out;
}
}  // namespace

std::vector<std::complex<double>> fft_forward(const std::vector<std::complex<double>>& in) {
    return run_fft(in, FFTW_FORWARD);
}

std::vector<std::complex<double>> fft_inverse(const std::vector<std::complex<double>>& in) {
    auto out = run_fft(in, FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(in.size());
    for (auto& v : out) v *= scale;
    return out;
}

std::vector<double> periodogram_hann(const VectorXd& series) {
    const int n = static_cast<int>(series.size());
    if (n < 2) throw InvalidInput("periodogram needs at least 2 samples");
    const double mean = series.mean();
    std::vector<std::complex<double>> buf(n);
    for (int i = 0; i < n; ++i) {
        const double w = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / (n - 1)));
        buf[i] = (series[i] - mean) * w;
    }
    auto spec = fft_forward(buf);
    std::vector<double> power(n / 2 + 1);
    for (int k = 0; k <= n / 2; ++k) power[k] = std::norm(spec[k]);
    return power;
}

int dominant_period_samples(const VectorXd& series) {
    const int n = static_cast<int>(series.size());
    auto power = periodogram_hann(series);
    int kbest = 0;
    double pbest = 0.0;
    for (std::size_t k = 1; k < power.size(); ++k) {
        if (power[k] > pbest) {
            pbest = power[k];
            kbest = static_cast<int>(k);
        }
    }
    if (kbest == 0 || pbest <= 0.0) return std::max(1, n / 20);
    return std::max(1, static_cast<int>(std::lround(static_cast<double>(n) / kbest)));
}

}  // namespace panda
