#include "confplane/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>
#include <string>

namespace confplane {

namespace {

// FFTW plan creation and destruction mutate global planner state and are not
// thread-safe; execution of a plan on its own buffer is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

} // namespace

void fft2(std::vector<std::complex<double>>& data, int n, bool inverse) {
    if (n < 1 || data.size() != static_cast<std::size_t>(n) * n)
        throw std::invalid_argument("fft2: buffer size does not match n*n (n=" +
                                    std::to_string(n) + ")");
    // std::complex<double> is layout-compatible with fftw_complex.
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft_2d(n, n, buf, buf,
                                inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                FFTW_ESTIMATE);
    }
    if (!plan) throw std::runtime_error("fft2: FFTW plan creation failed");
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    if (inverse) {
        const double scale = 1.0 / (static_cast<double>(n) * n);
        for (auto& v : data) v *= scale;
    }
}

} // namespace confplane
