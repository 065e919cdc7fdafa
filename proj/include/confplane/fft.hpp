#pragma once

#include <complex>
#include <vector>

namespace confplane {

// In-place 2-D discrete Fourier transform of an n-by-n complex grid stored
// row-major (index j*n + i, i fastest).  The inverse transform is normalized
// by 1/n^2 so that fft2(fft2(a, n, false), n, true) == a up to round-off.
//
// Thread-safe: plan creation is serialized internally; concurrent transforms
// on distinct buffers are fine.
void fft2(std::vector<std::complex<double>>& data, int n, bool inverse);

} // namespace confplane
