#pragma once

#include <complex>
#include <vector>

namespace mvr::dsp {

using cplx = std::complex<double>;

/// In-place forward DFT. Radix-2 iterative FFT for power-of-two lengths,
/// direct O(n^2) evaluation otherwise (array axes here are small).
void fft(std::vector<cplx>& x);

/// Forward DFT along one axis of a contiguous 3D array [n0][n1][n2].
/// axis in {0,1,2}.
void fft_axis(std::vector<cplx>& data, int n0, int n1, int n2, int axis);

}  // namespace mvr::dsp
