#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace pcseg {

using Complex = std::complex<double>;

/// In-place 2D DFT of a row-major rows x cols array. The inverse is scaled by 1/(rows*cols).
inline void fft2(std::vector<Complex> &data, int rows, int cols, bool inverse = false) {
  Eigen::FFT<double> fft;
  std::vector<Complex> in(static_cast<std::size_t>(cols)), out;
  for (int r = 0; r < rows; ++r) {
    auto *row = data.data() + static_cast<std::size_t>(r) * cols;
    in.assign(row, row + cols);
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    std::copy(out.begin(), out.end(), row);
  }
  in.resize(static_cast<std::size_t>(rows));
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) in[static_cast<std::size_t>(r)] = data[static_cast<std::size_t>(r) * cols + c];
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    for (int r = 0; r < rows; ++r) data[static_cast<std::size_t>(r) * cols + c] = out[static_cast<std::size_t>(r)];
  }
}

} // namespace pcseg
