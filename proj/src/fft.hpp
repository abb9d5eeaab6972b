#pragma once

#include <complex>

#include <Eigen/Core>

namespace bayescond::detail {

// Unitary 2D DFT on row-major grids (1/sqrt(rows*cols) both directions),
// so F^T F = I holds exactly in the operator algebra.  Thread-safe; FFTW
// plans are cached per grid size behind a mutex.
Eigen::VectorXcd fft2_unitary(const Eigen::VectorXcd& x, int rows, int cols,
                              bool inverse);

Eigen::VectorXcd fft2_unitary(const Eigen::VectorXd& x, int rows, int cols);

// Inverse transform of a conjugate-symmetric spectrum; returns the real part.
Eigen::VectorXd ifft2_real(const Eigen::VectorXcd& c, int rows, int cols);

}  // namespace bayescond::detail
