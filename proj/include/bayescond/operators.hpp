#pragma once

#include <memory>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "bayescond/schedule.hpp"

namespace bayescond {

// Structured forward operators.  Fourier variants are stored by their
// frequency response on a row-major 2D grid and realized as real linear
// maps F^T diag(.) F with a unitary DFT, so real signals stay real at the
// API surface (responses must be conjugate-symmetric on the grid).

struct IdentityOp {};

struct InpaintMaskOp {
  Eigen::VectorXd mask;  // entries in {0, 1}
};

struct FourierMaskOp {
  Eigen::VectorXd kmask;  // entries in {0, 1}, conjugate-symmetric
  int rows = 0, cols = 0;
};

struct FourierFilterOp {
  Eigen::VectorXd spectrum;  // per-frequency |H| >= 0, conjugate-symmetric
  int rows = 0, cols = 0;
};

struct BoxDownsampleOp {
  std::vector<int> dims;  // [n] or [rows, cols]
  int factor = 1;         // per-side factor; block size r = factor^dims.size()
  int r = 1;
  std::vector<int> pixels_by_block;  // block j owns entries [j*r, (j+1)*r)
};

struct DenseOp {
  Eigen::MatrixXd a;  // m x d
  // Eigendecomposition of A^T A, precomputed so lifted closed forms are
  // O(d^2) per apply and shared across timesteps.
  Eigen::MatrixXd gram_evecs;
  Eigen::VectorXd gram_evals;
};

class LinearOperator {
 public:
  enum class Variant { Identity, InpaintMask, FourierMask, FourierFilter, BoxDownsample, Dense };

  static LinearOperator identity(Eigen::Index d);
  static LinearOperator inpaint_mask(Eigen::VectorXd mask);
  static LinearOperator fourier_mask(Eigen::VectorXd kmask, int rows, int cols);
  static LinearOperator fourier_filter(Eigen::VectorXd spectrum, int rows, int cols);
  static LinearOperator box_downsample(std::vector<int> dims, int factor);
  static LinearOperator dense(Eigen::MatrixXd a);

  Variant variant() const;
  Eigen::Index d() const { return d_; }
  Eigen::Index m() const { return m_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& y) const;

  // Column-by-column materialization via apply on basis vectors; the dense
  // oracle for every structured variant.
  Eigen::MatrixXd to_dense(Eigen::Index budget = 4096) const;

  // Variant payload access (read-only; throws on mismatch).
  const InpaintMaskOp& as_inpaint_mask() const;
  const FourierMaskOp& as_fourier_mask() const;
  const FourierFilterOp& as_fourier_filter() const;
  const BoxDownsampleOp& as_box_downsample() const;
  const DenseOp& as_dense() const;

 private:
  using Data = std::variant<IdentityOp, InpaintMaskOp, FourierMaskOp,
                            FourierFilterOp, BoxDownsampleOp, DenseOp>;
  LinearOperator(std::shared_ptr<const Data> data, Eigen::Index d, Eigen::Index m)
      : data_(std::move(data)), d_(d), m_(m) {}

  std::shared_ptr<const Data> data_;
  Eigen::Index d_ = 0, m_ = 0;

  friend struct LiftedOperator;
  const Data& data() const { return *data_; }
};

// Timestep-lifted operator A_t = (abar I + kt^2 A^T A)^{1/2}.  The whitened
// observation model is xhat = A_t x0 + sqrt(noise_var) n with noise_var =
// 1 - abar_t (VP) or sigma_t^2 (VE, where abar = 1 and kt = v_t).
struct LiftedOperator {
  LinearOperator base;
  double abar = 1.0;
  double kt = 0.0;
  double noise_var = 0.0;
  int t = 0;
};

LiftedOperator lift(const LinearOperator& op, const NoiseSchedule& s,
                    double sigma0, int t);

Eigen::VectorXd apply_At(const LiftedOperator& L, const Eigen::VectorXd& x);
Eigen::VectorXd apply_At_inv(const LiftedOperator& L, const Eigen::VectorXd& x);

// A_t materialized by basis probing (oracle-scale only).
Eigen::MatrixXd lifted_to_dense(const LiftedOperator& L, Eigen::Index budget = 4096);

struct WhitenedState {
  Eigen::VectorXd xhat;
  int t = 0;
};

// xhat_t = A_t^{-1} (sqrt(abar) x_t + kt^2 A^T y).
WhitenedState whiten_combine(const LiftedOperator& L, const Eigen::VectorXd& x_t,
                             const Eigen::VectorXd& y);

// argmin_x 1/2 |x - x_d|^2 + lambda/2 |A_t x - xhat|^2
//        = (I + lambda A_t^T A_t)^{-1} (x_d + lambda A_t^T xhat),
// via each variant's closed form (A_t is symmetric, so A_t^T = A_t).
Eigen::VectorXd dc_solve(const LiftedOperator& L, const Eigen::VectorXd& x_d,
                         const Eigen::VectorXd& xhat, double lambda_t);

// Generic conjugate-gradient route for the same solve; must agree with the
// closed forms.  max_iter < 0 means 10*d.
Eigen::VectorXd dc_solve_cg(const LiftedOperator& L, const Eigen::VectorXd& x_d,
                            const Eigen::VectorXd& xhat, double lambda_t,
                            double tol = 1e-10, int max_iter = -1);

// Conjugate-symmetric binary mask / spectrum helpers for 2D grids.
bool is_conjugate_symmetric(const Eigen::VectorXd& v, int rows, int cols,
                            double tol = 0.0);
Eigen::VectorXd symmetrize_spectrum(const Eigen::VectorXd& v, int rows, int cols);

}  // namespace bayescond
