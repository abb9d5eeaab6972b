#include "bayescond/operators.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "bayescond/errors.hpp"
#include "fft.hpp"

namespace bayescond {

namespace {

void check_len(const Eigen::VectorXd& v, Eigen::Index want, const char* what) {
  if (v.size() != want)
    throw ShapeError(std::string(what) + ": got length " + std::to_string(v.size()) +
                     ", want " + std::to_string(want));
}

void check_binary(const Eigen::VectorXd& v, const char* what) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] != 0.0 && v[i] != 1.0)
      throw ParameterError(std::string(what) + ": entries must be 0 or 1");
}

Eigen::Index mirror_index(Eigen::Index i, int rows, int cols) {
  const Eigen::Index r = i / cols, c = i % cols;
  const Eigen::Index mr = (rows - r) % rows, mc = (cols - c) % cols;
  return mr * cols + mc;
}

}  // namespace

bool is_conjugate_symmetric(const Eigen::VectorXd& v, int rows, int cols, double tol) {
  if (v.size() != static_cast<Eigen::Index>(rows) * cols) return false;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v[i] - v[mirror_index(i, rows, cols)]) > tol) return false;
  return true;
}

Eigen::VectorXd symmetrize_spectrum(const Eigen::VectorXd& v, int rows, int cols) {
  if (v.size() != static_cast<Eigen::Index>(rows) * cols)
    throw ShapeError("symmetrize_spectrum: length does not match grid");
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out[i] = 0.5 * (v[i] + v[mirror_index(i, rows, cols)]);
  return out;
}

LinearOperator LinearOperator::identity(Eigen::Index d) {
  if (d < 1) throw ParameterError("identity: d >= 1 required");
  return LinearOperator(std::make_shared<const Data>(IdentityOp{}), d, d);
}

LinearOperator LinearOperator::inpaint_mask(Eigen::VectorXd mask) {
  check_binary(mask, "inpaint_mask");
  const Eigen::Index d = mask.size();
  if (d < 1) throw ParameterError("inpaint_mask: empty mask");
  return LinearOperator(std::make_shared<const Data>(InpaintMaskOp{std::move(mask)}), d, d);
}

LinearOperator LinearOperator::fourier_mask(Eigen::VectorXd kmask, int rows, int cols) {
  const Eigen::Index d = static_cast<Eigen::Index>(rows) * cols;
  check_len(kmask, d, "fourier_mask");
  check_binary(kmask, "fourier_mask");
  if (!is_conjugate_symmetric(kmask, rows, cols))
    throw ParameterError("fourier_mask: kmask must be conjugate-symmetric on the grid");
  return LinearOperator(std::make_shared<const Data>(FourierMaskOp{std::move(kmask), rows, cols}), d, d);
}

LinearOperator LinearOperator::fourier_filter(Eigen::VectorXd spectrum, int rows, int cols) {
  const Eigen::Index d = static_cast<Eigen::Index>(rows) * cols;
  check_len(spectrum, d, "fourier_filter");
  if ((spectrum.array() < 0.0).any())
    throw ParameterError("fourier_filter: spectrum magnitudes must be >= 0");
  if (!is_conjugate_symmetric(spectrum, rows, cols, 0.0))
    throw ParameterError("fourier_filter: spectrum must be conjugate-symmetric on the grid");
  return LinearOperator(std::make_shared<const Data>(FourierFilterOp{std::move(spectrum), rows, cols}), d, d);
}

LinearOperator LinearOperator::box_downsample(std::vector<int> dims, int factor) {
  if (factor < 1) throw ParameterError("box_downsample: factor >= 1 required");
  if (dims.empty() || dims.size() > 2)
    throw ParameterError("box_downsample: dims must be [n] or [rows, cols]");
  Eigen::Index d = 1;
  for (int n : dims) {
    if (n < 1 || n % factor != 0)
      throw ParameterError("box_downsample: factor must divide every grid dimension");
    d *= n;
  }
  BoxDownsampleOp op;
  op.dims = std::move(dims);
  op.factor = factor;
  op.r = 1;
  for (std::size_t k = 0; k < op.dims.size(); ++k) op.r *= factor;
  const Eigen::Index m = d / op.r;
  op.pixels_by_block.resize(static_cast<std::size_t>(d));
  if (op.dims.size() == 1) {
    for (Eigen::Index p = 0; p < d; ++p)
      op.pixels_by_block[static_cast<std::size_t>(p)] = static_cast<int>(p);
  } else {
    const int W = op.dims[1];
    const int bw = W / factor;
    std::size_t k = 0;
    for (Eigen::Index b = 0; b < m; ++b) {
      const int bi = static_cast<int>(b) / bw, bj = static_cast<int>(b) % bw;
      for (int di = 0; di < factor; ++di)
        for (int dj = 0; dj < factor; ++dj)
          op.pixels_by_block[k++] = (bi * factor + di) * W + (bj * factor + dj);
    }
  }
  return LinearOperator(std::make_shared<const Data>(std::move(op)), d, m);
}

LinearOperator LinearOperator::dense(Eigen::MatrixXd a) {
  const Eigen::Index m = a.rows(), d = a.cols();
  if (d < 1 || m < 1) throw ParameterError("dense: empty matrix");
  DenseOp op;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a.transpose() * a);
  if (eig.info() != Eigen::Success) throw ParameterError("dense: eigendecomposition failed");
  op.gram_evecs = eig.eigenvectors();
  op.gram_evals = eig.eigenvalues().cwiseMax(0.0);  // clamp roundoff negatives
  op.a = std::move(a);
  return LinearOperator(std::make_shared<const Data>(std::move(op)), d, m);
}

LinearOperator::Variant LinearOperator::variant() const {
  return static_cast<Variant>(data_->index());
}

const InpaintMaskOp& LinearOperator::as_inpaint_mask() const {
  if (auto* p = std::get_if<InpaintMaskOp>(data_.get())) return *p;
  throw ParameterError("operator is not an inpaint mask");
}
const FourierMaskOp& LinearOperator::as_fourier_mask() const {
  if (auto* p = std::get_if<FourierMaskOp>(data_.get())) return *p;
  throw ParameterError("operator is not a fourier mask");
}
const FourierFilterOp& LinearOperator::as_fourier_filter() const {
  if (auto* p = std::get_if<FourierFilterOp>(data_.get())) return *p;
  throw ParameterError("operator is not a fourier filter");
}
const BoxDownsampleOp& LinearOperator::as_box_downsample() const {
  if (auto* p = std::get_if<BoxDownsampleOp>(data_.get())) return *p;
  throw ParameterError("operator is not a box downsample");
}
const DenseOp& LinearOperator::as_dense() const {
  if (auto* p = std::get_if<DenseOp>(data_.get())) return *p;
  throw ParameterError("operator is not dense");
}

Eigen::VectorXd LinearOperator::apply(const Eigen::VectorXd& x) const {
  check_len(x, d_, "apply");
  return std::visit(
      [&](const auto& op) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, IdentityOp>) {
          return x;
        } else if constexpr (std::is_same_v<T, InpaintMaskOp>) {
          return op.mask.cwiseProduct(x);
        } else if constexpr (std::is_same_v<T, FourierMaskOp>) {
          Eigen::VectorXcd c = detail::fft2_unitary(x, op.rows, op.cols);
          c.array() *= op.kmask.array();
          return detail::ifft2_real(c, op.rows, op.cols);
        } else if constexpr (std::is_same_v<T, FourierFilterOp>) {
          Eigen::VectorXcd c = detail::fft2_unitary(x, op.rows, op.cols);
          c.array() *= op.spectrum.array();
          return detail::ifft2_real(c, op.rows, op.cols);
        } else if constexpr (std::is_same_v<T, BoxDownsampleOp>) {
          const double scale = 1.0 / std::sqrt(static_cast<double>(op.r));
          Eigen::VectorXd y = Eigen::VectorXd::Zero(m_);
          for (Eigen::Index b = 0; b < m_; ++b) {
            double acc = 0.0;
            for (int k = 0; k < op.r; ++k)
              acc += x[op.pixels_by_block[static_cast<std::size_t>(b * op.r + k)]];
            y[b] = acc * scale;
          }
          return y;
        } else {
          return op.a * x;
        }
      },
      *data_);
}

Eigen::VectorXd LinearOperator::apply_adjoint(const Eigen::VectorXd& y) const {
  check_len(y, m_, "apply_adjoint");
  return std::visit(
      [&](const auto& op) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, IdentityOp>) {
          return y;
        } else if constexpr (std::is_same_v<T, InpaintMaskOp>) {
          return op.mask.cwiseProduct(y);
        } else if constexpr (std::is_same_v<T, FourierMaskOp> ||
                             std::is_same_v<T, FourierFilterOp>) {
          return apply(y);  // real symmetric
        } else if constexpr (std::is_same_v<T, BoxDownsampleOp>) {
          const double scale = 1.0 / std::sqrt(static_cast<double>(op.r));
          Eigen::VectorXd x(d_);
          for (Eigen::Index b = 0; b < m_; ++b)
            for (int k = 0; k < op.r; ++k)
              x[op.pixels_by_block[static_cast<std::size_t>(b * op.r + k)]] = y[b] * scale;
          return x;
        } else {
          return op.a.transpose() * y;
        }
      },
      *data_);
}

Eigen::MatrixXd LinearOperator::to_dense(Eigen::Index budget) const {
  if (d_ > budget)
    throw ResourceError("to_dense: d = " + std::to_string(d_) +
                        " exceeds budget " + std::to_string(budget));
  if (const auto* p = std::get_if<DenseOp>(data_.get())) return p->a;
  Eigen::MatrixXd a(m_, d_);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(d_);
  for (Eigen::Index j = 0; j < d_; ++j) {
    e[j] = 1.0;
    a.col(j) = apply(e);
    e[j] = 0.0;
  }
  return a;
}

LiftedOperator lift(const LinearOperator& op, const NoiseSchedule& s,
                    double sigma0, int t) {
  if (s.kind == ScheduleKind::VP) {
    const double abar = s.alpha_bar(t);
    return LiftedOperator{op, abar, k_t(s, sigma0, t), 1.0 - abar, t};
  }
  const double vt = v_t(s, sigma0, t);
  const double sig = s.sigma(t);
  return LiftedOperator{op, 1.0, vt, sig * sig, t};
}

namespace {

// A_t is diagonalized by the same basis as A^T A; per-eigenvalue gains.
double at_gain(const LiftedOperator& L, double gram_eval) {
  return std::sqrt(L.abar + L.kt * L.kt * gram_eval);
}

// Maps x -> g(A^T A) x using each variant's diagonalizing structure.
// BoxDownsample: A^T A = (1/r) ones(r) per block, so the gain acts as
// g(0) off the block-mean direction and g(1) on it.
template <typename Gain>
Eigen::VectorXd apply_spectral(const LiftedOperator& L, const Eigen::VectorXd& x,
                               Gain&& gain) {
  const LinearOperator& base = L.base;
  check_len(x, base.d(), "lifted apply");
  switch (base.variant()) {
    case LinearOperator::Variant::Identity:
      return gain(1.0) * x;
    case LinearOperator::Variant::InpaintMask: {
      const auto& op = base.as_inpaint_mask();
      Eigen::VectorXd y(x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i) y[i] = gain(op.mask[i]) * x[i];
      return y;
    }
    case LinearOperator::Variant::FourierMask: {
      const auto& op = base.as_fourier_mask();
      Eigen::VectorXcd c = detail::fft2_unitary(x, op.rows, op.cols);
      for (Eigen::Index i = 0; i < c.size(); ++i) c[i] *= gain(op.kmask[i]);
      return detail::ifft2_real(c, op.rows, op.cols);
    }
    case LinearOperator::Variant::FourierFilter: {
      const auto& op = base.as_fourier_filter();
      Eigen::VectorXcd c = detail::fft2_unitary(x, op.rows, op.cols);
      for (Eigen::Index i = 0; i < c.size(); ++i)
        c[i] *= gain(op.spectrum[i] * op.spectrum[i]);
      return detail::ifft2_real(c, op.rows, op.cols);
    }
    case LinearOperator::Variant::BoxDownsample: {
      const auto& op = base.as_box_downsample();
      const double g0 = gain(0.0), g1 = gain(1.0);
      const double shift = (g1 - g0) / static_cast<double>(op.r);
      Eigen::VectorXd y(x.size());
      for (Eigen::Index b = 0; b < base.m(); ++b) {
        double sum = 0.0;
        for (int k = 0; k < op.r; ++k)
          sum += x[op.pixels_by_block[static_cast<std::size_t>(b * op.r + k)]];
        for (int k = 0; k < op.r; ++k) {
          const int p = op.pixels_by_block[static_cast<std::size_t>(b * op.r + k)];
          y[p] = g0 * x[p] + shift * sum;
        }
      }
      return y;
    }
    case LinearOperator::Variant::Dense: {
      const auto& op = base.as_dense();
      Eigen::VectorXd w = op.gram_evecs.transpose() * x;
      for (Eigen::Index i = 0; i < w.size(); ++i) w[i] *= gain(op.gram_evals[i]);
      return op.gram_evecs * w;
    }
  }
  throw ParameterError("unknown operator variant");
}

}  // namespace

Eigen::VectorXd apply_At(const LiftedOperator& L, const Eigen::VectorXd& x) {
  return apply_spectral(L, x, [&](double ev) { return at_gain(L, ev); });
}

Eigen::VectorXd apply_At_inv(const LiftedOperator& L, const Eigen::VectorXd& x) {
  return apply_spectral(L, x, [&](double ev) { return 1.0 / at_gain(L, ev); });
}

Eigen::MatrixXd lifted_to_dense(const LiftedOperator& L, Eigen::Index budget) {
  const Eigen::Index d = L.base.d();
  if (d > budget)
    throw ResourceError("lifted_to_dense: d exceeds budget");
  Eigen::MatrixXd a(d, d);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    e[j] = 1.0;
    a.col(j) = apply_At(L, e);
    e[j] = 0.0;
  }
  return a;
}

WhitenedState whiten_combine(const LiftedOperator& L, const Eigen::VectorXd& x_t,
                             const Eigen::VectorXd& y) {
  check_len(x_t, L.base.d(), "whiten_combine x_t");
  check_len(y, L.base.m(), "whiten_combine y");
  const Eigen::VectorXd rhs =
      std::sqrt(L.abar) * x_t + (L.kt * L.kt) * L.base.apply_adjoint(y);
  return WhitenedState{apply_At_inv(L, rhs), L.t};
}

Eigen::VectorXd dc_solve(const LiftedOperator& L, const Eigen::VectorXd& x_d,
                         const Eigen::VectorXd& xhat, double lambda_t) {
  if (lambda_t < 0.0) throw ParameterError("dc_solve: lambda_t >= 0 required");
  check_len(x_d, L.base.d(), "dc_solve x_d");
  check_len(xhat, L.base.d(), "dc_solve xhat");
  if (lambda_t == 0.0) return x_d;
  const Eigen::VectorXd rhs = x_d + lambda_t * apply_At(L, xhat);
  return apply_spectral(L, rhs, [&](double ev) {
    return 1.0 / (1.0 + lambda_t * (L.abar + L.kt * L.kt * ev));
  });
}

Eigen::VectorXd dc_solve_cg(const LiftedOperator& L, const Eigen::VectorXd& x_d,
                            const Eigen::VectorXd& xhat, double lambda_t,
                            double tol, int max_iter) {
  if (lambda_t < 0.0) throw ParameterError("dc_solve_cg: lambda_t >= 0 required");
  check_len(x_d, L.base.d(), "dc_solve_cg x_d");
  check_len(xhat, L.base.d(), "dc_solve_cg xhat");
  const Eigen::Index d = L.base.d();
  if (max_iter < 0) max_iter = static_cast<int>(10 * d);

  const auto matvec = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return v + lambda_t * (L.abar * v +
                           (L.kt * L.kt) * L.base.apply_adjoint(L.base.apply(v)));
  };

  const Eigen::VectorXd rhs = x_d + lambda_t * apply_At(L, xhat);
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) return Eigen::VectorXd::Zero(d);

  Eigen::VectorXd x = x_d;
  Eigen::VectorXd r = rhs - matvec(x);
  Eigen::VectorXd p = r;
  double rho = r.squaredNorm();
  for (int it = 0; it < max_iter; ++it) {
    if (std::sqrt(rho) <= tol * rhs_norm) return x;
    const Eigen::VectorXd ap = matvec(p);
    const double alpha = rho / p.dot(ap);
    x += alpha * p;
    r -= alpha * ap;
    const double rho_next = r.squaredNorm();
    p = r + (rho_next / rho) * p;
    rho = rho_next;
  }
  const double rel = std::sqrt(rho) / rhs_norm;
  if (rel <= tol) return x;
  throw SolverError("dc_solve_cg: no convergence, relative residual " +
                        std::to_string(rel),
                    rel);
}

}  // namespace bayescond
