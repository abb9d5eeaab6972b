#include "fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

#include "bayescond/errors.hpp"

namespace bayescond::detail {

namespace {

// fftw planning is not thread-safe; execution via fftw_execute_dft on
// caller-owned arrays is.  Plans are created once per (rows, cols, sign)
// on fftw_malloc'd scratch so alignment matches later new-array executes.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int rows, int cols, int sign) {
    std::lock_guard<std::mutex> lock(mu_);
    const Key key{rows, cols, sign};
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    const std::size_t n = static_cast<std::size_t>(rows) * cols;
    fftw_complex* in = fftw_alloc_complex(n);
    fftw_complex* out = fftw_alloc_complex(n);
    fftw_plan plan = fftw_plan_dft_2d(rows, cols, in, out, sign, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    if (!plan) throw ResourceError("fftw_plan_dft_2d failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  using Key = std::tuple<int, int, int>;
  std::mutex mu_;
  std::map<Key, fftw_plan> plans_;
};

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : p(fftw_alloc_complex(n)) {
    if (!p) throw ResourceError("fftw_alloc_complex failed");
  }
  ~FftwBuffer() { fftw_free(p); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* p;
};

Eigen::VectorXcd run(const Eigen::VectorXcd& x, int rows, int cols, int sign) {
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  if (static_cast<std::size_t>(x.size()) != n)
    throw ShapeError("fft2: input length does not match grid");
  FftwBuffer in(n), out(n);
  for (std::size_t i = 0; i < n; ++i) {
    in.p[i][0] = x[static_cast<Eigen::Index>(i)].real();
    in.p[i][1] = x[static_cast<Eigen::Index>(i)].imag();
  }
  fftw_execute_dft(PlanCache::instance().get(rows, cols, sign), in.p, out.p);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  Eigen::VectorXcd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    y[static_cast<Eigen::Index>(i)] =
        std::complex<double>(out.p[i][0] * scale, out.p[i][1] * scale);
  return y;
}

}  // namespace

Eigen::VectorXcd fft2_unitary(const Eigen::VectorXcd& x, int rows, int cols,
                              bool inverse) {
  return run(x, rows, cols, inverse ? FFTW_BACKWARD : FFTW_FORWARD);
}

Eigen::VectorXcd fft2_unitary(const Eigen::VectorXd& x, int rows, int cols) {
  return run(x.cast<std::complex<double>>(), rows, cols, FFTW_FORWARD);
}

Eigen::VectorXd ifft2_real(const Eigen::VectorXcd& c, int rows, int cols) {
  return run(c, rows, cols, FFTW_BACKWARD).real();
}

}  // namespace bayescond::detail
