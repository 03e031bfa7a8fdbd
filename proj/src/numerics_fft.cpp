#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>
#include <string>
#include <utility>

#include <fftw3.h>

#include "mfpod/numerics.hpp"

namespace mfpod {

namespace {

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

void require_finite(const Eigen::Ref<const Matrix>& m, std::string_view what) {
  if (!m.allFinite()) {
    throw Error(ErrorKind::Data, std::string(what) + " contains non-finite values");
  }
}

Grid2D::Grid2D(int n, double half_length) : n_(n), half_length_(half_length) {
  if (n < 4 || n % 2 != 0) {
    throw Error(ErrorKind::Dimension, "grid size must be even and >= 4, got " + std::to_string(n));
  }
  if (!(half_length > 0.0) || !std::isfinite(half_length)) {
    throw Error(ErrorKind::Dimension, "grid half-length must be positive");
  }
}

double Grid2D::wavenumber(int k) const noexcept {
  const int m = k < n_ / 2 ? k : k - n_;
  return std::numbers::pi * m / half_length_;
}

RealFft2::RealFft2(int n) : n_(n) {
  if (n < 2) throw Error(ErrorKind::Dimension, "fft size must be >= 2");
  const std::size_t real_count = std::size_t(n) * n;
  const std::size_t complex_count = std::size_t(n) * (n / 2 + 1);
  std::lock_guard lock(planner_mutex());
  real_ = fftw_alloc_real(real_count);
  complex_ = reinterpret_cast<std::complex<double>*>(fftw_alloc_complex(complex_count));
  auto* c = reinterpret_cast<fftw_complex*>(complex_);
  // ESTIMATE keeps plan selection, and therefore rounding, identical across runs.
  forward_plan_ = fftw_plan_dft_r2c_2d(n, n, real_, c, FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r_2d(n, n, c, real_, FFTW_ESTIMATE | FFTW_DESTROY_INPUT);
}

RealFft2::~RealFft2() { release(); }

RealFft2::RealFft2(RealFft2&& other) noexcept
    : n_(other.n_),
      real_(other.real_),
      complex_(other.complex_),
      forward_plan_(other.forward_plan_),
      inverse_plan_(other.inverse_plan_) {
  other.real_ = nullptr;
  other.complex_ = nullptr;
  other.forward_plan_ = nullptr;
  other.inverse_plan_ = nullptr;
}

RealFft2& RealFft2::operator=(RealFft2&& other) noexcept {
  if (this != &other) {
    release();
    n_ = other.n_;
    real_ = std::exchange(other.real_, nullptr);
    complex_ = std::exchange(other.complex_, nullptr);
    forward_plan_ = std::exchange(other.forward_plan_, nullptr);
    inverse_plan_ = std::exchange(other.inverse_plan_, nullptr);
  }
  return *this;
}

void RealFft2::release() noexcept {
  if (!real_ && !forward_plan_) return;
  std::lock_guard lock(planner_mutex());
  if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (inverse_plan_) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  fftw_free(real_);
  fftw_free(complex_);
  real_ = nullptr;
  complex_ = nullptr;
  forward_plan_ = nullptr;
  inverse_plan_ = nullptr;
}

void RealFft2::forward(const Matrix& field, CMatrix& spectrum) {
  if (field.rows() != n_ || field.cols() != n_) {
    throw Error(ErrorKind::Dimension, "fft input must be " + std::to_string(n_) + "x" +
                                          std::to_string(n_));
  }
  // Column-major (ix, iy) is row-major [iy][ix] for FFTW, so ix is the halved axis.
  std::memcpy(real_, field.data(), sizeof(double) * field.size());
  fftw_execute(static_cast<fftw_plan>(forward_plan_));
  spectrum.resize(half(), n_);
  std::memcpy(spectrum.data(), complex_, sizeof(std::complex<double>) * spectrum.size());
}

void RealFft2::inverse(const CMatrix& spectrum, Matrix& field) {
  if (spectrum.rows() != half() || spectrum.cols() != n_) {
    throw Error(ErrorKind::Dimension, "half-spectrum shape mismatch");
  }
  std::memcpy(complex_, spectrum.data(), sizeof(std::complex<double>) * spectrum.size());
  fftw_execute(static_cast<fftw_plan>(inverse_plan_));
  field.resize(n_, n_);
  const double scale = 1.0 / (double(n_) * n_);
  for (Eigen::Index i = 0; i < field.size(); ++i) field.data()[i] = real_[i] * scale;
}

SpectralField fft2(const Matrix& field, const Grid2D& grid) {
  if (field.rows() != field.cols()) {
    throw Error(ErrorKind::Dimension, "fft2 requires a square field");
  }
  if (field.rows() != grid.n()) {
    throw Error(ErrorKind::Dimension, "field size does not match grid");
  }
  const int n = grid.n();
  RealFft2 plan(n);
  CMatrix half;
  plan.forward(field, half);
  SpectralField out{grid, CMatrix(n, n)};
  for (int ky = 0; ky < n; ++ky) {
    for (int kx = 0; kx < n; ++kx) {
      if (kx <= n / 2) {
        out.coefficients(kx, ky) = half(kx, ky);
      } else {
        out.coefficients(kx, ky) = std::conj(half(n - kx, (n - ky) % n));
      }
    }
  }
  return out;
}

Matrix ifft2(const SpectralField& spectrum) {
  const int n = spectrum.grid.n();
  if (spectrum.coefficients.rows() != n || spectrum.coefficients.cols() != n) {
    throw Error(ErrorKind::Dimension, "spectrum shape does not match grid");
  }
  // Full complex inverse, then keep the real part.
  CMatrix work = spectrum.coefficients;
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    auto* p = reinterpret_cast<fftw_complex*>(work.data());
    plan = fftw_plan_dft_2d(n, n, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return work.real() / (double(n) * n);
}

bool is_conjugate_symmetric(const SpectralField& spectrum, double rel_tol) {
  const int n = spectrum.grid.n();
  const auto& c = spectrum.coefficients;
  const double scale = c.cwiseAbs().maxCoeff();
  if (scale == 0.0) return true;
  for (int ky = 0; ky < n; ++ky) {
    for (int kx = 0; kx < n; ++kx) {
      const auto mirror = std::conj(c((n - kx) % n, (n - ky) % n));
      if (std::abs(c(kx, ky) - mirror) > rel_tol * scale) return false;
    }
  }
  return true;
}

}  // namespace mfpod
