#ifndef MFPOD_NUMERICS_HPP
#define MFPOD_NUMERICS_HPP

#include <complex>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mfpod/error.hpp"

namespace mfpod {

// Column-major dense storage; a single snapshot is one contiguous column.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;

//! Throws ErrorKind::Data naming `what` if any entry is NaN or infinite.
void require_finite(const Eigen::Ref<const Matrix>& m, std::string_view what);

/// Equispaced periodic grid on the square [-L, L)^2 with n points per direction.
///
/// Node i sits at -L + i * (2L / n); node n coincides with node 0. A real field
/// on the grid is an n x n Matrix indexed (ix, iy), so its flattened column-major
/// form has x running fastest.
class Grid2D {
 public:
  Grid2D() = default;
  Grid2D(int n, double half_length);

  int n() const noexcept { return n_; }
  double half_length() const noexcept { return half_length_; }
  double spacing() const noexcept { return 2.0 * half_length_ / n_; }
  double coord(int i) const noexcept { return -half_length_ + i * spacing(); }
  Eigen::Index size() const noexcept { return Eigen::Index(n_) * n_; }

  // Angular wavenumber for DFT index k (standard ordering, Nyquist taken negative).
  double wavenumber(int k) const noexcept;

  bool operator==(const Grid2D&) const = default;

 private:
  int n_ = 0;
  double half_length_ = 0.0;
};

/// Full 2-D DFT of a field: coefficients(kx, ky) in standard DFT ordering,
/// unnormalized forward transform X[k] = sum_j x[j] exp(-2 pi i j k / n).
struct SpectralField {
  Grid2D grid;
  CMatrix coefficients;
};

SpectralField fft2(const Matrix& field, const Grid2D& grid);
Matrix ifft2(const SpectralField& spectrum);

//! True when the spectrum is Hermitian, i.e. represents a real field.
bool is_conjugate_symmetric(const SpectralField& spectrum, double rel_tol = 1e-12);

/// Real-to-complex FFT plan pair for one grid size, with its own aligned work
/// buffers. Half-spectrum layout is (n/2 + 1) x n indexed (kx, ky).
/// An instance is not safe to share between threads; create one per worker.
class RealFft2 {
 public:
  explicit RealFft2(int n);
  ~RealFft2();
  RealFft2(const RealFft2&) = delete;
  RealFft2& operator=(const RealFft2&) = delete;
  RealFft2(RealFft2&& other) noexcept;
  RealFft2& operator=(RealFft2&& other) noexcept;

  int n() const noexcept { return n_; }
  int half() const noexcept { return n_ / 2 + 1; }

  void forward(const Matrix& field, CMatrix& spectrum);
  // Normalized by 1/n^2, so inverse(forward(x)) == x.
  void inverse(const CMatrix& spectrum, Matrix& field);

 private:
  void release() noexcept;

  int n_ = 0;
  double* real_ = nullptr;
  std::complex<double>* complex_ = nullptr;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

struct SvdResult {
  Matrix U;       // rows x k
  Vector sigma;   // k, descending, nonnegative
  Matrix V;       // cols x k
};

/// Thin SVD A = U diag(sigma) V^T with k = min(rows, cols).
///
/// Tall or square inputs go through the Gram matrix A^T A; trailing singular
/// values that lose relative accuracy on the first pass are deflated and
/// re-solved on their own scale. Wide inputs use one-sided Jacobi on A^T.
SvdResult thin_svd(const Matrix& a);

enum class InterpMode { Nearest, Bilinear };

/// Precomputed periodic interpolation stencil between two grids sharing L.
/// Nearest-node ties resolve to the lower-index neighbour.
class SpatialInterpolator {
 public:
  SpatialInterpolator(const Grid2D& src, const Grid2D& dst, InterpMode mode);

  const Grid2D& src() const noexcept { return src_; }
  const Grid2D& dst() const noexcept { return dst_; }

  // Flattened field of src.size() values into dst.size() values.
  void apply(std::span<const double> in, std::span<double> out) const;
  Matrix apply(const Matrix& field) const;

 private:
  struct Stencil {
    int lo;
    int hi;
    double w;  // weight of hi
  };

  Grid2D src_;
  Grid2D dst_;
  std::vector<Stencil> stencil_;  // one per dst index, shared by both axes
};

Matrix interp_space(const Matrix& field, const Grid2D& src, const Grid2D& dst, InterpMode mode);

/// Piecewise-linear interpolation of a series whose columns sit at t_src onto
/// t_dst. Queries outside [t_src.front(), t_src.back()] raise
/// ErrorKind::Extrapolation.
Matrix interp_time(const Matrix& series, std::span<const double> t_src,
                   std::span<const double> t_dst);

}  // namespace mfpod

#endif
