#include <algorithm>
#include <cmath>
#include <string>

#include "mfpod/numerics.hpp"

namespace mfpod {

SpatialInterpolator::SpatialInterpolator(const Grid2D& src, const Grid2D& dst, InterpMode mode)
    : src_(src), dst_(dst) {
  if (src.half_length() != dst.half_length()) {
    throw Error(ErrorKind::Dimension, "interpolation grids must share the same domain");
  }
  if (dst.n() < src.n()) {
    throw Error(ErrorKind::Dimension, "destination grid must be at least as fine as the source");
  }
  const long ns = src.n();
  const long nd = dst.n();
  stencil_.reserve(nd);
  // Destination node i sits at source position i * ns / nd, kept as an exact
  // rational so ties and coincident nodes are decided without rounding.
  for (long i = 0; i < nd; ++i) {
    const long num = i * ns;
    const int lo = int(num / nd);
    const long rem = num % nd;
    const int hi = int((lo + 1) % ns);
    if (mode == InterpMode::Nearest) {
      const bool up = 2 * rem > nd;
      stencil_.push_back({up ? hi : lo, up ? hi : lo, 0.0});
    } else {
      stencil_.push_back({lo, hi, double(rem) / double(nd)});
    }
  }
}

void SpatialInterpolator::apply(std::span<const double> in, std::span<double> out) const {
  if (Eigen::Index(in.size()) != src_.size() || Eigen::Index(out.size()) != dst_.size()) {
    throw Error(ErrorKind::Dimension, "field size does not match interpolation grids");
  }
  const int ns = src_.n();
  const int nd = dst_.n();
  for (int j = 0; j < nd; ++j) {
    const Stencil& sy = stencil_[j];
    const double* row_lo = in.data() + std::size_t(sy.lo) * ns;
    const double* row_hi = in.data() + std::size_t(sy.hi) * ns;
    double* dst = out.data() + std::size_t(j) * nd;
    for (int i = 0; i < nd; ++i) {
      const Stencil& sx = stencil_[i];
      const double a = row_lo[sx.lo] + sx.w * (row_lo[sx.hi] - row_lo[sx.lo]);
      const double b = row_hi[sx.lo] + sx.w * (row_hi[sx.hi] - row_hi[sx.lo]);
      dst[i] = a + sy.w * (b - a);
    }
  }
}

Matrix SpatialInterpolator::apply(const Matrix& field) const {
  if (field.rows() != src_.n() || field.cols() != src_.n()) {
    throw Error(ErrorKind::Dimension, "field shape does not match source grid");
  }
  Matrix out(dst_.n(), dst_.n());
  apply(std::span<const double>(field.data(), field.size()),
        std::span<double>(out.data(), out.size()));
  return out;
}

Matrix interp_space(const Matrix& field, const Grid2D& src, const Grid2D& dst, InterpMode mode) {
  return SpatialInterpolator(src, dst, mode).apply(field);
}

Matrix interp_time(const Matrix& series, std::span<const double> t_src,
                   std::span<const double> t_dst) {
  const std::size_t ns = t_src.size();
  if (ns == 0 || Eigen::Index(ns) != series.cols()) {
    throw Error(ErrorKind::Dimension, "series columns do not match source times");
  }
  for (std::size_t k = 1; k < ns; ++k) {
    if (!(t_src[k] > t_src[k - 1])) {
      throw Error(ErrorKind::Dimension, "source times must be strictly increasing");
    }
  }
  const double t0 = t_src.front();
  const double t1 = t_src.back();
  // Absorbs rounding in times built as step * dt; anything larger is extrapolation.
  const double slack = 1e-12 * std::max({1.0, std::abs(t0), std::abs(t1)});

  Matrix out(series.rows(), Eigen::Index(t_dst.size()));
  for (std::size_t q = 0; q < t_dst.size(); ++q) {
    const double t = t_dst[q];
    if (!(t >= t0 - slack && t <= t1 + slack)) {
      throw Error(ErrorKind::Extrapolation,
                  "time " + std::to_string(t) + " outside source span [" + std::to_string(t0) +
                      ", " + std::to_string(t1) + "]");
    }
    if (ns == 1) {
      out.col(q) = series.col(0);
      continue;
    }
    auto it = std::upper_bound(t_src.begin(), t_src.end(), t);
    std::size_t hi = std::size_t(it - t_src.begin());
    hi = std::clamp<std::size_t>(hi, 1, ns - 1);
    const std::size_t lo = hi - 1;
    double w = (t - t_src[lo]) / (t_src[hi] - t_src[lo]);
    w = std::clamp(w, 0.0, 1.0);
    if (w == 0.0) {
      out.col(q) = series.col(lo);
    } else if (w == 1.0) {
      out.col(q) = series.col(hi);
    } else {
      out.col(q) = (1.0 - w) * series.col(lo) + w * series.col(hi);
    }
  }
  return out;
}

}  // namespace mfpod
