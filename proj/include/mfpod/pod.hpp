#ifndef MFPOD_POD_HPP
#define MFPOD_POD_HPP

#include <optional>
#include <string>
#include <vector>

#include "mfpod/numerics.hpp"
#include "mfpod/snapshots.hpp"

namespace mfpod {

/// How many left singular vectors to keep.
struct TruncationRule {
  enum class Kind { Tolerance, Fixed };
  Kind kind = Kind::Fixed;
  double eps = 0.0;   // Tolerance: keep the fewest modes whose energy is >= 1 - eps^2
  int count = 0;      // Fixed: keep this many (clamped to the available rank)

  static TruncationRule tolerance(double eps) { return {Kind::Tolerance, eps, 0}; }
  static TruncationRule fixed(int count) { return {Kind::Fixed, 0.0, count}; }
};

struct PodBasis {
  Matrix modes;                    // n_dof x n_pod, orthonormal columns
  Vector sigma;                    // all singular values, descending
  int n_pod = 0;
  std::optional<double> eps_pod;   // set for tolerance-rule bases
  std::optional<Vector> mean;      // set when snapshots were centered
  std::optional<Grid2D> grid;
  std::vector<std::string> field_names;
};

/// Reduced coefficients; columns follow the parameter-major order of the
/// snapshot set they were projected from.
struct CoefficientSeries {
  Matrix coeffs;               // n_pod x (n_mu * n_t)
  std::vector<double> times;
  Matrix params;

  Eigen::Index n_t() const noexcept { return Eigen::Index(times.size()); }
  Eigen::Index n_mu() const noexcept { return params.rows(); }
  auto trajectory(Eigen::Index i_mu) const { return coeffs.middleCols(i_mu * n_t(), n_t()); }
};

/// Smallest N such that the discarded energy sum_{i>N} sigma_i^2 is at most
/// eps^2 * sum_i sigma_i^2, i.e. captured energy fraction >= 1 - eps^2.
int energy_rank(const Vector& sigma, double eps);

PodBasis build_basis(const SnapshotSet& hf, const TruncationRule& rule, bool center = false);

CoefficientSeries project(const PodBasis& basis, const SnapshotSet& x);
CoefficientSeries project(const PodBasis& basis, const Matrix& data,
                          const std::vector<double>& times, const Matrix& params);

SnapshotSet reconstruct(const PodBasis& basis, const CoefficientSeries& coeffs);
Matrix reconstruct_matrix(const PodBasis& basis, const Matrix& coeffs);

}  // namespace mfpod

#endif
