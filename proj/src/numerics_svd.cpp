#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "mfpod/numerics.hpp"

namespace mfpod {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Singular values below this fraction of the current leading value are re-solved
// on their own scale; eps / kDeflate^2 bounds the relative error per level.
constexpr double kDeflate = 1e-3;

// Orthogonalize column j of q against columns [0, j) with two passes of
// classical Gram-Schmidt. Returns the norm left after projection.
double orthogonalize_column(Matrix& q, Eigen::Index j) {
  for (int pass = 0; pass < 2; ++pass) {
    if (j > 0) {
      const Vector proj = q.leftCols(j).transpose() * q.col(j);
      q.col(j) -= q.leftCols(j) * proj;
    }
  }
  return q.col(j).norm();
}

// Replace each column flagged invalid by a unit vector orthogonal to every
// other column (valid ones first). Candidates: the existing column content,
// then canonical basis vectors.
void complete_orthonormal(Matrix& q, const std::vector<bool>& valid) {
  const Eigen::Index m = q.rows();
  std::vector<Eigen::Index> order;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (valid[j]) order.push_back(j);
  }
  const Eigen::Index n_valid = Eigen::Index(order.size());
  if (n_valid == q.cols()) return;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (!valid[j]) order.push_back(j);
  }
  // Work in a permuted copy so "previous columns" are exactly the accepted set.
  Matrix work(m, q.cols());
  for (Eigen::Index j = 0; j < q.cols(); ++j) work.col(j) = q.col(order[j]);

  Eigen::Index canonical = 0;
  for (Eigen::Index j = n_valid; j < work.cols(); ++j) {
    const double before = work.col(j).norm();
    const double after = before > 0.0 ? orthogonalize_column(work, j) : 0.0;
    if (!(before > 0.0 && after > 0.1 * before)) {
      for (;;) {
        if (canonical >= m) throw Error(ErrorKind::Dimension, "cannot complete orthonormal basis");
        work.col(j).setZero();
        work(canonical++, j) = 1.0;
        if (orthogonalize_column(work, j) > 0.5) break;
      }
    }
    work.col(j) /= work.col(j).norm();
  }
  for (Eigen::Index j = 0; j < q.cols(); ++j) q.col(order[j]) = work.col(j);
}

void sort_descending(SvdResult& r) {
  const Eigen::Index k = r.sigma.size();
  std::vector<Eigen::Index> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return r.sigma(a) > r.sigma(b); });
  if (std::is_sorted(idx.begin(), idx.end())) return;
  SvdResult s{Matrix(r.U.rows(), k), Vector(k), Matrix(r.V.rows(), k)};
  for (Eigen::Index j = 0; j < k; ++j) {
    s.U.col(j) = r.U.col(idx[j]);
    s.V.col(j) = r.V.col(idx[j]);
    s.sigma(j) = r.sigma(idx[j]);
  }
  r = std::move(s);
}

SvdResult gram_svd(const Matrix& a) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  SvdResult out{Matrix(m, n), Vector(n), Matrix(n, n)};
  std::vector<bool> u_valid(n, false);

  const double floor = kEps * a.norm() * std::sqrt(double(std::max(m, n)));

  Matrix block = a;                        // = a * basis, up to removed noise
  Matrix basis = Matrix::Identity(n, n);   // right vectors of the block
  Eigen::Index done = 0;

  while (done < n) {
    const Eigen::Index k = block.cols();
    Matrix gram = Matrix::Zero(k, k);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram.selfadjointView<Eigen::Lower>());
    // Eigen returns ascending eigenvalues.
    const Vector lambda = eig.eigenvalues().reverse();
    const Matrix q = eig.eigenvectors().rowwise().reverse();
    Vector sig = lambda.cwiseMax(0.0).cwiseSqrt();

    const Matrix v = basis * q;
    if (sig(0) <= floor) {
      out.sigma.segment(done, k) = sig;
      out.V.middleCols(done, k) = v;
      out.U.middleCols(done, k) = block * q;
      break;
    }

    Eigen::Index lead = 1;
    while (lead < k && sig(lead) >= kDeflate * sig(0)) ++lead;

    const Matrix w = block * q;
    for (Eigen::Index j = 0; j < lead; ++j) {
      out.U.col(done + j) = w.col(j) / sig(j);
      out.sigma(done + j) = sig(j);
      u_valid[done + j] = true;
    }
    out.V.middleCols(done, lead) = v.leftCols(lead);
    // Restore orthonormality of the new left vectors against all accepted ones.
    for (Eigen::Index j = done; j < done + lead; ++j) {
      const double norm = orthogonalize_column(out.U, j);
      out.U.col(j) /= norm;
    }
    done += lead;
    if (lead == k) break;

    block = w.rightCols(k - lead);
    const auto known = out.U.leftCols(done);
    block -= known * (known.transpose() * block);
    basis = v.rightCols(k - lead);
  }

  complete_orthonormal(out.U, u_valid);
  return out;
}

// One-sided (Hestenes) Jacobi on a tall matrix b: b * rot has orthogonal columns.
SvdResult jacobi_svd_tall(Matrix b) {
  const Eigen::Index m = b.rows();
  const Eigen::Index n = b.cols();
  Matrix rot = Matrix::Identity(n, n);
  for (int sweep = 0; sweep < 80; ++sweep) {
    bool rotated = false;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double alpha = b.col(i).squaredNorm();
        const double beta = b.col(j).squaredNorm();
        const double gamma = b.col(i).dot(b.col(j));
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= kEps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;
        for (Eigen::Index r = 0; r < m; ++r) {
          const double bi = b(r, i);
          const double bj = b(r, j);
          b(r, i) = c * bi - s * bj;
          b(r, j) = s * bi + c * bj;
        }
        for (Eigen::Index r = 0; r < n; ++r) {
          const double ri = rot(r, i);
          const double rj = rot(r, j);
          rot(r, i) = c * ri - s * rj;
          rot(r, j) = s * ri + c * rj;
        }
      }
    }
    if (!rotated) break;
  }
  SvdResult out{Matrix(m, n), Vector(n), std::move(rot)};
  std::vector<bool> valid(n, false);
  const double floor = kEps * b.norm() * std::sqrt(double(std::max(m, n)));
  for (Eigen::Index j = 0; j < n; ++j) {
    const double s = b.col(j).norm();
    out.sigma(j) = s;
    if (s > floor) {
      out.U.col(j) = b.col(j) / s;
      valid[j] = true;
    } else {
      out.U.col(j) = b.col(j);
    }
  }
  complete_orthonormal(out.U, valid);
  return out;
}

}  // namespace

SvdResult thin_svd(const Matrix& a) {
  if (a.rows() < 1 || a.cols() < 1) {
    throw Error(ErrorKind::Dimension, "svd input must be non-empty");
  }
  require_finite(a, "svd input");
  SvdResult r;
  if (a.cols() <= a.rows()) {
    r = gram_svd(a);
  } else {
    SvdResult t = jacobi_svd_tall(a.transpose());
    r = SvdResult{std::move(t.V), std::move(t.sigma), std::move(t.U)};
  }
  sort_descending(r);
  return r;
}

}  // namespace mfpod
