// Independent reference implementations used only by the tests.
#ifndef MFPOD_TESTS_ORACLES_HPP
#define MFPOD_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "mfpod/numerics.hpp"

namespace oracle {

using mfpod::CMatrix;
using mfpod::Matrix;
using mfpod::Vector;

// X[kx, ky] = sum_{jx, jy} x[jx, jy] exp(-2 pi i (jx kx + jy ky) / n), summed directly.
inline CMatrix direct_dft2(const Matrix& x) {
  const long n = x.rows();
  CMatrix out(n, n);
  for (long kx = 0; kx < n; ++kx) {
    for (long ky = 0; ky < n; ++ky) {
      std::complex<long double> acc = 0;
      for (long jx = 0; jx < n; ++jx) {
        for (long jy = 0; jy < n; ++jy) {
          const long double ang =
              -2.0L * std::numbers::pi_v<long double> * (long double)((jx * kx + jy * ky) % n) / n;
          acc += (long double)x(jx, jy) * std::complex<long double>(std::cos(ang), std::sin(ang));
        }
      }
      out(kx, ky) = std::complex<double>(double(acc.real()), double(acc.imag()));
    }
  }
  return out;
}

// Eigenvalues of a symmetric matrix by cyclic two-sided Jacobi in long double, descending.
inline std::vector<long double> jacobi_eigenvalues(std::vector<std::vector<long double>> a) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    long double off = 0, diag = 0;
    for (std::size_t i = 0; i < n; ++i) {
      diag += a[i][i] * a[i][i];
      for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
    }
    if (off <= 1e-42L * diag || off == 0) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0) continue;
        const long double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
        const long double t = (theta >= 0 ? 1 : -1) / (std::fabs(theta) + std::sqrt(theta * theta + 1));
        const long double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const long double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const long double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<long double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

// Singular values as square roots of the eigenvalues of the smaller Gram matrix,
// accumulated in long double.
inline std::vector<double> gram_singular_values(const Matrix& m) {
  const bool wide = m.cols() > m.rows();
  const long k = wide ? m.rows() : m.cols();
  const long inner = wide ? m.cols() : m.rows();
  auto at = [&](long i, long r) { return (long double)(wide ? m(i, r) : m(r, i)); };
  std::vector<std::vector<long double>> g(std::size_t(k), std::vector<long double>(std::size_t(k), 0.0L));
  for (long i = 0; i < k; ++i) {
    for (long j = i; j < k; ++j) {
      long double s = 0;
      for (long r = 0; r < inner; ++r) s += at(i, r) * at(j, r);
      g[std::size_t(i)][std::size_t(j)] = g[std::size_t(j)][std::size_t(i)] = s;
    }
  }
  std::vector<double> sv;
  for (const long double e : jacobi_eigenvalues(std::move(g))) sv.push_back(double(std::sqrt(std::max(e, 0.0L))));
  return sv;
}

// Nearest node of a periodic n_src grid to destination index i of an n_dst grid
// sharing the same period, by exhaustive distance search over the source nodes
// and the wrapped copy of node 0. Ties go to the left neighbour.
inline int nearest_node(int i, int n_src, int n_dst) {
  const long double x = (long double)i / n_dst;
  int best = 0;
  long double best_d = 1e300L;
  for (int j = 0; j <= n_src; ++j) {
    const long double d = std::fabs(x - (long double)j / n_src);
    if (d < best_d - 1e-15L) {
      best_d = d;
      best = j;
    }
  }
  return best % n_src;
}

// Least squares via the normal equations (X^T X) B = X^T Y, X with a bias row appended.
inline Matrix normal_equations(const Matrix& x, const Matrix& y) {
  Matrix xa(x.rows() + 1, x.cols());
  xa.topRows(x.rows()) = x;
  xa.row(x.rows()).setOnes();
  const Matrix g = xa * xa.transpose();
  return g.ldlt().solve(xa * y.transpose()).transpose();  // rows: outputs, cols: [W | b]
}

// Central finite-difference gradient of f at theta.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, Vector theta, double h) {
  Vector g(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double saved = theta(i);
    theta(i) = saved + h;
    const double fp = f(theta);
    theta(i) = saved - h;
    const double fm = f(theta);
    theta(i) = saved;
    g(i) = (fp - fm) / (2 * h);
  }
  return g;
}

inline Matrix random_matrix(long rows, long cols, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix m(rows, cols);
  for (long j = 0; j < cols; ++j) {
    for (long i = 0; i < rows; ++i) m(i, j) = nd(rng);
  }
  return m;
}

}  // namespace oracle

#endif
