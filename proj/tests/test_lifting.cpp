#include <gtest/gtest.h>

#include <random>

#include "mfpod/lifting.hpp"
#include "oracles.hpp"

using namespace mfpod;

namespace {

SnapshotSet lf_set(int n, int fields, std::vector<double> times, int n_mu, std::mt19937_64& rng) {
  SnapshotSet s;
  s.fidelity = Fidelity::Low;
  s.grid = Grid2D(n, 10.0);
  s.field_names = fields == 2 ? std::vector<std::string>{"u", "v"} : std::vector<std::string>{"w"};
  s.times = std::move(times);
  std::vector<double> mus;
  for (int i = 0; i < n_mu; ++i) mus.push_back(1.0 + i);
  s.params = params_column(mus);
  s.data = oracle::random_matrix(long(fields) * n * n, long(n_mu) * s.n_t(), rng);
  return s;
}

std::vector<double> range(double step, int count) {
  std::vector<double> t;
  for (int i = 0; i < count; ++i) t.push_back(step * i);
  return t;
}

}  // namespace

TEST(Lift, SameGridSameTimesIsIdentity) {
  std::mt19937_64 rng(31);
  const SnapshotSet s = lf_set(8, 2, range(0.5, 4), 2, rng);
  for (const auto mode : {InterpMode::Nearest, InterpMode::Bilinear}) {
    const SnapshotSet r = lift(s, {mode, s.grid, s.grid, s.times});
    EXPECT_LT((r.data - s.data).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(r.times, s.times);
    EXPECT_EQ(r.params, s.params);
  }
}

TEST(Lift, ConstantsPreserved) {
  std::mt19937_64 rng(32);
  SnapshotSet s = lf_set(6, 2, range(1.0, 3), 2, rng);
  s.data.setConstant(-1.75);
  const SnapshotSet r = lift(s, {InterpMode::Bilinear, s.grid, Grid2D(12, 10.0), range(0.25, 9)});
  EXPECT_EQ(r.data.rows(), 2 * 144);
  EXPECT_EQ(r.data.cols(), 18);
  EXPECT_LT((r.data.array() + 1.75).abs().maxCoeff(), 1e-14);
  EXPECT_EQ(*r.grid, Grid2D(12, 10.0));
  EXPECT_EQ(r.fidelity, Fidelity::Low);
}

TEST(Lift, ComponentsDoNotMix) {
  std::mt19937_64 rng(33);
  SnapshotSet s = lf_set(4, 2, range(1.0, 2), 1, rng);
  s.data.topRows(16).setZero();
  const SnapshotSet r = lift(s, {InterpMode::Bilinear, s.grid, Grid2D(8, 10.0), s.times});
  EXPECT_EQ(r.data.topRows(64).cwiseAbs().maxCoeff(), 0.0);
  for (Eigen::Index c = 0; c < 2; ++c) {
    const Matrix lower = Eigen::Map<const Matrix>(s.data.col(c).data() + 16, 4, 4);
    const Matrix expect = interp_space(lower, Grid2D(4, 10.0), Grid2D(8, 10.0), InterpMode::Bilinear);
    EXPECT_LT((r.data.col(c).tail(64) - Eigen::Map<const Vector>(expect.data(), 64)).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Lift, Linearity) {
  std::mt19937_64 rng(34);
  const SnapshotSet x = lf_set(10, 1, range(1.0, 5), 3, rng);
  SnapshotSet y = x;
  y.data = oracle::random_matrix(x.data.rows(), x.data.cols(), rng);
  SnapshotSet combo = x;
  combo.data = 2.5 * x.data - 0.75 * y.data;
  const LiftSpec spec{InterpMode::Bilinear, x.grid, Grid2D(40, 10.0), range(0.25, 17)};
  const Matrix lhs = lift(combo, spec).data;
  const Matrix rhs = 2.5 * lift(x, spec).data - 0.75 * lift(y, spec).data;
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Lift, OrderCommutes) {
  std::mt19937_64 rng(35);
  const SnapshotSet x = lf_set(10, 2, range(1.0, 5), 2, rng);
  for (const auto mode : {InterpMode::Nearest, InterpMode::Bilinear}) {
    const LiftSpec spec{mode, x.grid, Grid2D(20, 10.0), range(0.25, 17)};
    const Matrix a = lift(x, spec, LiftOrder::SpaceThenTime).data;
    const Matrix b = lift(x, spec, LiftOrder::TimeThenSpace).data;
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Lift, MatchesComposedOracle) {
  // P X Q^T: spatial interpolation of every snapshot, then linear interpolation in time.
  std::mt19937_64 rng(36);
  const SnapshotSet x = lf_set(6, 1, {0.0, 1.0, 2.0}, 2, rng);
  const std::vector<double> dst{0.0, 0.5, 1.25, 2.0};
  const SnapshotSet r = lift(x, {InterpMode::Nearest, x.grid, Grid2D(12, 10.0), dst});
  for (Eigen::Index m = 0; m < 2; ++m) {
    for (std::size_t k = 0; k < dst.size(); ++k) {
      const double t = dst[k];
      const auto i0 = Eigen::Index(std::min(std::floor(t), 1.0));
      const double w = t - double(i0);
      const Vector mix = (1 - w) * x.data.col(m * 3 + i0) + w * x.data.col(m * 3 + i0 + 1);
      for (int j = 0; j < 12; ++j) {
        for (int i = 0; i < 12; ++i) {
          const double expect = mix(oracle::nearest_node(i, 6, 12) + 6 * oracle::nearest_node(j, 6, 12));
          ASSERT_NEAR(r.data(i + 12 * j, m * 4 + Eigen::Index(k)), expect, 1e-14);
        }
      }
    }
  }
}

TEST(Lift, Errors) {
  std::mt19937_64 rng(37);
  const SnapshotSet x = lf_set(8, 1, range(1.0, 3), 1, rng);
  try {
    lift(x, {InterpMode::Nearest, x.grid, Grid2D(16, 10.0), {0.0, 2.5}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Extrapolation);
  }
  EXPECT_THROW(lift(x, {InterpMode::Nearest, Grid2D(16, 10.0), Grid2D(32, 10.0), x.times}), Error);
}

TEST(Lift, GridlessIsTimeOnly) {
  std::mt19937_64 rng(38);
  SnapshotSet x = lf_set(4, 1, {0.0, 2.0}, 1, rng);
  x.grid.reset();
  const SnapshotSet r = lift(x, {InterpMode::Nearest, std::nullopt, std::nullopt, {1.0}});
  EXPECT_LT((r.data.col(0) - 0.5 * (x.data.col(0) + x.data.col(1))).cwiseAbs().maxCoeff(), 1e-15);
}
