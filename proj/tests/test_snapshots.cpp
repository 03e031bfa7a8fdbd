#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "mfpod/pod.hpp"
#include "mfpod/snapshots.hpp"
#include "oracles.hpp"

using namespace mfpod;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("mfpod_snap_" + std::to_string(std::random_device{}()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

SnapshotSet small_set(std::mt19937_64& rng) {
  SnapshotSet s;
  s.fidelity = Fidelity::Low;
  s.data = oracle::random_matrix(4, 6, rng);
  s.times = {0.0, 0.5, 1.0};
  s.params = Matrix(2, 1);
  s.params << 0.25, 0.75;
  s.field_names = {"a"};
  return s;
}

std::vector<char> bytes_of(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_raw(const fs::path& p, const std::vector<double>& values) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(values.data()), std::streamsize(values.size() * 8));
}

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::Data;
}

}  // namespace

TEST(ParameterGrid, EquispacedInclusive) {
  const auto v = ParameterGrid{0.5, 1.5, 10}.values();
  ASSERT_EQ(v.size(), 10u);
  EXPECT_EQ(v.front(), 0.5);
  EXPECT_EQ(v.back(), 1.5);
  for (std::size_t i = 1; i < v.size(); ++i) EXPECT_NEAR(v[i] - v[i - 1], 1.0 / 9.0, 1e-15);
  EXPECT_THROW((ParameterGrid{1.0, 1.0, 3}.values()), Error);
  EXPECT_THROW((ParameterGrid{0.0, 1.0, 1}.values()), Error);
}

TEST(Snapshots, RoundTripIsBitExact) {
  TempDir dir;
  std::mt19937_64 rng(1);
  const SnapshotSet s = small_set(rng);
  write_snapshots(s, dir / "a.mfsnap");
  const SnapshotSet r = read_snapshots(dir / "a.mfsnap");
  EXPECT_TRUE(r == s);
  EXPECT_EQ(std::memcmp(r.data.data(), s.data.data(), sizeof(double) * 24), 0);
  EXPECT_EQ(r.fidelity, Fidelity::Low);
  write_snapshots(r, dir / "b.mfsnap");
  EXPECT_EQ(bytes_of(dir / "a.mfsnap"), bytes_of(dir / "b.mfsnap"));
}

TEST(Snapshots, GridAndFieldsSurvive) {
  TempDir dir;
  std::mt19937_64 rng(2);
  SnapshotSet s;
  s.grid = Grid2D(4, 20.0);
  s.field_names = {"u", "v"};
  s.data = oracle::random_matrix(32, 2, rng);
  s.times = {0.0, 0.05};
  s.params = params_column({1.0});
  write_snapshots(s, dir / "g.mfsnap");
  const SnapshotSet r = read_snapshots(dir / "g.mfsnap");
  ASSERT_TRUE(r.grid.has_value());
  EXPECT_EQ(*r.grid, Grid2D(4, 20.0));
  EXPECT_EQ(r.field_names, s.field_names);
  EXPECT_TRUE(r == s);
}

TEST(Snapshots, TrajectoryIsParameterMajor) {
  std::mt19937_64 rng(3);
  const SnapshotSet s = small_set(rng);
  EXPECT_EQ(s.trajectory(1), s.data.middleCols(3, 3));
  EXPECT_EQ(s.column(1, 2), 5);
}

TEST(Snapshots, EmptyParametersRejected) {
  std::mt19937_64 rng(4);
  SnapshotSet s = small_set(rng);
  s.params.resize(0, 1);
  s.data.resize(4, 0);
  EXPECT_EQ(kind_of([&] { s.validate(); }), ErrorKind::Validation);
  TempDir dir;
  EXPECT_EQ(kind_of([&] { write_snapshots(s, dir / "e.mfsnap"); }), ErrorKind::Validation);
}

TEST(Snapshots, InvalidSetsRejected) {
  std::mt19937_64 rng(5);
  SnapshotSet s = small_set(rng);
  s.times = {0.0, 1.0, 0.5};
  EXPECT_EQ(kind_of([&] { s.validate(); }), ErrorKind::Validation);
  s = small_set(rng);
  s.data(2, 3) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(kind_of([&] { s.validate(); }), ErrorKind::Data);
}

TEST(Snapshots, FileSizeFormula) {
  // 64-byte header, f64 L, times, params, length-prefixed names, payload.
  const std::vector<std::string> uv{"u", "v"};
  const std::uint64_t n_dof = 2ull * 100 * 100, n_mu = 10, n_t = 801;
  const std::uint64_t metadata = 8 + 8 * n_t + 8 * n_mu + (4 + 1) * 2;
  EXPECT_EQ(mfsnap_file_size(n_dof, n_t, n_mu, 1, uv), 64 + metadata + 8 * n_dof * n_mu * n_t);
  EXPECT_EQ(mfsnap_file_size(n_dof, n_t, n_mu, 1, uv), 1281606570ull);

  TempDir dir;
  std::mt19937_64 rng(6);
  SnapshotSet s;
  s.grid = Grid2D(6, 20.0);
  s.field_names = uv;
  s.data = oracle::random_matrix(72, 3 * 4, rng);
  s.times = {0.0, 0.05, 0.1, 0.15};
  s.params = params_column({0.5, 1.0, 1.5});
  write_snapshots(s, dir / "s.mfsnap");
  EXPECT_EQ(fs::file_size(dir / "s.mfsnap"), 64 + 8 + 8 * 4 + 8 * 3 + 10 + 8 * 72 * 12);
  EXPECT_EQ(fs::file_size(dir / "s.mfsnap"), mfsnap_file_size(72, 4, 3, 1, uv));
}

TEST(Snapshots, CorruptFilesRejected) {
  TempDir dir;
  std::mt19937_64 rng(7);
  const SnapshotSet s = small_set(rng);
  write_snapshots(s, dir / "ok.mfsnap");
  auto bytes = bytes_of(dir / "ok.mfsnap");

  auto dump = [&](const std::string& name, const std::vector<char>& b) {
    std::ofstream out(dir / name, std::ios::binary);
    out.write(b.data(), std::streamsize(b.size()));
    return dir / name;
  };

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_EQ(kind_of([&] { read_snapshots(dump("m.mfsnap", bad_magic)); }), ErrorKind::Format);

  const std::vector<char> truncated(bytes.begin(), bytes.end() - 8);
  EXPECT_EQ(kind_of([&] { read_snapshots(dump("t.mfsnap", truncated)); }), ErrorKind::Format);

  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_EQ(kind_of([&] { read_snapshots(dump("x.mfsnap", trailing)); }), ErrorKind::Format);

  auto nan = bytes;
  const double q = std::numeric_limits<double>::quiet_NaN();
  std::memcpy(nan.data() + nan.size() - 8, &q, 8);
  EXPECT_EQ(kind_of([&] { read_snapshots(dump("n.mfsnap", nan)); }), ErrorKind::Data);

  EXPECT_EQ(kind_of([&] { read_snapshots(dir / "missing.mfsnap"); }), ErrorKind::Storage);
}

TEST(Ingest, TwelveFloats) {
  TempDir dir;
  std::vector<double> v(12);
  for (int i = 0; i < 12; ++i) v[std::size_t(i)] = 0.5 * i;
  write_raw(dir / "raw.bin", v);
  ExternalLayout layout;
  layout.n_dof = 4;
  const SnapshotSet s = ingest_external(dir / "raw.bin", layout, {0.0, 1.0, 2.0}, params_column({3.0}));
  EXPECT_EQ(s.data.rows(), 4);
  EXPECT_EQ(s.data.cols(), 3);
  EXPECT_EQ(s.data(1, 2), 0.5 * 9);
  EXPECT_FALSE(s.grid.has_value());
}

TEST(Ingest, ShapeMismatch) {
  TempDir dir;
  write_raw(dir / "raw.bin", std::vector<double>(10, 1.0));
  ExternalLayout layout;
  layout.n_dof = 4;
  EXPECT_EQ(kind_of([&] { ingest_external(dir / "raw.bin", layout, {0.0, 1.0}, params_column({1.0})); }),
            ErrorKind::Ingestion);
  write_raw(dir / "raw12.bin", std::vector<double>(12, 1.0));
  EXPECT_EQ(kind_of([&] { ingest_external(dir / "raw12.bin", layout, {0.0, 1.0}, params_column({1.0})); }),
            ErrorKind::Ingestion);
}

TEST(Ingest, ProjectionMatchesInMemorySet) {
  TempDir dir;
  std::mt19937_64 rng(8);
  const Matrix data = oracle::random_matrix(30, 2 * 5, rng);
  write_raw(dir / "raw.bin", std::vector<double>(data.data(), data.data() + data.size()));

  SnapshotSet mem;
  mem.data = data;
  mem.times = {0, 1, 2, 3, 4};
  mem.params = params_column({1.0, 2.0});
  mem.field_names = {"x"};

  ExternalLayout layout;
  layout.n_dof = 30;
  const SnapshotSet ext = ingest_external(dir / "raw.bin", layout, mem.times, mem.params);

  const PodBasis basis = build_basis(mem, TruncationRule::fixed(4));
  const CoefficientSeries a = project(basis, mem);
  const CoefficientSeries b = project(basis, ext);
  EXPECT_EQ(a.coeffs, b.coeffs);
  EXPECT_EQ(build_basis(ext, TruncationRule::fixed(4)).modes, basis.modes);
}
