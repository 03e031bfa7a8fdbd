#include "mfpod/snapshots.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

#include "mfpod/binary_io.hpp"

namespace mfpod {

namespace {

constexpr std::string_view kMagic = "MFSNAP01";
constexpr std::size_t kHeaderBytes = 64;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::Validation, what); }

}  // namespace

const char* to_string(Fidelity f) noexcept { return f == Fidelity::High ? "HF" : "LF"; }

void SnapshotSet::validate() const {
  if (n_mu() < 1) invalid("snapshot set has no parameter values");
  if (n_t() < 1) invalid("snapshot set has no time instances");
  if (n_dof() < 1) invalid("snapshot set has no degrees of freedom");
  if (field_names.empty()) invalid("snapshot set has no field names");
  if (data.cols() != n_mu() * n_t()) {
    invalid("data has " + std::to_string(data.cols()) + " columns, expected n_mu * n_t = " +
            std::to_string(n_mu() * n_t()));
  }
  if (grid && n_dof() != field_count() * grid->size()) {
    invalid("n_dof does not equal field_count * n^2 for the declared grid");
  }
  if (!grid && n_dof() % field_count() != 0) {
    invalid("n_dof is not divisible by the field count");
  }
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!std::isfinite(times[k])) invalid("non-finite time value");
    if (k > 0 && !(times[k] > times[k - 1])) invalid("times must be strictly increasing");
  }
  require_finite(params, "parameter values");
  require_finite(data, "snapshot data");
}

bool SnapshotSet::operator==(const SnapshotSet& other) const {
  auto same_bits = [](const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
  };
  return fidelity == other.fidelity && grid == other.grid && times == other.times &&
         field_names == other.field_names && same_bits(params, other.params) &&
         same_bits(data, other.data);
}

std::vector<double> ParameterGrid::values() const {
  if (!(lo < hi)) invalid("parameter grid requires lo < hi");
  if (count < 2) invalid("parameter grid requires count >= 2");
  std::vector<double> v(count);
  for (int i = 0; i < count; ++i) v[i] = lo + (hi - lo) * double(i) / double(count - 1);
  v.back() = hi;
  return v;
}

Matrix params_column(const std::vector<double>& values) {
  Matrix p(Eigen::Index(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i) p(Eigen::Index(i), 0) = values[i];
  return p;
}

std::uint64_t mfsnap_file_size(std::uint64_t n_dof, std::uint64_t n_t, std::uint64_t n_mu,
                               std::uint64_t p, const std::vector<std::string>& field_names) {
  std::uint64_t names = 0;
  for (const auto& s : field_names) names += 4 + s.size();
  return kHeaderBytes + 8 * (1 + n_t + n_mu * p) + names + 8 * n_dof * n_mu * n_t;
}

// Layout: magic, u32 n_dof, n_t, n_mu, p, n_grid, field_count, fidelity, zero
// padding to 64 bytes; f64 L, times, params (row-major n_mu x p); names; payload.
void write_snapshots(const SnapshotSet& set, const std::filesystem::path& path) {
  set.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Storage, "cannot open " + path.string() + " for writing");
  io::write_magic(out, kMagic);
  io::write_u32(out, std::uint32_t(set.n_dof()));
  io::write_u32(out, std::uint32_t(set.n_t()));
  io::write_u32(out, std::uint32_t(set.n_mu()));
  io::write_u32(out, std::uint32_t(set.n_params()));
  io::write_u32(out, set.grid ? std::uint32_t(set.grid->n()) : 0u);
  io::write_u32(out, std::uint32_t(set.field_count()));
  io::write_u32(out, std::uint32_t(set.fidelity));
  const std::array<char, kHeaderBytes - 36> pad{};
  out.write(pad.data(), pad.size());
  io::write_f64(out, set.grid ? set.grid->half_length() : 0.0);
  io::write_f64s(out, set.times);
  io::write_matrix_row_major(out, set.params);
  for (const auto& name : set.field_names) io::write_string(out, name);
  io::write_f64s(out, std::span<const double>(set.data.data(), std::size_t(set.data.size())));
  out.flush();
  if (!out) throw Error(ErrorKind::Storage, "write failed for " + path.string());
}

SnapshotSet read_snapshots(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Storage, "cannot open " + path.string());
  io::Reader r(in, path.string());
  r.expect_magic(kMagic);
  const std::uint32_t n_dof = r.u32();
  const std::uint32_t n_t = r.u32();
  const std::uint32_t n_mu = r.u32();
  const std::uint32_t p = r.u32();
  const std::uint32_t n_grid = r.u32();
  const std::uint32_t field_count = r.u32();
  const std::uint32_t fidelity = r.u32();
  std::array<char, kHeaderBytes - 36> pad{};
  r.bytes(pad.data(), pad.size());
  if (fidelity > 1) r.fail("unknown fidelity tag");
  if (field_count == 0 || field_count > 64) r.fail("field count out of range");

  // Reject sizes that disagree with the file before allocating the payload.
  std::error_code ec;
  const auto actual = std::filesystem::file_size(path, ec);
  const std::uint64_t min_size = mfsnap_file_size(n_dof, n_t, n_mu, p, {});
  if (ec || actual < min_size) r.fail("file shorter than its declared payload");

  SnapshotSet set;
  set.fidelity = Fidelity(fidelity);
  const double half_length = r.f64();
  if (n_grid > 0) {
    try {
      set.grid = Grid2D(int(n_grid), half_length);
    } catch (const Error& e) {
      r.fail(std::string("invalid grid: ") + e.what());
    }
  }
  set.times.resize(n_t);
  r.f64s(set.times);
  set.params.resize(n_mu, p);
  r.matrix_row_major(set.params);
  for (std::uint32_t i = 0; i < field_count; ++i) set.field_names.push_back(r.string(4096));
  set.data.resize(n_dof, Eigen::Index(n_mu) * n_t);
  r.f64s(std::span<double>(set.data.data(), std::size_t(set.data.size())));
  r.expect_end();
  set.validate();
  return set;
}

SnapshotSet ingest_external(const std::filesystem::path& data_path, const ExternalLayout& layout,
                            const std::vector<double>& times, const Matrix& params) {
  if (layout.n_dof < 1) throw Error(ErrorKind::Ingestion, "declared n_dof must be positive");
  std::error_code ec;
  const auto bytes = std::filesystem::file_size(data_path, ec);
  if (ec) throw Error(ErrorKind::Storage, "cannot stat " + data_path.string());
  if (bytes % 8 != 0) throw Error(ErrorKind::Ingestion, "payload is not a whole number of f64");
  const std::uint64_t count = bytes / 8;
  if (count % std::uint64_t(layout.n_dof) != 0) {
    throw Error(ErrorKind::Ingestion, "payload length " + std::to_string(count) +
                                          " is not divisible by n_dof " +
                                          std::to_string(layout.n_dof));
  }
  const std::uint64_t columns = count / std::uint64_t(layout.n_dof);
  const std::uint64_t expected = std::uint64_t(params.rows()) * times.size();
  if (columns != expected) {
    throw Error(ErrorKind::Ingestion, "payload has " + std::to_string(columns) +
                                          " snapshots, declared n_mu * n_t = " +
                                          std::to_string(expected));
  }
  SnapshotSet set;
  set.fidelity = layout.fidelity;
  set.grid = layout.grid;
  set.times = times;
  set.params = params;
  set.field_names = layout.field_names;
  set.data.resize(layout.n_dof, Eigen::Index(columns));
  std::ifstream in(data_path, std::ios::binary);
  io::Reader r(in, data_path.string());
  r.f64s(std::span<double>(set.data.data(), std::size_t(set.data.size())));
  try {
    set.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Ingestion, e.what());
  }
  return set;
}

}  // namespace mfpod
