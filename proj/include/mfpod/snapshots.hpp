#ifndef MFPOD_SNAPSHOTS_HPP
#define MFPOD_SNAPSHOTS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mfpod/numerics.hpp"

namespace mfpod {

enum class Fidelity : std::uint32_t { High = 0, Low = 1 };

const char* to_string(Fidelity f) noexcept;

/// Snapshot matrix with its grids and parameter values.
///
/// Columns are parameter-major: column (i_mu * n_t + i_t) holds the state at
/// parameter row i_mu of `params` and time `times[i_t]`. When `grid` is set,
/// each column stacks `field_names.size()` fields of grid->size() values.
/// Sets without a grid hold externally generated, unstructured data.
struct SnapshotSet {
  Fidelity fidelity = Fidelity::High;
  Matrix data;
  std::optional<Grid2D> grid;
  std::vector<double> times;
  Matrix params;  // n_mu x p
  std::vector<std::string> field_names;

  Eigen::Index n_dof() const noexcept { return data.rows(); }
  Eigen::Index n_t() const noexcept { return Eigen::Index(times.size()); }
  Eigen::Index n_mu() const noexcept { return params.rows(); }
  Eigen::Index n_params() const noexcept { return params.cols(); }
  Eigen::Index field_count() const noexcept { return Eigen::Index(field_names.size()); }
  Eigen::Index column(Eigen::Index i_mu, Eigen::Index i_t) const noexcept {
    return i_mu * n_t() + i_t;
  }

  // Columns [i_mu * n_t, (i_mu + 1) * n_t).
  auto trajectory(Eigen::Index i_mu) const { return data.middleCols(i_mu * n_t(), n_t()); }

  //! Throws ErrorKind::Validation (or Data for non-finite values) on any broken invariant.
  void validate() const;

  bool operator==(const SnapshotSet& other) const;
};

/// Equispaced parameter values lo..hi inclusive.
struct ParameterGrid {
  double lo = 0.0;
  double hi = 1.0;
  int count = 2;

  std::vector<double> values() const;
};

Matrix params_column(const std::vector<double>& values);

void write_snapshots(const SnapshotSet& set, const std::filesystem::path& path);
SnapshotSet read_snapshots(const std::filesystem::path& path);

// Exact MFSNAP file size for the given layout.
std::uint64_t mfsnap_file_size(std::uint64_t n_dof, std::uint64_t n_t, std::uint64_t n_mu,
                               std::uint64_t p, const std::vector<std::string>& field_names);

struct ExternalLayout {
  Eigen::Index n_dof = 0;
  std::vector<std::string> field_names{"x"};
  std::optional<Grid2D> grid;
  Fidelity fidelity = Fidelity::High;
};

/// Wraps a raw little-endian float64, column-major payload of
/// n_dof x (n_mu * n_t) values (parameter-major columns) as a SnapshotSet.
SnapshotSet ingest_external(const std::filesystem::path& data_path, const ExternalLayout& layout,
                            const std::vector<double>& times, const Matrix& params);

}  // namespace mfpod

#endif
