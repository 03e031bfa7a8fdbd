#ifndef MFPOD_LIFTING_HPP
#define MFPOD_LIFTING_HPP

#include <optional>
#include <vector>

#include "mfpod/numerics.hpp"
#include "mfpod/snapshots.hpp"

namespace mfpod {

/// Interpolation from LF to HF space-time resolution. Spatial interpolation
/// acts per field component; time interpolation is piecewise linear.
/// Without grids (unstructured external data) the spatial step is the identity
/// and both sets must share n_dof.
struct LiftSpec {
  InterpMode spatial_mode = InterpMode::Nearest;
  std::optional<Grid2D> src_grid;
  std::optional<Grid2D> dst_grid;
  std::vector<double> dst_times;
};

enum class LiftOrder { SpaceThenTime, TimeThenSpace };

SnapshotSet lift(const SnapshotSet& lf, const LiftSpec& spec,
                 LiftOrder order = LiftOrder::SpaceThenTime);

}  // namespace mfpod

#endif
