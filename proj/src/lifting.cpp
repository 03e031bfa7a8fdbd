#include "mfpod/lifting.hpp"

namespace mfpod {

namespace {

// Interpolate every field component of every column onto the destination grid.
void lift_space_into(const Eigen::Ref<const Matrix>& data, const SpatialInterpolator& interp, Eigen::Index fields,
                     Eigen::Ref<Matrix> out) {
  const Eigen::Index src_size = interp.src().size();
  const Eigen::Index dst_size = interp.dst().size();
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    for (Eigen::Index f = 0; f < fields; ++f) {
      const double* in = data.col(c).data() + f * src_size;
      double* dst = out.col(c).data() + f * dst_size;
      interp.apply(std::span<const double>(in, std::size_t(src_size)),
                   std::span<double>(dst, std::size_t(dst_size)));
    }
  }
}

Matrix lift_space(const Matrix& data, const SpatialInterpolator& interp, Eigen::Index fields) {
  Matrix out(fields * interp.dst().size(), data.cols());
  lift_space_into(data, interp, fields, out);
  return out;
}

}  // namespace

SnapshotSet lift(const SnapshotSet& lf, const LiftSpec& spec, LiftOrder order) {
  if (lf.grid != spec.src_grid) {
    throw Error(ErrorKind::Dimension, "LF snapshot grid does not match the lift source grid");
  }
  if (spec.src_grid.has_value() != spec.dst_grid.has_value()) {
    throw Error(ErrorKind::Dimension, "lift needs both grids or neither");
  }
  if (spec.dst_times.empty()) throw Error(ErrorKind::Dimension, "lift has no destination times");
  if (!spec.src_grid) {
    SnapshotSet out = lf;
    out.times = spec.dst_times;
    out.data.resize(lf.n_dof(), lf.n_mu() * Eigen::Index(spec.dst_times.size()));
    for (Eigen::Index m = 0; m < lf.n_mu(); ++m) {
      out.data.middleCols(m * out.n_t(), out.n_t()) = interp_time(lf.trajectory(m), lf.times, spec.dst_times);
    }
    return out;
  }
  const SpatialInterpolator interp(*spec.src_grid, *spec.dst_grid, spec.spatial_mode);
  const Eigen::Index fields = lf.field_count();
  const Eigen::Index n_t_src = lf.n_t();
  const Eigen::Index n_t_dst = Eigen::Index(spec.dst_times.size());

  SnapshotSet out;
  out.fidelity = lf.fidelity;
  out.grid = spec.dst_grid;
  out.times = spec.dst_times;
  out.params = lf.params;
  out.field_names = lf.field_names;
  out.data.resize(fields * spec.dst_grid->size(), lf.n_mu() * n_t_dst);

  if (lf.times == spec.dst_times) {
    lift_space_into(lf.data, interp, fields, out.data);
    return out;
  }
  for (Eigen::Index m = 0; m < lf.n_mu(); ++m) {
    const Matrix traj = lf.data.middleCols(m * n_t_src, n_t_src);
    if (order == LiftOrder::SpaceThenTime) {
      out.data.middleCols(m * n_t_dst, n_t_dst) =
          interp_time(lift_space(traj, interp, fields), lf.times, spec.dst_times);
    } else {
      out.data.middleCols(m * n_t_dst, n_t_dst) =
          lift_space(interp_time(traj, lf.times, spec.dst_times), interp, fields);
    }
  }
  return out;
}

}  // namespace mfpod
