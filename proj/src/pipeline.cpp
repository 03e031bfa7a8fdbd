#include "mfpod/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace mfpod {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

template <class F>
double median_time(int runs, F&& f) {
  std::vector<double> t;
  for (int r = 0; r < runs; ++r) {
    const auto start = std::chrono::steady_clock::now();
    f();
    t.push_back(seconds_since(start));
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

const ProblemSpec& solver_spec(const SurrogateModel& model) {
  if (!model.provenance.problem) {
    throw Error(ErrorKind::Validation, "model was trained on external data and has no LF solver");
  }
  return *model.provenance.problem;
}

Eigen::Index find_param(const Matrix& params, double mu) {
  for (Eigen::Index i = 0; i < params.rows(); ++i) {
    if (std::abs(params(i, 0) - mu) <= 1e-12 * std::max(1.0, std::abs(mu))) return i;
  }
  return -1;
}

}  // namespace

void SurrogateModel::validate() const {
  if (basis.n_pod < 1 || basis.modes.cols() != basis.n_pod) {
    throw Error(ErrorKind::ModelCorrupt, "basis mode count is inconsistent");
  }
  const InputLayout& layout = layout_of(map);
  if (layout.n_coeffs != basis.n_pod) {
    throw Error(ErrorKind::ModelCorrupt, "map input does not match the basis size");
  }
  if (layout.n_params != provenance.param_lo.size() || layout.n_params != provenance.param_hi.size()) {
    throw Error(ErrorKind::ModelCorrupt, "map parameter count does not match provenance");
  }
  if (lift.dst_grid != basis.grid) {
    throw Error(ErrorKind::ModelCorrupt, "lift destination grid differs from the basis grid");
  }
  if (basis.grid && basis.modes.rows() != basis.grid->size() * Eigen::Index(basis.field_names.size())) {
    throw Error(ErrorKind::ModelCorrupt, "basis rows do not match grid and fields");
  }
  std::visit(
      [&](const auto& m) {
        m.validate();
        Eigen::Index out = 0;
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, LstmModel>) {
          out = m.output_size();
        } else {
          out = m.readout.W.rows();
        }
        if (out != basis.n_pod) throw Error(ErrorKind::ModelCorrupt, "map output does not match the basis size");
      },
      map);
}

OfflineResult offline_train(const SnapshotSet& hf, const SnapshotSet& lf, const OfflineOptions& opt,
                            const Provenance& provenance) {
  if (hf.data.size() == 0 || hf.n_mu() == 0 || hf.n_t() == 0) {
    throw Error(ErrorKind::Validation, "HF training set is empty");
  }
  if (lf.data.size() == 0 || lf.n_mu() == 0 || lf.n_t() == 0) {
    throw Error(ErrorKind::Validation, "LF training set is empty");
  }
  hf.validate();
  lf.validate();
  if (hf.params.rows() != lf.params.rows() || hf.params.cols() != lf.params.cols() ||
      hf.params != lf.params) {
    throw Error(ErrorKind::Alignment, "HF and LF sets were not computed at the same parameter values");
  }
  if (hf.field_names != lf.field_names) {
    throw Error(ErrorKind::Alignment, "HF and LF sets hold different fields");
  }

  OfflineResult result;
  SurrogateModel& model = result.model;
  model.basis = build_basis(hf, opt.pod_rule, opt.center);
  model.lift = {opt.lift_mode, lf.grid, hf.grid, hf.times};
  const SnapshotSet lifted = lift(lf, model.lift);
  const TrainingData data = make_training_data(project(model.basis, lifted), project(model.basis, hf));

  if (opt.kind == MapKind::Lstm) {
    auto r = train_lstm(data, opt.train);
    model.map = std::move(r.model);
    result.log = std::move(r.log);
  } else {
    auto r = train_static_baseline(data, opt.train);
    model.map = std::move(r.model);
    result.log = std::move(r.log);
  }

  model.provenance = provenance;
  if (model.provenance.T_train == 0.0) model.provenance.T_train = hf.times.back();
  model.provenance.param_lo = hf.params.colwise().minCoeff().transpose();
  model.provenance.param_hi = hf.params.colwise().maxCoeff().transpose();
  model.validate();
  return result;
}

std::vector<double> hf_times(const SurrogateModel& model, double T) {
  const FidelityProfile& hf = model.provenance.hf;
  const double step = hf.dt * hf.save_every;
  if (!(step > 0.0)) throw Error(ErrorKind::Validation, "model has no HF time step");
  if (!(T >= 0.0) || !std::isfinite(T)) throw Error(ErrorKind::Validation, "T must be nonnegative");
  const long n = std::lround(T / step);
  if (std::abs(double(n) * step - T) > 1e-9 * std::max(1.0, T)) {
    throw Error(ErrorKind::Validation, "T is not a multiple of the HF storage step");
  }
  std::vector<double> times(std::size_t(n) + 1);
  for (long i = 0; i <= n; ++i) times[std::size_t(i)] = double(i) * step;
  return times;
}

SnapshotSet lift_to(const SurrogateModel& model, const SnapshotSet& lf, const std::vector<double>& times) {
  LiftSpec spec = model.lift;
  spec.dst_times = times;
  return lift(lf, spec);
}

OnlineResult predict_from_lf(const SurrogateModel& model, const SnapshotSet& lf,
                             const std::vector<double>& times) {
  OnlineResult out;
  out.lifted_lf = lift_to(model, lf, times);
  out.lf_coeffs = project(model.basis, out.lifted_lf);
  out.mf_coeffs = predict(model.map, out.lf_coeffs);
  out.prediction = reconstruct(model.basis, out.mf_coeffs);
  out.prediction.field_names = out.lifted_lf.field_names;
  return out;
}

OnlineResult online_predict(const SurrogateModel& model, double mu, double T) {
  const ProblemSpec& spec = solver_spec(model);
  const Provenance& p = model.provenance;
  std::vector<std::string> warnings;
  if (p.param_lo.size() == 1 && (mu < p.param_lo(0) || mu > p.param_hi(0))) {
    std::ostringstream os;
    os << "mu = " << mu << " lies outside the training range [" << p.param_lo(0) << ", "
       << p.param_hi(0) << "]";
    warnings.push_back(os.str());
  }
  const std::vector<double> times = hf_times(model, T);
  Trajectory traj = run_profile(spec, p.lf, mu, T);

  SnapshotSet lf;
  lf.fidelity = Fidelity::Low;
  lf.data = std::move(traj.states);
  lf.grid = Grid2D(p.lf.n, spec.half_length);
  lf.times = std::move(traj.times);
  lf.params = Matrix::Constant(1, 1, mu);
  lf.field_names = model.basis.field_names;

  OnlineResult out = predict_from_lf(model, lf, times);
  out.warnings = std::move(warnings);
  return out;
}

Vector column_relative_errors(const Matrix& reference, const Matrix& approx) {
  if (reference.rows() != approx.rows() || reference.cols() != approx.cols()) {
    throw Error(ErrorKind::Shape, "error metric needs equally shaped matrices");
  }
  Vector e(reference.cols());
  for (Eigen::Index j = 0; j < reference.cols(); ++j) {
    const double r = reference.col(j).norm();
    if (r == 0.0) throw Error(ErrorKind::Data, "reference column " + std::to_string(j) + " is zero");
    e(j) = (reference.col(j) - approx.col(j)).norm() / r;
  }
  return e;
}

double relative_error_percent(const Matrix& reference, const Matrix& approx) {
  if (reference.cols() == 0) throw Error(ErrorKind::Coverage, "no columns to score");
  return 100.0 * column_relative_errors(reference, approx).mean();
}

EvalReport evaluate(const SurrogateModel& model, const std::vector<double>& test_mus, double T,
                    const SnapshotSet& reference, const EvalOptions& opt) {
  if (test_mus.empty()) throw Error(ErrorKind::Validation, "no test parameters");
  if (reference.n_params() != 1) throw Error(ErrorKind::Validation, "evaluation supports scalar parameters");
  if (reference.n_dof() != model.basis.modes.rows()) {
    throw Error(ErrorKind::Shape, "reference n_dof does not match the model basis");
  }
  const std::vector<double> times = hf_times(model, T);
  const double tol = 1e-9 * model.provenance.hf.dt * model.provenance.hf.save_every;

  // Resolve every (mu, t) in the reference before computing anything.
  std::vector<std::vector<Eigen::Index>> columns;
  for (const double mu : test_mus) {
    const Eigen::Index row = find_param(reference.params, mu);
    if (row < 0) {
      std::ostringstream os;
      os << "reference has no trajectory for mu = " << mu;
      throw Error(ErrorKind::Coverage, os.str());
    }
    std::vector<Eigen::Index> cols;
    for (const double t : times) {
      const auto it = std::lower_bound(reference.times.begin(), reference.times.end(), t - tol);
      if (it == reference.times.end() || std::abs(*it - t) > tol) {
        std::ostringstream os;
        os << "reference has no snapshot at t = " << t << " for mu = " << mu;
        throw Error(ErrorKind::Coverage, os.str());
      }
      cols.push_back(reference.column(row, Eigen::Index(it - reference.times.begin())));
    }
    columns.push_back(std::move(cols));
  }

  EvalReport report;
  double sum_mf = 0.0, sum_lf = 0.0;
  for (std::size_t i = 0; i < test_mus.size(); ++i) {
    const OnlineResult r = online_predict(model, test_mus[i], T);
    Matrix ref(reference.n_dof(), Eigen::Index(times.size()));
    for (std::size_t k = 0; k < times.size(); ++k) ref.col(Eigen::Index(k)) = reference.data.col(columns[i][k]);
    const Vector e_mf = column_relative_errors(ref, r.prediction.data);
    const Vector e_lf = column_relative_errors(ref, r.lifted_lf.data);
    for (std::size_t k = 0; k < times.size(); ++k) {
      report.rows.push_back({test_mus[i], times[k], e_mf(Eigen::Index(k)), e_lf(Eigen::Index(k))});
      sum_mf += e_mf(Eigen::Index(k));
      sum_lf += e_lf(Eigen::Index(k));
    }
  }
  report.n_test = report.rows.size();
  report.err_mf_percent = 100.0 * sum_mf / double(report.n_test);
  report.err_lf_percent = 100.0 * sum_lf / double(report.n_test);

  if (opt.timing_runs > 0) {
    const ProblemSpec& spec = solver_spec(model);
    EvalTiming timing;
    for (const double mu : test_mus) {
      timing.lf += median_time(opt.timing_runs, [&] { run_profile(spec, model.provenance.lf, mu, T); });
      timing.mf += median_time(opt.timing_runs, [&] { online_predict(model, mu, T); });
    }
    timing.lf /= double(test_mus.size());
    timing.mf /= double(test_mus.size());
    const std::size_t n_hf = std::clamp<std::size_t>(std::size_t(std::max(opt.hf_timing_count, 1)), 1, test_mus.size());
    for (std::size_t i = 0; i < n_hf; ++i) {
      timing.hf += median_time(opt.timing_runs, [&] { run_profile(spec, model.provenance.hf, test_mus[i], T); });
    }
    timing.hf /= double(n_hf);
    report.timing = timing;
  }
  return report;
}

void write_eval_csv(const EvalReport& report, std::ostream& out) {
  out << "mu,t,err_MF,err_LF\n" << std::setprecision(17);
  for (const auto& r : report.rows) {
    out << r.mu << ',' << r.t << ',' << r.err_mf << ',' << r.err_lf << '\n';
  }
}

void write_eval_summary(const EvalReport& report, std::ostream& out) {
  out << std::setprecision(6);
  out << "N_test          " << report.n_test << '\n';
  out << "err%_MF-POD     " << report.err_mf_percent << '\n';
  out << "err%_LF         " << report.err_lf_percent << '\n';
  if (report.timing) {
    const EvalTiming& t = *report.timing;
    auto pct = [&](double x) { return t.hf > 0.0 ? 100.0 * x / t.hf : 0.0; };
    out << "time_HF [s]     " << t.hf << " (100%)\n";
    out << "time_LF [s]     " << t.lf << " (" << pct(t.lf) << "% of HF)\n";
    out << "time_MF [s]     " << t.mf << " (" << pct(t.mf) << "% of HF)\n";
  }
}

}  // namespace mfpod
