// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//   mfpod_acceptance            run all criteria
//   mfpod_acceptance 3 7        run a subset
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>

#include "gradcheck.hpp"
#include "mfpod/config.hpp"
#include "mfpod/pipeline.hpp"
#include "oracles.hpp"

using namespace mfpod;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Matrix field(const Grid2D& g, auto&& f) {
  Matrix m(g.n(), g.n());
  for (int j = 0; j < g.n(); ++j) {
    for (int i = 0; i < g.n(); ++i) m(i, j) = f(g.coord(i), g.coord(j));
  }
  return m;
}

SnapshotSet matrix_set(const Matrix& data, int n_mu) {
  SnapshotSet s;
  s.data = data;
  for (long i = 0; i < data.cols() / n_mu; ++i) s.times.push_back(double(i));
  std::vector<double> mus;
  for (int i = 0; i < n_mu; ++i) mus.push_back(1.0 + i);
  s.params = params_column(mus);
  s.field_names = {"x"};
  return s;
}

double residual(const Matrix& x, const Matrix& modes) {
  return (x - modes * (modes.transpose() * x)).norm() / x.norm();
}

// ---------------------------------------------------------------------------

Outcome pod_energy() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<long> rows(20, 300), cols(4, 60);
  std::uniform_real_distribution<double> decay(0.3, 0.98);
  const double eps_list[] = {0.5, 0.2, 0.1, 3e-2, 1e-2, 1e-3, 1e-5};
  int checked = 0, bad = 0;
  auto check = [&](const Matrix& x, int n_mu) {
    for (const double eps : eps_list) {
      const PodBasis b = build_basis(matrix_set(x, n_mu), TruncationRule::tolerance(eps));
      ++checked;
      if (!(residual(x, b.modes) <= eps)) ++bad;
      if (b.n_pod > 1 && !(residual(x, b.modes.leftCols(b.n_pod - 1)) > eps)) ++bad;
    }
  };
  for (int trial = 0; trial < 50; ++trial) {
    const long m = rows(rng), n = cols(rng);
    Matrix a = oracle::random_matrix(m, n, rng);
    const double r = decay(rng);
    for (long j = 0; j < n; ++j) a.col(j) *= std::pow(r, double(j));
    check(a * oracle::random_matrix(n, n, rng), 1);
  }
  // Solver snapshots as a physical training set.
  const ProblemSpec rd = default_problem_spec(Problem::ReactionDiffusion);
  const SnapshotSet snaps = generate_dataset(rd, {32, 0.05, 0.05, 10}, std::vector<double>{0.7, 1.3}, 20.0,
                                             Fidelity::High);
  check(snaps.data, 2);
  return {bad == 0, fmt("%d tolerance bases, %d violations", checked, bad)};
}

Outcome svd_oracle() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<long> size(1, 200);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const long m = trial == 0 ? 200 : size(rng), n = trial == 0 ? 200 : size(rng);
    const Matrix a = oracle::random_matrix(m, n, rng);
    const Vector s = thin_svd(a).sigma;
    const std::vector<double> ref = oracle::gram_singular_values(a);
    if (std::size_t(s.size()) != ref.size()) return {false, fmt("size mismatch at trial %d", trial)};
    for (std::size_t i = 0; i < ref.size(); ++i) {
      worst = std::max(worst, std::abs(s(Eigen::Index(i)) - ref[i]) / ref[i]);
    }
  }
  return {worst < 1e-9, fmt("worst relative deviation %.2e over 100 matrices", worst)};
}

Outcome gradient_check() {
  const oracle::GradCheck g = oracle::lstm_gradient_check(3, 1, 4, 2, 3, 303);
  return {g.worst_rel < 1e-5, fmt("%ld parameters, worst relative error %.2e", g.n_params, g.worst_rel)};
}

Outcome solver_analytic() {
  std::string detail;
  bool ok = true;

  double cycle = 0.0;
  for (const double mu : {0.5, 1.0}) {
    RdConfig cfg;
    cfg.n = 8;
    cfg.T = 10.0;
    cfg.dt = 0.05;
    cfg.mu = mu;
    cfg.initial = std::pair{Matrix(Matrix::Ones(8, 8)), Matrix(Matrix::Zero(8, 8))};
    const Trajectory tr = solve_rd(cfg);
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      const auto col = tr.states.col(Eigen::Index(k));
      cycle = std::max(cycle, (col.head(64).array() - std::cos(mu * tr.times[k])).abs().maxCoeff());
      cycle = std::max(cycle, (col.tail(64).array() + std::sin(mu * tr.times[k])).abs().maxCoeff());
    }
  }
  ok = ok && cycle < 1e-6;
  detail += fmt("(a) %.1e", cycle);

  double heat = 0.0;
  {
    RdConfig cfg;
    cfg.n = 32;
    cfg.T = 10.0;
    cfg.reaction = false;
    const Grid2D g(cfg.n, cfg.half_length);
    const double L = cfg.half_length;
    const Matrix u0 = field(g, [&](double x, double y) { return std::sin(kPi * x / L) * std::cos(2 * kPi * y / L); });
    cfg.initial = std::pair{u0, Matrix(Matrix::Zero(32, 32))};
    const Trajectory tr = solve_rd(cfg);
    const double k2 = 5.0 * (kPi / L) * (kPi / L);
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      const Matrix u = Eigen::Map<const Matrix>(tr.states.col(Eigen::Index(k)).data(), 32, 32);
      heat = std::max(heat, (u - std::exp(-cfg.d * k2 * tr.times[k]) * u0).cwiseAbs().maxCoeff());
    }
  }
  ok = ok && heat < 1e-8;
  detail += fmt(", (b) %.1e", heat);

  double poisson = 0.0;
  for (const int n : {32, 64, 128}) {
    const Grid2D g(n, 10.0);
    const double L = g.half_length();
    const Matrix w = field(g, [&](double x, double y) { return std::sin(kPi * x / L) * std::sin(3 * kPi * y / L); });
    const Matrix expect = -w / (10.0 * (kPi / L) * (kPi / L));
    poisson = std::max(poisson, (solve_poisson(w, g) - expect).cwiseAbs().maxCoeff());
  }
  ok = ok && poisson < 1e-10;
  detail += fmt(", (c) %.1e", poisson);

  double drift = 0.0;
  {
    SwConfig cfg;
    cfg.n = 64;
    cfg.T = 20.0;
    cfg.mu = 5.0;
    const Trajectory tr = solve_sw(cfg);
    const double total0 = tr.states.col(0).sum();
    for (Eigen::Index k = 1; k < tr.states.cols(); ++k) {
      drift = std::max(drift, std::abs(tr.states.col(k).sum() - total0) / std::abs(total0));
    }
  }
  ok = ok && drift < 1e-10;
  detail += fmt(", (d) %.1e relative", drift);
  return {ok, detail};
}

Outcome rk4_order() {
  const Grid2D g(16, 20.0);
  const double L = g.half_length();
  const std::pair<Matrix, Matrix> ic{
      field(g, [&](double x, double y) { return 0.6 * std::cos(kPi * x / L) + 0.2 * std::sin(kPi * y / L); }),
      field(g, [&](double x, double y) { return 0.3 * std::sin(kPi * (x + y) / L); })};
  auto terminal = [&](double dt) {
    RdConfig cfg;
    cfg.n = 16;
    cfg.T = 2.0;
    cfg.dt = dt;
    cfg.d = 0.5;
    cfg.save_every = int(std::lround(2.0 / dt));
    cfg.initial = ic;
    return Vector(solve_rd(cfg).states.rightCols(1));
  };
  const Vector ref = terminal(0.4 / 32);
  std::vector<double> err;
  for (const double dt : {0.4, 0.2, 0.1}) err.push_back((terminal(dt) - ref).cwiseAbs().maxCoeff());
  const double p1 = std::log2(err[0] / err[1]), p2 = std::log2(err[1] / err[2]);
  return {std::min(p1, p2) >= 3.7, fmt("observed orders %.2f, %.2f", p1, p2)};
}

// ---------------------------------------------------------------------------
// Desk-scale example runs shared by criteria 6 to 10.

struct ExampleRun {
  RunConfig cfg;
  SnapshotSet hf, lf, reference;
  OfflineResult trained;
  EvalReport report;
  std::string model_bytes;
  std::string csv_bytes;
  double seconds = 0.0;
};

std::string model_bytes(const SurrogateModel& m) {
  std::ostringstream os;
  write_model(os, m);
  return os.str();
}

std::string csv_bytes(const EvalReport& r) {
  std::ostringstream os;
  write_eval_csv(r, os);
  return os.str();
}

ExampleRun run_example(const std::string& name) {
  const auto t0 = std::chrono::steady_clock::now();
  ExampleRun run;
  run.cfg = load_run_config(fs::path(MFPOD_CONFIG_DIR) / name);
  const RunConfig& c = run.cfg;
  run.hf = generate_dataset(c.problem, c.hf, c.train_mus, c.T_train, Fidelity::High, c.threads);
  run.lf = generate_dataset(c.problem, c.lf, c.train_mus, c.T_train, Fidelity::Low, c.threads);
  run.reference = generate_dataset(c.problem, c.hf, c.test_mus, c.T_test, Fidelity::High, c.threads);
  run.trained = offline_train(run.hf, run.lf, c.offline, c.provenance());
  run.report = evaluate(run.trained.model, c.test_mus, c.T_test, run.reference, c.eval);
  run.model_bytes = model_bytes(run.trained.model);
  run.csv_bytes = csv_bytes(run.report);
  run.seconds = seconds_since(t0);
  return run;
}

std::optional<ExampleRun> example1, example2;

ExampleRun& ex1() {
  if (!example1) example1 = run_example("example1_desk.json");
  return *example1;
}

ExampleRun& ex2() {
  if (!example2) example2 = run_example("example2_desk.json");
  return *example2;
}

Outcome desk_example1() {
  const ExampleRun& r = ex1();
  const double mf = r.report.err_mf_percent, lf = r.report.err_lf_percent;
  const bool ok = mf <= lf / 2.0 && mf <= 35.0 && lf >= 80.0;
  return {ok, fmt("err_MF %.2f%%, err_LF %.2f%% (need MF <= LF/2, MF <= 35%%, LF >= 80%%), %s initial condition, "
                  "%.0f s",
                  mf, lf, to_string(r.cfg.problem.rd_initial), r.seconds)};
}

Outcome desk_example2() {
  const ExampleRun& r = ex2();
  const double mf = r.report.err_mf_percent, lf = r.report.err_lf_percent;
  return {mf <= lf / 1.5, fmt("err_MF %.2f%%, err_LF %.2f%% (need MF <= LF/1.5 = %.2f%%), %.0f s", mf, lf,
                              lf / 1.5, r.seconds)};
}

Outcome static_baseline() {
  ExampleRun& r = ex1();
  OfflineOptions opt = r.cfg.offline;
  opt.kind = MapKind::Static;
  const OfflineResult s = offline_train(r.hf, r.lf, opt, r.cfg.provenance());
  EvalOptions eo = r.cfg.eval;
  eo.timing_runs = 0;
  const double static_err = evaluate(s.model, r.cfg.test_mus, r.cfg.T_test, r.reference, eo).err_mf_percent;
  const double lstm_err = r.report.err_mf_percent;
  return {static_err > lstm_err, fmt("static %.2f%% vs LSTM %.2f%% (need static > LSTM)", static_err, lstm_err)};
}

Outcome online_cost() {
  bool ok = true;
  std::string detail;
  for (auto* r : {&ex1(), &ex2()}) {
    if (!r->report.timing) return {false, "timing disabled in config"};
    const EvalTiming& t = *r->report.timing;
    const double ratio = t.mf / t.hf;
    ok = ok && ratio <= 0.25;
    if (!detail.empty()) detail += "; ";
    detail += fmt("%s MF %.3f s vs HF %.3f s = %.1f%%", to_string(r->cfg.problem.problem), t.mf, t.hf, 100 * ratio);
  }
  return {ok, detail};
}

Outcome determinism() {
  ExampleRun& r = ex1();
  std::vector<std::string> broken;

  // Same seed, second training and evaluation.
  const OfflineResult again = offline_train(r.hf, r.lf, r.cfg.offline, r.cfg.provenance());
  if (model_bytes(again.model) != r.model_bytes) broken.push_back("model bytes differ across runs");
  EvalOptions eo = r.cfg.eval;
  eo.timing_runs = 0;
  const EvalReport rep = evaluate(again.model, r.cfg.test_mus, r.cfg.T_test, r.reference, eo);
  if (csv_bytes(rep) != r.csv_bytes) broken.push_back("evaluation CSV differs across runs");

  const fs::path dir = fs::temp_directory_path() / ("mfpod_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);

  // Snapshot files, both examples.
  for (auto* run : {&ex1(), &ex2()}) {
    for (const SnapshotSet* s : {&run->hf, &run->lf, &run->reference}) {
      write_snapshots(*s, dir / "set.mfsnap");
      if (!(read_snapshots(dir / "set.mfsnap") == *s)) broken.push_back("snapshot round trip");
    }
  }

  // Model files: reload, re-save, predict.
  for (auto* run : {&ex1(), &ex2()}) {
    save_model(run->trained.model, dir / "model.bin");
    const SurrogateModel loaded = load_model(dir / "model.bin");
    if (model_bytes(loaded) != run->model_bytes) broken.push_back("model round trip bytes");
    const double mu = run->cfg.test_mus.front();
    const Matrix a = online_predict(run->trained.model, mu, run->cfg.T_train).prediction.data;
    const Matrix b = online_predict(loaded, mu, run->cfg.T_train).prediction.data;
    if (a != b) broken.push_back("reloaded model predicts differently");
  }
  OfflineOptions so = r.cfg.offline;
  so.kind = MapKind::Static;
  so.train.epochs = 20;
  const OfflineResult st = offline_train(r.hf, r.lf, so, r.cfg.provenance());
  save_model(st.model, dir / "static.bin");
  if (model_bytes(load_model(dir / "static.bin")) != model_bytes(st.model)) broken.push_back("static round trip");

  fs::remove_all(dir);
  std::string detail = broken.empty() ? "models, CSVs, snapshot and model files identical" : "";
  for (const auto& b : broken) detail += (detail.empty() ? "" : "; ") + b;
  return {broken.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"POD energy criterion", pod_energy},
      {"SVD oracle equivalence", svd_oracle},
      {"LSTM gradient check", gradient_check},
      {"solver analytic checks", solver_analytic},
      {"RK4 order", rk4_order},
      {"desk-scale example I", desk_example1},
      {"desk-scale example II", desk_example2},
      {"static baseline ordering", static_baseline},
      {"online cost ordering", online_cost},
      {"determinism and persistence", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = int(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << ": "
              << o.detail << fmt("  [%.1f s]", seconds_since(t0)) << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
