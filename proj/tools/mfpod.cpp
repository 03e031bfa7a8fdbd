// mfpod: command-line driver for data generation, training, prediction and evaluation.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mfpod/config.hpp"
#include "mfpod/pipeline.hpp"
#include "mfpod/search.hpp"

namespace fs = std::filesystem;
using namespace mfpod;

namespace {

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Instability:
    case ErrorKind::Training:
    case ErrorKind::ModelCorrupt:
      return 3;
    case ErrorKind::Coverage:
      return 4;
    default:
      return 2;
  }
}

struct Common {
  std::string config;
  int threads = 0;
  bool no_overwrite = false;
};

RunConfig load(const Common& c) {
  RunConfig cfg = c.config.empty() ? default_run_config(Problem::ReactionDiffusion)
                                   : load_run_config(c.config);
  apply_environment(cfg);
  if (c.threads > 0) cfg.threads = c.threads;
  return cfg;
}

void check_output(const fs::path& p, const Common& c) {
  if (p.empty()) throw Error(ErrorKind::Validation, "no output path given");
  if (c.no_overwrite && fs::exists(p)) {
    throw Error(ErrorKind::Storage, "refusing to overwrite " + p.string() + " (--no-overwrite)");
  }
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

template <class F>
void write_text(const fs::path& p, F&& body) {
  std::ofstream out(p);
  if (!out) throw Error(ErrorKind::Storage, "cannot write " + p.string());
  body(out);
  if (!out) throw Error(ErrorKind::Storage, "failed writing " + p.string());
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SnapshotSet generate(const RunConfig& cfg, Fidelity fid, bool test_set) {
  const auto& profile = fid == Fidelity::High ? cfg.hf : cfg.lf;
  const auto& mus = test_set ? cfg.test_mus : cfg.train_mus;
  const double T = test_set ? cfg.T_test : cfg.T_train;
  return generate_dataset(cfg.problem, profile, mus, T, fid, cfg.threads);
}

void print_log(std::ostream& out, const TrainLog& log) {
  out << "epoch,train_loss,val_loss\n" << std::setprecision(17);
  out << 0 << ',' << log.initial_loss << ',' << log.initial_loss << '\n';
  for (const auto& e : log.epochs) out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << '\n';
}

void write_coeff_csv(std::ostream& out, const OnlineResult& r, const Matrix* ref) {
  const Eigen::Index n = r.mf_coeffs.coeffs.rows();
  out << 't';
  for (Eigen::Index i = 1; i <= n; ++i) out << ",lf_" << i;
  for (Eigen::Index i = 1; i <= n; ++i) out << ",mf_" << i;
  if (ref) {
    for (Eigen::Index i = 1; i <= n; ++i) out << ",ref_" << i;
  }
  out << '\n' << std::setprecision(17);
  for (Eigen::Index j = 0; j < r.mf_coeffs.coeffs.cols(); ++j) {
    out << r.mf_coeffs.times[std::size_t(j)];
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << r.lf_coeffs.coeffs(i, j);
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << r.mf_coeffs.coeffs(i, j);
    if (ref) {
      for (Eigen::Index i = 0; i < n; ++i) out << ',' << (*ref)(i, j);
    }
    out << '\n';
  }
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error(ErrorKind::Validation, "not a number: '" + item + "'");
    }
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-fidelity POD + LSTM surrogate modelling"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config, "JSON run configuration");
    sub->add_option("--threads", common.threads, "worker thread cap");
    sub->add_flag("--no-overwrite", common.no_overwrite, "fail instead of replacing outputs");
  };

  // generate
  std::string gen_problem, gen_fidelity = "hf", gen_out, gen_set = "train";
  auto* gen = app.add_subcommand("generate", "run a solver over a parameter set and store snapshots");
  add_common(gen);
  gen->add_option("--problem", gen_problem, "rd | sw (overrides the config)");
  gen->add_option("--fidelity", gen_fidelity, "hf | lf")->check(CLI::IsMember({"hf", "lf"}));
  gen->add_option("--set", gen_set, "train (T_train, train params) | test (T_test, test params)")
      ->check(CLI::IsMember({"train", "test"}));
  gen->add_option("-o,--out", gen_out, "output MFSNAP file")->required();

  // train
  std::string tr_hf, tr_lf, tr_out, tr_log, tr_kind;
  auto* tr = app.add_subcommand("train", "fit a surrogate from HF and LF snapshot files");
  add_common(tr);
  tr->add_option("--hf", tr_hf, "HF training snapshots");
  tr->add_option("--lf", tr_lf, "LF training snapshots");
  tr->add_option("-o,--out", tr_out, "output model file");
  tr->add_option("--log", tr_log, "training-log CSV (default: <out>.log.csv)");
  tr->add_option("--model", tr_kind, "lstm | static")->check(CLI::IsMember({"lstm", "static"}));

  // predict
  std::string pr_model, pr_out, pr_csv, pr_ref;
  double pr_mu = 0.0, pr_T = 0.0;
  auto* pr = app.add_subcommand("predict", "predict HF fields at one parameter value");
  add_common(pr);
  pr->add_option("-m,--model", pr_model, "model file")->required();
  pr->add_option("--mu", pr_mu, "parameter value")->required();
  pr->add_option("--T", pr_T, "final time")->required();
  pr->add_option("-o,--out", pr_out, "predicted MFSNAP file")->required();
  pr->add_option("--csv", pr_csv, "coefficient CSV (default: <out>.coeffs.csv)");
  pr->add_option("--reference", pr_ref, "HF reference MFSNAP to add to the CSV");

  // evaluate
  std::string ev_model, ev_ref, ev_out, ev_summary, ev_mus;
  double ev_T = -1.0;
  int ev_timing = -1;
  auto* ev = app.add_subcommand("evaluate", "score a model against HF reference snapshots");
  add_common(ev);
  ev->add_option("-m,--model", ev_model, "model file");
  ev->add_option("--reference", ev_ref, "HF reference MFSNAP file");
  ev->add_option("-o,--out", ev_out, "report CSV")->required();
  ev->add_option("--summary", ev_summary, "summary text (default: <out>.summary.txt)");
  ev->add_option("--mus", ev_mus, "comma-separated test parameters (default: config)");
  ev->add_option("--T", ev_T, "final time (default: config T_test)");
  ev->add_option("--timing-runs", ev_timing, "timing repetitions, 0 disables");

  // search
  std::string se_hf, se_lf, se_out;
  int se_budget = 0;
  auto* se = app.add_subcommand("search", "hyperparameter search over the config search space");
  add_common(se);
  se->add_option("--hf", se_hf, "HF training snapshots");
  se->add_option("--lf", se_lf, "LF training snapshots");
  se->add_option("-o,--out", se_out, "trial log CSV")->required();
  se->add_option("--budget", se_budget, "number of trials (default: config)");

  // report
  std::string rp_dir;
  auto* rp = app.add_subcommand("report", "run generate, train and evaluate end to end");
  add_common(rp);
  rp->add_option("-o,--out-dir", rp_dir, "output directory (default: config paths.out_dir)");

  // ingest
  std::string in_data, in_out, in_fields = "x", in_mus, in_fid = "hf";
  long in_ndof = 0;
  double in_t0 = 0.0, in_dt = 1.0;
  int in_nt = 0;
  auto* in = app.add_subcommand("ingest", "wrap raw float64 data from an external solver");
  add_common(in);
  in->add_option("--data", in_data, "raw little-endian float64, column-major")->required();
  in->add_option("--n-dof", in_ndof, "values per snapshot")->required();
  in->add_option("--fields", in_fields, "comma-separated field names");
  in->add_option("--mus", in_mus, "comma-separated parameter values")->required();
  in->add_option("--t0", in_t0, "first time");
  in->add_option("--dt", in_dt, "time step");
  in->add_option("--nt", in_nt, "snapshots per parameter")->required();
  in->add_option("--fidelity", in_fid, "hf | lf")->check(CLI::IsMember({"hf", "lf"}));
  in->add_option("-o,--out", in_out, "output MFSNAP file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const auto t0 = std::chrono::steady_clock::now();

    if (*gen) {
      RunConfig cfg = load(common);
      if (!gen_problem.empty()) {
        const Problem p = parse_problem(gen_problem);
        if (p != cfg.problem.problem) {
          if (!common.config.empty()) {
            throw Error(ErrorKind::Validation, "--problem " + gen_problem + " contradicts the config");
          }
          cfg = default_run_config(p);
          apply_environment(cfg);
          if (common.threads > 0) cfg.threads = common.threads;
        }
      }
      check_output(gen_out, common);
      const Fidelity fid = gen_fidelity == "hf" ? Fidelity::High : Fidelity::Low;
      const SnapshotSet set = generate(cfg, fid, gen_set == "test");
      write_snapshots(set, gen_out);
      std::cout << "wrote " << gen_out << ": " << set.n_mu() << " parameters x " << set.n_t()
                << " times, n_dof = " << set.n_dof() << ", n = " << set.grid->n() << " ("
                << elapsed(t0) << " s)\n";
      return 0;
    }

    if (*tr) {
      RunConfig cfg = load(common);
      if (!tr_hf.empty()) cfg.hf_path = tr_hf;
      if (!tr_lf.empty()) cfg.lf_path = tr_lf;
      if (!tr_out.empty()) cfg.model_path = tr_out;
      if (!tr_kind.empty()) cfg.offline.kind = tr_kind == "lstm" ? MapKind::Lstm : MapKind::Static;
      check_output(cfg.model_path, common);
      const SnapshotSet hf = read_snapshots(cfg.hf_path);
      const SnapshotSet lf = read_snapshots(cfg.lf_path);
      Provenance prov = cfg.provenance();
      prov.T_train = hf.times.back();
      const OfflineResult r = offline_train(hf, lf, cfg.offline, prov);
      save_model(r.model, cfg.model_path);
      const fs::path log = tr_log.empty() ? fs::path(cfg.model_path.string() + ".log.csv") : fs::path(tr_log);
      write_text(log, [&](std::ostream& o) { print_log(o, r.log); });
      std::cout << "wrote " << cfg.model_path << ": n_pod = " << r.model.basis.n_pod
                << ", best epoch " << r.log.best_epoch << " (val loss " << r.log.best_val_loss
                << "), " << elapsed(t0) << " s\n";
      return 0;
    }

    if (*pr) {
      const SurrogateModel model = load_model(pr_model);
      check_output(pr_out, common);
      const OnlineResult r = online_predict(model, pr_mu, pr_T);
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
      write_snapshots(r.prediction, pr_out);
      Matrix ref_coeffs;
      if (!pr_ref.empty()) {
        const SnapshotSet ref = read_snapshots(pr_ref);
        EvalOptions none;
        none.timing_runs = 0;
        evaluate(model, {pr_mu}, pr_T, ref, none);  // coverage check
        const auto times = hf_times(model, pr_T);
        Matrix cols(ref.n_dof(), Eigen::Index(times.size()));
        Eigen::Index row = 0;
        while (row < ref.n_mu() && std::abs(ref.params(row, 0) - pr_mu) > 1e-12 * std::max(1.0, std::abs(pr_mu))) ++row;
        for (std::size_t k = 0; k < times.size(); ++k) {
          const auto it = std::lower_bound(ref.times.begin(), ref.times.end(), times[k] - 1e-9);
          cols.col(Eigen::Index(k)) = ref.data.col(ref.column(row, Eigen::Index(it - ref.times.begin())));
        }
        ref_coeffs = project(model.basis, cols, times, Matrix::Constant(1, 1, pr_mu)).coeffs;
      }
      const fs::path csv = pr_csv.empty() ? fs::path(pr_out + ".coeffs.csv") : fs::path(pr_csv);
      write_text(csv, [&](std::ostream& o) { write_coeff_csv(o, r, pr_ref.empty() ? nullptr : &ref_coeffs); });
      std::cout << "wrote " << pr_out << " and " << csv.string() << ": " << r.prediction.n_t()
                << " snapshots (" << elapsed(t0) << " s)\n";
      return 0;
    }

    if (*ev) {
      RunConfig cfg = load(common);
      if (!ev_model.empty()) cfg.model_path = ev_model;
      if (!ev_ref.empty()) cfg.reference_path = ev_ref;
      if (!ev_mus.empty()) cfg.test_mus = parse_list(ev_mus);
      if (ev_T >= 0.0) cfg.T_test = ev_T;
      if (ev_timing >= 0) cfg.eval.timing_runs = ev_timing;
      check_output(ev_out, common);
      const SurrogateModel model = load_model(cfg.model_path);
      const SnapshotSet ref = read_snapshots(cfg.reference_path);
      const EvalReport report = evaluate(model, cfg.test_mus, cfg.T_test, ref, cfg.eval);
      write_text(ev_out, [&](std::ostream& o) { write_eval_csv(report, o); });
      const fs::path summary = ev_summary.empty() ? fs::path(ev_out + ".summary.txt") : fs::path(ev_summary);
      write_text(summary, [&](std::ostream& o) { write_eval_summary(report, o); });
      write_eval_summary(report, std::cout);
      return 0;
    }

    if (*se) {
      RunConfig cfg = load(common);
      if (!se_hf.empty()) cfg.hf_path = se_hf;
      if (!se_lf.empty()) cfg.lf_path = se_lf;
      if (se_budget > 0) cfg.search_budget = se_budget;
      check_output(se_out, common);
      const SnapshotSet hf = read_snapshots(cfg.hf_path);
      const SnapshotSet lf = read_snapshots(cfg.lf_path);
      const PodBasis basis = build_basis(hf, cfg.offline.pod_rule, cfg.offline.center);
      const LiftSpec spec{cfg.offline.lift_mode, lf.grid, hf.grid, hf.times};
      const TrainingData data = make_training_data(project(basis, lift(lf, spec)), project(basis, hf));
      const SearchResult r = hyperparameter_search(cfg.search_space, cfg.search_budget, data,
                                                   cfg.offline.train, cfg.seed);
      write_search_log(r, se_out);
      std::cout << "best of " << r.trials.size() << " trials: hidden " << r.best.hidden << ", layers "
                << r.best.layers << ", K " << r.best.K << ", n_batch " << r.best.n_batch << ", epochs "
                << r.best.epochs << ", learning_rate " << r.best.learning_rate << " (val loss "
                << r.best_val_loss << ")\n";
      return 0;
    }

    if (*rp) {
      RunConfig cfg = load(common);
      const fs::path dir = rp_dir.empty() ? cfg.out_dir : fs::path(rp_dir);
      fs::create_directories(dir);
      auto stage = [&](const fs::path& p, Fidelity fid, bool test) {
        check_output(p, common);
        const SnapshotSet s = generate(cfg, fid, test);
        write_snapshots(s, p);
        return s;
      };
      const SnapshotSet hf = stage(dir / "hf_train.mfsnap", Fidelity::High, false);
      const SnapshotSet lf = stage(dir / "lf_train.mfsnap", Fidelity::Low, false);
      const SnapshotSet ref = stage(dir / "hf_test.mfsnap", Fidelity::High, true);
      check_output(dir / "model.mfsurr", common);
      const OfflineResult r = offline_train(hf, lf, cfg.offline, cfg.provenance());
      save_model(r.model, dir / "model.mfsurr");
      write_text(dir / "train_log.csv", [&](std::ostream& o) { print_log(o, r.log); });
      const EvalReport report = evaluate(r.model, cfg.test_mus, cfg.T_test, ref, cfg.eval);
      write_text(dir / "report.csv", [&](std::ostream& o) { write_eval_csv(report, o); });
      write_text(dir / "summary.txt", [&](std::ostream& o) { write_eval_summary(report, o); });
      std::cout << "n_pod           " << r.model.basis.n_pod << '\n';
      write_eval_summary(report, std::cout);
      std::cout << "artifacts in " << dir.string() << " (" << elapsed(t0) << " s)\n";
      return 0;
    }

    if (*in) {
      check_output(in_out, common);
      ExternalLayout layout;
      layout.n_dof = in_ndof;
      layout.field_names.clear();
      std::stringstream ss(in_fields);
      for (std::string f; std::getline(ss, f, ',');) layout.field_names.push_back(f);
      layout.fidelity = in_fid == "hf" ? Fidelity::High : Fidelity::Low;
      std::vector<double> times(std::size_t(std::max(in_nt, 0)));
      for (std::size_t i = 0; i < times.size(); ++i) times[i] = in_t0 + double(i) * in_dt;
      const SnapshotSet set = ingest_external(in_data, layout, times, params_column(parse_list(in_mus)));
      write_snapshots(set, in_out);
      std::cout << "wrote " << in_out << ": " << set.n_mu() << " parameters x " << set.n_t() << " times\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error (storage): " << e.what() << '\n';
    return 2;
  }
  return 0;
}
