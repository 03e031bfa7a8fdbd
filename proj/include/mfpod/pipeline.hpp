#ifndef MFPOD_PIPELINE_HPP
#define MFPOD_PIPELINE_HPP

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mfpod/lifting.hpp"
#include "mfpod/mf_lstm.hpp"
#include "mfpod/pod.hpp"
#include "mfpod/snapshots.hpp"
#include "mfpod/solvers.hpp"

namespace mfpod {

/// Where a surrogate came from. `problem` is empty for models trained on
/// ingested external data, which cannot run the LF solver online.
struct Provenance {
  std::optional<ProblemSpec> problem;
  FidelityProfile hf;
  FidelityProfile lf;
  double T_train = 0.0;
  Vector param_lo;
  Vector param_hi;
};

struct SurrogateModel {
  PodBasis basis;
  LiftSpec lift;       // dst_times hold the training time grid
  CoefficientMap map;
  Provenance provenance;

  //! Cross-component consistency; throws ErrorKind::ModelCorrupt.
  void validate() const;
};

enum class MapKind { Lstm, Static };

struct OfflineOptions {
  TruncationRule pod_rule = TruncationRule::tolerance(1e-2);
  InterpMode lift_mode = InterpMode::Nearest;
  TrainConfig train;
  MapKind kind = MapKind::Lstm;
  bool center = false;
};

struct OfflineResult {
  SurrogateModel model;
  TrainLog log;
};

/// Basis from HF only, lift LF onto the HF grid and times, project both,
/// fit the coefficient map on the aligned pairs.
OfflineResult offline_train(const SnapshotSet& hf, const SnapshotSet& lf, const OfflineOptions& opt,
                            const Provenance& provenance);

/// Lifts LF snapshots with the model's spatial lift onto `times`.
SnapshotSet lift_to(const SurrogateModel& model, const SnapshotSet& lf, const std::vector<double>& times);

/// HF output times on [0, T] at the model's HF storage step.
std::vector<double> hf_times(const SurrogateModel& model, double T);

struct OnlineResult {
  SnapshotSet prediction;      // HF grid and times
  SnapshotSet lifted_lf;       // LF solution lifted to the same grid and times
  CoefficientSeries lf_coeffs;
  CoefficientSeries mf_coeffs;
  std::vector<std::string> warnings;
};

/// LF solve over [0, T], lift, project, map, reconstruct. Never runs the HF solver.
OnlineResult online_predict(const SurrogateModel& model, double mu, double T);

/// The same chain starting from LF snapshots already at hand.
OnlineResult predict_from_lf(const SurrogateModel& model, const SnapshotSet& lf,
                             const std::vector<double>& times);

struct EvalRow {
  double mu = 0.0;
  double t = 0.0;
  double err_mf = 0.0;   // relative 2-norm error of the column
  double err_lf = 0.0;
};

struct EvalTiming {
  double lf = 0.0;   // seconds per parameter, median over runs
  double mf = 0.0;
  double hf = 0.0;
};

struct EvalReport {
  double err_mf_percent = 0.0;
  double err_lf_percent = 0.0;
  std::size_t n_test = 0;
  std::optional<EvalTiming> timing;
  std::vector<EvalRow> rows;   // ordered by parameter index then time
};

struct EvalOptions {
  int timing_runs = 3;       // 0 disables timing
  int hf_timing_count = 1;   // number of test parameters whose HF solve is timed
};

/// Column-wise relative errors ||ref_j - approx_j|| / ||ref_j||.
Vector column_relative_errors(const Matrix& reference, const Matrix& approx);
/// Mean of the column-wise relative errors times 100.
double relative_error_percent(const Matrix& reference, const Matrix& approx);

/// Predicts every test parameter over [0, T] and scores it against the HF
/// reference set, which must contain each (mu, t) pair.
EvalReport evaluate(const SurrogateModel& model, const std::vector<double>& test_mus, double T,
                    const SnapshotSet& reference, const EvalOptions& opt = {});

void write_eval_csv(const EvalReport& report, std::ostream& out);
void write_eval_summary(const EvalReport& report, std::ostream& out);

void save_model(const SurrogateModel& model, const std::filesystem::path& path);
SurrogateModel load_model(const std::filesystem::path& path);
void write_model(std::ostream& out, const SurrogateModel& model);
SurrogateModel read_model(std::istream& in, const std::string& context);

void write_lstm(std::ostream& out, const LstmModel& model);
LstmModel read_lstm(std::istream& in, const std::string& context);
void write_static(std::ostream& out, const StaticModel& model);
StaticModel read_static(std::istream& in, const std::string& context);

}  // namespace mfpod

#endif
