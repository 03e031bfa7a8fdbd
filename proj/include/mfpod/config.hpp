#ifndef MFPOD_CONFIG_HPP
#define MFPOD_CONFIG_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mfpod/pipeline.hpp"
#include "mfpod/search.hpp"

namespace mfpod {

/// Experiment manifest. Every section is optional in the file; unknown keys
/// anywhere are rejected before any compute.
struct RunConfig {
  ProblemSpec problem = default_problem_spec(Problem::ReactionDiffusion);
  FidelityProfile hf;
  FidelityProfile lf;
  std::vector<double> train_mus;
  std::vector<double> test_mus;
  double T_train = 0.0;
  double T_test = 0.0;
  OfflineOptions offline;
  SearchSpace search_space;
  int search_budget = 1;
  EvalOptions eval;
  std::uint64_t seed = 1;
  int threads = 1;
  std::filesystem::path hf_path;
  std::filesystem::path lf_path;
  std::filesystem::path reference_path;
  std::filesystem::path model_path;
  std::filesystem::path out_dir = ".";

  Provenance provenance() const;
};

/// Defaults for a problem before any file keys are applied.
RunConfig default_run_config(Problem p);

RunConfig parse_run_config(const std::string& json_text, const std::string& source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

//! Applies MFPOD_SEED from the environment when set.
void apply_environment(RunConfig& cfg);

}  // namespace mfpod

#endif
