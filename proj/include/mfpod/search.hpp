#ifndef MFPOD_SEARCH_HPP
#define MFPOD_SEARCH_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mfpod/mf_lstm.hpp"

namespace mfpod {

/// Candidate values per hyperparameter; an empty list keeps the base value.
struct SearchSpace {
  std::vector<int> hidden;
  std::vector<int> layers;
  std::vector<int> K;
  std::vector<int> n_batch;
  std::vector<int> epochs;
  std::vector<double> learning_rate;

  std::size_t grid_size() const;
};

struct SearchTrial {
  TrainConfig config;
  double val_loss = 0.0;   // +inf when training failed
  std::string failure;
};

struct SearchResult {
  TrainConfig best;
  double best_val_loss = 0.0;
  std::vector<SearchTrial> trials;
};

/// Trains `budget` configurations and returns the lowest validation loss.
/// When the budget covers the whole grid every point is tried once;
/// otherwise grid points are drawn without replacement from a seeded stream.
SearchResult hyperparameter_search(const SearchSpace& space, int budget, const TrainingData& data,
                                   const TrainConfig& base, std::uint64_t seed);

void write_search_log(const SearchResult& result, const std::filesystem::path& csv);

}  // namespace mfpod

#endif
