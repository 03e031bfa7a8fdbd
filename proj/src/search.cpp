#include "mfpod/search.hpp"

#include <fstream>
#include <iomanip>
#include <limits>

#include "lstm_internal.hpp"

namespace mfpod {

namespace {

template <class T>
std::size_t extent(const std::vector<T>& v) {
  return v.empty() ? 1 : v.size();
}

// Mixed-radix decode of a grid index.
TrainConfig config_at(const SearchSpace& s, const TrainConfig& base, std::size_t index) {
  TrainConfig c = base;
  auto pick = [&](const auto& values, auto& field) {
    const std::size_t n = extent(values);
    if (!values.empty()) field = values[index % n];
    index /= n;
  };
  pick(s.hidden, c.hidden);
  pick(s.layers, c.layers);
  pick(s.K, c.K);
  pick(s.n_batch, c.n_batch);
  pick(s.epochs, c.epochs);
  pick(s.learning_rate, c.learning_rate);
  return c;
}

}  // namespace

std::size_t SearchSpace::grid_size() const {
  return extent(hidden) * extent(layers) * extent(K) * extent(n_batch) * extent(epochs) *
         extent(learning_rate);
}

SearchResult hyperparameter_search(const SearchSpace& space, int budget, const TrainingData& data,
                                   const TrainConfig& base, std::uint64_t seed) {
  if (budget < 1) throw Error(ErrorKind::Parameter, "search budget must be >= 1");
  if (space.hidden.empty() && space.layers.empty() && space.K.empty() && space.n_batch.empty() &&
      space.epochs.empty() && space.learning_rate.empty()) {
    throw Error(ErrorKind::Parameter, "search space is empty");
  }
  const std::size_t grid = space.grid_size();
  std::vector<std::size_t> points(grid);
  for (std::size_t i = 0; i < grid; ++i) points[i] = i;
  if (std::size_t(budget) < grid) {
    detail::Rng rng(seed);
    rng.shuffle(points);
    points.resize(std::size_t(budget));
  }

  SearchResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  for (const std::size_t p : points) {
    SearchTrial trial;
    trial.config = config_at(space, base, p);
    try {
      trial.val_loss = train_lstm(data, trial.config).log.best_val_loss;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Training && e.kind() != ErrorKind::Parameter) throw;
      trial.val_loss = std::numeric_limits<double>::infinity();
      trial.failure = e.what();
    }
    if (result.trials.empty() || trial.val_loss < result.best_val_loss) {
      result.best = trial.config;
      result.best_val_loss = trial.val_loss;
    }
    result.trials.push_back(std::move(trial));
  }
  return result;
}

void write_search_log(const SearchResult& result, const std::filesystem::path& csv) {
  std::ofstream out(csv);
  if (!out) throw Error(ErrorKind::Storage, "cannot write " + csv.string());
  out << "trial,hidden,layers,K,n_batch,epochs,learning_rate,val_loss,failure\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < result.trials.size(); ++i) {
    const auto& t = result.trials[i];
    std::string failure = t.failure;
    for (auto& ch : failure) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    out << i << ',' << t.config.hidden << ',' << t.config.layers << ',' << t.config.K << ','
        << t.config.n_batch << ',' << t.config.epochs << ',' << t.config.learning_rate << ','
        << t.val_loss << ',' << failure << '\n';
  }
  if (!out) throw Error(ErrorKind::Storage, "failed writing " + csv.string());
}

}  // namespace mfpod
