#include <cmath>
#include <limits>
#include <string>

#include "lstm_internal.hpp"
#include "mfpod/mf_lstm.hpp"

namespace mfpod {

namespace {

struct WindowRef {
  std::size_t seq;
  Eigen::Index start;
};

std::vector<WindowRef> plan_windows(std::size_t n_seq, Eigen::Index n_train, Eigen::Index K,
                                    Eigen::Index stride) {
  std::vector<WindowRef> refs;
  for (std::size_t s = 0; s < n_seq; ++s) {
    Eigen::Index start = 0;
    for (; start + K <= n_train; start += stride) refs.push_back({s, start});
    // Cover the tail when the stride does not land on it.
    if (start - stride + K < n_train) refs.push_back({s, n_train - K});
  }
  return refs;
}

[[noreturn]] void diverged(int epoch) {
  throw Error(ErrorKind::Training, "training diverged (non-finite loss) at epoch " + std::to_string(epoch));
}

}  // namespace

TrainResult<LstmModel> train_lstm(const TrainingData& data, const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.layers < 1) throw Error(ErrorKind::Parameter, "LSTM needs at least one layer");
  const detail::Split sp = detail::split_sequences(data, cfg.validation_fraction);
  if (cfg.K > sp.n_t) {
    throw Error(ErrorKind::Parameter, "K = " + std::to_string(cfg.K) + " exceeds the sequence length " +
                                          std::to_string(sp.n_t));
  }
  const Eigen::Index K = std::min<Eigen::Index>(cfg.K, sp.n_train);
  const Eigen::Index stride = cfg.window_stride > 0 ? cfg.window_stride : std::max<Eigen::Index>(1, K / 2);

  const InputLayout layout{cfg.use_time, int(data.front().mu.size()), int(data.front().lf.rows())};
  const int n_out = int(data.front().hf.rows());

  std::vector<Matrix> raw_inputs;
  Matrix train_in(layout.size(), Eigen::Index(data.size()) * sp.n_train);
  Matrix train_out(n_out, Eigen::Index(data.size()) * sp.n_train);
  for (std::size_t s = 0; s < data.size(); ++s) {
    raw_inputs.push_back(assemble_inputs(layout, data[s].times, data[s].mu, data[s].lf));
    train_in.middleCols(Eigen::Index(s) * sp.n_train, sp.n_train) = raw_inputs.back().leftCols(sp.n_train);
    train_out.middleCols(Eigen::Index(s) * sp.n_train, sp.n_train) = data[s].hf.leftCols(sp.n_train);
  }

  LstmModel model = init_lstm(layout, cfg.hidden, cfg.layers, n_out, cfg.seed);
  model.input_norm = Normalizer::fit(train_in);
  model.output_norm = Normalizer::fit(train_out);

  std::vector<Matrix> inputs;
  for (const auto& r : raw_inputs) inputs.push_back(model.input_norm.normalize(r));

  const auto refs = plan_windows(data.size(), sp.n_train, K, stride);
  std::vector<Window> windows;
  for (const auto& r : refs) {
    windows.push_back({inputs[r.seq].middleCols(r.start, K), data[r.seq].hf.middleCols(r.start, K)});
  }

  auto validation_loss = [&](const LstmModel& m) {
    double sum = 0.0;
    for (std::size_t s = 0; s < data.size(); ++s) {
      const Matrix y = detail::lstm_forward_normalized(m, inputs[s], 1);
      sum += (y.rightCols(sp.n_val) - data[s].hf.rightCols(sp.n_val)).squaredNorm();
    }
    return sum / double(Eigen::Index(data.size()) * sp.n_val);
  };

  TrainResult<LstmModel> result;
  result.log.initial_loss = lstm_loss(model, windows, nullptr);
  if (!std::isfinite(result.log.initial_loss)) diverged(0);

  detail::Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  Vector theta = pack(model.params);
  detail::Adam adam(theta.size(), cfg.beta1, cfg.beta2, cfg.adam_eps);
  LstmParams grad;
  std::vector<std::size_t> order(windows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<Window> batch;
  double lr = cfg.learning_rate;
  double best = std::numeric_limits<double>::infinity();
  result.model = model;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double weighted = 0.0;
    for (std::size_t i = 0; i < order.size(); i += std::size_t(cfg.n_batch)) {
      batch.clear();
      for (std::size_t j = i; j < std::min(order.size(), i + std::size_t(cfg.n_batch)); ++j) {
        batch.push_back(windows[order[j]]);
      }
      const double loss = lstm_loss(model, batch, &grad);
      if (!std::isfinite(loss)) diverged(epoch);
      weighted += loss * double(batch.size());
      Vector g = pack(grad);
      detail::clip_norm(g, cfg.grad_clip);
      adam.step(theta, g, lr);
      unpack(theta, model.params);
    }
    lr *= cfg.lr_decay;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = weighted / double(windows.size());
    rec.val_loss = sp.n_val > 0 ? validation_loss(model) : rec.train_loss;
    if (!std::isfinite(rec.val_loss) || !theta.allFinite()) diverged(epoch);
    result.log.epochs.push_back(rec);
    if (rec.val_loss < best) {
      best = rec.val_loss;
      result.model = model;
      result.log.best_epoch = epoch;
    }
  }
  result.log.best_val_loss = best;
  return result;
}

}  // namespace mfpod
