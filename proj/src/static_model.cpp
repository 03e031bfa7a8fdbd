#include <cmath>
#include <limits>
#include <string>

#include "lstm_internal.hpp"
#include "mfpod/mf_lstm.hpp"

namespace mfpod {

namespace {

Vector pack_static(const StaticModel& m) {
  Eigen::Index size = m.readout.W.size() + m.readout.b.size();
  for (const auto& l : m.hidden) size += l.W.size() + l.b.size();
  Vector flat(size);
  Eigen::Index at = 0;
  auto put = [&](const auto& x) {
    flat.segment(at, x.size()) = x.reshaped();
    at += x.size();
  };
  for (const auto& l : m.hidden) {
    put(l.W);
    put(l.b);
  }
  put(m.readout.W);
  put(m.readout.b);
  return flat;
}

void unpack_static(const Vector& flat, StaticModel& m) {
  Eigen::Index at = 0;
  auto get = [&](auto& x) {
    x.reshaped() = flat.segment(at, x.size());
    at += x.size();
  };
  for (auto& l : m.hidden) {
    get(l.W);
    get(l.b);
  }
  get(m.readout.W);
  get(m.readout.b);
}

Matrix forward_normalized(const StaticModel& m, const Matrix& x, std::vector<Matrix>* acts) {
  Matrix a = x;
  for (const auto& l : m.hidden) {
    Matrix z = l.W * a;
    z.colwise() += l.b;
    a = z.array().tanh();
    if (acts) acts->push_back(a);
  }
  Matrix y = m.readout.W * a;
  y.colwise() += m.readout.b;
  return m.output_norm.denormalize(y);
}

}  // namespace

StaticModel init_static(const InputLayout& layout, int hidden, int layers, int outputs,
                        std::uint64_t seed) {
  if (layout.has_time) throw Error(ErrorKind::Parameter, "static model inputs exclude time");
  if (outputs < 1 || layers < 0 || (layers > 0 && hidden < 1)) {
    throw Error(ErrorKind::Parameter, "invalid static model dimensions");
  }
  detail::Rng rng(seed);
  auto glorot = [&](Eigen::Index rows, Eigen::Index cols) {
    const double a = std::sqrt(6.0 / double(rows + cols));
    Matrix w(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) w(i, j) = rng.uniform(-a, a);
    }
    return w;
  };
  StaticModel m;
  m.layout = layout;
  Eigen::Index d_in = layout.size();
  for (int l = 0; l < layers; ++l) {
    m.hidden.push_back({glorot(hidden, d_in), Vector::Zero(hidden)});
    d_in = hidden;
  }
  m.readout = {glorot(outputs, d_in), Vector::Zero(outputs)};
  m.input_norm = Normalizer::identity(layout.size());
  m.output_norm = Normalizer::identity(outputs);
  return m;
}

Matrix static_forward(const StaticModel& model, const Matrix& raw_inputs) {
  model.validate();
  return forward_normalized(model, model.input_norm.normalize(raw_inputs), nullptr);
}

double static_loss(const StaticModel& model, const Matrix& inputs, const Matrix& targets,
                   StaticModel* grad) {
  if (inputs.cols() != targets.cols() || inputs.cols() == 0) {
    throw Error(ErrorKind::Shape, "static loss needs matching non-empty inputs and targets");
  }
  std::vector<Matrix> acts;
  const Matrix diff = forward_normalized(model, inputs, &acts) - targets;
  const double S = double(inputs.cols());
  const double loss = diff.squaredNorm() / S;
  if (!grad) return loss;

  *grad = model;
  Matrix d = ((2.0 / S) * diff).array().colwise() * model.output_norm.stddev.array();
  const Matrix& top = acts.empty() ? inputs : acts.back();
  grad->readout.W.noalias() = d * top.transpose();
  grad->readout.b = d.rowwise().sum();
  Matrix da = model.readout.W.transpose() * d;
  for (std::size_t l = model.hidden.size(); l-- > 0;) {
    const Matrix dz = da.array() * (1.0 - acts[l].array().square());
    const Matrix& below = l == 0 ? inputs : acts[l - 1];
    grad->hidden[l].W.noalias() = dz * below.transpose();
    grad->hidden[l].b = dz.rowwise().sum();
    if (l > 0) da = model.hidden[l].W.transpose() * dz;
  }
  return loss;
}

TrainResult<StaticModel> train_static_baseline(const TrainingData& data, const TrainConfig& cfg) {
  cfg.validate();
  const detail::Split sp = detail::split_sequences(data, cfg.validation_fraction);
  const InputLayout layout{false, int(data.front().mu.size()), int(data.front().lf.rows())};
  const int n_out = int(data.front().hf.rows());
  const Eigen::Index n_seq = Eigen::Index(data.size());

  Matrix train_in(layout.size(), n_seq * sp.n_train), train_out(n_out, n_seq * sp.n_train);
  Matrix val_in(layout.size(), n_seq * sp.n_val), val_out(n_out, n_seq * sp.n_val);
  for (Eigen::Index s = 0; s < n_seq; ++s) {
    const auto& seq = data[std::size_t(s)];
    const Matrix x = assemble_inputs(layout, seq.times, seq.mu, seq.lf);
    train_in.middleCols(s * sp.n_train, sp.n_train) = x.leftCols(sp.n_train);
    train_out.middleCols(s * sp.n_train, sp.n_train) = seq.hf.leftCols(sp.n_train);
    val_in.middleCols(s * sp.n_val, sp.n_val) = x.rightCols(sp.n_val);
    val_out.middleCols(s * sp.n_val, sp.n_val) = seq.hf.rightCols(sp.n_val);
  }

  StaticModel model = init_static(layout, cfg.hidden, cfg.layers, n_out, cfg.seed);
  model.input_norm = Normalizer::fit(train_in);
  model.output_norm = Normalizer::fit(train_out);
  const Matrix x_train = model.input_norm.normalize(train_in);
  const Matrix x_val = model.input_norm.normalize(val_in);

  TrainResult<StaticModel> result;
  result.log.initial_loss = static_loss(model, x_train, train_out, nullptr);
  if (!std::isfinite(result.log.initial_loss)) {
    throw Error(ErrorKind::Training, "training diverged (non-finite loss) at epoch 0");
  }

  detail::Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  Vector theta = pack_static(model);
  detail::Adam adam(theta.size(), cfg.beta1, cfg.beta2, cfg.adam_eps);
  StaticModel grad;
  std::vector<Eigen::Index> order(std::size_t(x_train.cols()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = Eigen::Index(i);
  Matrix bx, by;
  double lr = cfg.learning_rate;
  double best = std::numeric_limits<double>::infinity();
  result.model = model;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double weighted = 0.0;
    for (std::size_t i = 0; i < order.size(); i += std::size_t(cfg.n_batch)) {
      const std::size_t end = std::min(order.size(), i + std::size_t(cfg.n_batch));
      bx.resize(x_train.rows(), Eigen::Index(end - i));
      by.resize(train_out.rows(), Eigen::Index(end - i));
      for (std::size_t j = i; j < end; ++j) {
        bx.col(Eigen::Index(j - i)) = x_train.col(order[j]);
        by.col(Eigen::Index(j - i)) = train_out.col(order[j]);
      }
      const double loss = static_loss(model, bx, by, &grad);
      if (!std::isfinite(loss)) {
        throw Error(ErrorKind::Training, "training diverged (non-finite loss) at epoch " + std::to_string(epoch));
      }
      weighted += loss * double(end - i);
      Vector g = pack_static(grad);
      detail::clip_norm(g, cfg.grad_clip);
      adam.step(theta, g, lr);
      unpack_static(theta, model);
    }
    lr *= cfg.lr_decay;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = weighted / double(order.size());
    rec.val_loss = sp.n_val > 0 ? detail::mse(forward_normalized(model, x_val, nullptr), val_out)
                                : rec.train_loss;
    if (!std::isfinite(rec.val_loss)) {
      throw Error(ErrorKind::Training, "training diverged (non-finite loss) at epoch " + std::to_string(epoch));
    }
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
