#include <cmath>
#include <string>

#include "lstm_internal.hpp"
#include "mfpod/mf_lstm.hpp"

namespace mfpod {

namespace {

struct LayerCache {
  Matrix gates;   // 4H x KB, activated [f; u; o; c~]
  Matrix c;
  Matrix tanh_c;
  Matrix h;
};

auto sigmoid(const auto& z) { return 1.0 / (1.0 + (-z.array()).exp()); }

void forward_layer(const LstmLayerWeights& w, const Matrix& x, Eigen::Index B, LayerCache& cache) {
  const Eigen::Index H = w.hidden();
  const Eigen::Index D = w.input_size();
  const Eigen::Index KB = x.cols();
  const Eigen::Index K = KB / B;

  Matrix zx = w.W.rightCols(D) * x;
  zx.colwise() += w.b;
  const auto Wh = w.W.leftCols(H);

  cache.gates.resize(4 * H, KB);
  cache.c.resize(H, KB);
  cache.tanh_c.resize(H, KB);
  cache.h.resize(H, KB);

  Matrix z(4 * H, B);
  for (Eigen::Index n = 0; n < K; ++n) {
    z = zx.middleCols(n * B, B);
    if (n > 0) z.noalias() += Wh * cache.h.middleCols((n - 1) * B, B);
    auto g = cache.gates.middleCols(n * B, B);
    g.topRows(3 * H) = sigmoid(z.topRows(3 * H));
    g.bottomRows(H) = z.bottomRows(H).array().tanh();

    auto c = cache.c.middleCols(n * B, B);
    c = g.middleRows(H, H).cwiseProduct(g.bottomRows(H));
    if (n > 0) c += g.topRows(H).cwiseProduct(cache.c.middleCols((n - 1) * B, B));
    cache.tanh_c.middleCols(n * B, B) = c.array().tanh();
    cache.h.middleCols(n * B, B) =
        g.middleRows(2 * H, H).cwiseProduct(cache.tanh_c.middleCols(n * B, B));
  }
}

// Returns dL/dx for the layer input and accumulates parameter gradients.
Matrix backward_layer(const LstmLayerWeights& w, const LayerCache& cache, const Matrix& x,
                      const Matrix& dh_top, Eigen::Index B, LstmLayerWeights& grad) {
  const Eigen::Index H = w.hidden();
  const Eigen::Index D = w.input_size();
  const Eigen::Index KB = x.cols();
  const Eigen::Index K = KB / B;
  const auto Wh = w.W.leftCols(H);

  Matrix dz_all(4 * H, KB);
  Matrix dh_next = Matrix::Zero(H, B);
  Matrix dc_next = Matrix::Zero(H, B);
  for (Eigen::Index n = K - 1; n >= 0; --n) {
    const auto g = cache.gates.middleCols(n * B, B);
    const auto f = g.topRows(H).array();
    const auto u = g.middleRows(H, H).array();
    const auto o = g.middleRows(2 * H, H).array();
    const auto ct = g.bottomRows(H).array();
    const auto tc = cache.tanh_c.middleCols(n * B, B).array();

    const Matrix dh = dh_top.middleCols(n * B, B) + dh_next;
    const Matrix dc = dc_next.array() + dh.array() * o * (1.0 - tc.square());
    auto dz = dz_all.middleCols(n * B, B);
    if (n > 0) {
      dz.topRows(H) = (dc.array() * cache.c.middleCols((n - 1) * B, B).array()) * f * (1.0 - f);
    } else {
      dz.topRows(H).setZero();
    }
    dz.middleRows(H, H) = (dc.array() * ct) * u * (1.0 - u);
    dz.middleRows(2 * H, H) = (dh.array() * tc) * o * (1.0 - o);
    dz.bottomRows(H) = (dc.array() * u) * (1.0 - ct.square());

    dc_next = dc.array() * f;
    dh_next.noalias() = Wh.transpose() * dz;
  }

  if (K > 1) {
    grad.W.leftCols(H).noalias() +=
        dz_all.rightCols(KB - B) * cache.h.leftCols(KB - B).transpose();
  }
  grad.W.rightCols(D).noalias() += dz_all * x.transpose();
  grad.b += dz_all.rowwise().sum();
  return w.W.rightCols(D).transpose() * dz_all;
}

void check_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw Error(ErrorKind::ModelCorrupt, std::string("non-finite ") + what);
}

void check_normalizer(const Normalizer& n, Eigen::Index size, const char* what) {
  if (n.mean.size() != size || n.stddev.size() != size) {
    throw Error(ErrorKind::ModelCorrupt, std::string(what) + " normalizer has the wrong size");
  }
  check_finite(n.mean, what);
  check_finite(n.stddev, what);
  if ((n.stddev.array() <= 0.0).any()) {
    throw Error(ErrorKind::ModelCorrupt, std::string(what) + " normalizer stddev must be > 0");
  }
}

LstmParams zeros_like(const LstmParams& p) {
  LstmParams z;
  for (const auto& l : p.layers) {
    z.layers.push_back({Matrix::Zero(l.W.rows(), l.W.cols()), Vector::Zero(l.b.size())});
  }
  z.readout = {Matrix::Zero(p.readout.W.rows(), p.readout.W.cols()),
               Vector::Zero(p.readout.b.size())};
  return z;
}

}  // namespace

Normalizer Normalizer::fit(const Matrix& samples) {
  if (samples.cols() == 0) throw Error(ErrorKind::Validation, "cannot fit a normalizer to no samples");
  Normalizer n;
  n.mean = samples.rowwise().mean();
  n.stddev = ((samples.colwise() - n.mean).rowwise().squaredNorm() / double(samples.cols()))
                 .array()
                 .sqrt();
  for (Eigen::Index i = 0; i < n.stddev.size(); ++i) {
    if (!(n.stddev(i) > 1e-12 * (1.0 + std::abs(n.mean(i))))) n.stddev(i) = 1.0;
  }
  return n;
}

Normalizer Normalizer::identity(Eigen::Index features) {
  return {Vector::Zero(features), Vector::Ones(features)};
}

Matrix Normalizer::normalize(const Matrix& x) const {
  if (x.rows() != size()) {
    throw Error(ErrorKind::Shape, "normalizer expects " + std::to_string(size()) + " features, got " +
                                      std::to_string(x.rows()));
  }
  return ((x.colwise() - mean).array().colwise() / stddev.array()).matrix();
}

Matrix Normalizer::denormalize(const Matrix& z) const {
  if (z.rows() != size()) {
    throw Error(ErrorKind::Shape, "normalizer expects " + std::to_string(size()) + " features, got " +
                                      std::to_string(z.rows()));
  }
  return ((z.array().colwise() * stddev.array()).matrix().colwise() + mean);
}

void LstmModel::validate() const {
  if (params.layers.empty()) throw Error(ErrorKind::ModelCorrupt, "LSTM has no layers");
  Eigen::Index expected_in = layout.size();
  for (const auto& l : params.layers) {
    if (l.W.rows() == 0 || l.W.rows() % 4 != 0 || l.b.size() != l.W.rows() ||
        l.input_size() != expected_in) {
      throw Error(ErrorKind::ModelCorrupt, "LSTM layer shapes are inconsistent");
    }
    check_finite(l.W, "LSTM weights");
    check_finite(l.b, "LSTM biases");
    expected_in = l.hidden();
  }
  if (params.readout.W.cols() != hidden() || params.readout.b.size() != params.readout.W.rows() ||
      params.readout.W.rows() == 0) {
    throw Error(ErrorKind::ModelCorrupt, "LSTM readout shape is inconsistent");
  }
  check_finite(params.readout.W, "readout weights");
  check_finite(params.readout.b, "readout bias");
  check_normalizer(input_norm, layout.size(), "input");
  check_normalizer(output_norm, output_size(), "output");
}

void StaticModel::validate() const {
  Eigen::Index expected_in = layout.size();
  if (layout.has_time) throw Error(ErrorKind::ModelCorrupt, "static model must not take time");
  for (const auto& l : hidden) {
    if (l.W.cols() != expected_in || l.b.size() != l.W.rows() || l.W.rows() == 0) {
      throw Error(ErrorKind::ModelCorrupt, "static layer shapes are inconsistent");
    }
    check_finite(l.W, "static weights");
    check_finite(l.b, "static biases");
    expected_in = l.W.rows();
  }
  if (readout.W.cols() != expected_in || readout.b.size() != readout.W.rows() ||
      readout.W.rows() == 0) {
    throw Error(ErrorKind::ModelCorrupt, "static readout shape is inconsistent");
  }
  check_finite(readout.W, "readout weights");
  check_finite(readout.b, "readout bias");
  check_normalizer(input_norm, layout.size(), "input");
  check_normalizer(output_norm, readout.W.rows(), "output");
}

void TrainConfig::validate() const {
  if (n_batch < 1) throw Error(ErrorKind::Parameter, "n_batch must be >= 1");
  if (K < 1) throw Error(ErrorKind::Parameter, "K must be >= 1");
  if (epochs < 1) throw Error(ErrorKind::Parameter, "epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::Parameter, "learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(adam_eps > 0.0)) {
    throw Error(ErrorKind::Parameter, "invalid Adam constants");
  }
  if (hidden < 1) throw Error(ErrorKind::Parameter, "hidden size must be >= 1");
  if (layers < 0) throw Error(ErrorKind::Parameter, "layer count must be >= 0");
  if (window_stride < 0) throw Error(ErrorKind::Parameter, "window_stride must be >= 0");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw Error(ErrorKind::Parameter, "validation_fraction must lie in [0, 1)");
  }
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw Error(ErrorKind::Parameter, "lr_decay must lie in (0, 1]");
  if (!(grad_clip >= 0.0)) throw Error(ErrorKind::Parameter, "grad_clip must be >= 0");
}

TrainingData make_training_data(const CoefficientSeries& lf, const CoefficientSeries& hf) {
  if (lf.coeffs.rows() != hf.coeffs.rows() || lf.coeffs.cols() != hf.coeffs.cols()) {
    throw Error(ErrorKind::Alignment, "LF and HF coefficient series differ in shape");
  }
  if (lf.times != hf.times) throw Error(ErrorKind::Alignment, "LF and HF time grids differ");
  if (lf.params.rows() != hf.params.rows() || lf.params.cols() != hf.params.cols() ||
      lf.params != hf.params) {
    throw Error(ErrorKind::Alignment, "LF and HF parameter sets differ");
  }
  if (lf.coeffs.cols() != lf.n_mu() * lf.n_t()) {
    throw Error(ErrorKind::Alignment, "coefficient columns do not equal n_mu * n_t");
  }
  TrainingData out;
  for (Eigen::Index m = 0; m < lf.n_mu(); ++m) {
    out.push_back({lf.times, lf.params.row(m).transpose(), lf.trajectory(m), hf.trajectory(m)});
  }
  return out;
}

Matrix assemble_inputs(const InputLayout& layout, std::span<const double> times, const Vector& mu,
                       const Matrix& lf) {
  if (mu.size() != layout.n_params || lf.rows() != layout.n_coeffs) {
    throw Error(ErrorKind::Shape, "input features (" + std::to_string(mu.size()) + " params, " +
                                      std::to_string(lf.rows()) + " coefficients) do not match the model (" +
                                      std::to_string(layout.n_params) + ", " +
                                      std::to_string(layout.n_coeffs) + ")");
  }
  if (layout.has_time && Eigen::Index(times.size()) != lf.cols()) {
    throw Error(ErrorKind::Shape, "time count does not match coefficient columns");
  }
  Matrix x(layout.size(), lf.cols());
  Eigen::Index row = 0;
  if (layout.has_time) {
    for (Eigen::Index j = 0; j < lf.cols(); ++j) x(0, j) = times[std::size_t(j)];
    row = 1;
  }
  x.middleRows(row, layout.n_params) = mu.replicate(1, lf.cols());
  x.bottomRows(layout.n_coeffs) = lf;
  return x;
}

LstmModel init_lstm(const InputLayout& layout, int hidden, int layers, int outputs,
                    std::uint64_t seed) {
  if (hidden < 1 || layers < 1 || outputs < 1) {
    throw Error(ErrorKind::Parameter, "LSTM needs hidden, layers and outputs >= 1");
  }
  detail::Rng rng(seed);
  LstmModel model;
  model.layout = layout;
  Eigen::Index d_in = layout.size();
  for (int l = 0; l < layers; ++l) {
    LstmLayerWeights w;
    w.W.resize(4 * hidden, hidden + d_in);
    const double a = std::sqrt(6.0 / double(2 * hidden + d_in));
    for (Eigen::Index j = 0; j < w.W.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.W.rows(); ++i) w.W(i, j) = rng.uniform(-a, a);
    }
    w.b = Vector::Zero(4 * hidden);
    w.b.head(hidden).setOnes();
    model.params.layers.push_back(std::move(w));
    d_in = hidden;
  }
  const double a = std::sqrt(6.0 / double(hidden + outputs));
  model.params.readout.W.resize(outputs, hidden);
  for (Eigen::Index j = 0; j < hidden; ++j) {
    for (Eigen::Index i = 0; i < outputs; ++i) model.params.readout.W(i, j) = rng.uniform(-a, a);
  }
  model.params.readout.b = Vector::Zero(outputs);
  model.input_norm = Normalizer::identity(layout.size());
  model.output_norm = Normalizer::identity(outputs);
  return model;
}

namespace detail {

Matrix lstm_forward_normalized(const LstmModel& model, const Matrix& x, Eigen::Index batch) {
  Matrix layer_in = x;
  LayerCache cache;
  for (const auto& l : model.params.layers) {
    forward_layer(l, layer_in, batch, cache);
    layer_in = std::move(cache.h);
  }
  Matrix y = model.params.readout.W * layer_in;
  y.colwise() += model.params.readout.b;
  return model.output_norm.denormalize(y);
}

Split split_sequences(const TrainingData& data, double validation_fraction) {
  if (data.empty()) throw Error(ErrorKind::Validation, "training data is empty");
  const auto& first = data.front();
  for (const auto& s : data) {
    if (s.lf.rows() != first.lf.rows() || s.hf.rows() != first.hf.rows() ||
        s.lf.cols() != first.lf.cols() || s.hf.cols() != s.lf.cols() ||
        Eigen::Index(s.times.size()) != s.lf.cols() || s.mu.size() != first.mu.size()) {
      throw Error(ErrorKind::Alignment, "training sequences are not aligned");
    }
    if (!s.lf.allFinite() || !s.hf.allFinite()) {
      throw Error(ErrorKind::Validation, "training data contains non-finite values");
    }
  }
  Split sp;
  sp.n_t = first.lf.cols();
  if (sp.n_t < 1) throw Error(ErrorKind::Validation, "training sequences are empty");
  if (validation_fraction > 0.0 && sp.n_t >= 2) {
    sp.n_val = std::max<Eigen::Index>(1, std::lround(validation_fraction * double(sp.n_t)));
    sp.n_val = std::min(sp.n_val, sp.n_t - 1);
  }
  sp.n_train = sp.n_t - sp.n_val;
  return sp;
}

}  // namespace detail

Matrix lstm_forward(const LstmModel& model, const Matrix& raw_inputs) {
  model.validate();
  return detail::lstm_forward_normalized(model, model.input_norm.normalize(raw_inputs), 1);
}

double lstm_loss(const LstmModel& model, std::span<const Window> batch, LstmParams* grad) {
  if (batch.empty()) throw Error(ErrorKind::Validation, "empty batch");
  const Eigen::Index B = Eigen::Index(batch.size());
  const Eigen::Index K = batch.front().inputs.cols();
  const Eigen::Index D = batch.front().inputs.rows();
  const Eigen::Index N = batch.front().targets.rows();
  for (const auto& w : batch) {
    if (w.inputs.cols() != K || w.targets.cols() != K || w.inputs.rows() != D ||
        w.targets.rows() != N) {
      throw Error(ErrorKind::Shape, "batch windows differ in shape");
    }
  }
  // Time-major interleave: column n*B + b is window b at step n.
  Matrix x(D, K * B), target(N, K * B);
  for (Eigen::Index n = 0; n < K; ++n) {
    for (Eigen::Index b = 0; b < B; ++b) {
      x.col(n * B + b) = batch[std::size_t(b)].inputs.col(n);
      target.col(n * B + b) = batch[std::size_t(b)].targets.col(n);
    }
  }

  const auto& layers = model.params.layers;
  std::vector<LayerCache> caches(layers.size());
  std::vector<const Matrix*> inputs(layers.size());
  const Matrix* layer_in = &x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    inputs[l] = layer_in;
    forward_layer(layers[l], *layer_in, B, caches[l]);
    layer_in = &caches[l].h;
  }
  const Matrix& h_top = *layer_in;
  Matrix y = model.params.readout.W * h_top;
  y.colwise() += model.params.readout.b;
  const Matrix diff = model.output_norm.denormalize(y) - target;
  const double S = double(K * B);
  const double loss = diff.squaredNorm() / S;
  if (!grad) return loss;

  *grad = zeros_like(model.params);
  const Matrix dy = ((2.0 / S) * diff).array().colwise() * model.output_norm.stddev.array();
  grad->readout.W.noalias() = dy * h_top.transpose();
  grad->readout.b = dy.rowwise().sum();
  Matrix dh = model.params.readout.W.transpose() * dy;
  for (std::size_t l = layers.size(); l-- > 0;) {
    dh = backward_layer(layers[l], caches[l], *inputs[l], dh, B, grad->layers[l]);
  }
  return loss;
}

Vector pack(const LstmParams& p) {
  Eigen::Index size = p.readout.W.size() + p.readout.b.size();
  for (const auto& l : p.layers) size += l.W.size() + l.b.size();
  Vector flat(size);
  Eigen::Index at = 0;
  auto put = [&](const auto& m) {
    flat.segment(at, m.size()) = m.reshaped();
    at += m.size();
  };
  for (const auto& l : p.layers) {
    put(l.W);
    put(l.b);
  }
  put(p.readout.W);
  put(p.readout.b);
  return flat;
}

void unpack(const Vector& flat, LstmParams& p) {
  Eigen::Index at = 0;
  auto get = [&](auto& m) {
    if (at + m.size() > flat.size()) throw Error(ErrorKind::Shape, "parameter vector too short");
    m.reshaped() = flat.segment(at, m.size());
    at += m.size();
  };
  for (auto& l : p.layers) {
    get(l.W);
    get(l.b);
  }
  get(p.readout.W);
  get(p.readout.b);
  if (at != flat.size()) throw Error(ErrorKind::Shape, "parameter vector too long");
}

const InputLayout& layout_of(const CoefficientMap& map) {
  return std::visit([](const auto& m) -> const InputLayout& { return m.layout; }, map);
}

Matrix predict_sequence(const CoefficientMap& map, std::span<const double> times, const Vector& mu,
                        const Matrix& lf) {
  if (Eigen::Index(times.size()) != lf.cols()) {
    throw Error(ErrorKind::Shape, "time count does not match coefficient columns");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw Error(ErrorKind::Validation, "prediction times must be strictly increasing");
    }
  }
  const Matrix x = assemble_inputs(layout_of(map), times, mu, lf);
  if (const auto* lstm = std::get_if<LstmModel>(&map)) return lstm_forward(*lstm, x);
  return static_forward(std::get<StaticModel>(map), x);
}

CoefficientSeries predict(const CoefficientMap& map, const CoefficientSeries& lf) {
  if (lf.coeffs.cols() != lf.n_mu() * lf.n_t()) {
    throw Error(ErrorKind::Shape, "coefficient columns do not equal n_mu * n_t");
  }
  CoefficientSeries out;
  out.times = lf.times;
  out.params = lf.params;
  Eigen::Index rows = -1;
  for (Eigen::Index m = 0; m < lf.n_mu(); ++m) {
    const Matrix y = predict_sequence(map, lf.times, lf.params.row(m).transpose(), lf.trajectory(m));
    if (rows < 0) {
      rows = y.rows();
      out.coeffs.resize(rows, lf.coeffs.cols());
    }
    out.coeffs.middleCols(m * lf.n_t(), lf.n_t()) = y;
  }
  return out;
}

}  // namespace mfpod
