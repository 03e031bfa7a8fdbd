#ifndef MFPOD_MF_LSTM_HPP
#define MFPOD_MF_LSTM_HPP

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "mfpod/numerics.hpp"
#include "mfpod/pod.hpp"

namespace mfpod {

/// Per-feature z-score. Features with zero spread get stddev 1.
struct Normalizer {
  Vector mean;
  Vector stddev;

  static Normalizer fit(const Matrix& samples);  // features x samples
  static Normalizer identity(Eigen::Index features);
  Matrix normalize(const Matrix& x) const;
  Matrix denormalize(const Matrix& z) const;
  Eigen::Index size() const noexcept { return mean.size(); }
};

/// Feature order of one network input column: [t?, mu..., lf coefficients...].
struct InputLayout {
  bool has_time = true;
  int n_params = 1;
  int n_coeffs = 0;

  int size() const noexcept { return (has_time ? 1 : 0) + n_params + n_coeffs; }
  bool operator==(const InputLayout&) const = default;
};

/// One LSTM layer. Gate weights are stored stacked by rows in the order
/// forget, update, output, candidate; each acts on [h_{n-1}; x_n].
struct LstmLayerWeights {
  Matrix W;   // 4H x (H + D_in)
  Vector b;   // 4H

  int hidden() const noexcept { return int(W.rows() / 4); }
  int input_size() const noexcept { return int(W.cols()) - hidden(); }

  auto W_f() const { return W.middleRows(0 * hidden(), hidden()); }
  auto W_u() const { return W.middleRows(1 * hidden(), hidden()); }
  auto W_o() const { return W.middleRows(2 * hidden(), hidden()); }
  auto W_c() const { return W.middleRows(3 * hidden(), hidden()); }
  auto b_f() const { return b.segment(0 * hidden(), hidden()); }
  auto b_u() const { return b.segment(1 * hidden(), hidden()); }
  auto b_o() const { return b.segment(2 * hidden(), hidden()); }
  auto b_c() const { return b.segment(3 * hidden(), hidden()); }
};

struct Affine {
  Matrix W;
  Vector b;
};

// Trainable parameters, also used as the gradient container.
struct LstmParams {
  std::vector<LstmLayerWeights> layers;
  Affine readout;  // H_top -> N_POD, in normalized output units
};

struct LstmModel {
  LstmParams params;
  Normalizer input_norm;
  Normalizer output_norm;
  InputLayout layout;

  int hidden() const noexcept { return params.layers.empty() ? 0 : params.layers.back().hidden(); }
  int output_size() const noexcept { return int(params.readout.W.rows()); }
  //! Shape consistency and finiteness; throws ErrorKind::ModelCorrupt.
  void validate() const;
};

/// Feed-forward baseline: tanh hidden layers then an affine readout, applied
/// to each input column independently. No time input.
struct StaticModel {
  std::vector<Affine> hidden;
  Affine readout;
  Normalizer input_norm;
  Normalizer output_norm;
  InputLayout layout;

  void validate() const;
};

using CoefficientMap = std::variant<LstmModel, StaticModel>;

/// LF/HF coefficient trajectories for one parameter value, on a shared time grid.
struct SequencePair {
  std::vector<double> times;
  Vector mu;
  Matrix lf;  // n_pod x n_t
  Matrix hf;  // n_pod x n_t
};

using TrainingData = std::vector<SequencePair>;

//! Splits aligned series into per-parameter pairs; throws ErrorKind::Alignment.
TrainingData make_training_data(const CoefficientSeries& lf, const CoefficientSeries& hf);

//! Raw (unnormalized) input columns [t?, mu, lf] for one sequence.
Matrix assemble_inputs(const InputLayout& layout, std::span<const double> times, const Vector& mu,
                       const Matrix& lf);

struct TrainConfig {
  int n_batch = 16;
  int K = 40;               // subsequence length
  int epochs = 200;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;
  int hidden = 64;
  int layers = 1;           // LSTM layers; hidden tanh layers for the static baseline
  int window_stride = 0;    // 0: K / 2
  double validation_fraction = 0.1;
  double lr_decay = 1.0;    // multiplicative per epoch
  double grad_clip = 0.0;   // global-norm clip, 0 disables
  bool use_time = true;     // LSTM input includes t

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainLog {
  double initial_loss = 0.0;   // training loss of the initialized model
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_loss = 0.0;
};

template <class Model>
struct TrainResult {
  Model model;
  TrainLog log;
};

/// Initializes an LSTM with Glorot-uniform weights, unit forget bias and the
/// given normalizers (identity when omitted).
LstmModel init_lstm(const InputLayout& layout, int hidden, int layers, int outputs,
                    std::uint64_t seed);

/// Denormalized outputs for one sequence of raw input columns, zero initial state.
Matrix lstm_forward(const LstmModel& model, const Matrix& raw_inputs);

struct Window {
  Matrix inputs;   // normalized, D x K
  Matrix targets;  // raw, N_POD x K
};

/// Mean over all window columns of ||target - output||^2 in raw units, with
/// the BPTT gradient of every parameter when `grad` is non-null.
double lstm_loss(const LstmModel& model, std::span<const Window> batch, LstmParams* grad);

Vector pack(const LstmParams& p);
void unpack(const Vector& flat, LstmParams& p);

TrainResult<LstmModel> train_lstm(const TrainingData& data, const TrainConfig& cfg);

StaticModel init_static(const InputLayout& layout, int hidden, int layers, int outputs,
                        std::uint64_t seed);
Matrix static_forward(const StaticModel& model, const Matrix& raw_inputs);
double static_loss(const StaticModel& model, const Matrix& inputs, const Matrix& targets,
                   StaticModel* grad);
TrainResult<StaticModel> train_static_baseline(const TrainingData& data, const TrainConfig& cfg);

/// Maps LF coefficients of one sequence to predicted HF coefficients.
Matrix predict_sequence(const CoefficientMap& map, std::span<const double> times, const Vector& mu,
                        const Matrix& lf);

/// Applies the map to every trajectory of a series (zero initial state each).
CoefficientSeries predict(const CoefficientMap& map, const CoefficientSeries& lf);

const InputLayout& layout_of(const CoefficientMap& map);

}  // namespace mfpod

#endif
