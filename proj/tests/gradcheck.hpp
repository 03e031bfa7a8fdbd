// Finite-difference check of the LSTM loss gradient, shared by the unit and acceptance tests.
#ifndef MFPOD_TESTS_GRADCHECK_HPP
#define MFPOD_TESTS_GRADCHECK_HPP

#include <random>
#include <vector>

#include "mfpod/mf_lstm.hpp"
#include "oracles.hpp"

namespace oracle {

struct GradCheck {
  double worst_rel = 0.0;
  long n_params = 0;
};

// Tiny random model with non-trivial output normalizer and biases; windows of
// length K over a layout of (t, mu, n_pod coefficients).
inline GradCheck lstm_gradient_check(int hidden, int layers, int K, int n_pod, int n_windows,
                                     std::uint64_t seed, double h = 1e-6, double floor = 1e-4) {
  std::mt19937_64 rng(seed);
  const mfpod::InputLayout layout{true, 1, n_pod};
  mfpod::LstmModel model = mfpod::init_lstm(layout, hidden, layers, n_pod, seed);
  for (auto& l : model.params.layers) l.b = 0.3 * random_matrix(l.b.size(), 1, rng);
  model.params.readout.b = 0.3 * random_matrix(n_pod, 1, rng);
  model.output_norm.mean = random_matrix(n_pod, 1, rng);
  model.output_norm.stddev = (random_matrix(n_pod, 1, rng).array().abs() + 0.5).matrix();

  std::vector<mfpod::Window> windows;
  for (int w = 0; w < n_windows; ++w) {
    windows.push_back({random_matrix(layout.size(), K, rng), random_matrix(n_pod, K, rng)});
  }

  mfpod::LstmParams grad;
  mfpod::lstm_loss(model, windows, &grad);
  const Vector analytic = mfpod::pack(grad);
  const Vector theta = mfpod::pack(model.params);

  mfpod::LstmModel probe = model;
  const Vector numeric = fd_gradient(
      [&](const Vector& t) {
        mfpod::unpack(t, probe.params);
        return mfpod::lstm_loss(probe, windows, nullptr);
      },
      theta, h);

  GradCheck r;
  r.n_params = long(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double a = analytic(i), f = numeric(i);
    const double rel = std::abs(a - f) / std::max({std::abs(a), std::abs(f), floor});
    r.worst_rel = std::max(r.worst_rel, rel);
  }
  return r;
}

}  // namespace oracle

#endif
