#ifndef MFPOD_SRC_LSTM_INTERNAL_HPP
#define MFPOD_SRC_LSTM_INTERNAL_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "mfpod/mf_lstm.hpp"

namespace mfpod::detail {

// Portable uniform draws: std::uniform_real_distribution is not specified
// bit-for-bit across standard libraries, the engine is.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n) { return std::size_t(uniform() * double(n)) % n; }
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

class Adam {
 public:
  Adam(Eigen::Index size, double beta1, double beta2, double eps)
      : m_(Vector::Zero(size)), v_(Vector::Zero(size)), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(Vector& x, const Vector& g, double lr) {
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * g;
    v_ = beta2_ * v_ + (1.0 - beta2_) * g.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1_, double(t_));
    const double c2 = 1.0 - std::pow(beta2_, double(t_));
    x.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
  }

 private:
  Vector m_, v_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

inline void clip_norm(Vector& g, double max_norm) {
  if (max_norm <= 0.0) return;
  const double n = g.norm();
  if (n > max_norm) g *= max_norm / n;
}

// Outputs in raw units for normalized inputs laid out time-major in blocks of
// `batch` columns.
Matrix lstm_forward_normalized(const LstmModel& model, const Matrix& x, Eigen::Index batch);

struct Split {
  Eigen::Index n_t = 0;
  Eigen::Index n_train = 0;
  Eigen::Index n_val = 0;
};

// Checks a training set is homogeneous and carves off the validation tail.
Split split_sequences(const TrainingData& data, double validation_fraction);

// Mean squared column norm of (a - b).
inline double mse(const Matrix& a, const Matrix& b) {
  return a.cols() == 0 ? 0.0 : (a - b).squaredNorm() / double(a.cols());
}

}  // namespace mfpod::detail

#endif
