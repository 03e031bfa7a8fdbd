#include "mfpod/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace mfpod {

namespace {

using Array = Eigen::ArrayXXd;
using CArray = Eigen::ArrayXXcd;
constexpr std::complex<double> kI{0.0, 1.0};

std::mutex& calls_mutex() {
  static std::mutex m;
  return m;
}
std::map<int, std::size_t>& calls_map() {
  static std::map<int, std::size_t> m;
  return m;
}

void record_call(int n) {
  std::lock_guard lock(calls_mutex());
  ++calls_map()[n];
}

// Wavenumber tables on the (n/2 + 1) x n half spectrum.
struct SpectralGrid {
  Grid2D grid;
  RealFft2 fft;
  Array k2;     // |k|^2, Nyquist included
  Array kx;     // first-derivative multipliers, Nyquist zeroed
  Array ky;
  Array mask;   // 2/3-rule keep mask
  Array inv_lap;  // -1/|k|^2, zero at the mean mode
  CArray ikx;
  CArray iky;
  double k_max;

  explicit SpectralGrid(const Grid2D& g) : grid(g), fft(g.n()) {
    const int n = g.n();
    const int h = n / 2 + 1;
    k2.resize(h, n);
    kx.resize(h, n);
    ky.resize(h, n);
    mask.resize(h, n);
    for (int j = 0; j < n; ++j) {
      const double wy = g.wavenumber(j);
      const int my = j < n / 2 ? j : n - j;
      for (int i = 0; i < h; ++i) {
        const double wx = g.wavenumber(i);
        k2(i, j) = wx * wx + wy * wy;
        kx(i, j) = i == n / 2 ? 0.0 : wx;
        ky(i, j) = j == n / 2 ? 0.0 : wy;
        mask(i, j) = (3 * i <= n && 3 * my <= n) ? 1.0 : 0.0;
      }
    }
    inv_lap = (k2 > 0.0).select(-1.0 / k2.max(1e-300), 0.0);
    ikx = kI * kx.cast<std::complex<double>>();
    iky = kI * ky.cast<std::complex<double>>();
    k_max = std::numbers::pi * (n / 2) / g.half_length();
  }

  Matrix to_physical(const CMatrix& s) {
    Matrix f;
    fft.inverse(s, f);
    return f;
  }
  CMatrix to_spectral(const Matrix& f) {
    CMatrix s;
    fft.forward(f, s);
    return s;
  }
};

long checked_steps(double T, double dt, int save_every, const char* who) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorKind::Validation, std::string(who) + ": dt must be positive");
  }
  if (!(T >= 0.0) || !std::isfinite(T)) {
    throw Error(ErrorKind::Validation, std::string(who) + ": T must be nonnegative");
  }
  if (save_every < 1) throw Error(ErrorKind::Validation, std::string(who) + ": save_every < 1");
  const long steps = std::lround(T / dt);
  if (std::abs(double(steps) * dt - T) > 1e-9 * std::max(1.0, T)) {
    throw Error(ErrorKind::Validation, std::string(who) + ": T is not a multiple of dt");
  }
  if (steps % save_every != 0) {
    throw Error(ErrorKind::Validation, std::string(who) + ": step count not divisible by save_every");
  }
  return steps;
}

[[noreturn]] void unstable(const char* who, long step, double t) {
  std::ostringstream os;
  os << who << ": non-finite state at step " << step << " (t = " << t << ")";
  throw Error(ErrorKind::Instability, os.str());
}

}  // namespace

const char* to_string(Problem p) noexcept {
  return p == Problem::ReactionDiffusion ? "rd" : "sw";
}

Problem parse_problem(const std::string& s) {
  if (s == "rd") return Problem::ReactionDiffusion;
  if (s == "sw") return Problem::ShallowWater;
  throw Error(ErrorKind::Validation, "unknown problem '" + s + "' (expected rd or sw)");
}

const char* to_string(RdInitial k) noexcept {
  return k == RdInitial::Equal ? "equal" : "spiral";
}

RdInitial parse_rd_initial(const std::string& s) {
  if (s == "equal") return RdInitial::Equal;
  if (s == "spiral") return RdInitial::Spiral;
  throw Error(ErrorKind::Validation, "unknown RD initial condition '" + s + "' (expected equal or spiral)");
}

double rd_initial_value(double x, double y) {
  const double r = std::hypot(x, y);
  const double angle = (x == 0.0 && y == 0.0) ? 0.0 : std::atan2(y, x);
  return std::tanh(r * std::cos(angle - r));
}

std::pair<Matrix, Matrix> rd_initial(const Grid2D& grid, RdInitial kind) {
  const int n = grid.n();
  Matrix u(n, n);
  if (kind == RdInitial::Equal) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) u(i, j) = rd_initial_value(grid.coord(i), grid.coord(j));
    }
    return {u, u};
  }
  Matrix v(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double x = grid.coord(i), y = grid.coord(j);
      const double r = std::hypot(x, y);
      const double phase = ((x == 0.0 && y == 0.0) ? 0.0 : std::atan2(y, x)) - r;
      u(i, j) = std::tanh(r) * std::cos(phase);
      v(i, j) = std::tanh(r) * std::sin(phase);
    }
  }
  return {u, v};
}

Matrix sw_initial(const Grid2D& grid) {
  const int n = grid.n();
  Matrix w(n, n);
  for (int j = 0; j < n; ++j) {
    const double y = grid.coord(j);
    for (int i = 0; i < n; ++i) {
      const double x = grid.coord(i);
      w(i, j) = std::exp(-2.0 * x * x - y * y / 20.0);
    }
  }
  return w;
}

Matrix solve_poisson(const Matrix& omega, const Grid2D& grid) {
  SpectralGrid sg(grid);
  const CArray psi = sg.to_spectral(omega).array() * sg.inv_lap;
  return sg.to_physical(psi.matrix());
}

Trajectory solve_rd(const RdConfig& cfg) {
  record_call(cfg.n);
  const long steps = checked_steps(cfg.T, cfg.dt, cfg.save_every, "solve_rd");
  if (!(cfg.d > 0.0)) throw Error(ErrorKind::Validation, "solve_rd: d must be positive");
  const Grid2D grid(cfg.n, cfg.half_length);
  SpectralGrid sg(grid);
  const Eigen::Index nn = grid.size();

  auto [u0, v0] = cfg.initial ? *cfg.initial : rd_initial(grid, cfg.initial_kind);
  if (u0.rows() != cfg.n || u0.cols() != cfg.n || v0.rows() != cfg.n || v0.cols() != cfg.n) {
    throw Error(ErrorKind::Dimension, "solve_rd: initial condition shape mismatch");
  }
  CArray u = sg.to_spectral(u0).array();
  CArray v = sg.to_spectral(v0).array();
  const Array diff = -cfg.d * sg.k2;

  // Work buffers are sized once; the stage loop below does not allocate.
  Matrix pu(cfg.n, cfg.n), pv(cfg.n, cfg.n), fu(cfg.n, cfg.n), fv(cfg.n, cfg.n);
  CMatrix nu(sg.fft.half(), cfg.n), nv(sg.fft.half(), cfg.n);
  Array r2(cfg.n, cfg.n);
  auto rhs = [&](const CArray& su, const CArray& sv, CArray& du, CArray& dv) {
    du = diff * su;
    dv = diff * sv;
    if (!cfg.reaction) return;
    sg.fft.inverse(su.matrix(), pu);
    sg.fft.inverse(sv.matrix(), pv);
    const auto au = pu.array();
    const auto av = pv.array();
    r2 = au.square() + av.square();
    fu.array() = (1.0 - r2) * au + cfg.mu * r2 * av;
    fv.array() = (1.0 - r2) * av - cfg.mu * r2 * au;
    sg.fft.forward(fu, nu);
    sg.fft.forward(fv, nv);
    if (cfg.dealias) {
      du += sg.mask * nu.array();
      dv += sg.mask * nv.array();
    } else {
      du += nu.array();
      dv += nv.array();
    }
  };

  const long n_saved = steps / cfg.save_every + 1;
  Trajectory out{Matrix(2 * nn, n_saved), std::vector<double>(n_saved)};
  auto save = [&](long slot, long step) {
    out.states.col(slot).head(nn) = sg.to_physical(u.matrix()).reshaped();
    out.states.col(slot).tail(nn) = sg.to_physical(v.matrix()).reshaped();
    out.times[slot] = double(step) * cfg.dt;
  };
  save(0, 0);

  const double h = cfg.dt;
  CArray k1u(u.rows(), u.cols()), k1v = k1u, k2u = k1u, k2v = k1u, k3u = k1u, k3v = k1u,
         k4u = k1u, k4v = k1u, su = k1u, sv = k1u;
  for (long step = 1; step <= steps; ++step) {
    rhs(u, v, k1u, k1v);
    su = u + (0.5 * h) * k1u;
    sv = v + (0.5 * h) * k1v;
    rhs(su, sv, k2u, k2v);
    su = u + (0.5 * h) * k2u;
    sv = v + (0.5 * h) * k2v;
    rhs(su, sv, k3u, k3v);
    su = u + h * k3u;
    sv = v + h * k3v;
    rhs(su, sv, k4u, k4v);
    u += (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    v += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    if (!u.allFinite() || !v.allFinite()) unstable("solve_rd", step, double(step) * h);
    if (step % cfg.save_every == 0) save(step / cfg.save_every, step);
  }
  return out;
}

Trajectory solve_sw(const SwConfig& cfg) {
  record_call(cfg.n);
  const long steps = checked_steps(cfg.T, cfg.dt, cfg.save_every, "solve_sw");
  if (!(cfg.d >= 0.0)) throw Error(ErrorKind::Validation, "solve_sw: d must be nonnegative");
  if (!(cfg.cfl > 0.0)) throw Error(ErrorKind::Validation, "solve_sw: cfl must be positive");
  const Grid2D grid(cfg.n, cfg.half_length);
  SpectralGrid sg(grid);
  const Eigen::Index nn = grid.size();

  const Matrix w0 = cfg.initial ? *cfg.initial : sw_initial(grid);
  if (w0.rows() != cfg.n || w0.cols() != cfg.n) {
    throw Error(ErrorKind::Dimension, "solve_sw: initial condition shape mismatch");
  }
  CArray w = sg.to_spectral(w0).array();

  const Array& inv_lap = sg.inv_lap;
  const Array diff = -cfg.d * sg.k2;

  Matrix psi_x, psi_y, w_x, w_y;
  auto rhs = [&](const CArray& sw, CArray& dw) {
    const CArray psi = sw * inv_lap;
    sg.fft.inverse((sg.ikx * psi).matrix(), psi_x);
    sg.fft.inverse((sg.iky * psi).matrix(), psi_y);
    sg.fft.inverse((sg.ikx * sw).matrix(), w_x);
    sg.fft.inverse((sg.iky * sw).matrix(), w_y);
    const Array jac = psi_x.array() * w_y.array() - psi_y.array() * w_x.array();
    CMatrix sj;
    sg.fft.forward(jac.matrix(), sj);
    if (cfg.dealias) {
      dw = diff * sw - cfg.mu * sg.mask * sj.array();
    } else {
      dw = diff * sw - cfg.mu * sj.array();
    }
  };

  auto substeps_for = [&](const CArray& sw) {
    const CArray psi = sw * inv_lap;
    sg.fft.inverse((sg.ikx * psi).matrix(), psi_x);
    sg.fft.inverse((sg.iky * psi).matrix(), psi_y);
    const double speed = std::abs(cfg.mu) * (psi_x.cwiseAbs().maxCoeff() + psi_y.cwiseAbs().maxCoeff());
    const double radius = speed * sg.k_max + cfg.d * sg.k2.maxCoeff();
    if (!(radius > 0.0)) return 1L;
    const double h_max = cfg.cfl * 2.8 / radius;
    return std::max(1L, long(std::ceil(cfg.dt / h_max - 1e-9)));
  };

  const long n_saved = steps / cfg.save_every + 1;
  Trajectory out{Matrix(nn, n_saved), std::vector<double>(n_saved)};
  auto save = [&](long slot, long step) {
    out.states.col(slot) = sg.to_physical(w.matrix()).reshaped();
    out.times[slot] = double(step) * cfg.dt;
  };
  save(0, 0);

  CArray k1, k2, k3, k4;
  for (long step = 1; step <= steps; ++step) {
    const long m = substeps_for(w);
    const double h = cfg.dt / double(m);
    for (long s = 0; s < m; ++s) {
      rhs(w, k1);
      rhs(w + 0.5 * h * k1, k2);
      rhs(w + 0.5 * h * k2, k3);
      rhs(w + h * k3, k4);
      w += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!w.allFinite()) unstable("solve_sw", step, double(step) * cfg.dt);
    if (step % cfg.save_every == 0) save(step / cfg.save_every, step);
  }
  return out;
}

ProblemSpec default_problem_spec(Problem p) {
  ProblemSpec s;
  s.problem = p;
  s.half_length = p == Problem::ReactionDiffusion ? 20.0 : 10.0;
  return s;
}

Trajectory run_profile(const ProblemSpec& spec, const FidelityProfile& profile, double mu,
                       double T) {
  if (spec.problem == Problem::ReactionDiffusion) {
    RdConfig c;
    c.n = profile.n;
    c.half_length = spec.half_length;
    c.T = T;
    c.dt = profile.dt;
    c.mu = mu;
    c.d = profile.d;
    c.save_every = profile.save_every;
    c.dealias = spec.dealias;
    c.initial_kind = spec.rd_initial;
    return solve_rd(c);
  }
  SwConfig c;
  c.n = profile.n;
  c.half_length = spec.half_length;
  c.T = T;
  c.dt = profile.dt;
  c.mu = mu;
  c.d = profile.d;
  c.save_every = profile.save_every;
  c.cfl = spec.cfl;
  c.dealias = spec.dealias;
  return solve_sw(c);
}

SnapshotSet generate_dataset(const ProblemSpec& spec, const FidelityProfile& profile,
                             std::span<const double> mus, double T, Fidelity tag, int threads) {
  if (mus.empty()) throw Error(ErrorKind::Validation, "generate_dataset: no parameter values");
  const std::size_t count = mus.size();
  std::vector<Trajectory> runs(count);
  std::vector<std::exception_ptr> errors(count);

  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < count; i += stride) {
      try {
        runs[i] = run_profile(spec, profile, mus[i], T);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(std::size_t(std::max(threads, 1)), 1, count);
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "mu = " << mus[i] << ": " << e.what();
      throw Error(e.kind(), os.str());
    }
  }

  SnapshotSet set;
  set.fidelity = tag;
  set.grid = Grid2D(profile.n, spec.half_length);
  set.times = runs[0].times;
  set.params = params_column(std::vector<double>(mus.begin(), mus.end()));
  set.field_names = spec.problem == Problem::ReactionDiffusion
                        ? std::vector<std::string>{"u", "v"}
                        : std::vector<std::string>{"omega"};
  const Eigen::Index n_t = set.n_t();
  set.data.resize(runs[0].states.rows(), Eigen::Index(count) * n_t);
  for (std::size_t i = 0; i < count; ++i) {
    set.data.middleCols(Eigen::Index(i) * n_t, n_t) = runs[i].states;
    runs[i].states.resize(0, 0);
  }
  set.validate();
  return set;
}

std::size_t solver_calls(int n) {
  std::lock_guard lock(calls_mutex());
  auto it = calls_map().find(n);
  return it == calls_map().end() ? 0 : it->second;
}

void reset_solver_calls() {
  std::lock_guard lock(calls_mutex());
  calls_map().clear();
}

}  // namespace mfpod
