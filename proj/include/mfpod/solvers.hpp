#ifndef MFPOD_SOLVERS_HPP
#define MFPOD_SOLVERS_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mfpod/numerics.hpp"
#include "mfpod/snapshots.hpp"

namespace mfpod {

enum class Problem { ReactionDiffusion, ShallowWater };

const char* to_string(Problem p) noexcept;
Problem parse_problem(const std::string& s);  // "rd" | "sw"

/// RD initial-condition family.
///   Equal:  u = v = tanh(r cos(arg(x + iy) - r))
///   Spiral: u = tanh(r) cos(arg(x + iy) - r),  v = tanh(r) sin(arg(x + iy) - r)
enum class RdInitial { Equal, Spiral };

const char* to_string(RdInitial k) noexcept;
RdInitial parse_rd_initial(const std::string& s);  // "equal" | "spiral"

struct Trajectory {
  Matrix states;               // n_dof x n_saved
  std::vector<double> times;   // n_saved
};

/// Lambda-omega reaction-diffusion system on [-L, L)^2, periodic:
///   u_t = (1 - r^2) u + mu r^2 v + d lap u
///   v_t = -mu r^2 u + (1 - r^2) v + d lap v,   r^2 = u^2 + v^2
/// Integrated with classical RK4 in Fourier space at a fixed step dt.
struct RdConfig {
  int n = 100;
  double half_length = 20.0;
  double T = 80.0;
  double dt = 0.05;
  double mu = 1.0;
  double d = 0.05;
  int save_every = 1;
  bool reaction = true;   // false leaves pure diffusion (test hook)
  bool dealias = false;   // 2/3-rule filter on the nonlinear term
  RdInitial initial_kind = RdInitial::Equal;
  std::optional<std::pair<Matrix, Matrix>> initial;  // overrides initial_kind
};

/// Vorticity-streamfunction advection-diffusion (shallow-water limit):
///   w_t + mu (psi_x w_y - psi_y w_x) = d lap w,   lap psi = w
/// `dt` is the storage step. Each step is split into the fewest equal RK4
/// substeps that keep the advective/diffusive spectral radius times the substep
/// below `cfl` * 2.8 (the RK4 imaginary-axis limit is 2 sqrt 2).
struct SwConfig {
  int n = 200;
  double half_length = 10.0;
  double T = 20.0;
  double dt = 0.25;
  double mu = 1.0;
  double d = 0.001;
  int save_every = 1;
  double cfl = 0.5;
  bool dealias = false;
  std::optional<Matrix> initial;  // defaults to sw_initial
};

//! tanh(r cos(arg(x + iy) - r)), r = |(x, y)|, with arg(0) = 0.
double rd_initial_value(double x, double y);
std::pair<Matrix, Matrix> rd_initial(const Grid2D& grid, RdInitial kind = RdInitial::Equal);

//! exp(-2 x^2 - y^2 / 20)
Matrix sw_initial(const Grid2D& grid);

/// Streamfunction with lap psi = w on the periodic grid; zero-mean gauge.
Matrix solve_poisson(const Matrix& omega, const Grid2D& grid);

Trajectory solve_rd(const RdConfig& cfg);   // columns stack [u; v]
Trajectory solve_sw(const SwConfig& cfg);   // columns hold w

/// Resolution, step and physical corruption defining one fidelity level.
struct FidelityProfile {
  int n = 0;
  double dt = 0.0;
  double d = 0.0;       // diffusion coefficient used at this level
  int save_every = 1;
};

struct ProblemSpec {
  Problem problem = Problem::ReactionDiffusion;
  double half_length = 20.0;
  double cfl = 0.5;       // shallow water only
  bool dealias = false;
  RdInitial rd_initial = RdInitial::Equal;   // reaction-diffusion only
};

ProblemSpec default_problem_spec(Problem p);

/// Runs the solver at every parameter value; returns a parameter-major set.
/// Trajectories may run on up to `threads` workers; assembly order is by index.
SnapshotSet generate_dataset(const ProblemSpec& spec, const FidelityProfile& profile,
                             std::span<const double> mus, double T, Fidelity tag,
                             int threads = 1);

/// Runs one trajectory for a profile (the per-parameter unit of generate_dataset).
Trajectory run_profile(const ProblemSpec& spec, const FidelityProfile& profile, double mu,
                       double T);

// Number of solver runs made at grid size n since the last reset.
std::size_t solver_calls(int n);
void reset_solver_calls();

}  // namespace mfpod

#endif
