#pragma once

#include "pded/expr.hpp"
#include "pded/numerics.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pded {

enum class PdeKind { Burgers, Fisher, Chafee, Divide, AllenCahn };

inline constexpr std::array<PdeKind, 5> kAllPdes = {PdeKind::Burgers, PdeKind::Fisher, PdeKind::Chafee,
                                                    PdeKind::Divide, PdeKind::AllenCahn};

std::string_view to_string(PdeKind kind) noexcept;
PdeKind pde_from_string(std::string_view name);

struct GroundTruth {
  Expression skeleton;
  std::vector<double> coefficients;  // aligned with skeleton.terms()
};

struct PdeSpec {
  PdeKind kind = PdeKind::Burgers;
  double x0 = 0.0, x1 = 1.0, t0 = 0.0, t1 = 1.0;
  int nx = 8, nt = 8;
  bool periodic = false;  // spectral grids exclude the right endpoint
  std::map<std::string, double> parameters;
  std::string boundary;
  std::string initial_condition;
  std::string method;
  double rtol = 1e-8, atol = 1e-8;
  std::uint64_t ic_seed = 0;
  GroundTruth ground_truth;

  /// Spatial sample locations of the stored grid.
  std::vector<double> grid() const;
  double length() const noexcept { return x1 - x0; }
};

/// Benchmark setup with the canonical grid and domain.
PdeSpec default_spec(PdeKind kind, std::uint64_t ic_seed = 0);

struct GenerateOptions {
  /// Replaces the default initial condition (no noise is added).
  std::function<double(double)> initial_condition;
};

/// Integrates the PDE with adaptive Dormand-Prince RK45 and samples the
/// solution at nt equally spaced times. Burgers and Allen-Cahn use Fourier
/// pseudo-spectral derivatives on a periodic grid; the rest use second-order
/// central differences. Throws SolverDiverged or StepSizeUnderflow.
Dataset generate(const PdeSpec& spec, const GenerateOptions& opts = {});

/// Initial condition sampled on the PdeSpec grid, including any seeded noise.
std::vector<double> initial_condition(const PdeSpec& spec);

/// d^order u / dx^order on a periodic grid of period `length` (order 1 or 2).
std::vector<double> spectral_derivative(std::span<const double> u, double length, int order);

/// Discrete Ginzburg-Landau energy sum((D/2) u_x^2 + (R/4) (1 - u^2)^2) dx on
/// a periodic grid, with a spectral u_x.
double ginzburg_landau_energy(std::span<const double> u, double length, double diffusion, double reaction);

}  // namespace pded
