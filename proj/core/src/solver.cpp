#include "pded/solver.hpp"
#include "pded/error.hpp"
#include "pded/rng.hpp"

#include <boost/numeric/odeint.hpp>
#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

namespace pded {

std::string_view to_string(PdeKind kind) noexcept {
  switch (kind) {
    case PdeKind::Burgers: return "burgers";
    case PdeKind::Fisher: return "fisher";
    case PdeKind::Chafee: return "chafee";
    case PdeKind::Divide: return "divide";
    case PdeKind::AllenCahn: return "allen_cahn";
  }
  return "?";
}

PdeKind pde_from_string(std::string_view name) {
  for (auto k : kAllPdes)
    if (to_string(k) == name) return k;
  if (name == "allen-cahn" || name == "allencahn") return PdeKind::AllenCahn;
  throw Error(ErrorCode::InvalidArgument, "unknown pde '" + std::string(name) + "'");
}

std::vector<double> PdeSpec::grid() const {
  std::vector<double> xs(static_cast<std::size_t>(nx));
  const double h = periodic ? length() / nx : length() / (nx - 1);
  for (int i = 0; i < nx; ++i) xs[static_cast<std::size_t>(i)] = x0 + i * h;
  return xs;
}

PdeSpec default_spec(PdeKind kind, std::uint64_t ic_seed) {
  PdeSpec s;
  s.kind = kind;
  s.ic_seed = ic_seed;
  auto truth = [](const char* text, std::vector<double> coefs) {
    return GroundTruth{parse_equation(text), std::move(coefs)};
  };
  switch (kind) {
    case PdeKind::Burgers:
      s.x0 = -8; s.x1 = 8; s.t0 = 0; s.t1 = 10; s.nx = 256; s.nt = 201;
      s.periodic = true;
      s.parameters = {{"nu", 0.1}};
      s.boundary = "periodic";
      s.initial_condition = "-sin(pi*x/8)*sech(x/4)";
      s.method = "fourier pseudo-spectral + dopri5";
      // canonical order: u*u_x, u_xx
      s.ground_truth = truth("u_t = -1*u*u_x + 0.1*u_xx", {-1.0, 0.1});
      break;
    case PdeKind::Fisher:
      s.x0 = -1; s.x1 = 1; s.t0 = 0; s.t1 = 1; s.nx = 200; s.nt = 100;
      s.parameters = {{"D", 1.0}, {"r", 1.0}};
      s.boundary = "homogeneous neumann";
      s.initial_condition = "1/(1+exp(x/0.25))";
      s.method = "second-order central differences + dopri5";
      s.ground_truth = truth("u_t = u - u^2 + u_xx", {1.0, -1.0, 1.0});
      break;
    case PdeKind::Chafee:
      s.x0 = 0; s.x1 = 3; s.t0 = 0; s.t1 = 0.5; s.nx = 301; s.nt = 200;
      s.parameters = {{"D", 1.0}};
      s.boundary = "homogeneous neumann";
      s.initial_condition = "cos(2*pi*x/3)";
      s.method = "second-order central differences + dopri5";
      s.ground_truth = truth("u_t = u - u^3 + u_xx", {1.0, -1.0, 1.0});
      break;
    case PdeKind::Divide:
      s.x0 = 1; s.x1 = 2; s.t0 = 0; s.t1 = 1; s.nx = 100; s.nt = 251;
      s.parameters = {{"D", 0.25}};
      s.boundary = "dirichlet, held at initial boundary values";
      s.initial_condition = "sin(pi*(x-1))+1";
      s.method = "second-order central differences + dopri5";
      // canonical order: u_x*1/x, u_xx
      s.ground_truth = truth("u_t = -1*u_x*1/x + 0.25*u_xx", {-1.0, 0.25});
      break;
    case PdeKind::AllenCahn:
      s.x0 = -10; s.x1 = 10; s.t0 = 0; s.t1 = 10; s.nx = 256; s.nt = 201;
      s.periodic = true;
      s.parameters = {{"D", 0.1}, {"R", 5.0}};
      s.boundary = "periodic";
      s.initial_condition = "sin(2*pi*x/L)+0.5*cos(4*pi*x/L)+eps, eps~U(0,0.2) per grid point";
      s.method = "fourier pseudo-spectral + dopri5";
      s.ground_truth = truth("u_t = 5*u - 5*u^3 + 0.1*u_xx", {5.0, -5.0, 0.1});
      break;
  }
  return s;
}

namespace {

using State = std::vector<double>;

std::mutex& fftw_planner_mutex() {
  static std::mutex mu;
  return mu;
}

/// Real-to-complex transform pair with its own buffers. Planning goes through
/// a global lock because the FFTW planner is not thread-safe.
class Spectral {
public:
  Spectral(int n, double length) : n_(n), real_(fftw_alloc_real(n)), freq_(fftw_alloc_complex(n / 2 + 1)) {
    if (n < 4) throw Error(ErrorCode::InvalidArgument, "spectral grid needs at least 4 points");
    {
      std::lock_guard lock(fftw_planner_mutex());
      forward_ = fftw_plan_dft_r2c_1d(n, real_, freq_, FFTW_ESTIMATE);
      backward_ = fftw_plan_dft_c2r_1d(n, freq_, real_, FFTW_ESTIMATE);
    }
    wavenumber_.resize(static_cast<std::size_t>(n / 2 + 1));
    for (int k = 0; k <= n / 2; ++k) wavenumber_[static_cast<std::size_t>(k)] = 2.0 * std::numbers::pi * k / length;
  }
  ~Spectral() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(real_);
    fftw_free(freq_);
  }
  Spectral(const Spectral&) = delete;
  Spectral& operator=(const Spectral&) = delete;

  /// Writes the first and second derivatives of u.
  void derivatives(std::span<const double> u, std::span<double> ux, std::span<double> uxx) {
    std::copy(u.begin(), u.end(), real_);
    fftw_execute(forward_);
    std::vector<std::complex<double>> hat(static_cast<std::size_t>(n_ / 2 + 1));
    for (std::size_t k = 0; k < hat.size(); ++k) hat[k] = {freq_[k][0], freq_[k][1]};
    const double inv_n = 1.0 / n_;
    if (!ux.empty()) {
      for (std::size_t k = 0; k < hat.size(); ++k) {
        std::complex<double> d = std::complex<double>(0.0, wavenumber_[k]) * hat[k];
        if (n_ % 2 == 0 && k == static_cast<std::size_t>(n_ / 2)) d = 0.0;  // Nyquist of an odd derivative
        freq_[k][0] = d.real();
        freq_[k][1] = d.imag();
      }
      fftw_execute(backward_);
      for (int i = 0; i < n_; ++i) ux[static_cast<std::size_t>(i)] = real_[i] * inv_n;
    }
    if (!uxx.empty()) {
      for (std::size_t k = 0; k < hat.size(); ++k) {
        const std::complex<double> d = -wavenumber_[k] * wavenumber_[k] * hat[k];
        freq_[k][0] = d.real();
        freq_[k][1] = d.imag();
      }
      fftw_execute(backward_);
      for (int i = 0; i < n_; ++i) uxx[static_cast<std::size_t>(i)] = real_[i] * inv_n;
    }
  }

private:
  int n_;
  double* real_;
  fftw_complex* freq_;
  fftw_plan forward_{};
  fftw_plan backward_{};
  std::vector<double> wavenumber_;
};

double sech(double v) { return 1.0 / std::cosh(v); }

struct Rhs {
  const PdeSpec& spec;
  std::vector<double> xs;
  double h;
  std::unique_ptr<Spectral> spectral;
  State ux, uxx;

  explicit Rhs(const PdeSpec& s) : spec(s), xs(s.grid()), h(xs[1] - xs[0]) {
    ux.resize(xs.size());
    uxx.resize(xs.size());
    if (s.periodic) spectral = std::make_unique<Spectral>(s.nx, s.length());
  }

  void operator()(const State& u, State& du, double /*t*/) {
    const std::size_t n = u.size();
    switch (spec.kind) {
      case PdeKind::Burgers: {
        spectral->derivatives(u, ux, uxx);
        const double nu = spec.parameters.at("nu");
        for (std::size_t i = 0; i < n; ++i) du[i] = -u[i] * ux[i] + nu * uxx[i];
        break;
      }
      case PdeKind::AllenCahn: {
        spectral->derivatives(u, {}, uxx);
        const double d = spec.parameters.at("D");
        const double r = spec.parameters.at("R");
        for (std::size_t i = 0; i < n; ++i) du[i] = d * uxx[i] + r * (u[i] - u[i] * u[i] * u[i]);
        break;
      }
      case PdeKind::Fisher:
      case PdeKind::Chafee: {
        const double inv_h2 = 1.0 / (h * h);
        // Neumann via mirrored ghost nodes.
        uxx[0] = 2.0 * (u[1] - u[0]) * inv_h2;
        uxx[n - 1] = 2.0 * (u[n - 2] - u[n - 1]) * inv_h2;
        for (std::size_t i = 1; i + 1 < n; ++i) uxx[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_h2;
        const double d = spec.parameters.at("D");
        if (spec.kind == PdeKind::Fisher) {
          const double r = spec.parameters.at("r");
          for (std::size_t i = 0; i < n; ++i) du[i] = d * uxx[i] + r * u[i] * (1.0 - u[i]);
        } else {
          for (std::size_t i = 0; i < n; ++i) du[i] = d * uxx[i] + u[i] - u[i] * u[i] * u[i];
        }
        break;
      }
      case PdeKind::Divide: {
        const double d = spec.parameters.at("D");
        const double inv_h2 = 1.0 / (h * h);
        const double inv_2h = 1.0 / (2.0 * h);
        du[0] = 0.0;
        du[n - 1] = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
          const double uxx_i = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_h2;
          const double ux_i = (u[i + 1] - u[i - 1]) * inv_2h;
          du[i] = d * uxx_i - ux_i / xs[i];
        }
        break;
      }
    }
  }
};

bool all_finite(const State& s) {
  return std::all_of(s.begin(), s.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

std::vector<double> initial_condition(const PdeSpec& spec) {
  const auto xs = spec.grid();
  std::vector<double> u(xs.size());
  const double pi = std::numbers::pi;
  const double len = spec.length();
  CounterRng noise(spec.ic_seed);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = xs[i];
    switch (spec.kind) {
      case PdeKind::Burgers: u[i] = -std::sin(pi * x / 8.0) * sech(x / 4.0); break;
      case PdeKind::Fisher: u[i] = 1.0 / (1.0 + std::exp(x / 0.25)); break;
      case PdeKind::Chafee: u[i] = std::cos(2.0 * pi * x / 3.0); break;
      case PdeKind::Divide: u[i] = std::sin(pi * (x - 1.0)) + 1.0; break;
      case PdeKind::AllenCahn:
        u[i] = std::sin(2.0 * pi * x / len) + 0.5 * std::cos(4.0 * pi * x / len) + 0.2 * noise.uniform01();
        break;
    }
  }
  return u;
}

Dataset generate(const PdeSpec& spec, const GenerateOptions& opts) {
  namespace odeint = boost::numeric::odeint;
  if (spec.nx < 8 || spec.nt < 8) throw Error(ErrorCode::InvalidArgument, "grid must be at least 8 x 8");

  State u = initial_condition(spec);
  if (opts.initial_condition) {
    const auto xs = spec.grid();
    for (std::size_t i = 0; i < xs.size(); ++i) u[i] = opts.initial_condition(xs[i]);
  }

  std::vector<double> times(static_cast<std::size_t>(spec.nt));
  for (int j = 0; j < spec.nt; ++j) times[static_cast<std::size_t>(j)] = spec.t0 + (spec.t1 - spec.t0) * j / (spec.nt - 1);

  Dataset d;
  d.u.resize(spec.nx, spec.nt);
  d.x0 = spec.x0;
  d.x1 = spec.periodic ? spec.x0 + spec.length() * (spec.nx - 1) / spec.nx : spec.x1;
  d.t0 = spec.t0;
  d.t1 = spec.t1;
  d.name = std::string(to_string(spec.kind));

  Rhs rhs(spec);
  auto system = [&rhs](const State& x, State& dxdt, double t) { rhs(x, dxdt, t); };
  Eigen::Index column = 0;
  bool diverged = false;
  auto observer = [&](const State& x, double t) {
    if (!all_finite(x)) {
      diverged = true;
      throw Error(ErrorCode::SolverDiverged, "non-finite state at t = " + std::to_string(t));
    }
    if (column < d.nt()) d.u.col(column++) = Eigen::Map<const Eigen::VectorXd>(x.data(), spec.nx);
  };

  auto stepper = odeint::make_controlled(spec.atol, spec.rtol, odeint::runge_kutta_dopri5<State>());
  const double dt0 = std::min(1e-4, (spec.t1 - spec.t0) / (spec.nt - 1));
  try {
    odeint::integrate_times(stepper, system, u, times.begin(), times.end(), dt0, observer,
                            odeint::max_step_checker(2'000'000));
  } catch (const odeint::odeint_error& e) {
    if (diverged || !all_finite(u)) throw Error(ErrorCode::SolverDiverged, e.what());
    throw Error(ErrorCode::StepSizeUnderflow, e.what());
  }
  if (column != d.nt()) throw Error(ErrorCode::SolverDiverged, "integration stopped early");
  return d;
}

std::vector<double> spectral_derivative(std::span<const double> u, double length, int order) {
  if (order != 1 && order != 2) throw Error(ErrorCode::UnsupportedOrder, "spectral derivative order must be 1 or 2");
  Spectral op(static_cast<int>(u.size()), length);
  std::vector<double> out(u.size());
  if (order == 1) op.derivatives(u, out, {});
  else op.derivatives(u, {}, out);
  return out;
}

double ginzburg_landau_energy(std::span<const double> u, double length, double diffusion, double reaction) {
  const auto ux = spectral_derivative(u, length, 1);
  const double h = length / static_cast<double>(u.size());
  double e = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double w = 1.0 - u[i] * u[i];
    e += 0.5 * diffusion * ux[i] * ux[i] + 0.25 * reaction * w * w;
  }
  return e * h;
}

}  // namespace pded
