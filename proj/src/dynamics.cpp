#include "tracelab/dynamics.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "tracelab/parallel.hpp"

namespace tracelab {

Vec HamiltonianSystem::closed_form_flow(const Vec&, double) const {
  fail(ErrorCode::PreconditionViolation, "system has no closed-form flow");
}

Mat HamiltonianSystem::closed_form_monodromy(const Vec&, double) const {
  fail(ErrorCode::PreconditionViolation, "system has no closed-form monodromy");
}

double gradient_consistency(const HamiltonianSystem& sys, const Vec& z, double step) {
  const Vec g = sys.gradient(z);
  double worst = 0.0;
  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    Vec zp = z, zm = z;
    zp(i) += step;
    zm(i) -= step;
    const double fd = (sys.energy(zp) - sys.energy(zm)) / (2 * step);
    worst = std::max(worst, std::abs(fd - g(i)) / scale);
  }
  return worst;
}

// ---------------------------------------------------------------- quadratic

QuadraticHamiltonian::QuadraticHamiltonian(std::vector<double> w) : w_(std::move(w)) {
  require(!w_.empty(), ErrorCode::InvalidArgument, "quadratic system needs at least one frequency");
  for (double wj : w_) {
    require(std::isfinite(wj) && wj > 0, ErrorCode::InvalidArgument,
            "frequencies must be positive and finite");
  }
}

double QuadraticHamiltonian::energy(const Vec& z) const {
  const int n = dof();
  double e = 0.0;
  for (int j = 0; j < n; ++j) e += 0.5 * (z(n + j) * z(n + j) + w_[j] * w_[j] * z(j) * z(j));
  return e;
}

Vec QuadraticHamiltonian::gradient(const Vec& z) const {
  const int n = dof();
  Vec g(2 * n);
  for (int j = 0; j < n; ++j) {
    g(j) = w_[j] * w_[j] * z(j);
    g(n + j) = z(n + j);
  }
  return g;
}

Mat QuadraticHamiltonian::hessian(const Vec&) const {
  const int n = dof();
  Mat h = Mat::Zero(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    h(j, j) = w_[j] * w_[j];
    h(n + j, n + j) = 1.0;
  }
  return h;
}

Mat QuadraticHamiltonian::flow_matrix(double t) const {
  const int n = dof();
  Mat m = Mat::Zero(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    const double c = std::cos(t * w_[j]), s = std::sin(t * w_[j]);
    m(j, j) = c;
    m(j, n + j) = s / w_[j];
    m(n + j, j) = -w_[j] * s;
    m(n + j, n + j) = c;
  }
  return m;
}

Vec QuadraticHamiltonian::closed_form_flow(const Vec& z, double t) const { return flow_matrix(t) * z; }

Mat QuadraticHamiltonian::closed_form_monodromy(const Vec&, double t) const { return flow_matrix(t); }

Vec QuadraticHamiltonian::bounding_half_widths(double e) const {
  require(e > 0, ErrorCode::InvalidArgument, "energy must be positive");
  const int n = dof();
  Vec b(2 * n);
  for (int j = 0; j < n; ++j) {
    b(j) = std::sqrt(2 * e) / w_[j];
    b(n + j) = std::sqrt(2 * e);
  }
  return b;
}

double QuadraticHamiltonian::mode_energy(int j, const Vec& z) const {
  const int n = dof();
  return 0.5 * (z(n + j) * z(n + j) + w_[j] * w_[j] * z(j) * z(j));
}

Vec QuadraticHamiltonian::mode_energy_gradient(int j, const Vec& z) const {
  const int n = dof();
  Vec g = Vec::Zero(2 * n);
  g(j) = w_[j] * w_[j] * z(j);
  g(n + j) = z(n + j);
  return g;
}

Vec QuadraticHamiltonian::point_from_modes(const std::vector<double>& energies,
                                           const std::vector<double>& phases) const {
  const int n = dof();
  require(static_cast<int>(energies.size()) == n && static_cast<int>(phases.size()) == n,
          ErrorCode::InvalidArgument, "point_from_modes: size mismatch");
  Vec z(2 * n);
  for (int j = 0; j < n; ++j) {
    require(energies[j] >= 0, ErrorCode::InvalidArgument, "mode energies must be >= 0");
    const double a = std::sqrt(2 * energies[j]);
    z(j) = a * std::cos(phases[j]) / w_[j];
    z(n + j) = -a * std::sin(phases[j]);
  }
  return z;
}

// ------------------------------------------------------------------ quartic

QuarticOscillator::QuarticOscillator(std::vector<double> w, double beta)
    : w_(std::move(w)), beta_(beta) {
  require(!w_.empty(), ErrorCode::InvalidArgument, "quartic oscillator needs frequencies");
  require(beta_ >= 0, ErrorCode::InvalidArgument, "quartic coefficient must be >= 0");
  for (double wj : w_) require(wj > 0, ErrorCode::InvalidArgument, "frequencies must be positive");
}

double QuarticOscillator::energy(const Vec& z) const {
  const int n = dof();
  double e = 0.0;
  for (int j = 0; j < n; ++j) {
    const double x = z(j), p = z(n + j);
    e += 0.5 * (p * p + w_[j] * w_[j] * x * x) + 0.25 * beta_ * x * x * x * x;
  }
  return e;
}

Vec QuarticOscillator::gradient(const Vec& z) const {
  const int n = dof();
  Vec g(2 * n);
  for (int j = 0; j < n; ++j) {
    const double x = z(j);
    g(j) = w_[j] * w_[j] * x + beta_ * x * x * x;
    g(n + j) = z(n + j);
  }
  return g;
}

Mat QuarticOscillator::hessian(const Vec& z) const {
  const int n = dof();
  Mat h = Mat::Zero(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    h(j, j) = w_[j] * w_[j] + 3 * beta_ * z(j) * z(j);
    h(n + j, n + j) = 1.0;
  }
  return h;
}

Vec QuarticOscillator::bounding_half_widths(double e) const {
  require(e > 0, ErrorCode::InvalidArgument, "energy must be positive");
  const int n = dof();
  Vec b(2 * n);
  for (int j = 0; j < n; ++j) {
    b(j) = std::sqrt(2 * e) / w_[j];
    b(n + j) = std::sqrt(2 * e);
  }
  return b;
}

// -------------------------------------------------------------------- flow

namespace {

struct State {
  Vec z;
  Mat m;
  double a = 0.0;
};

State derivative(const HamiltonianSystem& sys, const State& s, const Mat& j) {
  const int n = sys.dof();
  const Vec g = sys.gradient(s.z);
  State d;
  d.z = j * g;
  d.m = j * sys.hessian(s.z) * s.m;
  d.a = s.z.tail(n).dot(g.tail(n));
  return d;
}

State axpy(const State& s, double h, const State& d) {
  return State{s.z + h * d.z, s.m + h * d.m, s.a + h * d.a};
}

bool run_rk4(const HamiltonianSystem& sys, const Vec& z0, double t, long steps, double tol,
             FlowResult& out, bool record) {
  const int dim = 2 * sys.dof();
  const Mat j = symplectic_j(sys.dof());
  const double h = t / static_cast<double>(steps);
  const double e0 = sys.energy(z0);
  const double allowed = tol * std::max(1.0, std::abs(e0));
  State s{z0, Mat::Identity(dim, dim), 0.0};
  double drift = 0.0;
  out.times.clear();
  out.states.clear();
  if (record) {
    out.times.push_back(0.0);
    out.states.push_back(z0);
  }
  for (long k = 0; k < steps; ++k) {
    const State k1 = derivative(sys, s, j);
    const State k2 = derivative(sys, axpy(s, h / 2, k1), j);
    const State k3 = derivative(sys, axpy(s, h / 2, k2), j);
    const State k4 = derivative(sys, axpy(s, h, k3), j);
    s.z += h / 6 * (k1.z + 2 * k2.z + 2 * k3.z + k4.z);
    s.m += h / 6 * (k1.m + 2 * k2.m + 2 * k3.m + k4.m);
    s.a += h / 6 * (k1.a + 2 * k2.a + 2 * k3.a + k4.a);
    if (!s.z.allFinite()) return false;
    drift = std::max(drift, std::abs(sys.energy(s.z) - e0));
    if (drift > allowed) {
      out.energy_drift = drift;
      return false;
    }
    if (record) {
      out.times.push_back(h * static_cast<double>(k + 1));
      out.states.push_back(s.z);
    }
  }
  out.final_state = s.z;
  out.monodromy = s.m;
  out.action = s.a;
  out.energy_drift = drift;
  out.steps = steps;
  return true;
}

// Integral of |xi(t)|^2 over [0, t] along the exact quadratic flow.
double quadratic_action_integral(const QuadraticHamiltonian& q, const Vec& z0, double t) {
  const int n = q.dof();
  const auto& w = q.frequencies();
  double a = 0.0;
  for (int j = 0; j < n; ++j) {
    const double f = q.mode_energy(j, z0);
    const double phi = std::atan2(-z0(n + j), w[j] * z0(j));
    a += 2 * f * (t / 2 - (std::sin(2 * (w[j] * t + phi)) - std::sin(2 * phi)) / (4 * w[j]));
  }
  return a;
}

}  // namespace

FlowResult flow(const HamiltonianSystem& sys, const Vec& z0, double t, const FlowOptions& opts) {
  const int dim = 2 * sys.dof();
  require(z0.size() == dim, ErrorCode::InvalidArgument, "flow: state has the wrong dimension");
  require(z0.allFinite(), ErrorCode::InvalidArgument, "flow: state must be finite");
  require(std::isfinite(t), ErrorCode::InvalidArgument, "flow: time must be finite");

  FlowResult out;
  if (t == 0.0) {
    out.final_state = z0;
    out.monodromy = Mat::Identity(dim, dim);
    if (opts.record_trajectory) {
      out.times = {0.0};
      out.states = {z0};
    }
    return out;
  }
  if (sys.has_closed_form() && !opts.force_numeric) {
    out.final_state = sys.closed_form_flow(z0, t);
    out.monodromy = sys.closed_form_monodromy(z0, t);
    out.energy_drift = std::abs(sys.energy(out.final_state) - sys.energy(z0));
    if (const auto* q = dynamic_cast<const QuadraticHamiltonian*>(&sys)) {
      out.action = quadratic_action_integral(*q, z0, t);
    }
    if (opts.record_trajectory) {
      const int samples = 257;
      for (int k = 0; k < samples; ++k) {
        const double tk = t * k / (samples - 1);
        out.times.push_back(tk);
        out.states.push_back(sys.closed_form_flow(z0, tk));
      }
    }
    return out;
  }

  require(opts.max_step > 0, ErrorCode::InvalidArgument, "flow: max_step must be positive");
  long steps = std::max<long>(1, static_cast<long>(std::ceil(std::abs(t) / opts.max_step)));
  for (int halving = 0; halving <= opts.max_halvings; ++halving) {
    if (run_rk4(sys, z0, t, steps, opts.tol_energy, out, opts.record_trajectory)) return out;
    steps *= 2;
    if (std::abs(t) / static_cast<double>(steps) < 1e-12 * std::max(1.0, std::abs(t))) {
      fail(ErrorCode::StepSizeCollapse, "flow: step size collapsed");
    }
  }
  std::ostringstream os;
  os << "flow: energy drift " << out.energy_drift << " above tolerance after " << opts.max_halvings
     << " step halvings";
  fail(ErrorCode::EnergyDrift, os.str());
}

Monodromy monodromy(const HamiltonianSystem& sys, const Vec& z0, double t, const FlowOptions& opts,
                    double tol_symp) {
  FlowResult r = flow(sys, z0, t, opts);
  return Monodromy(std::move(r.monodromy), z0, t, tol_symp);
}

void require_periodic(const HamiltonianSystem& sys, const Vec& z0, double period, double tol_per,
                      const FlowOptions& opts) {
  const FlowResult r = flow(sys, z0, period, opts);
  const double miss = (r.final_state - z0).norm();
  if (!(miss <= tol_per)) {
    std::ostringstream os;
    os << "point is not periodic with period " << period << ": |Phi_T(z) - z| = " << miss;
    fail(ErrorCode::NotPeriodic, os.str());
  }
}

double action(const HamiltonianSystem& sys, const Vec& z0, double period, const FlowOptions& opts,
              double tol_per) {
  if (period == 0.0) return 0.0;
  const FlowResult r = flow(sys, z0, period, opts);
  const double miss = (r.final_state - z0).norm();
  if (!(miss <= tol_per)) {
    std::ostringstream os;
    os << "action: point is not periodic with period " << period << " (miss " << miss << ")";
    fail(ErrorCode::NotPeriodic, os.str());
  }
  return r.action;
}

double quadratic_action(const QuadraticHamiltonian& sys, const Vec& z0, double period,
                        double tol_per) {
  require_periodic(sys, z0, period, tol_per);
  return period * sys.energy(z0);
}

// ------------------------------------------------------------------ measure

MeasureEstimate liouville_measure(const HamiltonianSystem& sys, double e, long n_samples,
                                  std::uint64_t seed, const MeasureOptions& opts) {
  require(e > 0, ErrorCode::InvalidArgument, "liouville_measure: energy must be positive");
  require(n_samples > 0, ErrorCode::InvalidArgument, "liouville_measure: need samples");
  require(opts.shell_halfwidth > 0 && opts.shell_halfwidth < 1, ErrorCode::InvalidArgument,
          "liouville_measure: shell halfwidth must lie in (0, 1)");
  const int dim = 2 * sys.dof();
  const double delta = opts.shell_halfwidth * e;
  const Vec b = sys.bounding_half_widths(e + delta);
  double box = 1.0;
  for (int i = 0; i < dim; ++i) box *= 2 * b(i);

  const long chunk = std::max<long>(1, opts.chunk);
  const long n_chunks = (n_samples + chunk - 1) / chunk;
  std::vector<long> hits(static_cast<std::size_t>(n_chunks), 0);
  parallel_for(static_cast<std::size_t>(n_chunks), opts.threads, [&](std::size_t c) {
    std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
    std::mt19937_64 rng(ss);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const long begin = static_cast<long>(c) * chunk;
    const long count = std::min(chunk, n_samples - begin);
    Vec z(dim);
    long h = 0;
    for (long s = 0; s < count; ++s) {
      for (int i = 0; i < dim; ++i) z(i) = b(i) * u(rng);
      if (std::abs(sys.energy(z) - e) <= delta) ++h;
    }
    hits[c] = h;
  });

  MeasureEstimate est;
  est.samples = n_samples;
  est.hits = std::accumulate(hits.begin(), hits.end(), 0L);
  if (est.hits < opts.min_hits) {
    std::ostringstream os;
    os << "liouville_measure: only " << est.hits << " shell hits in " << n_samples
       << " samples; estimate variance is not controlled";
    fail(ErrorCode::VarianceBlowUp, os.str());
  }
  const double p = static_cast<double>(est.hits) / static_cast<double>(n_samples);
  est.value = box * p / (2 * delta);
  est.std_error = box / (2 * delta) * std::sqrt(p * (1 - p) / static_cast<double>(n_samples));
  return est;
}

double quadratic_liouville_measure(const std::vector<double>& w, double e) {
  std::vector<int> all(w.size());
  std::iota(all.begin(), all.end(), 0);
  return resonant_liouville_measure(w, all, e);
}

double resonant_liouville_measure(const std::vector<double>& w, const std::vector<int>& subset,
                                  double e) {
  require(!subset.empty(), ErrorCode::InvalidArgument, "resonant subset must be nonempty");
  require(e > 0, ErrorCode::InvalidArgument, "energy must be positive");
  const int q = static_cast<int>(subset.size());
  double prod = 1.0;
  for (int j : subset) {
    require(j >= 0 && j < static_cast<int>(w.size()), ErrorCode::InvalidArgument,
            "resonant index out of range");
    prod *= w[static_cast<std::size_t>(j)];
  }
  return std::pow(2 * M_PI, q) * std::pow(e, q - 1) / (std::tgamma(q) * prod);
}

}  // namespace tracelab
