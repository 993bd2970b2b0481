#include "tracelab/berry_tabor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tracelab/error.hpp"
#include "tracelab/parallel.hpp"

namespace tracelab {

namespace {

constexpr double kFdTol = 1e-5;

Mat adjugate(const Mat& a) {
  const Eigen::Index n = a.rows();
  if (n == 1) return Mat::Ones(1, 1);
  Mat adj(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      Mat minor(n - 1, n - 1);
      for (Eigen::Index r = 0, rr = 0; r < n; ++r) {
        if (r == j) continue;
        for (Eigen::Index c = 0, cc = 0; c < n; ++c) {
          if (c == i) continue;
          minor(rr, cc++) = a(r, c);
        }
        ++rr;
      }
      adj(i, j) = (((i + j) % 2) ? -1.0 : 1.0) * minor.determinant();
    }
  }
  return adj;
}

double det_scale(const Mat& a) { return std::pow(std::max(1.0, a.norm()), static_cast<double>(a.rows())); }

std::string m_string(const std::vector<int>& m) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < m.size(); ++i) os << (i ? "," : "") << m[i];
  os << ')';
  return os.str();
}

std::vector<std::vector<int>> lattice_vectors(int n, double bound) {
  const int b = static_cast<int>(std::floor(bound + 1e-12));
  std::vector<std::vector<int>> out;
  std::vector<int> m(static_cast<std::size_t>(n), -b);
  while (true) {
    long sq = 0;
    for (int x : m) sq += static_cast<long>(x) * x;
    if (sq > 0 && static_cast<double>(sq) <= bound * bound * (1 + 1e-12)) out.push_back(m);
    int k = n - 1;
    while (k >= 0 && m[static_cast<std::size_t>(k)] == b) m[static_cast<std::size_t>(k--)] = -b;
    if (k < 0) break;
    ++m[static_cast<std::size_t>(k)];
  }
  return out;
}

// Level-set points seeded from a grid over D.
std::vector<Vec> level_set_seeds(const ActionAngleSystem& sys, double energy, int per_axis) {
  const int n = sys.dof();
  std::vector<Vec> seeds;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    Vec x(n);
    for (int j = 0; j < n; ++j) {
      const double u = (idx[static_cast<std::size_t>(j)] + 0.5) / per_axis;
      x(j) = sys.lower()(j) + u * (sys.upper()(j) - sys.lower()(j));
    }
    bool ok = false;
    for (int it = 0; it < 60; ++it) {
      const Vec w = sys.frequencies(x);
      const double g2 = w.squaredNorm();
      if (g2 < 1e-24) break;
      const double r = sys.energy(x) - energy;
      if (std::abs(r) <= 1e-13 * std::max(1.0, std::abs(energy))) {
        ok = true;
        break;
      }
      x -= r * w / g2;
    }
    if (ok && sys.contains(x)) seeds.push_back(x);
    int k = n - 1;
    while (k >= 0 && idx[static_cast<std::size_t>(k)] == per_axis - 1) idx[static_cast<std::size_t>(k--)] = 0;
    if (k < 0) break;
    ++idx[static_cast<std::size_t>(k)];
  }
  return seeds;
}

double torus_residual(const ActionAngleSystem& sys, double energy, double t, const Vec& action,
                      const Vec& target) {
  return (t * sys.frequencies(action) - target).norm() + std::abs(sys.energy(action) - energy);
}

}  // namespace

ActionAngleSystem::ActionAngleSystem(Vec lower, Vec upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  require(lower_.size() >= 1 && lower_.size() == upper_.size(), ErrorCode::InvalidArgument,
          "ActionAngleSystem: box bounds must have equal positive size");
  require((upper_.array() > lower_.array()).all(), ErrorCode::InvalidArgument,
          "ActionAngleSystem: empty box");
}

bool ActionAngleSystem::contains(const Vec& action) const {
  return action.size() == lower_.size() && (action.array() >= lower_.array()).all() &&
         (action.array() <= upper_.array()).all();
}

FlatTorus::FlatTorus(int n, double box)
    : ActionAngleSystem(Vec::Constant(n, -box), Vec::Constant(n, box)) {}
double FlatTorus::energy(const Vec& a) const { return 0.5 * a.squaredNorm(); }
Vec FlatTorus::frequencies(const Vec& a) const { return a; }
Mat FlatTorus::hessian(const Vec& a) const { return Mat::Identity(a.size(), a.size()); }

LinearAction::LinearAction(Vec a, double box)
    : ActionAngleSystem(Vec::Zero(a.size()), Vec::Constant(a.size(), box)), a_(std::move(a)) {}
double LinearAction::energy(const Vec& x) const { return a_.dot(x); }
Vec LinearAction::frequencies(const Vec&) const { return a_; }
Mat LinearAction::hessian(const Vec& x) const { return Mat::Zero(x.size(), x.size()); }

PolynomialAction::PolynomialAction(PolynomialCoefficients c, Vec lower, Vec upper)
    : ActionAngleSystem(std::move(lower), std::move(upper)), c_(std::move(c)) {
  const Eigen::Index n = dof();
  if (c_.linear.size() == 0) c_.linear = Vec::Zero(n);
  if (c_.quadratic.size() == 0) c_.quadratic = Mat::Zero(n, n);
  if (c_.quartic_diag.size() == 0) c_.quartic_diag = Vec::Zero(n);
  require(c_.linear.size() == n && c_.quadratic.rows() == n && c_.quadratic.cols() == n &&
              c_.quartic_diag.size() == n,
          ErrorCode::InvalidArgument, "PolynomialAction: coefficient sizes do not match the box");
  require((c_.quadratic - c_.quadratic.transpose()).norm() <= 1e-12 * std::max(1.0, c_.quadratic.norm()),
          ErrorCode::InvalidArgument, "PolynomialAction: quadratic part must be symmetric");
}

double PolynomialAction::energy(const Vec& x) const {
  const double r2 = x.squaredNorm();
  return c_.linear.dot(x) + 0.5 * x.dot(c_.quadratic * x) + c_.quartic_diag.dot(x.array().pow(4).matrix()) +
         c_.quartic_radial * r2 * r2;
}

Vec PolynomialAction::frequencies(const Vec& x) const {
  const double r2 = x.squaredNorm();
  return c_.linear + c_.quadratic * x + (4.0 * c_.quartic_diag.array() * x.array().cube()).matrix() +
         4.0 * c_.quartic_radial * r2 * x;
}

Mat PolynomialAction::hessian(const Vec& x) const {
  const double r2 = x.squaredNorm();
  Mat h = c_.quadratic;
  h.diagonal() += (12.0 * c_.quartic_diag.array() * x.array().square()).matrix();
  h += c_.quartic_radial * (4.0 * r2 * Mat::Identity(x.size(), x.size()) + 8.0 * x * x.transpose());
  return h;
}

FrequencyMap frequency_map(const ActionAngleSystem& sys, const Vec& action) {
  require(sys.contains(action), ErrorCode::InvalidArgument, "frequency_map: action outside the domain");
  const int n = sys.dof();
  FrequencyMap out;
  out.w = sys.frequencies(action);
  out.w_prime = sys.hessian(action);
  const double s = 1e-5 * std::max(1.0, action.norm());
  Vec w_fd(n);
  Mat h_fd(n, n);
  for (int j = 0; j < n; ++j) {
    Vec p = action, m = action;
    p(j) += s;
    m(j) -= s;
    w_fd(j) = (sys.energy(p) - sys.energy(m)) / (2 * s);
    h_fd.col(j) = (sys.frequencies(p) - sys.frequencies(m)) / (2 * s);
  }
  out.fd_error = std::max((out.w - w_fd).norm() / std::max(1.0, out.w.norm()),
                          (out.w_prime - h_fd).norm() / std::max(1.0, out.w_prime.norm()));
  require(out.fd_error <= kFdTol, ErrorCode::PreconditionViolation,
          "frequency_map: supplied derivatives disagree with finite differences");
  out.degenerate = std::abs(out.w_prime.determinant()) <= 1e-12 * det_scale(out.w_prime);
  return out;
}

NondegeneracyReport check_nondegenerate(const ActionAngleSystem& sys, const Vec& action) {
  const FrequencyMap f = frequency_map(sys, action);
  return {f.w_prime.determinant(), !f.degenerate};
}

IsochronyReport check_isochronous(const ActionAngleSystem& sys, const Vec& action) {
  const FrequencyMap f = frequency_map(sys, action);
  require(!f.degenerate, ErrorCode::DegenerateDeterminant, "check_isochronous: w'(I) is singular");
  IsochronyReport r;
  r.bracket = f.w.dot(f.w_prime.fullPivLu().solve(f.w));
  const double scale = f.w.squaredNorm() * f.w_prime.inverse().norm();
  r.isochronous = std::abs(r.bracket) > 1e-10 * std::max(scale, 1e-300);
  return r;
}

double PeriodicTorus::m_norm() const {
  double s = 0.0;
  for (int x : m_vec) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

double PeriodicTorus::action_integral() const {
  double s = 0.0;
  for (std::size_t j = 0; j < m_vec.size(); ++j) s += m_vec[j] * action(static_cast<Eigen::Index>(j));
  return 2 * M_PI * s;
}

TorusEnumeration enumerate_tori(const ActionAngleSystem& sys, double energy, double t_min, double t_max,
                                double m_bound, const TorusSearchOptions& opts) {
  require(t_min <= t_max, ErrorCode::InvalidArgument, "enumerate_tori: empty window");
  require(m_bound >= 1.0, ErrorCode::InvalidArgument, "enumerate_tori: M_bound must be >= 1");
  const int n = sys.dof();
  const std::vector<Vec> seeds = level_set_seeds(sys, energy, opts.seeds_per_axis);
  require(!seeds.empty(), ErrorCode::PreconditionViolation, "enumerate_tori: level set not found in D");
  for (const Vec& s : seeds) {
    require(!frequency_map(sys, s).degenerate, ErrorCode::PreconditionViolation,
            "enumerate_tori: w' is singular on the level set");
  }

  const auto lattice = lattice_vectors(n, m_bound);
  std::vector<std::vector<PeriodicTorus>> found(lattice.size());
  std::vector<std::string> multi(lattice.size());

  parallel_for(lattice.size(), opts.threads, [&](std::size_t li) {
    const auto& mv = lattice[li];
    Vec target(n);
    for (int j = 0; j < n; ++j) target(j) = 2 * M_PI * mv[static_cast<std::size_t>(j)];
    std::vector<PeriodicTorus> sols;
    for (const Vec& seed : seeds) {
      Vec x = seed;
      const Vec w0 = sys.frequencies(x);
      double t = target.dot(w0) / w0.squaredNorm();
      bool converged = false;
      for (int it = 0; it < opts.max_iterations; ++it) {
        if (!x.allFinite() || !std::isfinite(t)) break;
        const Vec w = sys.frequencies(x);
        Vec f(n + 1);
        f.head(n) = t * w - target;
        f(n) = sys.energy(x) - energy;
        if (f.head(n).norm() + std::abs(f(n)) <= opts.tol_newton) {
          converged = true;
          break;
        }
        Mat jac = Mat::Zero(n + 1, n + 1);
        jac.block(0, 0, n, 1) = w;
        jac.block(0, 1, n, n) = t * sys.hessian(x);
        jac.block(n, 1, 1, n) = w.transpose();
        Eigen::FullPivLU<Mat> lu(jac);
        if (!lu.isInvertible()) break;
        const Vec step = lu.solve(f);
        t -= step(0);
        x -= step.tail(n);
      }
      if (!converged || !sys.contains(x) || t < t_min || t > t_max) continue;
      const bool dup = std::any_of(sols.begin(), sols.end(), [&](const PeriodicTorus& p) {
        return (p.action - x).norm() <= opts.dedupe_tol * std::max(1.0, x.norm());
      });
      if (dup) continue;
      PeriodicTorus p;
      p.t = t;
      p.action = x;
      p.m_vec = mv;
      p.residual = torus_residual(sys, energy, t, x, target);
      const Mat wp = sys.hessian(x);
      const Vec w = sys.frequencies(x);
      p.bracket = w.dot(adjugate(wp) * w) / wp.determinant();
      sols.push_back(p);
    }
    if (sols.size() > 1) {
      multi[li] = "M=" + m_string(mv) + " admits " + std::to_string(sols.size()) + " distinct solutions";
    }
    found[li] = std::move(sols);
  });

  TorusEnumeration out;
  for (std::size_t li = 0; li < lattice.size(); ++li) {
    for (auto& p : found[li]) out.tori.push_back(std::move(p));
    if (!multi[li].empty()) out.warnings.push_back(multi[li]);
  }
  std::stable_sort(out.tori.begin(), out.tori.end(), [](const PeriodicTorus& a, const PeriodicTorus& b) {
    long na = 0, nb = 0;
    for (int x : a.m_vec) na += static_cast<long>(x) * x;
    for (int x : b.m_vec) nb += static_cast<long>(x) * x;
    if (na != nb) return na < nb;
    if (a.m_vec != b.m_vec) return a.m_vec < b.m_vec;
    return a.t < b.t;
  });
  for (const auto& p : out.tori) {
    if (!std::isfinite(p.bracket) || std::abs(p.bracket) <= 1e-10 * p.action.squaredNorm()) {
      out.warnings.push_back("M=" + m_string(p.m_vec) + ": isochronicity bracket vanishes");
    }
  }
  return out;
}

double curvature_from_frequencies(const ActionAngleSystem& sys, const Vec& action) {
  const int n = sys.dof();
  const Vec w = sys.frequencies(action);
  const double g = w.norm();
  require(g > 0.0, ErrorCode::PreconditionViolation, "curvature: gradient vanishes");
  const double sign = ((n - 1) % 2) ? -1.0 : 1.0;
  return sign * w.dot(adjugate(sys.hessian(action)) * w) / std::pow(g, n + 1);
}

namespace {

// Graph chart over the hyperplane orthogonal to `axis`; nullopt if the
// implicit solve fails.
std::optional<double> chart_curvature(const ActionAngleSystem& sys, const Vec& action, int axis, double s) {
  const int n = sys.dof();
  const double energy = sys.energy(action);
  std::vector<int> others;
  for (int j = 0; j < n; ++j) {
    if (j != axis) others.push_back(j);
  }
  auto phi = [&](const Vec& xi) -> std::optional<Vec> {
    Vec x = action;
    for (int k = 0; k < n - 1; ++k) x(others[static_cast<std::size_t>(k)]) += xi(k);
    for (int it = 0; it < 60; ++it) {
      const double d = sys.frequencies(x)(axis);
      if (std::abs(d) < 1e-12) return std::nullopt;
      const double step = (sys.energy(x) - energy) / d;
      x(axis) -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x(axis)))) return x;
    }
    return std::abs(sys.energy(x) - energy) <= 1e-13 * std::max(1.0, std::abs(energy)) ? std::optional<Vec>(x)
                                                                                        : std::nullopt;
  };
  const int k = n - 1;
  auto at = [&](int i, int si, int j, int sj) {
    Vec xi = Vec::Zero(k);
    if (i >= 0) xi(i) += si * s;
    if (j >= 0) xi(j) += sj * s;
    return phi(xi);
  };
  const auto c = at(-1, 0, -1, 0);
  if (!c) return std::nullopt;
  const Vec nu = sys.frequencies(action).normalized();
  Mat first(k, k), second(k, k);
  std::vector<Vec> d1(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const auto p = at(i, 1, -1, 0), m = at(i, -1, -1, 0);
    if (!p || !m) return std::nullopt;
    d1[static_cast<std::size_t>(i)] = (*p - *m) / (2 * s);
    second(i, i) = nu.dot(*p - 2 * *c + *m) / (s * s);
  }
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) first(i, j) = d1[static_cast<std::size_t>(i)].dot(d1[static_cast<std::size_t>(j)]);
    for (int j = i + 1; j < k; ++j) {
      const auto pp = at(i, 1, j, 1), pm = at(i, 1, j, -1), mp = at(i, -1, j, 1), mm = at(i, -1, j, -1);
      if (!pp || !pm || !mp || !mm) return std::nullopt;
      second(i, j) = second(j, i) = nu.dot(*pp - *pm - *mp + *mm) / (4 * s * s);
    }
  }
  return second.determinant() / first.determinant();
}

}  // namespace

double curvature_from_parametrization(const ActionAngleSystem& sys, const Vec& action) {
  const int n = sys.dof();
  const Vec w = sys.frequencies(action);
  require(w.norm() > 0.0, ErrorCode::PreconditionViolation, "curvature: gradient vanishes");
  if (n == 1) return 1.0;
  std::vector<int> axes(static_cast<std::size_t>(n));
  std::iota(axes.begin(), axes.end(), 0);
  std::stable_sort(axes.begin(), axes.end(), [&](int a, int b) { return std::abs(w(a)) > std::abs(w(b)); });
  const double s = 1e-3 * std::max(1.0, action.norm());
  for (int axis : axes) {
    const auto coarse = chart_curvature(sys, action, axis, s);
    const auto fine = chart_curvature(sys, action, axis, s / 2);
    if (coarse && fine) return (4 * *fine - *coarse) / 3;
  }
  fail(ErrorCode::ConvergenceFailure, "curvature_from_parametrization: no usable graph chart");
}

std::array<int, 2> bt_beta_candidates(int n, double curvature) {
  require(curvature != 0.0, ErrorCode::DegenerateDeterminant, "bt_beta_candidates: zero curvature");
  const int b = ((n - 1) + (curvature < 0 ? 2 : 0)) % 4;
  return {b, b + 4};
}

Complex bt_amplitude(const PeriodicTorus& torus, const ActionAngleSystem& sys, Complex fhat_t, double h,
                     std::optional<int> beta, double psi_e) {
  require(h > 0.0, ErrorCode::InvalidArgument, "bt_amplitude: h must be positive");
  const int n = sys.dof();
  const Vec w = sys.frequencies(torus.action);
  const double k = curvature_from_frequencies(sys, torus.action);
  require(std::abs(k) > 1e-12 * std::pow(std::max(1.0, w.norm()), -2), ErrorCode::DegenerateDeterminant,
          "bt_amplitude: vanishing curvature");
  require(beta.has_value(), ErrorCode::UnresolvedPhase, "bt_amplitude: beta not resolved");
  const auto cands = bt_beta_candidates(n, k);
  const int b = ((*beta % 8) + 8) % 8;
  require(b % 4 == cands[0], ErrorCode::PreconditionViolation,
          "bt_amplitude: beta violates e^{i pi beta/2} = i^{n-1} sign K");
  const double modulus = psi_e / (w.norm() * std::sqrt(std::abs(k)) * std::pow(torus.m_norm(), 0.5 * (n - 1))) *
                         std::pow(h, 0.5 * (1 - n));
  return fhat_t * std::polar(modulus, torus.action_integral() / h + M_PI * b / 4.0);
}

Monodromy torus_model_monodromy(const ActionAngleSystem& sys, const Vec& action, double t) {
  const int n = sys.dof();
  Mat m = Mat::Identity(2 * n, 2 * n);
  m.topRightCorner(n, n) = t * sys.hessian(action);
  Vec base = Vec::Zero(2 * n);
  base.tail(n) = action;
  return Monodromy(m, base, t);
}

Vec torus_model_gradient(const ActionAngleSystem& sys, const Vec& action) {
  const int n = sys.dof();
  Vec g = Vec::Zero(2 * n);
  g.tail(n) = sys.frequencies(action);
  return g;
}

Mat torus_component_tangent(int n) {
  Mat t = Mat::Zero(1 + 2 * n, n);
  t.block(1, 0, n, n) = Mat::Identity(n, n);
  return t;
}

IntNormReport check_intnorm(const ActionAngleSystem& sys, const Vec& action, const Monodromy& m,
                            const RankPolicy& policy) {
  const int n = sys.dof();
  require(m.dof() == n, ErrorCode::InvalidArgument, "check_intnorm: dimension mismatch");
  IntNormReport r;
  r.w_prime_invertible = check_nondegenerate(sys, action).nondegenerate;
  const Mat a = m.matrix() - Mat::Identity(2 * n, 2 * n);
  const Mat ker = kernel_basis(a, policy);
  Mat angles = Mat::Zero(2 * n, n);
  angles.topRows(n) = Mat::Identity(n, n);
  r.kernel_is_angle_span = ker.cols() == n && subspace_contains(ker, angles, policy);
  if (r.w_prime_invertible) {
    r.isochronous = check_isochronous(sys, action).isochronous;
    const Vec grad = torus_model_gradient(sys, action);
    const Mat tangent = orthogonal_complement(Mat(grad.normalized()), 2 * n, policy);
    const Mat image = range_basis(a * tangent, policy);
    const Vec jgrad = symplectic_j(n) * grad;
    r.jgrad_outside_image = image.cols() == 0 || !subspace_contains(image, Mat(jgrad), policy);
  }
  r.nilpotent = (a * a).norm() <= 1e-12 * std::max(1.0, a.squaredNorm());
  return r;
}

}  // namespace tracelab
