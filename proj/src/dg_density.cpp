#include "tracelab/dg_density.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tracelab {

namespace {

// i^{-m}
Complex inverse_i_power(int m) {
  switch (((m % 4) + 4) % 4) {
    case 0: return {1, 0};
    case 1: return {0, -1};
    case 2: return {-1, 0};
    default: return {0, 1};
  }
}

double sign_power(int m) { return (m % 2 == 0) ? 1.0 : -1.0; }

void require_field_outside_image(const Monodromy& m, const Vec& grad_h, const RankPolicy& policy) {
  if (!hamiltonian_field_outside_image(m.matrix(), grad_h, policy)) {
    fail(ErrorCode::PreconditionViolation,
         "J∇H(z) lies in (M - I)(T_zΣ_E); the tangent hypothesis fails");
  }
}

}  // namespace

const char* to_string(DensityMethod m) {
  switch (m) {
    case DensityMethod::General: return "General";
    case DensityMethod::Simple: return "Simple";
    case DensityMethod::WeylZero: return "WeylZero";
    case DensityMethod::NonDegenerate: return "NonDegenerate";
    case DensityMethod::PeriodicFlow: return "PeriodicFlow";
    case DensityMethod::QuadraticClosedForm: return "QuadraticClosedForm";
  }
  return "?";
}

std::array<int, 2> DensityResult::phase_candidates() const {
  require(std::abs(d_squared) > 0, ErrorCode::DegenerateDeterminant, "d^2 vanishes");
  const double q = std::arg(d_squared) / (M_PI / 2);
  const double nearest = std::round(q);
  require(std::abs(q - nearest) <= 1e-8, ErrorCode::UnresolvedPhase,
          "phase of d^2 is not a multiple of π/2");
  const int m0 = static_cast<int>(((static_cast<long>(nearest) % 4) + 4) % 4);
  return {m0, m0 + 4};
}

DensityResult make_density(Complex d_squared, DensityMethod method) {
  DensityResult r;
  const double mag = std::abs(d_squared);
  if (std::abs(d_squared.imag()) <= 1e-10 * mag) d_squared.imag(0.0);
  if (std::abs(d_squared.real()) <= 1e-10 * mag) d_squared.real(0.0);
  r.d_squared = d_squared;
  r.modulus = std::sqrt(mag);
  r.method = method;
  return r;
}

DensityResult dg_density_general(const EigenspaceSplit& split_in, const Vec& grad_h, const Monodromy& m,
                                 const RankPolicy& policy) {
  const int n = m.dof();
  const int dim = 2 * n;
  EigenspaceSplit split = split_in;
  if (!split.fixed || !split.e5) attach_energy_subspaces(split, m, grad_h, policy);
  if (!check_hyp_rc(split, m.matrix(), policy)) {
    fail(ErrorCode::PreconditionViolation, "E_1 != ker(M - I)^2: hypRC fails");
  }
  require_field_outside_image(m, grad_h, policy);

  const Mat a = m.matrix() - Mat::Identity(dim, dim);
  const int k = split.k();
  const double det_w0 = restricted_form_det(split.e1);
  const double det_v1 = restricted_det(a, split.v1);
  const double proj = (orthogonal_projection(split.e1, dim) * grad_h).squaredNorm();

  double det_e5 = 1.0;
  const Mat& q = *split.e5;
  if (q.cols() > 0) {
    const Mat block = q.transpose() * symplectic_j(n) * a * q;
    det_e5 = block.determinant();
    const double scale = std::pow(std::max(1.0, a.cwiseAbs().maxCoeff()), static_cast<double>(q.cols()));
    if (std::abs(det_e5) <= policy.rank_tol * scale) {
      fail(ErrorCode::DegenerateDeterminant,
           "det(Π_E5 J (M - I)|E5) vanishes: the flow is not clean at this point");
    }
  }
  require(std::abs(det_v1) > policy.rank_tol, ErrorCode::DegenerateDeterminant,
          "det(M - I)|V1 vanishes: V1 carries a unit eigenvalue");
  require(proj > 0, ErrorCode::DegenerateDeterminant, "Π_E1 ∇H vanishes");

  const Complex d2 = sign_power(n) * inverse_i_power(k + 1) * det_w0 / (det_v1 * proj * det_e5);
  return make_density(d2, DensityMethod::General);
}

DensityResult dg_density_simple(const EigenspaceSplit& split, const Vec& grad_h, const Monodromy& m,
                                const RankPolicy& policy) {
  const int n = m.dof();
  const int dim = 2 * n;
  if (!check_hyp_dg(m.matrix(), grad_h, policy)) {
    fail(ErrorCode::PreconditionViolation,
         "ker(M - I)^2 ∩ T_zΣ_E != ker(M - I) ∩ T_zΣ_E: the simple reduction does not apply");
  }
  require_field_outside_image(m, grad_h, policy);
  const Mat a = m.matrix() - Mat::Identity(dim, dim);
  const double det_w0 = restricted_form_det(split.e1);
  const double det_v1 = restricted_det(a, split.v1);
  const double proj = (orthogonal_projection(split.e1, dim) * grad_h).squaredNorm();
  require(std::abs(det_v1) > policy.rank_tol && proj > 0, ErrorCode::DegenerateDeterminant,
          "degenerate denominator in the simple density");
  const double d2 = sign_power(n + split.dim_e1() / 2) * det_w0 / (det_v1 * proj);
  return make_density({d2, 0.0}, DensityMethod::Simple);
}

DensityResult dg_density_nondegenerate(const EigenspaceSplit& split, const Vec& grad_h,
                                       const Monodromy& m) {
  if (split.dim_e1() != 2) {
    fail(ErrorCode::PreconditionViolation,
         "orbit is degenerate: dim E1 = " + std::to_string(split.dim_e1()) + " != 2");
  }
  const int n = m.dof();
  const double det_v1 = restricted_det(m.matrix() - Mat::Identity(2 * n, 2 * n), split.v1);
  require(std::abs(det_v1) > 0, ErrorCode::DegenerateDeterminant, "det(M - I)|V1 vanishes");
  const double d2 = sign_power(n + 1) / (det_v1 * grad_h.squaredNorm());
  return make_density({d2, 0.0}, DensityMethod::NonDegenerate);
}

DensityResult dg_density_weyl(const Vec& grad_h) {
  const double g2 = grad_h.squaredNorm();
  require(g2 > 0, ErrorCode::PreconditionViolation, "gradient of H vanishes: critical point");
  return make_density({1.0 / g2, 0.0}, DensityMethod::WeylZero);
}

DensityResult dg_density_periodic_flow(const Vec& grad_h, const Mat& m) {
  const double defect = (m - Mat::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff();
  require(defect <= 1e-8, ErrorCode::PreconditionViolation, "periodic-flow density needs M(T) = Id");
  DensityResult r = dg_density_weyl(grad_h);
  r.method = DensityMethod::PeriodicFlow;
  return r;
}

DensityResult dg_density_quadratic(const std::vector<double>& w, double t, const Vec& grad_h) {
  const int n = static_cast<int>(w.size());
  const auto resonant = resonant_indices(w, t);
  require(!resonant.empty(), ErrorCode::NotPeriodic, "T is not a period of the oscillator");
  const int r = static_cast<int>(resonant.size());
  double prod = 1.0;
  for (int j = 0; j < n; ++j) {
    if (std::find(resonant.begin(), resonant.end(), j) != resonant.end()) continue;
    prod *= 2 * (1 - std::cos(t * w[static_cast<std::size_t>(j)]));
  }
  const double d2 = sign_power(n + r) / (grad_h.squaredNorm() * prod);
  return make_density({d2, 0.0}, DensityMethod::QuadraticClosedForm);
}

double reduced_poincare_det(const EigenspaceSplit& split, const Monodromy& m, const RankPolicy& policy) {
  if (split.dim_e1() != 2) {
    fail(ErrorCode::PreconditionViolation, "reduced Poincaré determinant needs a non-degenerate orbit");
  }
  const int dim = 2 * m.dof();
  const double d = restricted_det(m.matrix() - Mat::Identity(dim, dim), split.v1);
  if (std::abs(d) <= policy.rank_tol) {
    fail(ErrorCode::DegenerateDeterminant, "unit eigenvalue inside V1");
  }
  return std::abs(d);
}

// ----------------------------------------------------------- branch track

double BranchTrack::quarter_turns() const { return -2.0 * final_arg / M_PI; }

BranchTrack maslov_branch_track(const std::function<Mat(double)>& path, double t_end,
                                const BranchTrackOptions& opts) {
  require(std::isfinite(t_end), ErrorCode::InvalidArgument, "branch track: T must be finite");
  BranchTrack track;
  auto radicand = [&](double t) {
    const Mat m = path(t);
    require(m.rows() == m.cols() && m.rows() % 2 == 0, ErrorCode::InvalidArgument,
            "branch track: path must produce 2n x 2n matrices");
    const Eigen::Index n = m.rows() / 2;
    const Mat re = (m.topLeftCorner(n, n) + m.bottomRightCorner(n, n)) / 2;
    const Mat im = (m.topRightCorner(n, n) - m.bottomLeftCorner(n, n)) / 2;
    CMat c(n, n);
    c.real() = re;
    c.imag() = im;
    const Complex d = c.determinant();
    if (std::abs(d) < opts.min_modulus) {
      std::ostringstream os;
      os << "branch track: determinant " << std::abs(d) << " too close to 0 at t=" << t;
      fail(ErrorCode::DegenerateDeterminant, os.str());
    }
    return d;
  };

  Complex d0 = radicand(0.0);
  require(std::abs(d0 - Complex(1.0, 0.0)) <= 1e-8, ErrorCode::PreconditionViolation,
          "branch track: path must start at the identity");
  track.times.push_back(0.0);
  track.args.push_back(0.0);
  track.min_modulus = std::abs(d0);
  if (t_end == 0.0) return track;

  double arg = 0.0;
  // Both half-steps of an accepted interval move the argument by less than
  // max_step_arg, which rules out aliasing of whole turns.
  std::function<void(double, Complex, double, Complex, int)> refine =
      [&](double a, Complex da, double b, Complex db, int depth) {
        const double mid = 0.5 * (a + b);
        const Complex dm = radicand(mid);
        track.min_modulus = std::min({track.min_modulus, std::abs(dm), std::abs(db)});
        const double s1 = std::arg(dm / da);
        const double s2 = std::arg(db / dm);
        if (std::abs(s1) < opts.max_step_arg && std::abs(s2) < opts.max_step_arg) {
          arg += s1;
          track.times.push_back(mid);
          track.args.push_back(arg);
          arg += s2;
          track.times.push_back(b);
          track.args.push_back(arg);
          return;
        }
        if (depth >= opts.max_depth) {
          fail(ErrorCode::DegenerateDeterminant, "branch track: grid refinement exhausted");
        }
        refine(a, da, mid, dm, depth + 1);
        refine(mid, dm, b, db, depth + 1);
      };

  const int intervals =
      std::max(opts.initial_intervals, static_cast<int>(std::ceil(16.0 * std::abs(t_end))));
  double a = 0.0;
  Complex da = d0;
  for (int k = 1; k <= intervals; ++k) {
    const double b = t_end * k / intervals;
    const Complex db = radicand(b);
    refine(a, da, b, db, 0);
    a = b;
    da = db;
  }
  track.final_arg = arg;
  track.winding = static_cast<int>(std::lround(arg / (2 * M_PI)));
  return track;
}

int nearest_candidate(const std::array<int, 2>& candidates, double quarter_turns) {
  auto dist = [&](int c) { return std::abs(std::remainder(quarter_turns - c, 8.0)); };
  return dist(candidates[0]) <= dist(candidates[1]) ? candidates[0] : candidates[1];
}

double weighted_measure(double d_modulus, double grad_norm, double liouville) {
  return d_modulus * grad_norm * liouville;
}

Complex assemble_component_amplitude(const PeriodicComponent& component, const DensityResult& density,
                                     double measure, Complex fhat_t, double psi_e, double h,
                                     std::optional<int> phase_override) {
  require(h > 0, ErrorCode::InvalidArgument, "h must be positive");
  const std::optional<int> m = phase_override ? phase_override : density.phase_quarter_turns;
  if (!m) {
    fail(ErrorCode::UnresolvedPhase,
         "component at T=" + std::to_string(component.t) + " has no resolved phase");
  }
  const double power = std::pow(2 * M_PI * h, (1.0 - component.dim) / 2.0);
  const Complex action_phase = std::polar(1.0, component.action / h);
  const Complex maslov = std::polar(1.0, M_PI * (*m) / 4.0);
  return psi_e * power * action_phase * fhat_t * (1.0 / (2 * M_PI)) * maslov * measure;
}

}  // namespace tracelab
