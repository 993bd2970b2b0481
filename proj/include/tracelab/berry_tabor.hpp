#pragma once

// Integrable systems on the action side T^n × D: frequency map, periodic
// tori, Gaussian curvature of {H̃ = E} and the torus amplitudes.

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tracelab/dg_density.hpp"

namespace tracelab {

/// H̃ on a box D ⊂ R^n.
class ActionAngleSystem {
 public:
  ActionAngleSystem(Vec lower, Vec upper);
  virtual ~ActionAngleSystem() = default;

  int dof() const { return static_cast<int>(lower_.size()); }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  bool contains(const Vec& action) const;

  virtual std::string name() const = 0;
  virtual double energy(const Vec& action) const = 0;
  virtual Vec frequencies(const Vec& action) const = 0;  // w(I) = ∇H̃
  virtual Mat hessian(const Vec& action) const = 0;      // w'(I)

 private:
  Vec lower_, upper_;
};

/// |I|^2 / 2.
class FlatTorus final : public ActionAngleSystem {
 public:
  explicit FlatTorus(int n, double box = 10.0);
  std::string name() const override { return "flat-torus"; }
  double energy(const Vec& action) const override;
  Vec frequencies(const Vec& action) const override;
  Mat hessian(const Vec& action) const override;
};

/// <a, I>: harmonic oscillator in action variables, w' = 0.
class LinearAction final : public ActionAngleSystem {
 public:
  explicit LinearAction(Vec a, double box = 10.0);
  std::string name() const override { return "linear"; }
  double energy(const Vec& action) const override;
  Vec frequencies(const Vec& action) const override;
  Mat hessian(const Vec& action) const override;

 private:
  Vec a_;
};

/// <b, I> + I^T A I / 2 + Σ_j c_j I_j^4 + γ |I|^4.
struct PolynomialCoefficients {
  Vec linear;
  Mat quadratic;
  Vec quartic_diag;
  double quartic_radial = 0.0;
};

class PolynomialAction final : public ActionAngleSystem {
 public:
  PolynomialAction(PolynomialCoefficients c, Vec lower, Vec upper);
  std::string name() const override { return "polynomial"; }
  double energy(const Vec& action) const override;
  Vec frequencies(const Vec& action) const override;
  Mat hessian(const Vec& action) const override;
  const PolynomialCoefficients& coefficients() const { return c_; }

 private:
  PolynomialCoefficients c_;
};

struct FrequencyMap {
  Vec w;
  Mat w_prime;
  double fd_error = 0.0;  // relative mismatch against central differences
  bool degenerate = false;
};

/// Throws InvalidArgument outside D and PreconditionViolation when the
/// supplied derivatives disagree with finite differences beyond 1e-5.
FrequencyMap frequency_map(const ActionAngleSystem& sys, const Vec& action);

struct NondegeneracyReport {
  double det = 0.0;
  bool nondegenerate = false;
};
NondegeneracyReport check_nondegenerate(const ActionAngleSystem& sys, const Vec& action);

struct IsochronyReport {
  double bracket = 0.0;  // <w'^{-1} w, w>
  bool isochronous = false;
};
/// Throws DegenerateDeterminant when w' is singular.
IsochronyReport check_isochronous(const ActionAngleSystem& sys, const Vec& action);

struct PeriodicTorus {
  double t = 0.0;
  Vec action;
  std::vector<int> m_vec;
  double residual = 0.0;
  double bracket = 0.0;

  double m_norm() const;
  double action_integral() const;  // 2π <M, I>
};

struct TorusSearchOptions {
  double tol_newton = 1e-10;
  int max_iterations = 50;
  int seeds_per_axis = 5;
  double dedupe_tol = 1e-6;
  int threads = 1;
};

struct TorusEnumeration {
  std::vector<PeriodicTorus> tori;
  std::vector<std::string> warnings;
};

/// Every (T, I) with T w(I) = 2πM, H̃(I) = E, T ∈ [t_min, t_max], 0 < |M| ≤ m_bound.
/// Sorted by (|M|, M lexicographic, T).
TorusEnumeration enumerate_tori(const ActionAngleSystem& sys, double energy, double t_min, double t_max,
                                double m_bound, const TorusSearchOptions& opts = {});

/// (-1)^{n-1} <adj(w') w, w> / |w|^{n+1}.
double curvature_from_frequencies(const ActionAngleSystem& sys, const Vec& action);

/// Gaussian curvature of the level set through `action` from a local graph
/// chart, unit normal ∇H̃/|∇H̃|.
double curvature_from_parametrization(const ActionAngleSystem& sys, const Vec& action);

/// Both values of β mod 8 with e^{iπβ/2} = i^{n-1} sign K.
std::array<int, 2> bt_beta_candidates(int n, double curvature);

/// ψ(E) f̂(T) e^{2πi<M,I>/h} e^{iπβ/4} / (|w| sqrt|K| |M|^{(n-1)/2}) h^{(1-n)/2}.
Complex bt_amplitude(const PeriodicTorus& torus, const ActionAngleSystem& sys, Complex fhat_t, double h,
                     std::optional<int> beta, double psi_e = 1.0);

/// (τ, x) ↦ (τ + T w'(I) x, x).
Monodromy torus_model_monodromy(const ActionAngleSystem& sys, const Vec& action, double t);

/// ∇H̃ in the model coordinates: (0, w(I)).
Vec torus_model_gradient(const ActionAngleSystem& sys, const Vec& action);

/// {0} × R^n × {0} in R^{1+2n}.
Mat torus_component_tangent(int n);

struct IntNormReport {
  bool w_prime_invertible = false;
  bool kernel_is_angle_span = false;
  std::optional<bool> isochronous;          // only when w' is invertible
  std::optional<bool> jgrad_outside_image;  // J∇H ∉ (M - I)(T_zΣ_E)
  bool nilpotent = false;                   // (M - I)^2 = 0

  bool first_equivalence() const { return w_prime_invertible == kernel_is_angle_span; }
  bool second_equivalence() const { return !isochronous || *isochronous == *jgrad_outside_image; }
};

IntNormReport check_intnorm(const ActionAngleSystem& sys, const Vec& action, const Monodromy& m,
                            const RankPolicy& policy = {});

}  // namespace tracelab
