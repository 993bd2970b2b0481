#pragma once

// Hamiltonian systems on R^{2n} with z = (x, xi): flows, monodromy through
// the variational equation, the loop action and Liouville measures of
// energy shells.

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "tracelab/symplectic.hpp"

namespace tracelab {

class HamiltonianSystem {
public:
  virtual ~HamiltonianSystem() = default;

  virtual int dof() const = 0;
  virtual double energy(const Vec& z) const = 0;
  virtual Vec gradient(const Vec& z) const = 0;
  virtual Mat hessian(const Vec& z) const = 0;

  /// Exact flow and linearized flow when available.
  virtual bool has_closed_form() const { return false; }
  virtual Vec closed_form_flow(const Vec& z, double t) const;
  virtual Mat closed_form_monodromy(const Vec& z, double t) const;

  /// Half-widths of an axis-aligned box centred at 0 containing {H <= E}.
  virtual Vec bounding_half_widths(double e) const = 0;
};

/// Max relative deviation between gradient() and central differences of energy().
double gradient_consistency(const HamiltonianSystem& sys, const Vec& z, double step = 1e-6);

/// H = (|xi|^2 + <S x, x>)/2 with S = diag(w_j^2).
class QuadraticHamiltonian final : public HamiltonianSystem {
public:
  explicit QuadraticHamiltonian(std::vector<double> w);

  const std::vector<double>& frequencies() const { return w_; }

  int dof() const override { return static_cast<int>(w_.size()); }
  double energy(const Vec& z) const override;
  Vec gradient(const Vec& z) const override;
  Mat hessian(const Vec& z) const override;

  bool has_closed_form() const override { return true; }
  Vec closed_form_flow(const Vec& z, double t) const override;
  Mat closed_form_monodromy(const Vec& z, double t) const override;
  Vec bounding_half_widths(double e) const override;

  /// M(t) (independent of the base point).
  Mat flow_matrix(double t) const;

  /// Mode energies F_j = (xi_j^2 + w_j^2 x_j^2)/2 and their gradients.
  double mode_energy(int j, const Vec& z) const;
  Vec mode_energy_gradient(int j, const Vec& z) const;

  /// Point with mode energies `energies` and mode phases `phases`:
  /// x_j = sqrt(2F_j) cos(phi_j)/w_j, xi_j = -sqrt(2F_j) sin(phi_j).
  Vec point_from_modes(const std::vector<double>& energies, const std::vector<double>& phases) const;

private:
  std::vector<double> w_;
};

/// Quadratic oscillator plus (beta/4) sum x_j^4; integrated numerically.
class QuarticOscillator final : public HamiltonianSystem {
public:
  QuarticOscillator(std::vector<double> w, double beta);

  int dof() const override { return static_cast<int>(w_.size()); }
  double energy(const Vec& z) const override;
  Vec gradient(const Vec& z) const override;
  Mat hessian(const Vec& z) const override;
  Vec bounding_half_widths(double e) const override;

private:
  std::vector<double> w_;
  double beta_;
};

struct FlowOptions {
  double tol_energy = 1e-9;   // relative to max(1, |H(z0)|)
  double max_step = 1e-2;
  int max_halvings = 10;
  bool force_numeric = false; // integrate even if a closed form exists
  bool record_trajectory = false;
};

struct FlowResult {
  Vec final_state;
  Mat monodromy;              // M_{z0}(t)
  double action = 0.0;        // integral of xi . dx/dt along the path
  double energy_drift = 0.0;
  long steps = 0;
  std::vector<double> times;  // filled with record_trajectory
  std::vector<Vec> states;
};

FlowResult flow(const HamiltonianSystem& sys, const Vec& z0, double t, const FlowOptions& opts = {});

Monodromy monodromy(const HamiltonianSystem& sys, const Vec& z0, double t,
                    const FlowOptions& opts = {},
                    double tol_symp = Monodromy::kDefaultSymplecticTol);

/// Throws NotPeriodic unless |Phi_T(z0) - z0| <= tol_per.
void require_periodic(const HamiltonianSystem& sys, const Vec& z0, double period,
                      double tol_per = 1e-8, const FlowOptions& opts = {});

/// Loop action of a periodic point, by quadrature along the trajectory.
double action(const HamiltonianSystem& sys, const Vec& z0, double period,
              const FlowOptions& opts = {}, double tol_per = 1e-8);

/// Closed-form action T * H(z) for quadratic systems (checked periodic).
double quadratic_action(const QuadraticHamiltonian& sys, const Vec& z0, double period,
                        double tol_per = 1e-8);

struct MeasureEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long samples = 0;
  long hits = 0;
};

struct MeasureOptions {
  double shell_halfwidth = 0.02;  // relative to E
  int threads = 1;
  long chunk = 1 << 16;
  long min_hits = 200;
};

/// Monte Carlo estimate of the integral over {H = E} of dσ/|∇H|, as
/// d/dE Vol{H <= E} through a symmetric shell.
MeasureEstimate liouville_measure(const HamiltonianSystem& sys, double e, long n_samples,
                                  std::uint64_t seed, const MeasureOptions& opts = {});

/// (2π)^n E^{n-1} / ((n-1)! Π w_j).
double quadratic_liouville_measure(const std::vector<double>& w, double e);

/// The same formula for the sub-oscillator on the indices in `subset` (0-based).
double resonant_liouville_measure(const std::vector<double>& w, const std::vector<int>& subset,
                                  double e);

}  // namespace tracelab
