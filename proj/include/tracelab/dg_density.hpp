#pragma once

// Duistermaat–Guillemin densities d(T,z)^2 and the leading-order amplitude
// of one connected family of periodic orbits.

#include <array>
#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "tracelab/orbit_structure.hpp"

namespace tracelab {

using Complex = std::complex<double>;

enum class DensityMethod { General, Simple, WeylZero, NonDegenerate, PeriodicFlow, QuadraticClosedForm };
const char* to_string(DensityMethod m);

struct DensityResult {
  Complex d_squared;
  double modulus = 0.0;  // |d|
  std::optional<int> phase_quarter_turns;  // m in d = |d| e^{iπm/4}, taken mod 8
  DensityMethod method = DensityMethod::General;

  /// The two values of m (mod 8) with e^{iπm/2} = d^2/|d^2|; throws if the
  /// phase of d^2 is not a multiple of π/2.
  std::array<int, 2> phase_candidates() const;
};

DensityResult make_density(Complex d_squared, DensityMethod method);

/// Full formula with E_1, V_1, Π_{E_1} and the 𝓔_5 determinant. Requires
/// hypRC and J∇H ∉ (M - I)(T_zΣ_E). Energy sub-spaces are attached on a
/// copy of `split` when missing.
DensityResult dg_density_general(const EigenspaceSplit& split, const Vec& grad_h, const Monodromy& m,
                                 const RankPolicy& policy = {});

/// Reduction valid under ker(M - I)^2 ∩ T_zΣ_E = ker(M - I) ∩ T_zΣ_E.
DensityResult dg_density_simple(const EigenspaceSplit& split, const Vec& grad_h, const Monodromy& m,
                                const RankPolicy& policy = {});

/// dim E_1 = 2: (-1)^{n+1} / (det(M - I)|V_1 |∇H|^2).
DensityResult dg_density_nondegenerate(const EigenspaceSplit& split, const Vec& grad_h,
                                       const Monodromy& m);

/// 1 / |∇H|^2 (T = 0).
DensityResult dg_density_weyl(const Vec& grad_h);

/// 1 / |∇H|^2 for a flow with M(T) = Id.
DensityResult dg_density_periodic_flow(const Vec& grad_h, const Mat& m);

/// (-1)^{n+R} / (|∇H|^2 Π_{j ∉ J_T} 2(1 - cos T w_j)).
DensityResult dg_density_quadratic(const std::vector<double>& w, double t, const Vec& grad_h);

/// |det(M - I)|V_1| on a non-degenerate orbit.
double reduced_poincare_det(const EigenspaceSplit& split, const Monodromy& m,
                            const RankPolicy& policy = {});

struct BranchTrack {
  std::vector<double> times;
  std::vector<double> args;  // unwrapped argument of the half-determinant's radicand
  double final_arg = 0.0;
  double min_modulus = 0.0;
  int winding = 0;           // round(final_arg / 2π)

  /// -2 final_arg / π (amplitude quarter turns; det^{-1/2} convention).
  double quarter_turns() const;
};

struct BranchTrackOptions {
  int initial_intervals = 64;
  double max_step_arg = M_PI / 4;
  double min_modulus = 1e-10;
  int max_depth = 40;
};

/// Continuous argument of det(((A_t + D_t) + i(B_t - C_t))/2) along
/// t ↦ M(t), t ∈ [0, T].
BranchTrack maslov_branch_track(const std::function<Mat(double)>& path, double t_end,
                                const BranchTrackOptions& opts = {});

/// The candidate closest (mod 8) to a continuous quarter-turn estimate.
int nearest_candidate(const std::array<int, 2>& candidates, double quarter_turns);

/// ∫_Y |d| dσ_Y for families with |d| |∇H| constant: |d| |∇H| ∫_Y dσ/|∇H|.
double weighted_measure(double d_modulus, double grad_norm, double liouville);

/// ψ(E) (2πh)^{(1-dim Y)/2} e^{iA/h} f̂(T) (1/2π) e^{iπm/4} · measure.
Complex assemble_component_amplitude(const PeriodicComponent& component, const DensityResult& density,
                                     double measure, Complex fhat_t, double psi_e, double h,
                                     std::optional<int> phase_override = std::nullopt);

}  // namespace tracelab
