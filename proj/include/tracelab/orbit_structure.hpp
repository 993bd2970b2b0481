#pragma once

// Periodic-orbit structure of quadratic systems and the classification
// predicates (non-degenerate, NDR, normal, Σ_E-normal, hypRC, clean).
// Mode indices are 0-based throughout.

#include <functional>
#include <string>
#include <vector>

#include "tracelab/dynamics.hpp"

namespace tracelab {

struct PeriodEntry {
  double t = 0.0;
  std::vector<int> resonant;  // J_T
};

struct PeriodSet {
  double t_min = 0.0;
  double t_max = 0.0;
  std::vector<PeriodEntry> entries;
  std::vector<std::string> warnings;  // near-miss resonances
};

struct PeriodTolerances {
  double merge_rel = 1e-12;
  double resonance = 1e-9;
  double near_miss = 1e-6;
};

/// All T = 2πk/w_j in [t_min, t_max] (T = 0 included when in range).
PeriodSet enumerate_periods(const std::vector<double>& w, double t_min, double t_max,
                            const PeriodTolerances& tol = {});

/// J_T = {j : w_j T ∈ 2πZ}.
std::vector<int> resonant_indices(const std::vector<double>& w, double t, double tol = 1e-9);

/// Columns e_j, e_j' for j ∈ J_T; throws NotPeriodic if J_T is empty.
Mat resonant_subspace(const std::vector<double>& w, double t, double tol = 1e-9);

enum class ComponentLabel { WeylZero, NonDegenerateOrbit, GroupTube, FullShell, Torus };
const char* to_string(ComponentLabel label);

struct PeriodicComponent {
  double t = 0.0;
  Vec z;                      // representative point
  int dim = 0;                // dimension of Y in Σ_E
  int r = 0;                  // R(T)
  double action = 0.0;
  ComponentLabel label = ComponentLabel::WeylZero;
  std::vector<int> resonant;  // J_T
  double primitive_period = 0.0;
};

/// One component Δ_T ∩ Σ_E per period in the window, with a representative
/// point that excites every resonant mode with energy E/R.
std::vector<PeriodicComponent> quadratic_components(const QuadraticHamiltonian& sys, double e,
                                                    double t_min, double t_max);

/// Smallest T* > 0 with w_j T* ∈ 2πZ for all j in `modes`.
double primitive_period(const std::vector<double>& w, const std::vector<int>& modes);

// ----------------------------------------------------------- classification

enum class FrequencyClass { AllNonDegenerate, AllPeriodic, Isochronous, AllNDR, Mixed };
const char* to_string(FrequencyClass c);

struct RatioReport {
  int i = 0;
  int j = 0;
  bool rational = false;
  long p = 0;
  long q = 1;
  double error = 0.0;
  bool borderline = false;
};

struct FrequencyClassification {
  FrequencyClass verdict = FrequencyClass::Mixed;
  bool all_irrational = false;     // every periodic orbit non-degenerate
  bool all_rational = false;       // every orbit periodic
  bool all_equal = false;          // isochronous
  bool rational_implies_equal = false;  // NDR
  std::vector<RatioReport> ratios;
};

/// Continued-fraction test of w_i / w_j with denominators <= rational_bound.
RatioReport rational_ratio(double a, double b, long rational_bound = 1000000);

FrequencyClassification classify_frequencies(const std::vector<double>& w,
                                             long rational_bound = 1000000);

// ---------------------------------------------------------- first integrals

struct FirstIntegral {
  std::string name;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
};

enum class IntegralProvenance { ComponentEnergies, MomentMap, UserSupplied };

struct FirstIntegralFamily {
  IntegralProvenance provenance = IntegralProvenance::UserSupplied;
  std::vector<FirstIntegral> integrals;

  /// Gradients at z as columns.
  Mat gradients_at(const Vec& z) const;
};

/// F_j for j in `modes` (all modes when empty).
FirstIntegralFamily component_energies(const QuadraticHamiltonian& sys, std::vector<int> modes = {});

/// F_A(z) = <J A z, z> with gradient 2 J A z; requires J A symmetric.
FirstIntegral moment_map(const Mat& a);

/// Re or Im of a_i^p conj(a_j)^q with a_k = w_k x_k + i xi_k, conserved
/// when p w_i = q w_j.
FirstIntegral resonant_monomial(const QuadraticHamiltonian& sys, int i, int j, int p, int q,
                                bool imaginary);

/// Basis of the Lie algebra u(m) acting on the listed modes, as Hamiltonian
/// matrices in the original coordinates. The modes must share one frequency.
std::vector<Mat> unitary_block_generators(const std::vector<double>& w, const std::vector<int>& modes);

/// Product of U(m) over blocks of equal frequency.
std::vector<Mat> equal_frequency_generators(const std::vector<double>& w, double tol = 1e-12);

/// Component energies plus Re/Im resonant monomials for each rationally
/// related pair of modes inside `modes`.
FirstIntegralFamily resonant_integrals(const QuadraticHamiltonian& sys, const std::vector<int>& modes,
                                       int max_order = 12);

// --------------------------------------------------------------- predicates

/// dim E_1 = 2.
bool is_nondegenerate(const EigenspaceSplit& split);

/// dim E_1 = dim(R J∇H(z) + span{A z}) + 1.
bool is_ndr(const EigenspaceSplit& split, const Vec& z, const Vec& grad_h,
            const std::vector<Mat>& generators, const RankPolicy& policy = {});

struct NormalityOptions {
  bool prune_dependent = false;  // keep a maximal independent subset of gradients
  RankPolicy policy{};
};

/// ker(M - I) ∩ T_zΣ_E = span(J∇F_i(z)).
bool is_normal(const Monodromy& m, const Vec& z, const Vec& grad_h, const FirstIntegralFamily& fam,
               const NormalityOptions& opts = {});

/// is_normal and J∇H(z) ∉ (M - I)(T_zΣ_E).
bool is_sigma_normal(const Monodromy& m, const Vec& z, const Vec& grad_h,
                     const FirstIntegralFamily& fam, const NormalityOptions& opts = {});

/// J∇H(z) ∉ (M - I)(T_zΣ_E).
bool hamiltonian_field_outside_image(const Mat& m, const Vec& grad_h, const RankPolicy& policy = {});

/// E_1 = ker(M - I)^2.
bool check_hyp_rc(const EigenspaceSplit& split, const Mat& m, const RankPolicy& policy = {});

/// ker(M - I)^2 ∩ T_zΣ_E = ker(M - I) ∩ T_zΣ_E.
bool check_hyp_dg(const Mat& m, const Vec& grad_h, const RankPolicy& policy = {});

/// Kernel of (τ, α) ↦ τ J∇H + (M - I) α on R × T_zΣ_E, as columns in R^{1+2n}.
Mat fixed_point_kernel(const Mat& m, const Vec& grad_h, const RankPolicy& policy = {});

/// The kernel above is contained in span(tangent_basis) (columns in R^{1+2n}).
bool clean_flow_check(const Mat& m, const Vec& grad_h, const Mat& tangent_basis,
                      const RankPolicy& policy = {});

/// {0} × (Δ_T ∩ T_zΣ_E) for a quadratic component.
Mat quadratic_component_tangent(const std::vector<double>& w, double t, const Vec& grad_h,
                                const RankPolicy& policy = {});

}  // namespace tracelab
