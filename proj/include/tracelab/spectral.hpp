#pragma once

// Quantum side: test-function pairs, energy cutoff, exact spectra and the
// regularized spectral density G_E(h).

#include <complex>
#include <string>
#include <vector>

#include "tracelab/symplectic.hpp"

namespace tracelab {

using Complex = std::complex<double>;

enum class WindowKind { Triangle, Bump };
const char* to_string(WindowKind k);

/// f̂ supported in [center - halfwidth, center + halfwidth] and
/// f(x) = (1/2π) ∫ f̂(t) e^{itx} dt.
class TestFunctionPair {
 public:
  static TestFunctionPair triangle(double center, double halfwidth);
  static TestFunctionPair bump(double center, double halfwidth);

  WindowKind kind() const { return kind_; }
  double center() const { return center_; }
  double halfwidth() const { return halfwidth_; }
  double t_min() const { return center_ - halfwidth_; }
  double t_max() const { return center_ + halfwidth_; }
  static const char* convention() { return "f(x) = (1/2pi) int fhat(t) e^{itx} dt"; }

  double fhat(double t) const;
  Complex f(double x) const;

  /// Max |f(x) - quadrature of f̂| over `points` sample x; throws
  /// ConvergenceFailure above `tol`.
  double validate(int points = 20, double tol = 1e-8) const;

 private:
  TestFunctionPair(WindowKind k, double c, double d);
  WindowKind kind_;
  double center_;
  double halfwidth_;
};

/// exp(1 - 1/(1 - u^2)) on |u| < 1, zero outside.
double unit_bump(double u);

/// ψ = 1 on [E - plateau, E + plateau], smooth taper to zero at E ± halfwidth.
class EnergyCutoff {
 public:
  EnergyCutoff(double center, double halfwidth, double plateau = 0.0);
  double center() const { return center_; }
  double halfwidth() const { return halfwidth_; }
  double plateau() const { return plateau_; }
  double lo() const { return center_ - halfwidth_; }
  double hi() const { return center_ + halfwidth_; }
  double operator()(double lambda) const;

 private:
  double center_, halfwidth_, plateau_;
};

enum class SpectrumSource { QuadraticOscillator, FlatTorusEBK };
const char* to_string(SpectrumSource s);

struct Level {
  double value = 0.0;
  long multiplicity = 1;
};

struct Spectrum {
  SpectrumSource source = SpectrumSource::QuadraticOscillator;
  double h = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<Level> levels;  // ascending, exact duplicates merged
  long count = 0;             // with multiplicity
  bool certified = false;     // one more lattice layer adds nothing
  double weyl_estimate = 0.0;
  std::vector<std::string> warnings;
};

struct SpectrumOptions {
  long count_cap = 50000000;
};

/// Σ_j h w_j (k_j + 1/2) inside [lo, hi].
Spectrum quadratic_spectrum(const std::vector<double>& w, double h, double lo, double hi,
                            const SpectrumOptions& opts = {});

/// |h(k + μ/4)|^2 / 2 for k ∈ Z^n inside [lo, hi]; μ empty means zero.
Spectrum torus_spectrum(int n, double h, double lo, double hi, const std::vector<double>& mu = {},
                        const SpectrumOptions& opts = {});

struct DensityOptions {
  int threads = 1;
  std::size_t chunk = 4096;  // fixed chunking keeps the sum independent of threads
};

/// Σ_j ψ(λ_j) f((E - λ_j)/h), compensated, in ascending eigenvalue order.
/// Throws IncompleteSpectrum unless the spectrum is certified on supp ψ.
Complex quantum_density(const Spectrum& spectrum, const EnergyCutoff& psi, const TestFunctionPair& fpair,
                        double energy, double h, const DensityOptions& opts = {});

/// Sum of assembled component amplitudes.
Complex semiclassical_density(const std::vector<Complex>& amplitudes);

struct ConvolutionCheck {
  double max_deviation = 0.0;
  std::vector<double> grid;
  std::vector<Complex> direct;     // (1/h) G_E(h)
  std::vector<Complex> convolved;  // (ψ D_E(h)) * f_h on the deposit grid
};

/// Convolution identity on an E-grid inside the plateau of ψ: the comb is deposited
/// linearly on a grid of spacing h / refine and convolved with f_h.
ConvolutionCheck convolution_identity_check(const Spectrum& spectrum, const EnergyCutoff& psi,
                                            const TestFunctionPair& fpair, const std::vector<double>& grid,
                                            double h, int refine = 1000);

}  // namespace tracelab
