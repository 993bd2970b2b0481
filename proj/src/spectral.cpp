#include "tracelab/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

#include "tracelab/error.hpp"
#include "tracelab/parallel.hpp"

namespace tracelab {

namespace {

constexpr int kGaussPoints = 10;

struct GaussRule {
  std::array<double, kGaussPoints> x;  // on [0, 1]
  std::array<double, kGaussPoints> w;
};

const GaussRule& gauss_rule() {
  static const GaussRule rule = [] {
    GaussRule r{};
    const int n = kGaussPoints;
    for (int i = 0; i < n; ++i) {
      double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (z * p1 - p0) / (z * z - 1);
        const double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      r.x[static_cast<std::size_t>(i)] = 0.5 * (1 - z);
      r.w[static_cast<std::size_t>(i)] = 1.0 / ((1 - z * z) * dp * dp);
    }
    return r;
  }();
  return rule;
}

// ∫_a^b g over `panels` equal panels.
template <typename T, typename G>
T integrate(G&& g, double a, double b, long panels) {
  const GaussRule& r = gauss_rule();
  const double width = (b - a) / static_cast<double>(panels);
  CompensatedSum<T> sum;
  for (long p = 0; p < panels; ++p) {
    const double left = a + width * static_cast<double>(p);
    for (int k = 0; k < kGaussPoints; ++k) {
      sum.add(r.w[static_cast<std::size_t>(k)] * width * g(left + width * r.x[static_cast<std::size_t>(k)]));
    }
  }
  return sum.value();
}

void finish_levels(Spectrum& s, std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  for (double v : values) {
    if (!s.levels.empty() && v - s.levels.back().value <= 1e-13 * std::max(1.0, std::abs(v))) {
      ++s.levels.back().multiplicity;
    } else {
      s.levels.push_back({v, 1});
    }
  }
  s.count = static_cast<long>(values.size());
}

void weyl_sanity(Spectrum& s) {
  if (s.weyl_estimate >= 50 &&
      (static_cast<double>(s.count) < 0.5 * s.weyl_estimate || static_cast<double>(s.count) > 2 * s.weyl_estimate)) {
    s.warnings.push_back("eigenvalue count " + std::to_string(s.count) + " far from Weyl estimate " +
                         std::to_string(s.weyl_estimate));
  }
}

void check_window(double h, double lo, double hi) {
  require(std::isfinite(h) && h > 0.0, ErrorCode::InvalidArgument, "spectrum: h must be positive");
  require(std::isfinite(lo) && std::isfinite(hi) && lo <= hi, ErrorCode::InvalidArgument,
          "spectrum: window must be bounded and non-empty");
}

}  // namespace

const char* to_string(WindowKind k) { return k == WindowKind::Triangle ? "triangle" : "bump"; }

const char* to_string(SpectrumSource s) {
  return s == SpectrumSource::QuadraticOscillator ? "quadratic-oscillator" : "flat-torus-ebk";
}

double unit_bump(double u) {
  if (std::abs(u) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - u * u));
}

TestFunctionPair::TestFunctionPair(WindowKind k, double c, double d) : kind_(k), center_(c), halfwidth_(d) {
  require(std::isfinite(c), ErrorCode::InvalidArgument, "window centre must be finite");
  require(std::isfinite(d) && d > 0.0, ErrorCode::InvalidArgument, "window halfwidth must be positive");
}

TestFunctionPair TestFunctionPair::triangle(double center, double halfwidth) {
  return TestFunctionPair(WindowKind::Triangle, center, halfwidth);
}

TestFunctionPair TestFunctionPair::bump(double center, double halfwidth) {
  return TestFunctionPair(WindowKind::Bump, center, halfwidth);
}

double TestFunctionPair::fhat(double t) const {
  const double u = (t - center_) / halfwidth_;
  if (kind_ == WindowKind::Triangle) return std::max(0.0, 1.0 - std::abs(u));
  return unit_bump(u);
}

Complex TestFunctionPair::f(double x) const {
  const Complex carrier = std::polar(1.0, center_ * x);
  const double d = halfwidth_;
  if (kind_ == WindowKind::Triangle) {
    const double u = 0.5 * d * x;
    const double s = std::abs(u) < 1e-8 ? 1.0 - u * u / 6.0 : std::sin(u) / u;
    return carrier * (d / (2 * M_PI) * s * s);
  }
  const long panels = std::max(16L, static_cast<long>(std::ceil(d * std::abs(x) / M_PI)));
  const double integral =
      integrate<double>([&](double u) { return unit_bump(u) * std::cos(d * u * x); }, 0.0, 1.0, panels);
  return carrier * (d / M_PI * integral);
}

double TestFunctionPair::validate(int points, double tol) const {
  require(points >= 1, ErrorCode::InvalidArgument, "validate: need at least one point");
  double worst = 0.0;
  for (int k = 0; k < points; ++k) {
    const double x = (k - 0.5 * (points - 1)) * (2.0 / halfwidth_);
    const long panels = std::max(400L, static_cast<long>(std::ceil(4 * halfwidth_ * std::abs(x) / M_PI)));
    auto g = [&](double t) { return fhat(t) * std::polar(1.0, t * x); };
    // split at the centre so the triangle kink sits on a panel boundary
    const Complex ref = (integrate<Complex>(g, t_min(), center_, panels) + integrate<Complex>(g, center_, t_max(), panels)) /
                        (2 * M_PI);
    worst = std::max(worst, std::abs(ref - f(x)));
  }
  require(worst <= tol, ErrorCode::ConvergenceFailure, "test-function pair failed quadrature validation");
  return worst;
}

EnergyCutoff::EnergyCutoff(double center, double halfwidth, double plateau)
    : center_(center), halfwidth_(halfwidth), plateau_(plateau) {
  require(std::isfinite(center), ErrorCode::InvalidArgument, "cutoff centre must be finite");
  require(std::isfinite(halfwidth) && halfwidth > 0.0, ErrorCode::InvalidArgument,
          "cutoff halfwidth must be positive");
  require(plateau >= 0.0 && plateau < halfwidth, ErrorCode::InvalidArgument,
          "cutoff plateau must lie in [0, halfwidth)");
}

double EnergyCutoff::operator()(double lambda) const {
  const double d = std::abs(lambda - center_);
  if (d <= plateau_) return 1.0;
  if (d >= halfwidth_) return 0.0;
  return unit_bump((d - plateau_) / (halfwidth_ - plateau_));
}

Spectrum quadratic_spectrum(const std::vector<double>& w, double h, double lo, double hi,
                            const SpectrumOptions& opts) {
  check_window(h, lo, hi);
  require(!w.empty(), ErrorCode::InvalidArgument, "quadratic_spectrum: empty frequency vector");
  for (double x : w) require(std::isfinite(x) && x > 0.0, ErrorCode::InvalidArgument, "frequencies must be positive");
  const int n = static_cast<int>(w.size());
  Spectrum s;
  s.source = SpectrumSource::QuadraticOscillator;
  s.h = h;
  s.lo = lo;
  s.hi = hi;

  // a = Σ w_j (k_j + 1/2); λ = h a. Suffix minima bound each recursion level.
  std::vector<double> tail(static_cast<std::size_t>(n + 1), 0.0);
  for (int j = n - 1; j >= 0; --j) tail[static_cast<std::size_t>(j)] = tail[static_cast<std::size_t>(j + 1)] + 0.5 * w[static_cast<std::size_t>(j)];
  std::vector<double> values;
  std::vector<long> kmax(static_cast<std::size_t>(n), -1);
  long visited = 0;
  std::function<void(int, double)> rec = [&](int j, double a) {
    if (j == n) {
      const double lambda = h * a;
      if (lambda >= lo && lambda <= hi) {
        values.push_back(lambda);
        require(static_cast<long>(values.size()) <= opts.count_cap, ErrorCode::CountCapExceeded,
                "quadratic_spectrum: eigenvalue count cap exceeded");
      }
      return;
    }
    const double wj = w[static_cast<std::size_t>(j)];
    for (long k = 0;; ++k) {
      const double aj = a + wj * (static_cast<double>(k) + 0.5);
      if (h * (aj + tail[static_cast<std::size_t>(j + 1)]) > hi) break;
      require(++visited <= 4 * opts.count_cap, ErrorCode::CountCapExceeded,
              "quadratic_spectrum: lattice too large");
      kmax[static_cast<std::size_t>(j)] = std::max(kmax[static_cast<std::size_t>(j)], k);
      rec(j + 1, aj);
    }
  };
  if (h * tail[0] <= hi) rec(0, 0.0);
  finish_levels(s, values);

  s.certified = true;
  for (int j = 0; j < n; ++j) {
    const double next = h * (tail[0] + w[static_cast<std::size_t>(j)] * static_cast<double>(kmax[static_cast<std::size_t>(j)] + 1));
    if (next <= hi) s.certified = false;
  }
  double prod = 1.0, fact = 1.0;
  for (int j = 0; j < n; ++j) {
    prod *= h * w[static_cast<std::size_t>(j)];
    fact *= j + 1;
  }
  auto weyl = [&](double e) { return e <= 0 ? 0.0 : std::pow(e, n) / (fact * prod); };
  s.weyl_estimate = weyl(hi) - weyl(std::max(lo, 0.0));
  weyl_sanity(s);
  return s;
}

Spectrum torus_spectrum(int n, double h, double lo, double hi, const std::vector<double>& mu,
                        const SpectrumOptions& opts) {
  check_window(h, lo, hi);
  require(n >= 1, ErrorCode::InvalidArgument, "torus_spectrum: n must be >= 1");
  require(mu.empty() || static_cast<int>(mu.size()) == n, ErrorCode::InvalidArgument,
          "torus_spectrum: mu must have n entries");
  std::vector<double> shift(static_cast<std::size_t>(n), 0.0);
  for (std::size_t j = 0; j < mu.size(); ++j) shift[j] = mu[j] / 4.0;
  Spectrum s;
  s.source = SpectrumSource::FlatTorusEBK;
  s.h = h;
  s.lo = lo;
  s.hi = hi;
  if (hi < 0.0) {
    s.certified = true;
    return s;
  }
  const double budget = 2.0 * hi / (h * h);  // |k + μ/4|^2 ≤ budget
  std::vector<double> values;
  long visited = 0;
  std::function<void(int, double)> rec = [&](int j, double a) {
    if (j == n) {
      const double lambda = 0.5 * h * h * a;
      if (lambda >= lo && lambda <= hi) {
        values.push_back(lambda);
        require(static_cast<long>(values.size()) <= opts.count_cap, ErrorCode::CountCapExceeded,
                "torus_spectrum: eigenvalue count cap exceeded");
      }
      return;
    }
    const double rem = budget - a;
    if (rem < 0) return;
    const double c = shift[static_cast<std::size_t>(j)];
    const double r = std::sqrt(rem);
    const long k0 = static_cast<long>(std::floor(-c - r)) - 1, k1 = static_cast<long>(std::ceil(-c + r)) + 1;
    for (long k = k0; k <= k1; ++k) {
      const double y = static_cast<double>(k) + c;
      if (y * y > rem) continue;
      require(++visited <= 4 * opts.count_cap, ErrorCode::CountCapExceeded, "torus_spectrum: lattice too large");
      rec(j + 1, a + y * y);
    }
  };
  rec(0, 0.0);
  finish_levels(s, values);
  // The scan covers k0 - 1 .. k1 + 1 on every axis, one layer beyond the ball.
  s.certified = true;
  const double vn = std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n + 1);
  auto weyl = [&](double e) { return e <= 0 ? 0.0 : vn * std::pow(2 * e, 0.5 * n) / std::pow(h, n); };
  s.weyl_estimate = weyl(hi) - weyl(std::max(lo, 0.0));
  weyl_sanity(s);
  return s;
}

Complex quantum_density(const Spectrum& spectrum, const EnergyCutoff& psi, const TestFunctionPair& fpair,
                        double energy, double h, const DensityOptions& opts) {
  require(h > 0.0, ErrorCode::InvalidArgument, "quantum_density: h must be positive");
  require(std::abs(spectrum.h - h) <= 1e-12 * h, ErrorCode::InvalidArgument,
          "quantum_density: spectrum computed for a different h");
  require(spectrum.certified && spectrum.lo <= psi.lo() && spectrum.hi >= psi.hi(), ErrorCode::IncompleteSpectrum,
          "quantum_density: spectrum does not cover supp psi");
  const std::size_t chunk = std::max<std::size_t>(1, opts.chunk);
  const std::size_t chunks = (spectrum.levels.size() + chunk - 1) / chunk;
  std::vector<Complex> partial(chunks);
  parallel_for(chunks, opts.threads, [&](std::size_t c) {
    CompensatedSum<Complex> sum;
    const std::size_t end = std::min(spectrum.levels.size(), (c + 1) * chunk);
    for (std::size_t i = c * chunk; i < end; ++i) {
      const Level& l = spectrum.levels[i];
      const double weight = psi(l.value);
      if (weight == 0.0) continue;
      sum.add(static_cast<double>(l.multiplicity) * weight * fpair.f((energy - l.value) / h));
    }
    partial[c] = sum.value();
  });
  CompensatedSum<Complex> total;
  for (const Complex& p : partial) total.add(p);
  return total.value();
}

Complex semiclassical_density(const std::vector<Complex>& amplitudes) {
  CompensatedSum<Complex> sum;
  for (const Complex& a : amplitudes) sum.add(a);
  return sum.value();
}

ConvolutionCheck convolution_identity_check(const Spectrum& spectrum, const EnergyCutoff& psi,
                                            const TestFunctionPair& fpair, const std::vector<double>& grid,
                                            double h, int refine) {
  require(refine >= 1, ErrorCode::InvalidArgument, "convolution_identity_check: refine must be >= 1");
  require(!grid.empty(), ErrorCode::InvalidArgument, "convolution_identity_check: empty E-grid");
  for (double e : grid) {
    require(std::abs(e - psi.center()) <= psi.plateau(), ErrorCode::PreconditionViolation,
            "convolution_identity_check: psi is not identically 1 on the E-grid");
  }
  const double step = h / refine;
  const double origin = psi.lo();
  const long nodes = static_cast<long>(std::ceil((psi.hi() - origin) / step)) + 2;
  std::vector<double> comb(static_cast<std::size_t>(nodes), 0.0);
  for (const Level& l : spectrum.levels) {
    const double weight = psi(l.value) * static_cast<double>(l.multiplicity);
    if (weight == 0.0) continue;
    const double p = (l.value - origin) / step;
    const long i = static_cast<long>(std::floor(p));
    const double a = p - static_cast<double>(i);
    comb[static_cast<std::size_t>(i)] += (1 - a) * weight;
    comb[static_cast<std::size_t>(i + 1)] += a * weight;
  }
  ConvolutionCheck out;
  out.grid = grid;
  for (double e : grid) {
    CompensatedSum<Complex> direct, conv;
    for (const Level& l : spectrum.levels) {
      const double weight = psi(l.value) * static_cast<double>(l.multiplicity);
      if (weight != 0.0) direct.add(weight * fpair.f((e - l.value) / h));
    }
    for (long i = 0; i < nodes; ++i) {
      const double c = comb[static_cast<std::size_t>(i)];
      if (c != 0.0) conv.add(c * fpair.f((e - (origin + step * static_cast<double>(i))) / h));
    }
    out.direct.push_back(direct.value() / h);
    out.convolved.push_back(conv.value() / h);
    out.max_deviation = std::max(out.max_deviation, std::abs(out.direct.back() - out.convolved.back()));
  }
  return out;
}

}  // namespace tracelab
