#include "tracelab/orbit_structure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace tracelab {

namespace {

constexpr double kTwoPi = 2 * M_PI;

double frac_distance(double x) { return std::abs(x - std::round(x)); }

Mat with_zero_time_row(const Mat& alpha) {
  Mat out = Mat::Zero(alpha.rows() + 1, alpha.cols());
  out.bottomRows(alpha.rows()) = alpha;
  return out;
}

Vec unit(const Vec& v) {
  const double norm = v.norm();
  require(norm > 0, ErrorCode::PreconditionViolation, "gradient of H vanishes: critical point");
  return v / norm;
}

}  // namespace

// ------------------------------------------------------------------ periods

std::vector<int> resonant_indices(const std::vector<double>& w, double t, double tol) {
  std::vector<int> out;
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (frac_distance(w[j] * t / kTwoPi) <= tol) out.push_back(static_cast<int>(j));
  }
  return out;
}

PeriodSet enumerate_periods(const std::vector<double>& w, double t_min, double t_max,
                            const PeriodTolerances& tol) {
  require(!w.empty(), ErrorCode::InvalidArgument, "enumerate_periods: no frequencies");
  require(std::isfinite(t_min) && std::isfinite(t_max) && t_min <= t_max,
          ErrorCode::InvalidArgument, "enumerate_periods: window must be bounded and ordered");
  for (double wj : w) require(wj > 0, ErrorCode::InvalidArgument, "frequencies must be positive");

  struct Candidate {
    double t;
    int source;
  };
  std::vector<Candidate> cands;
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double period = kTwoPi / w[j];
    const long k_lo = static_cast<long>(std::ceil(t_min / period));
    const long k_hi = static_cast<long>(std::floor(t_max / period));
    for (long k = k_lo; k <= k_hi; ++k) {
      const double t = static_cast<double>(k) * period;
      if (t >= t_min && t <= t_max) cands.push_back({t, static_cast<int>(j)});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    return a.t != b.t ? a.t < b.t : a.source < b.source;
  });

  PeriodSet out;
  out.t_min = t_min;
  out.t_max = t_max;
  std::size_t i = 0;
  while (i < cands.size()) {
    std::size_t end = i + 1;
    while (end < cands.size() &&
           std::abs(cands[end].t - cands[i].t) <=
               tol.merge_rel * std::max(std::abs(cands[end].t), std::abs(cands[i].t))) {
      ++end;
    }
    // Representative: the value generated by the lowest mode index.
    const auto rep = std::min_element(cands.begin() + static_cast<long>(i),
                                      cands.begin() + static_cast<long>(end),
                                      [](const Candidate& a, const Candidate& b) {
                                        return a.source < b.source;
                                      });
    PeriodEntry entry;
    entry.t = rep->t;
    entry.resonant = resonant_indices(w, entry.t, tol.resonance);
    for (std::size_t m = 0; m < w.size(); ++m) {
      const double d = frac_distance(w[m] * entry.t / kTwoPi);
      if (d > tol.resonance && d < tol.near_miss) {
        std::ostringstream os;
        os << "near-miss resonance at T=" << entry.t << " for mode " << m << ": distance " << d
           << " to 2πZ";
        out.warnings.push_back(os.str());
      }
    }
    if (!entry.resonant.empty()) out.entries.push_back(std::move(entry));
    i = end;
  }
  return out;
}

Mat resonant_subspace(const std::vector<double>& w, double t, double tol) {
  const auto j = resonant_indices(w, t, tol);
  if (j.empty()) {
    std::ostringstream os;
    os << "T=" << t << " is not a period of the oscillator";
    fail(ErrorCode::NotPeriodic, os.str());
  }
  const int n = static_cast<int>(w.size());
  Mat basis = Mat::Zero(2 * n, 2 * static_cast<Eigen::Index>(j.size()));
  for (std::size_t c = 0; c < j.size(); ++c) {
    basis(j[c], 2 * static_cast<Eigen::Index>(c)) = 1.0;
    basis(n + j[c], 2 * static_cast<Eigen::Index>(c) + 1) = 1.0;
  }
  return basis;
}

const char* to_string(ComponentLabel label) {
  switch (label) {
    case ComponentLabel::WeylZero: return "WeylZero";
    case ComponentLabel::NonDegenerateOrbit: return "NonDegenerateOrbit";
    case ComponentLabel::GroupTube: return "GroupTube";
    case ComponentLabel::FullShell: return "FullShell";
    case ComponentLabel::Torus: return "Torus";
  }
  return "?";
}

double primitive_period(const std::vector<double>& w, const std::vector<int>& modes) {
  require(!modes.empty(), ErrorCode::InvalidArgument, "primitive_period: no modes");
  const double base = kTwoPi / w[static_cast<std::size_t>(modes.front())];
  for (long k = 1; k <= 1000000; ++k) {
    const double t = static_cast<double>(k) * base;
    bool all = true;
    for (int m : modes) all = all && frac_distance(w[static_cast<std::size_t>(m)] * t / kTwoPi) <= 1e-9;
    if (all) return t;
  }
  fail(ErrorCode::ConvergenceFailure, "primitive_period: modes are not commensurate");
}

std::vector<PeriodicComponent> quadratic_components(const QuadraticHamiltonian& sys, double e,
                                                    double t_min, double t_max) {
  require(e > 0, ErrorCode::InvalidArgument, "energy must be positive");
  const auto& w = sys.frequencies();
  const int n = sys.dof();
  const PeriodSet ps = enumerate_periods(w, t_min, t_max);
  std::vector<PeriodicComponent> out;
  for (const auto& entry : ps.entries) {
    PeriodicComponent c;
    c.t = entry.t;
    c.resonant = entry.resonant;
    c.r = static_cast<int>(entry.resonant.size());
    c.dim = 2 * c.r - 1;
    c.action = entry.t * e;
    std::vector<double> energies(static_cast<std::size_t>(n), 0.0), phases(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) phases[static_cast<std::size_t>(j)] = 0.3 + 0.7 * j;
    for (int j : entry.resonant) energies[static_cast<std::size_t>(j)] = e / c.r;
    c.z = sys.point_from_modes(energies, phases);
    if (entry.t == 0.0) {
      c.label = ComponentLabel::WeylZero;
    } else if (c.r == n) {
      c.label = ComponentLabel::FullShell;
    } else if (c.r == 1) {
      c.label = ComponentLabel::NonDegenerateOrbit;
    } else {
      c.label = ComponentLabel::GroupTube;
    }
    c.primitive_period = entry.t == 0.0 ? 0.0 : primitive_period(w, entry.resonant);
    out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------- classification

const char* to_string(FrequencyClass c) {
  switch (c) {
    case FrequencyClass::AllNonDegenerate: return "AllNonDegenerate";
    case FrequencyClass::AllPeriodic: return "AllPeriodic";
    case FrequencyClass::Isochronous: return "Isochronous";
    case FrequencyClass::AllNDR: return "AllNDR";
    case FrequencyClass::Mixed: return "Mixed";
  }
  return "?";
}

RatioReport rational_ratio(double a, double b, long rational_bound) {
  require(a > 0 && b > 0, ErrorCode::InvalidArgument, "rational_ratio: positive inputs required");
  require(rational_bound >= 1, ErrorCode::InvalidArgument, "rational_bound must be >= 1");
  const double r = a / b;
  const double tol = 64 * std::numeric_limits<double>::epsilon() * r;
  RatioReport rep;
  rep.error = std::numeric_limits<double>::infinity();
  double h1 = 1, h2 = 0, k1 = 0, k2 = 1;
  double x = r;
  for (int iter = 0; iter < 64; ++iter) {
    const double ai = std::floor(x);
    const double h = ai * h1 + h2;
    const double k = ai * k1 + k2;
    if (k > static_cast<double>(rational_bound)) break;
    const double err = std::abs(r - h / k);
    if (err < rep.error) {
      rep.error = err;
      rep.p = static_cast<long>(h);
      rep.q = static_cast<long>(k);
    }
    if (err <= tol) {
      rep.rational = true;
      break;
    }
    const double frac = x - ai;
    if (frac <= 0) break;
    x = 1.0 / frac;
    h2 = h1;
    h1 = h;
    k2 = k1;
    k1 = k;
  }
  rep.borderline = !rep.rational && rep.error < 1e-9 * r;
  return rep;
}

FrequencyClassification classify_frequencies(const std::vector<double>& w, long rational_bound) {
  require(!w.empty(), ErrorCode::InvalidArgument, "classify_frequencies: no frequencies");
  for (double wj : w) require(wj > 0, ErrorCode::InvalidArgument, "frequencies must be positive");
  FrequencyClassification out;
  out.all_irrational = out.all_rational = out.all_equal = out.rational_implies_equal = true;
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t j = i + 1; j < w.size(); ++j) {
      RatioReport rep = rational_ratio(w[i], w[j], rational_bound);
      rep.i = static_cast<int>(i);
      rep.j = static_cast<int>(j);
      const bool equal = rep.rational && rep.p == rep.q;
      out.all_irrational = out.all_irrational && !rep.rational;
      out.all_rational = out.all_rational && rep.rational;
      out.all_equal = out.all_equal && equal;
      out.rational_implies_equal = out.rational_implies_equal && (!rep.rational || equal);
      out.ratios.push_back(rep);
    }
  }
  if (out.all_equal) {
    out.verdict = FrequencyClass::Isochronous;
  } else if (out.all_rational) {
    out.verdict = FrequencyClass::AllPeriodic;
  } else if (out.all_irrational) {
    out.verdict = FrequencyClass::AllNonDegenerate;
  } else if (out.rational_implies_equal) {
    out.verdict = FrequencyClass::AllNDR;
  } else {
    out.verdict = FrequencyClass::Mixed;
  }
  return out;
}

// --------------------------------------------------------- first integrals

Mat FirstIntegralFamily::gradients_at(const Vec& z) const {
  Mat g(z.size(), static_cast<Eigen::Index>(integrals.size()));
  for (std::size_t i = 0; i < integrals.size(); ++i) {
    g.col(static_cast<Eigen::Index>(i)) = integrals[i].gradient(z);
  }
  return g;
}

FirstIntegralFamily component_energies(const QuadraticHamiltonian& sys, std::vector<int> modes) {
  if (modes.empty()) {
    for (int j = 0; j < sys.dof(); ++j) modes.push_back(j);
  }
  FirstIntegralFamily fam;
  fam.provenance = IntegralProvenance::ComponentEnergies;
  for (int j : modes) {
    require(j >= 0 && j < sys.dof(), ErrorCode::InvalidArgument, "mode index out of range");
    fam.integrals.push_back({"F" + std::to_string(j + 1),
                             [sys, j](const Vec& z) { return sys.mode_energy(j, z); },
                             [sys, j](const Vec& z) { return sys.mode_energy_gradient(j, z); }});
  }
  return fam;
}

FirstIntegral moment_map(const Mat& a) {
  require(a.rows() == a.cols() && a.rows() % 2 == 0 && a.rows() > 0, ErrorCode::InvalidArgument,
          "moment_map: generator must be 2n x 2n");
  const Mat ja = symplectic_j(static_cast<int>(a.rows() / 2)) * a;
  const double asym = (ja - ja.transpose()).cwiseAbs().maxCoeff();
  require(asym <= 1e-12 * std::max(1.0, ja.cwiseAbs().maxCoeff()), ErrorCode::InvalidArgument,
          "moment_map: J A is not symmetric, A is not a Hamiltonian matrix");
  return {"F_A", [ja](const Vec& z) { return z.dot(ja * z); },
          [ja](const Vec& z) -> Vec { return 2.0 * (ja * z); }};
}

FirstIntegral resonant_monomial(const QuadraticHamiltonian& sys, int i, int j, int p, int q,
                                bool imaginary) {
  const int n = sys.dof();
  require(i != j && i >= 0 && j >= 0 && i < n && j < n, ErrorCode::InvalidArgument,
          "resonant_monomial: two distinct modes required");
  require(p >= 1 && q >= 1, ErrorCode::InvalidArgument, "resonant_monomial: exponents must be >= 1");
  const auto& w = sys.frequencies();
  const double wi = w[static_cast<std::size_t>(i)], wj = w[static_cast<std::size_t>(j)];
  require(std::abs(p * wi - q * wj) <= 1e-9 * std::max(p * wi, q * wj), ErrorCode::InvalidArgument,
          "resonant_monomial: p w_i != q w_j, not a first integral");
  using C = std::complex<double>;
  auto amps = [=](const Vec& z) {
    return std::pair<C, C>{C(wi * z(i), z(n + i)), C(wj * z(j), z(n + j))};
  };
  auto pick = [imaginary](C c) { return imaginary ? c.imag() : c.real(); };
  std::ostringstream name;
  name << (imaginary ? "Im" : "Re") << "(a" << i + 1 << "^" << p << " conj(a" << j + 1 << ")^" << q
       << ")";
  return {name.str(),
          [=](const Vec& z) {
            const auto [ai, aj] = amps(z);
            return pick(std::pow(ai, p) * std::pow(std::conj(aj), q));
          },
          [=](const Vec& z) -> Vec {
            const auto [ai, aj] = amps(z);
            const C cj = std::conj(aj);
            const C d_ai = static_cast<double>(p) * std::pow(ai, p - 1) * std::pow(cj, q);
            const C d_cj = static_cast<double>(q) * std::pow(ai, p) * std::pow(cj, q - 1);
            Vec g = Vec::Zero(2 * n);
            g(i) = pick(d_ai * wi);
            g(n + i) = pick(d_ai * C(0, 1));
            g(j) = pick(d_cj * wj);
            g(n + j) = pick(d_cj * C(0, -1));
            return g;
          }};
}

std::vector<Mat> unitary_block_generators(const std::vector<double>& w, const std::vector<int>& modes) {
  require(!modes.empty(), ErrorCode::InvalidArgument, "unitary_block_generators: empty block");
  const int n = static_cast<int>(w.size());
  const double w0 = w[static_cast<std::size_t>(modes.front())];
  for (int m : modes) {
    require(m >= 0 && m < n, ErrorCode::InvalidArgument, "mode index out of range");
    require(std::abs(w[static_cast<std::size_t>(m)] - w0) <= 1e-12 * w0, ErrorCode::InvalidArgument,
            "unitary block modes must share one frequency");
  }
  // Symplectic rescaling to coordinates where the block Hamiltonian is w0|z|^2/2.
  Vec p(2 * n), pinv(2 * n);
  for (int j = 0; j < n; ++j) {
    const double s = std::sqrt(w[static_cast<std::size_t>(j)]);
    p(j) = s;
    p(n + j) = 1.0 / s;
    pinv(j) = 1.0 / s;
    pinv(n + j) = s;
  }
  const int m = static_cast<int>(modes.size());
  auto embed = [&](const Mat& r, const Mat& s) {
    Mat a = Mat::Zero(2 * n, 2 * n);
    for (int u = 0; u < m; ++u) {
      for (int v = 0; v < m; ++v) {
        const int x_u = modes[static_cast<std::size_t>(u)], x_v = modes[static_cast<std::size_t>(v)];
        a(x_u, x_v) = r(u, v);
        a(x_u, n + x_v) = -s(u, v);
        a(n + x_u, x_v) = s(u, v);
        a(n + x_u, n + x_v) = r(u, v);
      }
    }
    return Mat(pinv.asDiagonal() * a * p.asDiagonal());
  };
  std::vector<Mat> gens;
  for (int u = 0; u < m; ++u) {
    for (int v = u; v < m; ++v) {
      Mat s = Mat::Zero(m, m);
      s(u, v) = s(v, u) = 1.0;
      gens.push_back(embed(Mat::Zero(m, m), s));
      if (v > u) {
        Mat r = Mat::Zero(m, m);
        r(u, v) = 1.0;
        r(v, u) = -1.0;
        gens.push_back(embed(r, Mat::Zero(m, m)));
      }
    }
  }
  return gens;
}

std::vector<Mat> equal_frequency_generators(const std::vector<double>& w, double tol) {
  std::vector<bool> used(w.size(), false);
  std::vector<Mat> gens;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (used[i]) continue;
    std::vector<int> block{static_cast<int>(i)};
    for (std::size_t j = i + 1; j < w.size(); ++j) {
      if (!used[j] && std::abs(w[j] - w[i]) <= tol * w[i]) {
        block.push_back(static_cast<int>(j));
        used[j] = true;
      }
    }
    auto g = unitary_block_generators(w, block);
    gens.insert(gens.end(), g.begin(), g.end());
  }
  return gens;
}

FirstIntegralFamily resonant_integrals(const QuadraticHamiltonian& sys, const std::vector<int>& modes,
                                       int max_order) {
  FirstIntegralFamily fam = component_energies(sys);
  fam.provenance = IntegralProvenance::UserSupplied;
  const auto& w = sys.frequencies();
  for (std::size_t a = 0; a < modes.size(); ++a) {
    for (std::size_t b = a + 1; b < modes.size(); ++b) {
      const int i = modes[a], j = modes[b];
      const RatioReport rep = rational_ratio(w[static_cast<std::size_t>(i)], w[static_cast<std::size_t>(j)]);
      if (!rep.rational || rep.p + rep.q > max_order) continue;
      // w_i / w_j = P / Q  =>  Q w_i = P w_j.
      const int p = static_cast<int>(rep.q), q = static_cast<int>(rep.p);
      fam.integrals.push_back(resonant_monomial(sys, i, j, p, q, false));
      fam.integrals.push_back(resonant_monomial(sys, i, j, p, q, true));
    }
  }
  return fam;
}

// --------------------------------------------------------------- predicates

bool is_nondegenerate(const EigenspaceSplit& split) { return split.dim_e1() == 2; }

bool is_ndr(const EigenspaceSplit& split, const Vec& z, const Vec& grad_h,
            const std::vector<Mat>& generators, const RankPolicy& policy) {
  const int dim = static_cast<int>(z.size());
  const Mat j = symplectic_j(dim / 2);
  Mat cols(dim, 1 + static_cast<Eigen::Index>(generators.size()));
  cols.col(0) = j * unit(grad_h);
  for (std::size_t k = 0; k < generators.size(); ++k) {
    const Mat& a = generators[k];
    require(a.rows() == dim && a.cols() == dim, ErrorCode::InvalidArgument,
            "is_ndr: generator has the wrong size");
    const Mat ja = j * a;
    if ((ja - ja.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, ja.cwiseAbs().maxCoeff())) {
      fail(ErrorCode::InvalidArgument, "is_ndr: degenerate generator set, a generator is not Hamiltonian");
    }
    cols.col(static_cast<Eigen::Index>(k) + 1) = a * z;
  }
  return split.dim_e1() == numerical_rank(cols, policy) + 1;
}

namespace {

Mat fixed_tangent(const Mat& m, const Vec& g_unit, const RankPolicy& policy) {
  const int dim = static_cast<int>(m.rows());
  Mat stacked(dim + 1, dim);
  stacked << (m - Mat::Identity(dim, dim)), g_unit.transpose();
  return kernel_basis(stacked, policy);
}

}  // namespace

bool is_normal(const Monodromy& mono, const Vec& z, const Vec& grad_h, const FirstIntegralFamily& fam,
               const NormalityOptions& opts) {
  const Mat& m = mono.matrix();
  const int dim = static_cast<int>(m.rows());
  require(z.size() == dim && grad_h.size() == dim, ErrorCode::InvalidArgument,
          "is_normal: dimension mismatch");
  const Mat fixed = fixed_tangent(m, unit(grad_h), opts.policy);

  const Mat grads = fam.gradients_at(z);
  Mat kept(dim, 0);
  int rank = 0;
  for (Eigen::Index c = 0; c < grads.cols(); ++c) {
    Mat trial(dim, kept.cols() + 1);
    trial << kept, grads.col(c);
    const int r = numerical_rank(trial, opts.policy);
    if (r > rank) {
      kept = trial;
      rank = r;
    } else if (!opts.prune_dependent) {
      fail(ErrorCode::DependentGradients,
           "is_normal: gradient of " + fam.integrals[static_cast<std::size_t>(c)].name +
               " depends on the previous ones at z");
    }
  }
  const Mat fields = symplectic_j(dim / 2) * kept;
  if (!subspace_contains(fixed, fields, opts.policy)) {
    fail(ErrorCode::PreconditionViolation,
         "is_normal: J∇F is not in ker(M - I) ∩ T_zΣ_E; the family is not made of first integrals");
  }
  return fixed.cols() == rank;
}

bool hamiltonian_field_outside_image(const Mat& m, const Vec& grad_h, const RankPolicy& policy) {
  const int dim = static_cast<int>(m.rows());
  const Vec g = unit(grad_h);
  const Mat tangent = orthogonal_complement(Mat(g), dim, policy);
  const Mat image = (m - Mat::Identity(dim, dim)) * tangent;
  Mat aug(dim, image.cols() + 1);
  aug << image, symplectic_j(dim / 2) * g;
  return numerical_rank(aug, policy) > numerical_rank(image, policy);
}

bool is_sigma_normal(const Monodromy& m, const Vec& z, const Vec& grad_h,
                     const FirstIntegralFamily& fam, const NormalityOptions& opts) {
  const bool normal = is_normal(m, z, grad_h, fam, opts);
  return normal && hamiltonian_field_outside_image(m.matrix(), grad_h, opts.policy);
}

bool check_hyp_rc(const EigenspaceSplit& split, const Mat& m, const RankPolicy& policy) {
  const int dim = static_cast<int>(m.rows());
  const Mat a = m - Mat::Identity(dim, dim);
  return kernel_basis(Mat(a * a), policy).cols() == split.e1.cols();
}

bool check_hyp_dg(const Mat& m, const Vec& grad_h, const RankPolicy& policy) {
  const int dim = static_cast<int>(m.rows());
  const Vec g = unit(grad_h);
  const Mat a = m - Mat::Identity(dim, dim);
  Mat s1(dim + 1, dim), s2(dim + 1, dim);
  s1 << a, g.transpose();
  s2 << a * a, g.transpose();
  return kernel_basis(s1, policy).cols() == kernel_basis(s2, policy).cols();
}

Mat fixed_point_kernel(const Mat& m, const Vec& grad_h, const RankPolicy& policy) {
  const int dim = static_cast<int>(m.rows());
  const Vec g = unit(grad_h);
  const Mat tangent = orthogonal_complement(Mat(g), dim, policy);
  Mat l(dim, 1 + tangent.cols());
  l << symplectic_j(dim / 2) * grad_h, (m - Mat::Identity(dim, dim)) * tangent;
  const Mat k = kernel_basis(l, policy);
  Mat out(dim + 1, k.cols());
  out.row(0) = k.row(0);
  out.bottomRows(dim) = tangent * k.bottomRows(tangent.cols());
  return out;
}

bool clean_flow_check(const Mat& m, const Vec& grad_h, const Mat& tangent_basis,
                      const RankPolicy& policy) {
  require(tangent_basis.rows() == m.rows() + 1, ErrorCode::InvalidArgument,
          "clean_flow_check: tangent vectors live in R^{1+2n}");
  const Mat k = fixed_point_kernel(m, grad_h, policy);
  return subspace_contains(tangent_basis, k, policy);
}

Mat quadratic_component_tangent(const std::vector<double>& w, double t, const Vec& grad_h,
                                const RankPolicy& policy) {
  const int dim = static_cast<int>(grad_h.size());
  const Mat delta = resonant_subspace(w, t);
  const Mat tangent = orthogonal_complement(Mat(unit(grad_h)), dim, policy);
  return with_zero_time_row(intersect_subspaces(delta, tangent, policy));
}

}  // namespace tracelab
