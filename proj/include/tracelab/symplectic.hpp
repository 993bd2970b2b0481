#pragma once

// Linear algebra on the phase space R^{2n}: the standard symplectic
// structure, numerical ranks with explicit stability checks, generalized
// eigenspaces of monodromy matrices and the restricted determinants that
// enter the trace-formula densities.
//
// Every basis handed out by this module has orthonormal columns. An empty
// subspace is a 2n x 0 matrix.

#include <complex>
#include <optional>

#include <Eigen/Dense>

#include "tracelab/error.hpp"

namespace tracelab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

/// Number of degrees of freedom; phase space has dimension 2n.
class PhaseDim {
public:
  explicit PhaseDim(int n) : n_(n) {
    require(n >= 1, ErrorCode::InvalidArgument, "PhaseDim: n must be >= 1");
  }
  int dof() const { return n_; }
  int size() const { return 2 * n_; }

private:
  int n_;
};

/// The block matrix [[0, I], [-I, 0]].
Mat symplectic_j(int n);

/// w0(a, b) = <J a, b>.
double symplectic_form(const Vec& a, const Vec& b);

/// Rank decisions use singular values against rank_tol * max(1, sigma_max).
/// A retained/dropped pair of singular values closer than gap_factor is an
/// unstable decision and raises ErrorCode::UnstableRank.
struct RankPolicy {
  double rank_tol = 1e-8;
  double gap_factor = 10.0;
};

int numerical_rank(const Mat& a, const RankPolicy& policy = {});
int numerical_rank(const CMat& a, const RankPolicy& policy = {});

/// Orthonormal basis of ker(a).
Mat kernel_basis(const Mat& a, const RankPolicy& policy = {});
CMat kernel_basis(const CMat& a, const RankPolicy& policy = {});

/// Orthonormal basis of the column span of `cols`.
Mat range_basis(const Mat& cols, const RankPolicy& policy = {});

/// Orthonormal basis of the orthogonal complement of span(basis) in R^dim.
Mat orthogonal_complement(const Mat& basis, int dim, const RankPolicy& policy = {});

/// Orthonormal basis of span(u) ∩ span(w).
Mat intersect_subspaces(const Mat& u, const Mat& w, const RankPolicy& policy = {});

/// True when span(sub) ⊆ span(super) to the rank policy.
bool subspace_contains(const Mat& super, const Mat& sub, const RankPolicy& policy = {});

/// A linearized flow M_z(t) together with its symplecticity certificate.
class Monodromy {
public:
  static constexpr double kDefaultSymplecticTol = 1e-8;

  /// Throws NotSymplectic when max|M^T J M - J| exceeds tol_symp.
  Monodromy(Mat m, Vec base_point, double time, double tol_symp = kDefaultSymplecticTol);

  const Mat& matrix() const { return m_; }
  const Vec& base_point() const { return base_point_; }
  double time() const { return time_; }
  double symplectic_defect() const { return defect_; }
  int dof() const { return static_cast<int>(m_.rows() / 2); }

  Mat block_a() const { return m_.topLeftCorner(dof(), dof()); }
  Mat block_b() const { return m_.topRightCorner(dof(), dof()); }
  Mat block_c() const { return m_.bottomLeftCorner(dof(), dof()); }
  Mat block_d() const { return m_.bottomRightCorner(dof(), dof()); }

private:
  Mat m_;
  Vec base_point_;
  double time_;
  double defect_;
};

double symplectic_defect(const Mat& m);

/// E_1 ⊕ V_1 and, once an energy gradient is attached, the sub-spaces
///   fixed     = ker(M - I) ∩ T_zΣ_E
///   isotropic = {x in fixed : w0(x, y) = 0 for all y in fixed}
///   e5        = fixed^⊥ ∩ (E_1 ∩ T_zΣ_E)
struct EigenspaceSplit {
  Mat e1;
  Mat v1;
  double rank_tol = 1e-8;
  std::optional<Mat> fixed;
  std::optional<Mat> isotropic;
  std::optional<Mat> e5;

  int dim_e1() const { return static_cast<int>(e1.cols()); }
  int dim_v1() const { return static_cast<int>(v1.cols()); }
  /// k = dim fixed; requires attach_energy_subspaces.
  int k() const;
  /// r = dim isotropic; requires attach_energy_subspaces.
  int r() const;
};

/// Orthonormal basis of sum_k ker(M - lambda)^k, grown power by power until
/// the kernel dimension stabilizes.
CMat generalized_eigenspace(const Mat& m, std::complex<double> lambda, const RankPolicy& policy = {});
CMat generalized_eigenspace(const Monodromy& m, std::complex<double> lambda,
                            const RankPolicy& policy = {});

/// Real version for lambda = 1.
Mat unit_eigenspace(const Mat& m, const RankPolicy& policy = {});

/// Direct ker((M - I)^{2n}); used as an oracle for unit_eigenspace.
Mat unit_eigenspace_direct(const Mat& m, const RankPolicy& policy = {});

/// E_1 from the kernel-power method, V_1 = (J E_1)^⊥, both checked M-invariant.
EigenspaceSplit invariant_split(const Monodromy& m, const RankPolicy& policy = {});

/// Fills fixed / isotropic / e5 using T_zΣ_E = grad_h^⊥.
void attach_energy_subspaces(EigenspaceSplit& split, const Monodromy& m, const Vec& grad_h,
                             const RankPolicy& policy = {});

/// det of `map` restricted to the invariant subspace spanned by `basis`.
/// An empty basis gives 1.
double restricted_det(const Mat& map, const Mat& basis);

/// det(w0|_E) computed in an orthonormal basis of E (re-orthonormalized here).
double restricted_form_det(const Mat& basis);

/// Orthogonal projector onto span(basis) in R^dim.
Mat orthogonal_projection(const Mat& basis, int dim);

/// Dimension bound dim E_1 >= dim V + dim W for W ⊆ V ⊆ E_1 with
/// w0(W, V) = 0. Precondition failures raise PreconditionViolation.
bool meyer_bound_check(const Mat& m, const Mat& v, const Mat& w, const RankPolicy& policy = {});

}  // namespace tracelab
