#include "tracelab/symplectic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tracelab {

namespace {

template <typename MatrixT>
struct RankInfo {
  int rank = 0;
  Eigen::VectorXd sigma;
  MatrixT v;
};

// Singular values of `a` plus the rank decision; throws on unstable gaps.
template <typename MatrixT>
RankInfo<MatrixT> decide_rank(const MatrixT& a, const RankPolicy& policy, bool want_v) {
  RankInfo<MatrixT> info;
  if (a.rows() == 0 || a.cols() == 0) {
    if (want_v) info.v = MatrixT::Identity(a.cols(), a.cols());
    return info;
  }
  const unsigned opts = want_v ? static_cast<unsigned>(Eigen::ComputeFullV) : 0u;
  Eigen::JacobiSVD<MatrixT> svd(a, opts);
  info.sigma = svd.singularValues();
  if (want_v) info.v = svd.matrixV();

  const double scale = std::max(1.0, info.sigma(0));
  const double threshold = policy.rank_tol * scale;
  int r = 0;
  while (r < info.sigma.size() && info.sigma(r) > threshold) ++r;
  if (r > 0 && r < info.sigma.size()) {
    const double kept = info.sigma(r - 1);
    const double dropped = info.sigma(r);
    if (kept < policy.gap_factor * dropped) {
      std::ostringstream os;
      os << "unstable rank decision: singular values " << kept << " and " << dropped
         << " straddle threshold " << threshold;
      fail(ErrorCode::UnstableRank, os.str());
    }
  }
  info.rank = r;
  return info;
}

template <typename MatrixT>
MatrixT kernel_impl(const MatrixT& a, const RankPolicy& policy) {
  if (a.rows() == 0) return MatrixT::Identity(a.cols(), a.cols());
  auto info = decide_rank(a, policy, true);
  // Rows < cols leaves trailing columns of V in the kernel automatically.
  const int kdim = static_cast<int>(a.cols()) - info.rank;
  return info.v.rightCols(kdim);
}

template <typename MatrixT>
MatrixT generalized_kernel(const MatrixT& a, const RankPolicy& policy, int max_power) {
  const int dim = static_cast<int>(a.rows());
  MatrixT power = a;
  MatrixT basis = kernel_impl(power, policy);
  int prev_dim = -1;
  for (int k = 1; k < max_power; ++k) {
    const int cur_dim = static_cast<int>(basis.cols());
    if (cur_dim == prev_dim || cur_dim == 0 || cur_dim == dim) break;
    prev_dim = cur_dim;
    power = power * a;
    basis = kernel_impl(power, policy);
  }
  return basis;
}

double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

Mat symplectic_j(int n) {
  require(n >= 1, ErrorCode::InvalidArgument, "symplectic_j: n must be >= 1");
  Mat j = Mat::Zero(2 * n, 2 * n);
  j.topRightCorner(n, n) = Mat::Identity(n, n);
  j.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
  return j;
}

double symplectic_form(const Vec& a, const Vec& b) {
  require(a.size() == b.size() && a.size() % 2 == 0, ErrorCode::InvalidArgument,
          "symplectic_form: dimension mismatch");
  const int n = static_cast<int>(a.size() / 2);
  // <J a, b> with J a = (a_xi, -a_x).
  return a.tail(n).dot(b.head(n)) - a.head(n).dot(b.tail(n));
}

int numerical_rank(const Mat& a, const RankPolicy& policy) {
  return decide_rank(a, policy, false).rank;
}

int numerical_rank(const CMat& a, const RankPolicy& policy) {
  return decide_rank(a, policy, false).rank;
}

Mat kernel_basis(const Mat& a, const RankPolicy& policy) { return kernel_impl(a, policy); }

CMat kernel_basis(const CMat& a, const RankPolicy& policy) { return kernel_impl(a, policy); }

Mat range_basis(const Mat& cols, const RankPolicy& policy) {
  if (cols.cols() == 0) return Mat(cols.rows(), 0);
  Eigen::JacobiSVD<Mat> svd(cols, Eigen::ComputeFullU);
  auto info = decide_rank(cols, policy, false);
  return svd.matrixU().leftCols(info.rank);
}

Mat orthogonal_complement(const Mat& basis, int dim, const RankPolicy& policy) {
  if (basis.cols() == 0) return Mat::Identity(dim, dim);
  return kernel_impl(Mat(basis.transpose()), policy);
}

Mat intersect_subspaces(const Mat& u, const Mat& w, const RankPolicy& policy) {
  const Eigen::Index dim = u.rows();
  if (u.cols() == 0 || w.cols() == 0) return Mat(dim, 0);
  // x in span(u) ∩ span(w)  <=>  x ∈ span(u) and (I - P_w) x = 0.
  const Mat qu = range_basis(u, policy);
  const Mat qw = range_basis(w, policy);
  const Mat resid = qu - qw * (qw.transpose() * qu);
  const Mat c = kernel_impl(resid, policy);
  if (c.cols() == 0) return Mat(dim, 0);
  return range_basis(qu * c, policy);
}

bool subspace_contains(const Mat& super, const Mat& sub, const RankPolicy& policy) {
  if (sub.cols() == 0) return true;
  if (super.cols() == 0) return numerical_rank(sub, policy) == 0;
  Mat stacked(super.rows(), super.cols() + sub.cols());
  stacked << super, sub;
  return numerical_rank(stacked, policy) == numerical_rank(super, policy);
}

double symplectic_defect(const Mat& m) {
  require(m.rows() == m.cols() && m.rows() % 2 == 0 && m.rows() > 0, ErrorCode::InvalidArgument,
          "monodromy must be a square matrix of even size");
  const Mat j = symplectic_j(static_cast<int>(m.rows() / 2));
  return max_abs(m.transpose() * j * m - j);
}

Monodromy::Monodromy(Mat m, Vec base_point, double time, double tol_symp)
    : m_(std::move(m)), base_point_(std::move(base_point)), time_(time) {
  defect_ = tracelab::symplectic_defect(m_);
  require(base_point_.size() == m_.rows(), ErrorCode::InvalidArgument,
          "monodromy base point has the wrong dimension");
  if (!(defect_ <= tol_symp)) {
    std::ostringstream os;
    os << "monodromy is not symplectic: defect " << defect_ << " > " << tol_symp;
    fail(ErrorCode::NotSymplectic, os.str());
  }
}

int EigenspaceSplit::k() const {
  require(fixed.has_value(), ErrorCode::PreconditionViolation,
          "energy sub-spaces not attached to the split");
  return static_cast<int>(fixed->cols());
}

int EigenspaceSplit::r() const {
  require(isotropic.has_value(), ErrorCode::PreconditionViolation,
          "energy sub-spaces not attached to the split");
  return static_cast<int>(isotropic->cols());
}

CMat generalized_eigenspace(const Mat& m, std::complex<double> lambda, const RankPolicy& policy) {
  require(m.rows() == m.cols(), ErrorCode::InvalidArgument, "square matrix required");
  require(policy.rank_tol > 0, ErrorCode::InvalidArgument, "rank_tol must be positive");
  const CMat a = m.cast<std::complex<double>>() -
                 lambda * CMat::Identity(m.rows(), m.cols());
  return generalized_kernel(a, policy, static_cast<int>(m.rows()));
}

CMat generalized_eigenspace(const Monodromy& m, std::complex<double> lambda,
                            const RankPolicy& policy) {
  return generalized_eigenspace(m.matrix(), lambda, policy);
}

Mat unit_eigenspace(const Mat& m, const RankPolicy& policy) {
  require(m.rows() == m.cols(), ErrorCode::InvalidArgument, "square matrix required");
  const Mat a = m - Mat::Identity(m.rows(), m.cols());
  return generalized_kernel(a, policy, static_cast<int>(m.rows()));
}

Mat unit_eigenspace_direct(const Mat& m, const RankPolicy& policy) {
  const Mat a = m - Mat::Identity(m.rows(), m.cols());
  Mat power = Mat::Identity(m.rows(), m.cols());
  for (Eigen::Index k = 0; k < m.rows(); ++k) power = power * a;
  return kernel_impl(power, policy);
}

EigenspaceSplit invariant_split(const Monodromy& mono, const RankPolicy& policy) {
  const Mat& m = mono.matrix();
  const int dim = static_cast<int>(m.rows());
  EigenspaceSplit split;
  split.rank_tol = policy.rank_tol;
  split.e1 = unit_eigenspace(m, policy);
  if (split.e1.cols() % 2 != 0) {
    fail(ErrorCode::UnstableRank,
         "generalized unit eigenspace has odd dimension " + std::to_string(split.e1.cols()));
  }
  const Mat j = symplectic_j(dim / 2);
  split.v1 = orthogonal_complement(Mat(j * split.e1), dim, policy);
  require(split.e1.cols() + split.v1.cols() == dim, ErrorCode::UnstableRank,
          "dim E1 + dim V1 != 2n");

  const double scale = std::max(1.0, max_abs(m));
  const double inv_tol = 10.0 * policy.rank_tol * scale;
  auto leak = [&](const Mat& q) {
    if (q.cols() == 0) return 0.0;
    const Mat image = m * q;
    return max_abs(image - q * (q.transpose() * image));
  };
  if (leak(split.e1) > inv_tol || leak(split.v1) > inv_tol) {
    fail(ErrorCode::UnstableRank, "E1/V1 are not M-invariant to tolerance");
  }
  if (split.e1.cols() > 0 && split.v1.cols() > 0) {
    Mat stacked(dim, dim);
    stacked << split.e1, split.v1;
    Eigen::JacobiSVD<Mat> svd(stacked);
    const auto& s = svd.singularValues();
    require(s(dim - 1) > 0 && s(0) / s(dim - 1) < 1e6, ErrorCode::UnstableRank,
            "E1 and V1 are numerically not complementary");
  }
  return split;
}

void attach_energy_subspaces(EigenspaceSplit& split, const Monodromy& mono, const Vec& grad_h,
                             const RankPolicy& policy) {
  const Mat& m = mono.matrix();
  const int dim = static_cast<int>(m.rows());
  require(grad_h.size() == dim, ErrorCode::InvalidArgument, "gradient dimension mismatch");
  const double gnorm = grad_h.norm();
  require(gnorm > 0, ErrorCode::PreconditionViolation, "gradient of H vanishes: critical point");
  const Vec g = grad_h / gnorm;

  Mat stacked(dim + 1, dim);
  stacked << (m - Mat::Identity(dim, dim)), g.transpose();
  const Mat fixed = kernel_impl(stacked, policy);

  const Mat j = symplectic_j(dim / 2);
  Mat isotropic(dim, 0);
  if (fixed.cols() > 0) {
    const Mat gram = fixed.transpose() * j * fixed;
    const Mat c = kernel_impl(gram, policy);
    isotropic = c.cols() > 0 ? range_basis(Mat(fixed * c), policy) : Mat(dim, 0);
  }

  Mat e5(dim, 0);
  if (split.e1.cols() > 0) {
    const Mat& b = split.e1;
    Mat constraints(1 + fixed.cols(), b.cols());
    constraints.row(0) = g.transpose() * b;
    if (fixed.cols() > 0) constraints.bottomRows(fixed.cols()) = fixed.transpose() * b;
    const Mat c = kernel_impl(constraints, policy);
    if (c.cols() > 0) e5 = range_basis(Mat(b * c), policy);
  }
  split.fixed = fixed;
  split.isotropic = isotropic;
  split.e5 = e5;
}

double restricted_det(const Mat& map, const Mat& basis) {
  if (basis.cols() == 0) return 1.0;
  require(map.rows() == map.cols() && map.rows() == basis.rows(), ErrorCode::InvalidArgument,
          "restricted_det: dimension mismatch");
  const Mat q = range_basis(basis);
  require(q.cols() == basis.cols(), ErrorCode::InvalidArgument,
          "restricted_det: basis is rank deficient");
  const Mat image = map * q;
  const Mat coords = q.transpose() * image;
  const double leak = max_abs(image - q * coords);
  require(leak <= 1e-6 * std::max(1.0, max_abs(map)), ErrorCode::PreconditionViolation,
          "restricted_det: subspace is not invariant under the map");
  return coords.determinant();
}

double restricted_form_det(const Mat& basis) {
  if (basis.cols() == 0) return 1.0;
  require(basis.rows() % 2 == 0, ErrorCode::InvalidArgument, "phase-space basis expected");
  const Mat q = range_basis(basis);
  require(q.cols() == basis.cols(), ErrorCode::InvalidArgument,
          "restricted_form_det: basis is rank deficient");
  const Mat j = symplectic_j(static_cast<int>(basis.rows() / 2));
  // Gram matrix <J e_i, e_j>; its determinant is a Pfaffian square, hence
  // independent of the orientation of q.
  const Mat gram = (j * q).transpose() * q;
  return gram.transpose().determinant();
}

Mat orthogonal_projection(const Mat& basis, int dim) {
  if (basis.cols() == 0) return Mat::Zero(dim, dim);
  require(basis.rows() == dim, ErrorCode::InvalidArgument, "projection: dimension mismatch");
  const Mat q = range_basis(basis);
  return q * q.transpose();
}

bool meyer_bound_check(const Mat& m, const Mat& v, const Mat& w, const RankPolicy& policy) {
  const int dim = static_cast<int>(m.rows());
  require(v.rows() == dim && w.rows() == dim, ErrorCode::InvalidArgument,
          "meyer_bound_check: dimension mismatch");
  const Mat e1 = unit_eigenspace(m, policy);
  if (!subspace_contains(v, w, policy)) {
    fail(ErrorCode::PreconditionViolation, "meyer_bound_check: W is not contained in V");
  }
  if (!subspace_contains(e1, v, policy)) {
    fail(ErrorCode::PreconditionViolation, "meyer_bound_check: V is not contained in E1");
  }
  const Mat qv = range_basis(v, policy);
  const Mat qw = range_basis(w, policy);
  if (qv.cols() > 0 && qw.cols() > 0) {
    const Mat j = symplectic_j(dim / 2);
    const double pairing = max_abs(qv.transpose() * j * qw);
    if (pairing > 10.0 * policy.rank_tol * std::max(1.0, max_abs(m))) {
      fail(ErrorCode::PreconditionViolation, "meyer_bound_check: w0(W, V) does not vanish");
    }
  }
  return e1.cols() >= qv.cols() + qw.cols();
}

}  // namespace tracelab
