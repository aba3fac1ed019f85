#include "gpt/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace gpt::decompose {

namespace {

constexpr double kTruncation = 1e-10;

}  // namespace

Decomposition canonical_decompose(const MatrixXd& d, Index k) {
  const Index m = d.rows(), n = d.cols();
  if (m < 1 || n < 1) throw ValidationError("cannot decompose an empty matrix");
  if (k < 1) throw ValidationError("decomposition rank must be >= 1");
  if ((d.col(0).array() - 1.0).abs().maxCoeff() > 1e-12)
    throw ValidationError("first column of D must be the unit column");

  Eigen::HouseholderQR<MatrixXd> qr(d);
  const Index p = std::min(m, n);
  const MatrixXd Q = qr.householderQ() * MatrixXd::Identity(m, p);
  const MatrixXd R = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();

  const double c = Q(0, 0);
  if (std::abs(c) < 1e-12) throw NumericalError("QR normalization constant is zero");
  if ((Q.col(0).array() - c).abs().maxCoeff() > 1e-9)
    throw NumericalError("first column of Q is not constant");

  // Q' = Q / c and R' = c R; Q1' R1' equals Q1 R1.
  const Eigen::RowVectorXd r0 = c * R.row(0);
  MatrixXd centred = MatrixXd::Zero(m, n);
  if (p > 1) centred = Q.rightCols(p - 1) * R.bottomRows(p - 1);

  Decomposition out;
  out.requested_rank = k;
  Eigen::BDCSVD<MatrixXd> svd(centred, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.singular_values = svd.singularValues();
  Index kept = 0;
  const Index want = std::min(k - 1, out.singular_values.size());
  const double top = out.singular_values.size() > 0 ? out.singular_values(0) : 0.0;
  while (kept < want && top > 0.0 && out.singular_values(kept) >= kTruncation * top) ++kept;
  out.rank = kept + 1;
  out.truncated = out.rank < k;

  MatrixXd S(m, out.rank), E(out.rank, n);
  S.col(0).setOnes();
  E.row(0) = r0;
  for (Index t = 0; t < kept; ++t) {
    VectorXd u = svd.matrixU().col(t), v = svd.matrixV().col(t);
    // Orient by the first component that is clearly nonzero.
    for (Index j = 0; j < v.size(); ++j)
      if (std::abs(v(j)) > 1e-9) {
        if (v(j) < 0.0) {
          u = -u;
          v = -v;
        }
        break;
      }
    const double root = std::sqrt(out.singular_values(t));
    S.col(t + 1) = root * u;
    E.row(t + 1) = root * v.transpose();
  }
  // Column 0 of the centred block vanishes, so E's first column is the unit
  // effect up to rounding; store it exactly.
  if ((E.col(0) - VectorXd::Unit(out.rank, 0)).cwiseAbs().maxCoeff() > 1e-9)
    throw NumericalError("canonical effect matrix lost its unit column");
  E.col(0) = VectorXd::Unit(out.rank, 0);

  out.model = {std::move(S), std::move(E)};
  out.residual = (out.model.probabilities() - d).cwiseAbs().maxCoeff();
  return out;
}

Decomposition canonical_decompose(const ProbabilityMatrix& d, Index k) {
  return canonical_decompose(d.entries(), k);
}

Decomposition extended_decompose(const MatrixXd& d, Index k) {
  MatrixXd ext(d.rows(), 2 * d.cols());
  ext << d, MatrixXd::Ones(d.rows(), d.cols()) - d;
  return canonical_decompose(ext, k);
}

Decomposition extended_decompose(const ProbabilityMatrix& d, Index k) {
  return extended_decompose(d.entries(), k);
}

}  // namespace gpt::decompose
