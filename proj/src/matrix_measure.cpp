#include "contraction/matrix_measure.hpp"

#include <Eigen/Eigenvalues>

namespace contraction {

MeasurePropertiesReport measure_properties_check(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                                 double c, double alpha, const NormSpec& spec,
                                                 double tol) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) throw DimensionError("A and B differ in shape");
  if (alpha < 0.0) throw std::invalid_argument("scaling factor must be nonnegative");
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(A.rows(), A.cols());
  const double muA = matrix_measure(A, spec).value;
  const double muB = matrix_measure(B, spec).value;

  MeasurePropertiesReport r{};
  r.shift_residual = std::abs(matrix_measure(Eigen::MatrixXd(A + c * I), spec).value - muA - c);
  r.scaling_residual = std::abs(matrix_measure(Eigen::MatrixXd(alpha * A), spec).value - alpha * muA);
  r.subadditivity_excess = matrix_measure(Eigen::MatrixXd(A + B), spec).value - muA - muB;
  const double abscissa = Eigen::EigenSolver<Eigen::MatrixXd>(A, false).eigenvalues().real().maxCoeff();
  r.spectral_excess = abscissa - muA;
  const double scale = 1.0 + std::abs(muA) + std::abs(c);
  r.shift_ok = r.shift_residual <= tol * scale;
  r.scaling_ok = r.scaling_residual <= tol * (1.0 + std::abs(alpha * muA));
  r.subadditive_ok = r.subadditivity_excess <= tol * (1.0 + std::abs(muA) + std::abs(muB));
  r.spectral_ok = r.spectral_excess <= tol * (1.0 + std::abs(muA));
  return r;
}

}  // namespace contraction
