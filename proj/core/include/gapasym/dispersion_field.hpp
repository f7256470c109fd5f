#pragma once

#include "gapasym/common.hpp"

namespace gapasym {

/// Working-frame dispersion E(beta) with derivatives, the geometry modules'
/// view of a continued band function. Implementations: the branch-tracked
/// fiber solve, and closed-form models for tests and initial guesses.
class DispersionField {
 public:
  virtual ~DispersionField() = default;
  virtual int dim() const = 0;
  virtual double value(const VectorXd& beta) = 0;
  virtual VectorXd gradient(const VectorXd& beta) = 0;
  virtual MatrixXd hessian(const VectorXd& beta) = 0;
};

/// E(beta) = -1/2 beta . M beta with exact derivatives (M symmetric positive
/// definite). The free Laplacian at its spectral bottom is M = 2 I.
class QuadraticDispersionField : public DispersionField {
 public:
  explicit QuadraticDispersionField(MatrixXd m) : m_(std::move(m)) {}
  int dim() const override { return static_cast<int>(m_.rows()); }
  double value(const VectorXd& beta) override { return -0.5 * beta.dot(m_ * beta); }
  VectorXd gradient(const VectorXd& beta) override { return -m_ * beta; }
  MatrixXd hessian(const VectorXd&) override { return -m_; }
  const MatrixXd& curvature_matrix() const { return m_; }

 private:
  MatrixXd m_;
};

}  // namespace gapasym
