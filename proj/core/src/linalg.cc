// core/src/linalg.cc

// Copyright 2026  The svbackend Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "svb/linalg.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "svb/error.h"

namespace svb {

Eigen::MatrixXd Symmetrize(const Eigen::MatrixXd &m) {
  return 0.5 * (m + m.transpose());
}

double LogDetSpd(const Eigen::MatrixXd &m, const std::string &what) {
  Eigen::LLT<Eigen::MatrixXd> llt(Symmetrize(m));
  if (llt.info() != Eigen::Success)
    throw NumericError(what + " is not positive definite");
  const auto &l = llt.matrixLLT();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    double d = l(i, i);
    if (!(d > 0.0) || !std::isfinite(d))
      throw NumericError(what + " is numerically singular");
    logdet += 2.0 * std::log(d);
  }
  return logdet;
}

Eigen::MatrixXd InverseSpd(const Eigen::MatrixXd &m, const std::string &what) {
  Eigen::LLT<Eigen::MatrixXd> llt(Symmetrize(m));
  if (llt.info() != Eigen::Success)
    throw NumericError(what + " is not positive definite");
  const auto &l = llt.matrixLLT();
  double lo = l.diagonal().minCoeff(), hi = l.diagonal().maxCoeff();
  // Condition number of m is roughly (hi / lo)^2.
  if (!(lo > 0.0) || hi / lo > 1e7)
    throw NumericError(what + " is numerically singular");
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
  return Symmetrize(inv);
}

Eigen::MatrixXd SqrtPsd(const Eigen::MatrixXd &m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Symmetrize(m));
  Eigen::VectorXd s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
}

void FixSign(Eigen::Ref<Eigen::VectorXd> v) {
  if (v.size() == 0) return;
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (std::abs(v(i)) > std::abs(v(best))) best = i;
  if (v(best) < 0) v = -v;
}

GeneralizedEig SolveGeneralizedEig(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b,
                                   const std::string &what) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Symmetrize(a), Symmetrize(b));
  if (es.info() != Eigen::Success)
    throw NumericError(what + ": generalized eigenproblem failed (singular scatter?)");
  const Eigen::Index n = a.rows();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    return es.eigenvalues()(x) > es.eigenvalues()(y);
  });
  GeneralizedEig out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = es.eigenvalues()(order[k]);
    Eigen::VectorXd v = es.eigenvectors().col(order[k]);
    FixSign(v);
    out.vectors.col(k) = v;
  }
  return out;
}

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double Softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

}  // namespace svb
