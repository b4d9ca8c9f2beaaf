// core/include/svb/linalg.h

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

#ifndef SVB_LINALG_H_
#define SVB_LINALG_H_

#include <string>

#include <Eigen/Dense>

namespace svb {

/// 0.5 (m + m^T).
Eigen::MatrixXd Symmetrize(const Eigen::MatrixXd &m);

/// log det of a symmetric positive definite matrix; throws NumericError if
/// the Cholesky factorization fails.  `what` names the matrix in the message.
double LogDetSpd(const Eigen::MatrixXd &m, const std::string &what);

/// Inverse of a symmetric positive definite matrix (symmetrized result).
Eigen::MatrixXd InverseSpd(const Eigen::MatrixXd &m, const std::string &what);

/// Symmetric square root V diag(sqrt(max(l, 0))) V^T of a PSD matrix.
Eigen::MatrixXd SqrtPsd(const Eigen::MatrixXd &m);

/// Flips v so that its largest-magnitude component (first one on ties) is
/// positive.
void FixSign(Eigen::Ref<Eigen::VectorXd> v);

struct GeneralizedEig {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns, normalized so that v^T B v = 1
};

/// Solves A v = l B v for symmetric A and SPD B.  Eigenvalues are sorted in
/// decreasing order and every eigenvector has its sign fixed by FixSign.
GeneralizedEig SolveGeneralizedEig(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b,
                                   const std::string &what);

/// Logistic function, evaluated without overflow.
double Sigmoid(double x);

/// log(1 + exp(x)), evaluated without overflow.
double Softplus(double x);

}  // namespace svb

#endif  // SVB_LINALG_H_
