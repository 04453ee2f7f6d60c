/*
 * Copyright 2026 The klc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <vector>

#include <Eigen/Core>

namespace klc::oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Dense solve of A x = b by Gaussian elimination with partial pivoting.
Vec gauss_solve(Mat a, Vec b);

struct QpResult {
    Vec alpha;
    double bias = 0.0;
    double objective = 0.0;
    int iterations = 0;
    bool polished = false;
};

/// max sum(a) - a^T Q a / 2 over a >= 0, y^T a = 0, with Q_ij = y_i y_j K_ij.
/// Accelerated projected gradient on K - shift (shift cancels on the feasible
/// set), then an exact solve of the equality system on the detected support.
QpResult hard_margin_qp(const Mat& k, const Vec& y, double shift, int max_iter = 400000, double tol = 1e-13);

/// Euclidean projection onto {a >= 0, y^T a = 0} by bisection on the multiplier.
Vec project_charge_neutral(const Vec& v, const Vec& y);

/// Dual objective sum(a) - a^T Q a / 2.
double dual_objective(const Mat& k, const Vec& y, const Vec& alpha);

/// Two points at x = +-a with labels +-1 and kernel -(r / sigma)^xi:
/// alpha = (sigma / (2a))^xi on both, b = 0.
double two_point_alpha(double xi, double sigma, double a);

/// Integral of the standard normal density over [lo, hi] by composite Simpson.
double normal_mass(double lo, double hi, int intervals = 20000);

/// Least squares slope of log y on log x, without weights.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace klc::oracle
