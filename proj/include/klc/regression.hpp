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

#include <memory>

#include <Eigen/Cholesky>

#include "klc/common.hpp"
#include "klc/kernels.hpp"

namespace klc {

/// Ridgeless kernel interpolant Z(x) = sum_mu a_mu K(x_mu, x).
struct KrrModel {
    PointMatrix x_train;
    Vector coeffs;
    KernelSpec student;
    double jitter_used = 0.0;
    std::shared_ptr<const Eigen::LLT<Matrix>> factor;  // of G + jitter I
};

/// Solves (G + jitter I) a = z with the smallest jitter of the ladder that
/// factorizes. Throws NumericalError when every rung fails.
KrrModel krr_fit(const KernelSpec& student, const PointMatrix& x, const Vector& z);

Vector krr_predict(const KrrModel& model, const PointMatrix& x_test);

double mse_test(const KrrModel& model, const PointMatrix& x_test, const Vector& z_test);

/// beta = min(a_T(d_par) - d_par, 2 a_S(d)) / d with a_K(m) = m + theta_K.
/// Returns +inf when both kernels are Gaussian.
double predicted_regression_exponent(const KernelSpec& teacher, const KernelSpec& student, int d, int d_parallel);

}  // namespace klc
