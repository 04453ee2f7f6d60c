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

#include "klc/regression.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "klc/datagen.hpp"

namespace klc {

KrrModel krr_fit(const KernelSpec& student, const PointMatrix& x, const Vector& z) {
    if (!student.strictly_positive_definite()) {
        throw std::invalid_argument("krr_fit: student kernel must be strictly positive definite");
    }
    if (z.size() != x.rows()) throw std::invalid_argument("krr_fit: z has wrong length");
    if (x.rows() < 1) throw std::invalid_argument("krr_fit: need at least one training point");
    const Matrix g = gram_matrix(student, x);
    const double mean_diag = g.diagonal().mean();
    std::ostringstream tried;
    for (double rung : kJitterLadder) {
        const double jitter = rung * mean_diag;
        Matrix a = g;
        a.diagonal().array() += jitter;
        auto llt = std::make_shared<Eigen::LLT<Matrix>>(a);
        if (llt->info() != Eigen::Success) {
            tried << (tried.tellp() > 0 ? ", " : "") << jitter;
            continue;
        }
        KrrModel m;
        m.x_train = x;
        m.coeffs = llt->solve(z);
        m.student = student;
        m.jitter_used = jitter;
        m.factor = std::move(llt);
        return m;
    }
    throw NumericalError("krr_fit: Cholesky failed for jitters {" + tried.str() + "}");
}

Vector krr_predict(const KrrModel& model, const PointMatrix& x_test) {
    if (x_test.cols() != model.x_train.cols()) throw std::invalid_argument("krr_predict: dimension mismatch");
    return gram_matrix(model.student, x_test, model.x_train) * model.coeffs;
}

double mse_test(const KrrModel& model, const PointMatrix& x_test, const Vector& z_test) {
    if (x_test.rows() < 1) throw std::invalid_argument("mse_test: empty test set");
    if (z_test.size() != x_test.rows()) throw std::invalid_argument("mse_test: z_test has wrong length");
    return (krr_predict(model, x_test) - z_test).squaredNorm() / static_cast<double>(x_test.rows());
}

double predicted_regression_exponent(const KernelSpec& teacher, const KernelSpec& student, int d, int d_parallel) {
    if (d < 1 || d_parallel < 1 || d_parallel > d) {
        throw std::invalid_argument("predicted_regression_exponent: need 1 <= d_parallel <= d");
    }
    const double teacher_term = fourier_decay_exponent(teacher, d_parallel) - d_parallel;
    const double student_term = 2.0 * fourier_decay_exponent(student, d);
    return std::min(teacher_term, student_term) / d;
}

}  // namespace klc
