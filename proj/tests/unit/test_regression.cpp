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

#include <doctest.h>

#include <cmath>
#include <random>

#include "klc/datagen.hpp"
#include "klc/regression.hpp"
#include "oracles/oracles.hpp"

using namespace klc;

namespace {

PointMatrix sphere_points(int d, Index p, std::uint64_t stream) {
    TaskSpec t;
    t.d = d;
    t.sampler.kind = SamplerKind::UniformSphere;
    t.seed = 5;
    return sample_points(t, p, stream);
}

Vector normal_vector(Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Vector v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

}  // namespace

TEST_CASE("single point interpolant") {
    PointMatrix x(1, 3);
    x << 0.2, -0.1, 0.4;
    Vector z(1);
    z << 1.7;
    const KrrModel m = krr_fit(KernelSpec::laplace(2.0), x, z);
    CHECK(krr_predict(m, x)(0) == doctest::Approx(1.7).epsilon(1e-11));
    PointMatrix q = x;
    q(0, 0) += 3.0;
    CHECK(krr_predict(m, q)(0) == doctest::Approx(1.7 * std::exp(-1.5)).epsilon(1e-11));
}

TEST_CASE("zero field gives zero model") {
    const PointMatrix x = sphere_points(3, 20, 1);
    const KrrModel m = krr_fit(KernelSpec::laplace(1.0), x, Vector::Zero(20));
    CHECK(m.coeffs.cwiseAbs().maxCoeff() == 0.0);
    CHECK(krr_predict(m, sphere_points(3, 5, 2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("matches an elimination solve") {
    const PointMatrix x = sphere_points(3, 30, 3);
    const PointMatrix q = sphere_points(3, 40, 4);
    const Vector z = normal_vector(30, 5);
    for (auto k : {KernelSpec::laplace(1.0), KernelSpec::matern(1.5, 1.0)}) {
        const KrrModel m = krr_fit(k, x, z);
        const Vector a = oracle::gauss_solve(gram_matrix(k, x), z);
        const Vector ref = gram_matrix(k, q, x) * a;
        CHECK((krr_predict(m, q) - ref).cwiseAbs().maxCoeff() <= 1e-8 * z.cwiseAbs().maxCoeff());
        CHECK((krr_predict(m, x) - z).cwiseAbs().maxCoeff() <= 1e-6 * z.cwiseAbs().maxCoeff());
        const Vector resid = (gram_matrix(k, x) + m.jitter_used * Matrix::Identity(30, 30)) * m.coeffs - z;
        CHECK(resid.norm() <= 1e-8 * z.norm());
    }
}

TEST_CASE("far field decays") {
    const PointMatrix x = sphere_points(3, 25, 6);
    const KrrModel m = krr_fit(KernelSpec::laplace(0.5), x, normal_vector(25, 7));
    PointMatrix far = PointMatrix::Zero(1, 3);
    far(0, 0) = 40.0;
    CHECK(std::abs(krr_predict(m, far)(0)) <= 1e-6 * m.coeffs.cwiseAbs().maxCoeff() * 25);
}

TEST_CASE("mse_test") {
    const PointMatrix x = sphere_points(3, 30, 8);
    const Vector z = normal_vector(30, 9);
    const KrrModel m = krr_fit(KernelSpec::laplace(1.0), x, z);
    CHECK(mse_test(m, x, z) <= 1e-12 * z.cwiseAbs().maxCoeff() * z.cwiseAbs().maxCoeff());

    const PointMatrix q = sphere_points(3, 50, 10);
    const Vector zq = normal_vector(50, 11);
    const Vector pred = krr_predict(m, q);
    const double base = (pred - zq).squaredNorm() / 50;
    CHECK(mse_test(m, q, zq) == doctest::Approx(base).epsilon(1e-12));
    const double c = 0.3;
    const Vector shifted = zq.array() + c;
    const double expected = base + c * c - 2.0 * c * (pred - zq).mean();
    CHECK(mse_test(m, q, shifted) == doctest::Approx(expected).epsilon(1e-12));
    CHECK_THROWS(mse_test(m, q, Vector::Zero(3)));
}

TEST_CASE("predicted regression exponent") {
    for (double nu : {0.5, 1.0, 1.5, 5.0}) {
        const double b = predicted_regression_exponent(KernelSpec::matern(nu, 4.0), KernelSpec::laplace(4.0), 3, 1);
        CHECK(b == doctest::Approx(2.0 / 3.0 * std::min(nu, 4.0)));
        for (int dp = 1; dp <= 3; ++dp) {
            CHECK(predicted_regression_exponent(KernelSpec::matern(nu, 4.0), KernelSpec::laplace(4.0), 3, dp) ==
                  doctest::Approx(b));
        }
    }
    CHECK(predicted_regression_exponent(KernelSpec::gaussian(1.0), KernelSpec::laplace(1.0), 3, 2) ==
          doctest::Approx(2.0 + 2.0 / 3.0));
    CHECK(predicted_regression_exponent(KernelSpec::matern(1.0, 1.0), KernelSpec::gaussian(1.0), 4, 2) ==
          doctest::Approx(0.5));
    CHECK(std::isinf(predicted_regression_exponent(KernelSpec::gaussian(1.0), KernelSpec::gaussian(1.0), 3, 1)));
    CHECK_THROWS(predicted_regression_exponent(KernelSpec::truncated_power(1.0, 1.0), KernelSpec::laplace(1.0), 3, 1));
    CHECK_THROWS(predicted_regression_exponent(KernelSpec::laplace(1.0), KernelSpec::laplace(1.0), 3, 4));
}

TEST_CASE("test error falls with p on average") {
    TaskSpec t;
    t.d = 3;
    t.sampler.kind = SamplerKind::UniformSphere;
    const auto teacher = KernelSpec::matern(1.0, 2.0);
    const auto student = KernelSpec::laplace(2.0);
    std::vector<double> mean;
    for (Index p : {32, 128, 512}) {
        double acc = 0.0;
        for (std::uint64_t r = 0; r < 4; ++r) {
            const PointMatrix all = sample_points(t, p + 200, 100 * r + static_cast<std::uint64_t>(p));
            const Vector z = sample_teacher_field(teacher, all, 7 * r + static_cast<std::uint64_t>(p));
            const KrrModel m = krr_fit(student, all.topRows(p), z.head(p));
            acc += mse_test(m, all.bottomRows(200), z.tail(200)) / 4;
        }
        mean.push_back(acc);
    }
    CHECK(mean[1] < mean[0]);
    CHECK(mean[2] < mean[1]);
}
