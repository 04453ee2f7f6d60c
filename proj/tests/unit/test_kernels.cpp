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
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "klc/datagen.hpp"
#include "klc/kernels.hpp"
#include "klc/special_functions.hpp"

using namespace klc;

TEST_CASE("laplace values") {
    const auto k = KernelSpec::laplace(4.0);
    CHECK(eval_kernel(k, 0.0) == 1.0);
    CHECK(eval_kernel(k, 4.0) == doctest::Approx(0.3678794).epsilon(1e-7));
}

TEST_CASE("truncated power value and zero at origin") {
    const auto k = KernelSpec::truncated_power(1.0, 100.0);
    CHECK(eval_kernel(k, 1.0) == doctest::Approx(-0.01).epsilon(1e-15));
    CHECK(eval_kernel(k, 0.0) == 0.0);
    CHECK(eval_kernel(KernelSpec::truncated_power(1.5, 2.0), 8.0) == doctest::Approx(-8.0).epsilon(1e-14));
}

TEST_CASE("matern one half equals laplace") {
    for (double sigma : {0.3, 1.0, 7.0}) {
        const auto m = KernelSpec::matern(0.5, sigma);
        const auto l = KernelSpec::laplace(sigma);
        for (double r = 1e-3 * sigma; r <= 10 * sigma; r *= 1.1) {
            CHECK(std::abs(eval_kernel(m, r) - eval_kernel(l, r)) <= 1e-10);
            CHECK(std::abs(matern_bessel(0.5, r / sigma) - eval_kernel(l, r)) <= 1e-10);
        }
    }
}

TEST_CASE("matern closed forms agree with the bessel route") {
    for (double z = 1e-3; z < 40.0; z *= 1.3) {
        CHECK(matern_bessel(1.5, z) == doctest::Approx((1 + z) * std::exp(-z)).epsilon(1e-11));
        CHECK(matern_bessel(2.5, z) == doctest::Approx((1 + z + z * z / 3) * std::exp(-z)).epsilon(1e-11));
    }
}

TEST_CASE("matern is finite and monotone over extreme arguments") {
    for (double nu : {0.1, 0.3, 0.7, 1.0, 2.2, 5.0}) {
        const auto k = KernelSpec::matern(nu, 1.0);
        double prev = 1.0;
        for (double r = 1e-300; r < 1e3; r *= 10.0) {
            const double v = eval_kernel(k, r);
            CHECK(std::isfinite(v));
            CHECK(v <= prev + 1e-12);
            CHECK(v >= 0.0);
            prev = v;
        }
    }
}

TEST_CASE("matern is continuous across the bessel branch switch") {
    for (double nu : {0.3, 0.7, 1.0, 1.7, 3.2}) {
        const double lo = matern_bessel(nu, kBesselSeriesThreshold * (1 - 1e-12));
        const double hi = matern_bessel(nu, kBesselSeriesThreshold * (1 + 1e-12));
        CHECK(lo == doctest::Approx(hi).epsilon(1e-10));
    }
}

TEST_CASE("bessel k reference values") {
    // Abramowitz and Stegun tables.
    CHECK(bessel_k(0.0, 1.0) == doctest::Approx(0.42102443824070834).epsilon(1e-13));
    CHECK(bessel_k(1.0, 1.0) == doctest::Approx(0.60190723019723457).epsilon(1e-13));
    CHECK(bessel_k(0.0, 5.0) == doctest::Approx(3.6910983340425942e-3).epsilon(1e-12));
    CHECK(bessel_k(2.0, 0.5) == doctest::Approx(7.5501835512408695).epsilon(1e-12));
    for (double x : {0.1, 1.0, 3.0, 30.0}) {
        CHECK(bessel_k(0.5, x) == doctest::Approx(std::sqrt(std::numbers::pi / (2 * x)) * std::exp(-x)).epsilon(1e-13));
        CHECK(bessel_k_scaled(0.5, x) == doctest::Approx(std::sqrt(std::numbers::pi / (2 * x))).epsilon(1e-13));
    }
    CHECK(std::isfinite(bessel_k_scaled(1.3, 2000.0)));
}

TEST_CASE("erf_inv round trip") {
    for (double y = -0.999999; y < 1.0; y += 0.0123) CHECK(std::erf(erf_inv(y)) == doctest::Approx(y).epsilon(1e-14));
    CHECK(normal_cdf(0.0) == 0.5);
}

TEST_CASE("gram examples") {
    PointMatrix same(2, 2);
    same << 1.0, 2.0, 1.0, 2.0;
    CHECK(gram_matrix(KernelSpec::laplace(3.0), same).isApproxToConstant(1.0));

    PointMatrix x(2, 2);
    x << 0.0, 0.0, 3.0, 4.0;
    const Matrix g = gram_matrix(KernelSpec::laplace(5.0), x);
    CHECK(g(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));

    PointMatrix xp(2, 2);
    xp << 0.0, 7.0, 0.0, -9.0;
    for (auto k : {KernelSpec::laplace(1.0), KernelSpec::matern(1.3, 1.0), KernelSpec::gaussian(1.0)}) {
        const Matrix gp = gram_matrix(k.restricted_to(1), xp);
        CHECK(gp(0, 1) == eval_kernel(k, 0.0));
    }
}

TEST_CASE("gram symmetric and positive definite") {
    TaskSpec t;
    t.d = 3;
    const PointMatrix x = sample_points(t, 120, 3);
    for (auto k : {KernelSpec::laplace(1.0), KernelSpec::matern(0.8, 1.0), KernelSpec::gaussian(2.0)}) {
        const Matrix g = gram_matrix(k, x);
        CHECK((g - g.transpose()).cwiseAbs().maxCoeff() == 0.0);
        Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() > -1e-12 * 120);
    }
}

TEST_CASE("d_parallel restriction ignores other coordinates") {
    TaskSpec t;
    t.d = 4;
    PointMatrix x = sample_points(t, 30, 4);
    const auto k = KernelSpec::matern(1.2, 1.0).restricted_to(2);
    const Matrix g0 = gram_matrix(k, x);
    x.col(2).setRandom();
    x.col(3).array() += 5.0;
    CHECK((gram_matrix(k, x) - g0).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(gram_matrix(KernelSpec::laplace(1.0).restricted_to(5), x), std::invalid_argument);
}

TEST_CASE("cusp and fourier exponents") {
    CHECK(cusp_exponent(KernelSpec::laplace(1)) == 1.0);
    CHECK(cusp_exponent(KernelSpec::matern(0.3, 1)) == doctest::Approx(0.6));
    CHECK(cusp_exponent(KernelSpec::matern(3.0, 1)) == 2.0);
    CHECK(cusp_exponent(KernelSpec::gaussian(1)) == 2.0);
    CHECK(cusp_exponent(KernelSpec::truncated_power(0.7, 1)) == 0.7);
    CHECK(fourier_decay_exponent(KernelSpec::laplace(1), 3) == 4.0);
    CHECK(fourier_decay_exponent(KernelSpec::matern(2.0, 1), 1) == 5.0);
    CHECK(std::isinf(fourier_decay_exponent(KernelSpec::gaussian(1), 10)));
    CHECK_THROWS(fourier_decay_exponent(KernelSpec::truncated_power(1.0, 1), 2));
    CHECK(regression_cusp_exponent(KernelSpec::matern(3.0, 1)) == 6.0);
}

TEST_CASE("matern cusp coefficient matches small-r expansion") {
    for (double nu : {0.2, 0.5, 0.8}) {
        const auto k = KernelSpec::matern(nu, 1.0);
        const double r = 1e-6;
        const double c = (1.0 - eval_kernel(k, r)) / std::pow(r, 2 * nu);
        CHECK(c == doctest::Approx(cusp_coefficient(k)).epsilon(2e-2));
    }
}

TEST_CASE("kernel validation") {
    CHECK_THROWS_AS(KernelSpec::truncated_power(2.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(KernelSpec::truncated_power(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(KernelSpec::laplace(0.0), std::invalid_argument);
    CHECK_THROWS_AS(KernelSpec::matern(-1.0, 1.0), std::invalid_argument);
}

TEST_CASE("cspd examples") {
    TaskSpec t;
    t.d = 5;
    const PointMatrix x = sample_points(t, 50, 6);
    CHECK(cspd_check(KernelSpec::truncated_power(1.0, 1.0), x, 1e-10).pass);
    CHECK(cspd_check(KernelSpec::laplace(1.0), x).pass);

    KernelSpec quad;
    quad.family = KernelFamily::TruncatedPower;
    quad.xi = 2.0;
    PointMatrix line(3, 1);
    line << 0.0, 1.0, 2.0;
    const auto r = cspd_check(quad, line);
    CHECK_FALSE(r.pass);
    CHECK(std::abs(r.min_eigenvalue) < 1e-12);

    PointMatrix dup(2, 2);
    dup << 1.0, 1.0, 1.0, 1.0;
    CHECK_THROWS_AS(cspd_check(KernelSpec::laplace(1.0), dup), std::invalid_argument);
}
