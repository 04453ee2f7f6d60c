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

#include "klc/special_functions.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "klc/common.hpp"

namespace klc {
namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIterations = 10000;

struct BesselPair {
    double k_mu;   // K_mu(x), possibly scaled by exp(x)
    double k_mu1;  // K_{mu+1}(x), same scaling
};

// Temme's auxiliary functions for |mu| <= 1/2:
//   gam1 = (1/G(1-mu) - 1/G(1+mu)) / (2 mu),   gam2 = (1/G(1-mu) + 1/G(1+mu)) / 2.
// Near mu = 0 gam1 is taken from the Taylor series of 1/G(z).
struct TemmeGammas {
    double gam1, gam2, gampl, gammi;
};

TemmeGammas temme_gammas(double mu) {
    TemmeGammas g{};
    g.gampl = 1.0 / std::tgamma(1.0 + mu);
    g.gammi = 1.0 / std::tgamma(1.0 - mu);
    g.gam2 = 0.5 * (g.gammi + g.gampl);
    if (std::abs(mu) < 1e-4) {
        // 1/G(z) = z + c2 z^2 + c3 z^3 + c4 z^4 + ..., c2 = Euler gamma.
        constexpr double c2 = 0.5772156649015329;
        constexpr double c4 = -0.0420026350340952;
        g.gam1 = -(c2 + c4 * mu * mu);
    } else {
        g.gam1 = (g.gammi - g.gampl) / (2.0 * mu);
    }
    return g;
}

BesselPair temme_series(double mu, double x) {
    const double x2 = 0.5 * x;
    const double pimu = std::numbers::pi * mu;
    const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
    double d = -std::log(x2);
    double e = mu * d;
    const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
    const TemmeGammas g = temme_gammas(mu);

    double ff = fact * (g.gam1 * std::cosh(e) + g.gam2 * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / g.gampl;
    double q = 0.5 / (e * g.gammi);
    double c = 1.0;
    d = x2 * x2;
    double sum1 = p;
    const double mu2 = mu * mu;
    int i = 1;
    for (; i <= kMaxIterations; ++i) {
        ff = (i * ff + p + q) / (i * i - mu2);
        c *= d / i;
        p /= (i - mu);
        q /= (i + mu);
        const double del = c * ff;
        sum += del;
        sum1 += c * (p - i * ff);
        if (std::abs(del) < std::abs(sum) * kEps) break;
    }
    if (i > kMaxIterations) throw NumericalError("bessel_k: series did not converge");
    return {sum, sum1 * 2.0 / x};
}

// Steed's continued fraction; returns values scaled by exp(x).
BesselPair temme_continued_fraction_scaled(double mu, double x) {
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0;
    double q2 = 1.0;
    const double a1 = 0.25 - mu * mu;
    double q = a1;
    double c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    int i = 1;
    for (; i <= kMaxIterations; ++i) {
        a -= 2 * i;
        c = -a * c / (i + 1.0);
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < kEps) break;
    }
    if (i > kMaxIterations) throw NumericalError("bessel_k: continued fraction did not converge");
    h *= a1;
    const double k_mu = std::sqrt(std::numbers::pi / (2.0 * x)) / s;
    const double k_mu1 = k_mu * (mu + x + 0.5 - h) / x;
    return {k_mu, k_mu1};
}

double bessel_k_impl(double nu, double x, bool scaled) {
    if (!(nu >= 0.0) || !std::isfinite(nu)) {
        throw std::invalid_argument("bessel_k: order must be finite and >= 0, got " + std::to_string(nu));
    }
    if (!(x > 0.0)) throw std::invalid_argument("bessel_k: argument must be > 0");
    if (std::isinf(x)) return 0.0;

    const int n = static_cast<int>(nu + 0.5);
    const double mu = nu - n;
    BesselPair pair{};
    if (x < kBesselSeriesThreshold) {
        pair = temme_series(mu, x);
        if (scaled) {
            const double ex = std::exp(x);
            pair.k_mu *= ex;
            pair.k_mu1 *= ex;
        }
    } else {
        pair = temme_continued_fraction_scaled(mu, x);
        if (!scaled) {
            const double emx = std::exp(-x);
            pair.k_mu *= emx;
            pair.k_mu1 *= emx;
        }
    }
    // Forward recurrence K_{m+1} = K_{m-1} + (2m/x) K_m is stable for K.
    double k_lo = pair.k_mu;
    double k_hi = pair.k_mu1;
    for (int i = 1; i <= n; ++i) {
        const double next = (mu + i) * (2.0 / x) * k_hi + k_lo;
        k_lo = k_hi;
        k_hi = next;
    }
    return k_lo;
}

}  // namespace

double bessel_k(double nu, double x) { return bessel_k_impl(nu, x, false); }

double bessel_k_scaled(double nu, double x) { return bessel_k_impl(nu, x, true); }

double erf_inv(double y) {
    if (!(y > -1.0 && y < 1.0)) {
        throw std::domain_error("erf_inv: argument must lie in (-1, 1), got " + std::to_string(y));
    }
    if (y == 0.0) return 0.0;
    // Winitzki's approximation, relative error ~1e-3.
    constexpr double a = 0.147;
    const double ln = std::log1p(-y * y);
    const double t = 2.0 / (std::numbers::pi * a) + 0.5 * ln;
    double x = std::copysign(std::sqrt(std::sqrt(t * t - ln / a) - t), y);

    const double two_over_sqrt_pi = 2.0 / std::sqrt(std::numbers::pi);
    for (int it = 0; it < 50; ++it) {
        const double f = std::erf(x) - y;
        const double step = f / (two_over_sqrt_pi * std::exp(-x * x));
        // Halley correction: erf'' / erf' = -2x.
        const double dx = step / (1.0 + x * step);
        x -= dx;
        if (std::abs(dx) <= 1e-15 * std::abs(x)) break;
    }
    return x;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace klc
