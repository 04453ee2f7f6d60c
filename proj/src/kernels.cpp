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

#include "klc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "klc/special_functions.hpp"

namespace klc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double matern(double nu, double z) {
    if (z == 0.0) return 1.0;
    if (nu == 0.5) return std::exp(-z);
    if (nu == 1.5) return (1.0 + z) * std::exp(-z);
    if (nu == 2.5) return (1.0 + z + z * z / 3.0) * std::exp(-z);
    return matern_bessel(nu, z);
}

}  // namespace

double matern_bessel(double nu, double z) {
    if (z == 0.0) return 1.0;
    // K_nu(z) ~ G(nu)/2 (2/z)^nu overflows only where 1 - K(z) ~ z^min(2nu,2) is far below rounding.
    if (nu * std::log(2.0 / z) > 690.0) return 1.0;
    if (z < kBesselSeriesThreshold) {
        return std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(z, nu) * bessel_k(nu, z);
    }
    const double log_value =
        (1.0 - nu) * std::numbers::ln2 - std::lgamma(nu) + nu * std::log(z) - z + std::log(bessel_k_scaled(nu, z));
    return std::exp(log_value);
}

std::string to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::Laplace: return "laplace";
        case KernelFamily::Matern: return "matern";
        case KernelFamily::Gaussian: return "gaussian";
        case KernelFamily::TruncatedPower: return "truncated_power";
    }
    return "unknown";
}

KernelFamily kernel_family_from_string(const std::string& name) {
    if (name == "laplace") return KernelFamily::Laplace;
    if (name == "matern") return KernelFamily::Matern;
    if (name == "gaussian") return KernelFamily::Gaussian;
    if (name == "truncated_power") return KernelFamily::TruncatedPower;
    throw std::invalid_argument("unknown kernel family '" + name + "'");
}

KernelSpec KernelSpec::laplace(double sigma) {
    KernelSpec k;
    k.family = KernelFamily::Laplace;
    k.sigma = sigma;
    k.validate();
    return k;
}

KernelSpec KernelSpec::matern(double nu, double sigma) {
    KernelSpec k;
    k.family = KernelFamily::Matern;
    k.nu = nu;
    k.sigma = sigma;
    k.validate();
    return k;
}

KernelSpec KernelSpec::gaussian(double sigma) {
    KernelSpec k;
    k.family = KernelFamily::Gaussian;
    k.sigma = sigma;
    k.validate();
    return k;
}

KernelSpec KernelSpec::truncated_power(double xi, double sigma) {
    KernelSpec k;
    k.family = KernelFamily::TruncatedPower;
    k.xi = xi;
    k.sigma = sigma;
    k.validate();
    return k;
}

KernelSpec KernelSpec::restricted_to(int d_par) const {
    KernelSpec k = *this;
    k.d_parallel = d_par;
    k.validate();
    return k;
}

KernelSpec KernelSpec::with_sigma(double s) const {
    KernelSpec k = *this;
    k.sigma = s;
    k.validate();
    return k;
}

void KernelSpec::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("kernel: sigma must be finite and > 0");
    if (family == KernelFamily::Matern && (!(nu > 0.0) || !std::isfinite(nu))) {
        throw std::invalid_argument("kernel: Matern nu must be finite and > 0");
    }
    if (family == KernelFamily::TruncatedPower && !(xi > 0.0 && xi < 2.0)) {
        throw std::invalid_argument("kernel: truncated power exponent xi must lie in (0, 2), got " + std::to_string(xi));
    }
    if (d_parallel && *d_parallel < 1) throw std::invalid_argument("kernel: d_parallel must be >= 1");
}

void KernelSpec::validate_for_dimension(Index dim) const {
    if (d_parallel && *d_parallel > dim) {
        throw std::invalid_argument("kernel: d_parallel = " + std::to_string(*d_parallel) +
                                    " exceeds data dimension " + std::to_string(dim));
    }
}

double eval_kernel(const KernelSpec& spec, double r) {
    const double z = r / spec.sigma;
    switch (spec.family) {
        case KernelFamily::Laplace: return std::exp(-z);
        case KernelFamily::Gaussian: return std::exp(-z * z);
        case KernelFamily::Matern: return matern(spec.nu, std::sqrt(2.0 * spec.nu) * z);
        case KernelFamily::TruncatedPower: return spec.xi == 1.0 ? -z : -std::pow(z, spec.xi);
    }
    return 0.0;
}

double kernel_distance(const KernelSpec& spec, const double* a, const double* b, Index dim) {
    const Index n = spec.d_parallel ? std::min<Index>(*spec.d_parallel, dim) : dim;
    double s = 0.0;
    for (Index k = 0; k < n; ++k) {
        const double diff = a[k] - b[k];
        s += diff * diff;
    }
    return std::sqrt(s);
}

Matrix gram_matrix(const KernelSpec& spec, const PointMatrix& x) {
    spec.validate_for_dimension(x.cols());
    const Index p = x.rows();
    const Index d = x.cols();
    const double k0 = eval_kernel(spec, 0.0);
    Matrix g(p, p);
    for (Index j = 0; j < p; ++j) {
        g(j, j) = k0;
        for (Index i = j + 1; i < p; ++i) {
            const double v = eval_kernel(spec, kernel_distance(spec, x.row(i).data(), x.row(j).data(), d));
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

Matrix gram_matrix(const KernelSpec& spec, const PointMatrix& x, const PointMatrix& y) {
    if (x.cols() != y.cols()) throw std::invalid_argument("gram_matrix: dimension mismatch");
    spec.validate_for_dimension(x.cols());
    const Index d = x.cols();
    Matrix g(x.rows(), y.rows());
    for (Index j = 0; j < y.rows(); ++j) {
        for (Index i = 0; i < x.rows(); ++i) {
            g(i, j) = eval_kernel(spec, kernel_distance(spec, x.row(i).data(), y.row(j).data(), d));
        }
    }
    return g;
}

double cusp_exponent(const KernelSpec& spec) {
    switch (spec.family) {
        case KernelFamily::Laplace: return 1.0;
        case KernelFamily::Matern: return std::min(2.0 * spec.nu, 2.0);
        case KernelFamily::Gaussian: return 2.0;
        case KernelFamily::TruncatedPower: return spec.xi;
    }
    return 0.0;
}

double regression_cusp_exponent(const KernelSpec& spec) {
    switch (spec.family) {
        case KernelFamily::Laplace: return 1.0;
        case KernelFamily::Matern: return 2.0 * spec.nu;
        case KernelFamily::Gaussian: return kInf;
        case KernelFamily::TruncatedPower:
            throw std::invalid_argument("truncated power kernel has no finite Fourier transform");
    }
    return 0.0;
}

double fourier_decay_exponent(const KernelSpec& spec, int dim) {
    if (dim < 1) throw std::invalid_argument("fourier_decay_exponent: dim must be >= 1");
    return dim + regression_cusp_exponent(spec);
}

double cusp_coefficient(const KernelSpec& spec) {
    switch (spec.family) {
        case KernelFamily::Laplace:
        case KernelFamily::TruncatedPower: return 1.0;
        case KernelFamily::Matern:
            if (spec.nu >= 1.0) break;
            return std::tgamma(1.0 - spec.nu) / std::tgamma(1.0 + spec.nu) * std::pow(spec.nu / 2.0, spec.nu);
        case KernelFamily::Gaussian: break;
    }
    throw std::invalid_argument("cusp_coefficient: " + to_string(spec.family) + " has no cusp with exponent < 2");
}

CspdResult cspd_check(const KernelSpec& spec, const PointMatrix& x, std::optional<double> tol) {
    const Index p = x.rows();
    if (p < 2) throw std::invalid_argument("cspd_check: need at least two points");
    for (Index i = 0; i < p; ++i) {
        for (Index j = i + 1; j < p; ++j) {
            if (x.row(i) == x.row(j)) {
                throw std::invalid_argument("cspd_check: duplicate rows " + std::to_string(i) + " and " + std::to_string(j));
            }
        }
    }
    const Matrix g = gram_matrix(spec, x);

    // Householder reflector mapping e_0 to the unit all-ones vector; its other
    // columns are an orthonormal basis of the zero-sum subspace.
    Vector v = Vector::Constant(p, 1.0 / std::sqrt(static_cast<double>(p)));
    v(0) -= 1.0;
    const double vnorm2 = v.squaredNorm();
    Matrix h = Matrix::Identity(p, p);
    if (vnorm2 > 0.0) h -= (2.0 / vnorm2) * v * v.transpose();
    const Matrix basis = h.rightCols(p - 1);
    const Matrix projected = basis.transpose() * g * basis;

    Eigen::SelfAdjointEigenSolver<Matrix> eig(projected, Eigen::EigenvaluesOnly);
    CspdResult out;
    out.min_eigenvalue = eig.eigenvalues().minCoeff();
    out.tolerance = tol.value_or(1e-10 * static_cast<double>(p) * g.cwiseAbs().maxCoeff());
    out.pass = out.min_eigenvalue > out.tolerance;
    return out;
}

}  // namespace klc
