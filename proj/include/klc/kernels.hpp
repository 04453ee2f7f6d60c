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

#include <optional>
#include <string>

#include "klc/common.hpp"

namespace klc {

enum class KernelFamily { Laplace, Matern, Gaussian, TruncatedPower };

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

/// Isotropic kernel K(r / sigma).
///
/// Laplace, Matern and Gaussian are normalized to K(0) = 1. TruncatedPower is
/// the bare cusp term -(r / sigma)^xi with the constant dropped, so K(0) = 0;
/// it is only conditionally positive definite and is meant for SVC, where the
/// charge-conservation constraint removes any constant.
///
/// When d_parallel is set, distances only see the first d_parallel
/// coordinates of each point.
struct KernelSpec {
    KernelFamily family = KernelFamily::Laplace;
    double sigma = 1.0;
    double nu = 0.5;  // Matern only
    double xi = 1.0;  // TruncatedPower only
    std::optional<int> d_parallel;

    static KernelSpec laplace(double sigma);
    static KernelSpec matern(double nu, double sigma);
    static KernelSpec gaussian(double sigma);
    static KernelSpec truncated_power(double xi, double sigma);

    [[nodiscard]] KernelSpec restricted_to(int d_par) const;
    [[nodiscard]] KernelSpec with_sigma(double s) const;

    /// Throws std::invalid_argument when the parameters leave the family's domain.
    void validate() const;

    /// Throws when d_parallel exceeds the ambient dimension.
    void validate_for_dimension(Index dim) const;

    [[nodiscard]] bool strictly_positive_definite() const { return family != KernelFamily::TruncatedPower; }

    bool operator==(const KernelSpec&) const = default;
};

double eval_kernel(const KernelSpec& spec, double r);

/// Matern correlation 2^(1-nu)/Gamma(nu) z^nu K_nu(z) through the Bessel
/// function for every nu, without the closed forms used by eval_kernel at
/// nu = 1/2, 3/2, 5/2.
double matern_bessel(double nu, double z);

/// Euclidean distance between two rows, restricted to the first d_parallel
/// coordinates when the spec says so.
double kernel_distance(const KernelSpec& spec, const double* a, const double* b, Index dim);

/// G(i, j) = K(dist(x_i, x_i)). Exactly symmetric.
Matrix gram_matrix(const KernelSpec& spec, const PointMatrix& x);

/// G(i, j) = K(dist(x_i, y_j)).
Matrix gram_matrix(const KernelSpec& spec, const PointMatrix& x, const PointMatrix& y);

/// Exponent of the non-analytic term K ~ K(0) - c r^xi at the origin as seen
/// by SVC: 1 for Laplace, min(2 nu, 2) for Matern, 2 for Gaussian.
double cusp_exponent(const KernelSpec& spec);

/// Exponent theta of the singular term at the origin as used in regression
/// (Laplace 1, Matern 2 nu, Gaussian +inf).
double regression_cusp_exponent(const KernelSpec& spec);

/// High-frequency decay exponent of the dim-dimensional Fourier transform,
/// dim + theta; +inf for Gaussian. Throws for TruncatedPower.
double fourier_decay_exponent(const KernelSpec& spec, int dim);

/// Coefficient c of K(r/sigma) = K(0) - c (r/sigma)^xi + ... for kernels with
/// a cusp exponent strictly below 2. Laplace: 1. Matern (nu < 1):
/// Gamma(1 - nu) / Gamma(1 + nu) * (nu / 2)^nu. TruncatedPower: 1.
double cusp_coefficient(const KernelSpec& spec);

struct CspdResult {
    bool pass = false;
    double min_eigenvalue = 0.0;
    double tolerance = 0.0;
};

/// Eigenvalues of P G P with P = I - 11^T / p, restricted to the (p-1)-dim
/// complement of the all-ones vector. Passes iff the smallest one exceeds tol
/// (default 1e-10 * p * max|G|). Rows of x must be pairwise distinct.
CspdResult cspd_check(const KernelSpec& spec, const PointMatrix& x, std::optional<double> tol = std::nullopt);

}  // namespace klc
