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

namespace klc {

/// Modified Bessel function of the second kind K_nu(x) for nu >= 0, x > 0.
///
/// Temme's series is used for x < kBesselSeriesThreshold, Temme/Steed's
/// continued fraction above it. Half-integer orders go through the same
/// path; the order is split as nu = n + mu with |mu| <= 1/2 and raised by
/// forward recurrence, so no reflection formula is involved.
double bessel_k(double nu, double x);

/// exp(x) * K_nu(x). Finite for every x > 0, including where K_nu underflows.
double bessel_k_scaled(double nu, double x);

inline constexpr double kBesselSeriesThreshold = 2.0;

/// Inverse error function on (-1, 1). Newton refinement on std::erf from a
/// closed-form initial guess; |erf(erf_inv(y)) - y| is at rounding level.
double erf_inv(double y);

/// Standard normal cumulative distribution function.
double normal_cdf(double x);

}  // namespace klc
