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

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "klc/common.hpp"
#include "klc/kernels.hpp"

namespace klc {

enum class GeometryKind { StripeSingle, StripeDouble, StripeMultiple, Sphere, Cylinder, RegressionField };

std::string to_string(GeometryKind kind);
GeometryKind geometry_kind_from_string(const std::string& name);

/// Label geometry. Only the fields relevant to `kind` are read.
struct Geometry {
    GeometryKind kind = GeometryKind::StripeSingle;
    double x_min = -0.3;                // StripeDouble
    int n_interfaces = 1;               // StripeMultiple
    double w = 1.0;                     // StripeMultiple spacing
    double center = 0.0;                // StripeMultiple offset of the interface pattern
    std::optional<double> radius;       // Sphere, Cylinder; Sphere defaults to gamma * sqrt(d)
    int d_parallel = 1;                 // Cylinder, RegressionField
    std::optional<KernelSpec> teacher;  // RegressionField

    bool operator==(const Geometry&) const = default;
};

enum class SamplerKind { GaussianCloud, UniformSphere, UniformBox };

std::string to_string(SamplerKind kind);
SamplerKind sampler_kind_from_string(const std::string& name);

struct Sampler {
    SamplerKind kind = SamplerKind::GaussianCloud;
    double gamma = 1.0;  // std of each coordinate (cloud) or box edge length

    bool operator==(const Sampler&) const = default;
};

struct TaskSpec {
    Geometry geometry;
    Sampler sampler;
    int d = 2;
    double lambda = 1.0;  // compression factor, 1 = none
    std::uint64_t seed = 0;

    void validate() const;
    [[nodiscard]] bool is_stripe() const;
    bool operator==(const TaskSpec&) const = default;
};

struct Task {
    PointMatrix x;
    std::optional<Vector> y;
    std::optional<Vector> z;
    TaskSpec spec;
};

// ---- seeding -------------------------------------------------------------

/// splitmix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent stream seed from a base seed and a tuple of keys.
/// Order-sensitive and stable across platforms.
std::uint64_t mix_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys);

using Rng = std::mt19937_64;

// ---- operations ----------------------------------------------------------

/// p points from the spec's sampler, in the uncompressed frame.
PointMatrix sample_points(const TaskSpec& spec, Index p, std::uint64_t stream);

/// Same as above with an external generator (used for rejection sampling).
PointMatrix sample_points(const TaskSpec& spec, Index p, Rng& rng);

/// Interface positions along x_1 for the stripe geometries.
std::vector<double> stripe_interfaces(const Geometry& geometry);

double sphere_radius(const TaskSpec& spec);

/// +-1 labels computed on uncompressed coordinates.
Vector label(const TaskSpec& spec, const PointMatrix& x);

/// Label of a single point.
double label_point(const TaskSpec& spec, const double* x);

/// Distance of a point to the closest label interface. Invariant under the
/// compression of the spec (only the relevant coordinates enter).
double interface_distance(const TaskSpec& spec, const double* x);

/// x_max such that P(x_min < x_1 < x_max) = 1/2 for x_1 ~ N(0, 1).
double double_interface_xmax(double x_min);

/// Axes that a compression of the spec's task acts on (0-based).
std::vector<Index> compression_axes(const TaskSpec& spec);

/// Divides the listed columns by lambda.
PointMatrix compress(const PointMatrix& x, double lambda, const std::vector<Index>& axes);

/// Cholesky jitter ladder, as multiples of the mean Gram diagonal.
inline constexpr double kJitterLadder[] = {1e-12, 1e-10, 1e-8};

/// Z = L g, L L^T = G_teacher(x) + jitter I, g ~ N(0, I) from `seed`.
/// Throws NumericalError listing the attempted jitters if every rung fails.
Vector sample_teacher_field(const KernelSpec& teacher, const PointMatrix& x, std::uint64_t seed);

/// Samples, labels and compresses p points for a classification task.
Task make_classification_task(const TaskSpec& spec, Index p, std::uint64_t stream);
Task make_classification_task(const TaskSpec& spec, Index p, Rng& rng);

/// One-row-per-point CSV: coordinates then label or value.
void write_task_csv(const Task& task, const std::string& path);

}  // namespace klc
