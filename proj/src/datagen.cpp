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

#include "klc/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "klc/special_functions.hpp"

namespace klc {

std::string to_string(GeometryKind kind) {
    switch (kind) {
        case GeometryKind::StripeSingle: return "stripe_single";
        case GeometryKind::StripeDouble: return "stripe_double";
        case GeometryKind::StripeMultiple: return "stripe_multiple";
        case GeometryKind::Sphere: return "sphere";
        case GeometryKind::Cylinder: return "cylinder";
        case GeometryKind::RegressionField: return "regression_field";
    }
    return "unknown";
}

GeometryKind geometry_kind_from_string(const std::string& name) {
    for (auto k : {GeometryKind::StripeSingle, GeometryKind::StripeDouble, GeometryKind::StripeMultiple,
                   GeometryKind::Sphere, GeometryKind::Cylinder, GeometryKind::RegressionField}) {
        if (to_string(k) == name) return k;
    }
    throw std::invalid_argument("unknown geometry '" + name + "'");
}

std::string to_string(SamplerKind kind) {
    switch (kind) {
        case SamplerKind::GaussianCloud: return "gaussian";
        case SamplerKind::UniformSphere: return "uniform_sphere";
        case SamplerKind::UniformBox: return "uniform_box";
    }
    return "unknown";
}

SamplerKind sampler_kind_from_string(const std::string& name) {
    for (auto k : {SamplerKind::GaussianCloud, SamplerKind::UniformSphere, SamplerKind::UniformBox}) {
        if (to_string(k) == name) return k;
    }
    throw std::invalid_argument("unknown sampler '" + name + "'");
}

void TaskSpec::validate() const {
    if (d < 1) throw std::invalid_argument("task: d must be >= 1");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("task: lambda must be finite and > 0");
    if (!(sampler.gamma > 0.0)) throw std::invalid_argument("task: gamma must be > 0");
    switch (geometry.kind) {
        case GeometryKind::StripeDouble:
            if (!(geometry.x_min < 0.0)) throw std::invalid_argument("task: stripe_double needs x_min < 0");
            break;
        case GeometryKind::StripeMultiple:
            if (geometry.n_interfaces < 1) throw std::invalid_argument("task: n_interfaces must be >= 1");
            if (!(geometry.w > 0.0)) throw std::invalid_argument("task: interface spacing w must be > 0");
            break;
        case GeometryKind::Sphere:
            if (lambda != 1.0) throw std::invalid_argument("task: compression is not defined for the sphere");
            break;
        case GeometryKind::Cylinder:
            if (geometry.d_parallel < 1 || geometry.d_parallel >= d) {
                throw std::invalid_argument("task: cylinder needs 1 <= d_parallel < d");
            }
            break;
        case GeometryKind::RegressionField:
            if (!geometry.teacher) throw std::invalid_argument("task: regression_field needs a teacher kernel");
            if (!geometry.teacher->strictly_positive_definite()) {
                throw std::invalid_argument("task: teacher kernel must be strictly positive definite");
            }
            if (geometry.d_parallel < 1 || geometry.d_parallel > d) {
                throw std::invalid_argument("task: regression d_parallel must lie in [1, d]");
            }
            break;
        case GeometryKind::StripeSingle: break;
    }
    if (geometry.radius && !(*geometry.radius > 0.0)) throw std::invalid_argument("task: radius must be > 0");
}

bool TaskSpec::is_stripe() const {
    return geometry.kind == GeometryKind::StripeSingle || geometry.kind == GeometryKind::StripeDouble ||
           geometry.kind == GeometryKind::StripeMultiple;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = splitmix64(base);
    for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
    return h;
}

PointMatrix sample_points(const TaskSpec& spec, Index p, std::uint64_t stream) {
    Rng rng(mix_seed(spec.seed, {stream}));
    return sample_points(spec, p, rng);
}

PointMatrix sample_points(const TaskSpec& spec, Index p, Rng& rng) {
    if (p < 1) throw std::invalid_argument("sample_points: p must be >= 1");
    PointMatrix x(p, spec.d);
    const double gamma = spec.sampler.gamma;
    switch (spec.sampler.kind) {
        case SamplerKind::GaussianCloud: {
            std::normal_distribution<double> normal(0.0, gamma);
            for (Index i = 0; i < p; ++i)
                for (Index k = 0; k < spec.d; ++k) x(i, k) = normal(rng);
            break;
        }
        case SamplerKind::UniformSphere: {
            std::normal_distribution<double> normal(0.0, 1.0);
            for (Index i = 0; i < p; ++i) {
                double norm = 0.0;
                do {
                    for (Index k = 0; k < spec.d; ++k) x(i, k) = normal(rng);
                    norm = x.row(i).norm();
                } while (norm == 0.0);
                x.row(i) /= norm;
            }
            break;
        }
        case SamplerKind::UniformBox: {
            std::uniform_real_distribution<double> uniform(-0.5 * gamma, 0.5 * gamma);
            for (Index i = 0; i < p; ++i)
                for (Index k = 0; k < spec.d; ++k) x(i, k) = uniform(rng);
            break;
        }
    }
    return x;
}

std::vector<double> stripe_interfaces(const Geometry& g) {
    switch (g.kind) {
        case GeometryKind::StripeSingle: return {0.0};
        case GeometryKind::StripeDouble: return {g.x_min, double_interface_xmax(g.x_min)};
        case GeometryKind::StripeMultiple: {
            std::vector<double> pos;
            const int n = g.n_interfaces;
            if (n % 2 == 1) {
                for (int i = -(n - 1) / 2; i <= (n - 1) / 2; ++i) pos.push_back(g.center + i * g.w);
            } else {
                for (int i = -n / 2; i <= n / 2 - 1; ++i) pos.push_back(g.center + (i + 0.5) * g.w);
            }
            return pos;
        }
        default: throw std::invalid_argument("stripe_interfaces: not a stripe geometry");
    }
}

double sphere_radius(const TaskSpec& spec) {
    if (spec.geometry.radius) return *spec.geometry.radius;
    const int dims = spec.geometry.kind == GeometryKind::Cylinder ? spec.geometry.d_parallel : spec.d;
    return spec.sampler.gamma * std::sqrt(static_cast<double>(dims));
}

namespace {

// Number of interfaces at or left of x, with the interface itself counting as passed (tie -> +1 side).
int interfaces_passed(const std::vector<double>& pos, double x1) {
    int k = 0;
    for (double c : pos)
        if (x1 >= c) ++k;
    return k;
}

double stripe_label(const Geometry& g, const std::vector<double>& pos, double x1) {
    const int k = interfaces_passed(pos, x1);
    switch (g.kind) {
        case GeometryKind::StripeSingle: return k == 1 ? 1.0 : -1.0;
        case GeometryKind::StripeDouble: return k == 1 ? -1.0 : 1.0;
        default: {
            const int n = static_cast<int>(pos.size());
            // Odd n: +1 just right of the middle interface. Even n: +1 on both outer sides.
            const int shift = n % 2 == 1 ? (n + 1) / 2 : 0;
            return (k - shift) % 2 == 0 ? 1.0 : -1.0;
        }
    }
}

double partial_norm(const double* x, int from, int to) {
    double s = 0.0;
    for (int k = from; k < to; ++k) s += x[k] * x[k];
    return std::sqrt(s);
}

}  // namespace

double label_point(const TaskSpec& spec, const double* x) {
    const Geometry& g = spec.geometry;
    switch (g.kind) {
        case GeometryKind::StripeSingle:
        case GeometryKind::StripeDouble:
        case GeometryKind::StripeMultiple: return stripe_label(g, stripe_interfaces(g), x[0]);
        case GeometryKind::Sphere: return partial_norm(x, 0, spec.d) >= sphere_radius(spec) ? 1.0 : -1.0;
        case GeometryKind::Cylinder: return partial_norm(x, 0, g.d_parallel) >= sphere_radius(spec) ? 1.0 : -1.0;
        case GeometryKind::RegressionField: break;
    }
    throw std::invalid_argument("label: regression tasks carry field values, not labels");
}

Vector label(const TaskSpec& spec, const PointMatrix& x) {
    if (x.cols() != spec.d) throw std::invalid_argument("label: dimension mismatch");
    Vector y(x.rows());
    if (spec.is_stripe()) {
        const auto pos = stripe_interfaces(spec.geometry);
        for (Index i = 0; i < x.rows(); ++i) y(i) = stripe_label(spec.geometry, pos, x(i, 0));
        return y;
    }
    for (Index i = 0; i < x.rows(); ++i) y(i) = label_point(spec, x.row(i).data());
    return y;
}

double interface_distance(const TaskSpec& spec, const double* x) {
    const Geometry& g = spec.geometry;
    switch (g.kind) {
        case GeometryKind::StripeSingle:
        case GeometryKind::StripeDouble:
        case GeometryKind::StripeMultiple: {
            double best = std::numeric_limits<double>::infinity();
            for (double c : stripe_interfaces(g)) best = std::min(best, std::abs(x[0] - c));
            return best;
        }
        case GeometryKind::Sphere: return std::abs(partial_norm(x, 0, spec.d) - sphere_radius(spec));
        case GeometryKind::Cylinder: return std::abs(partial_norm(x, 0, g.d_parallel) - sphere_radius(spec));
        case GeometryKind::RegressionField: break;
    }
    throw std::invalid_argument("interface_distance: regression tasks have no interface");
}

double double_interface_xmax(double x_min) {
    if (!(x_min < 0.0)) throw std::domain_error("double_interface_xmax: x_min must be < 0");
    // Phi(x_max) - Phi(x_min) = 1/2  <=>  erf(x_max / sqrt2) = 1 + erf(x_min / sqrt2).
    const double target = 1.0 + std::erf(x_min / std::numbers::sqrt2);
    if (target <= 0.0) return 0.0;
    return std::numbers::sqrt2 * erf_inv(target);
}

std::vector<Index> compression_axes(const TaskSpec& spec) {
    std::vector<Index> axes;
    switch (spec.geometry.kind) {
        case GeometryKind::StripeSingle:
        case GeometryKind::StripeDouble:
        case GeometryKind::StripeMultiple:
            for (Index k = 1; k < spec.d; ++k) axes.push_back(k);
            break;
        case GeometryKind::Cylinder:
            for (Index k = spec.geometry.d_parallel; k < spec.d; ++k) axes.push_back(k);
            break;
        case GeometryKind::RegressionField:
            for (Index k = spec.geometry.d_parallel; k < spec.d; ++k) axes.push_back(k);
            break;
        case GeometryKind::Sphere: break;
    }
    return axes;
}

PointMatrix compress(const PointMatrix& x, double lambda, const std::vector<Index>& axes) {
    if (!(lambda > 0.0)) throw std::invalid_argument("compress: lambda must be > 0");
    PointMatrix out = x;
    if (lambda == 1.0) return out;
    for (Index k : axes) {
        if (k < 0 || k >= x.cols()) throw std::invalid_argument("compress: axis out of range");
        out.col(k) /= lambda;
    }
    return out;
}

Vector sample_teacher_field(const KernelSpec& teacher, const PointMatrix& x, std::uint64_t seed) {
    if (!teacher.strictly_positive_definite()) {
        throw std::invalid_argument("sample_teacher_field: teacher must be strictly positive definite");
    }
    Matrix g = gram_matrix(teacher, x);
    const Index n = g.rows();
    const double mean_diag = g.diagonal().mean();
    std::string tried;
    for (double rung : kJitterLadder) {
        const double jitter = rung * mean_diag;
        Matrix a = g;
        a.diagonal().array() += jitter;
        Eigen::LLT<Matrix> llt(a);
        if (llt.info() == Eigen::Success) {
            Rng rng(seed);
            std::normal_distribution<double> normal(0.0, 1.0);
            Vector white(n);
            for (Index i = 0; i < n; ++i) white(i) = normal(rng);
            return llt.matrixL() * white;
        }
        std::ostringstream os;
        os << (tried.empty() ? "" : ", ") << jitter;
        tried += os.str();
    }
    throw NumericalError("sample_teacher_field: Cholesky failed for jitters {" + tried + "}");
}

Task make_classification_task(const TaskSpec& spec, Index p, std::uint64_t stream) {
    Rng rng(mix_seed(spec.seed, {stream}));
    return make_classification_task(spec, p, rng);
}

Task make_classification_task(const TaskSpec& spec, Index p, Rng& rng) {
    spec.validate();
    Task task;
    task.spec = spec;
    PointMatrix raw = sample_points(spec, p, rng);
    task.y = label(spec, raw);
    task.x = compress(raw, spec.lambda, compression_axes(spec));
    return task;
}

void write_task_csv(const Task& task, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << std::setprecision(17);
    for (Index k = 0; k < task.x.cols(); ++k) out << "x" << (k + 1) << ",";
    out << (task.y ? "y" : "z") << "\n";
    const Vector& v = task.y ? *task.y : *task.z;
    for (Index i = 0; i < task.x.rows(); ++i) {
        for (Index k = 0; k < task.x.cols(); ++k) out << task.x(i, k) << ",";
        out << v(i) << "\n";
    }
}

}  // namespace klc
