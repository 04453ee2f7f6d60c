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
#include <filesystem>
#include <fstream>

#include "klc/datagen.hpp"
#include "klc/special_functions.hpp"
#include "oracles/oracles.hpp"

using namespace klc;

namespace {

TaskSpec spec(int d, GeometryKind kind = GeometryKind::StripeSingle) {
    TaskSpec t;
    t.d = d;
    t.geometry.kind = kind;
    t.seed = 17;
    return t;
}

double positive_fraction(const Vector& y) { return (y.array() > 0).cast<double>().mean(); }

}  // namespace

TEST_CASE("uniform sphere rows have unit norm") {
    auto t = spec(6);
    t.sampler.kind = SamplerKind::UniformSphere;
    const PointMatrix x = sample_points(t, 500, 1);
    for (Index i = 0; i < x.rows(); ++i) CHECK(std::abs(x.row(i).norm() - 1.0) <= 1e-12);
}

TEST_CASE("gaussian cloud moments") {
    const PointMatrix x = sample_points(spec(3), 100000, 2);
    for (Index c = 0; c < 3; ++c) {
        const double m = x.col(c).mean();
        const double v = (x.col(c).array() - m).square().mean();
        CHECK(std::abs(m) <= 4e-2);
        CHECK(std::abs(v - 1.0) <= 0.05);
    }
}

TEST_CASE("uniform box stays inside its edge") {
    auto t = spec(3);
    t.sampler = {SamplerKind::UniformBox, 2.0};
    const PointMatrix x = sample_points(t, 2000, 3);
    CHECK(x.cwiseAbs().maxCoeff() <= 1.0);
}

TEST_CASE("sampling is deterministic per stream") {
    const auto t = spec(4);
    CHECK(sample_points(t, 50, 9) == sample_points(t, 50, 9));
    CHECK(sample_points(t, 50, 9) != sample_points(t, 50, 10));
}

TEST_CASE("label examples") {
    double x[4] = {0.5, 0, 0, 0};
    CHECK(label_point(spec(1), x) == 1.0);
    x[0] = 0.0;
    CHECK(label_point(spec(1), x) == 1.0);
    x[0] = -0.1;
    CHECK(label_point(spec(1), x) == -1.0);

    auto dbl = spec(2, GeometryKind::StripeDouble);
    dbl.geometry.x_min = -0.3;
    x[0] = 0.0;
    CHECK(label_point(dbl, x) == -1.0);
    x[0] = 1.3;
    CHECK(label_point(dbl, x) == 1.0);
    x[0] = -0.4;
    CHECK(label_point(dbl, x) == 1.0);

    auto sph = spec(4, GeometryKind::Sphere);
    CHECK(sphere_radius(sph) == doctest::Approx(2.0));
    double out[4] = {2.0 * 1.01, 0, 0, 0};
    double in[4] = {2.0 * 0.99, 0, 0, 0};
    CHECK(label_point(sph, out) == 1.0);
    CHECK(label_point(sph, in) == -1.0);

    auto cyl = spec(3, GeometryKind::Cylinder);
    cyl.geometry.d_parallel = 2;
    cyl.geometry.radius = 1.0;
    double c1[3] = {0.8, 0.8, 100.0};
    double c2[3] = {0.5, 0.5, 0.0};
    CHECK(label_point(cyl, c1) == 1.0);
    CHECK(label_point(cyl, c2) == -1.0);
}

TEST_CASE("multiple interfaces placement and alternation") {
    auto t = spec(2, GeometryKind::StripeMultiple);
    t.geometry.w = 0.5;
    t.geometry.n_interfaces = 3;
    CHECK(stripe_interfaces(t.geometry) == std::vector<double>{-0.5, 0.0, 0.5});
    double x[2] = {0.25, 0.0};
    CHECK(label_point(t, x) == 1.0);
    x[0] = -0.25;
    CHECK(label_point(t, x) == -1.0);
    x[0] = 0.75;
    CHECK(label_point(t, x) == -1.0);
    x[0] = -0.75;
    CHECK(label_point(t, x) == 1.0);

    t.geometry.n_interfaces = 4;
    CHECK(stripe_interfaces(t.geometry) == std::vector<double>{-0.75, -0.25, 0.25, 0.75});
}

TEST_CASE("multiple interfaces reduce to single and double") {
    const auto single = spec(2);
    auto m1 = spec(2, GeometryKind::StripeMultiple);
    m1.geometry.n_interfaces = 1;
    const PointMatrix x = sample_points(single, 3000, 4);
    CHECK(label(single, x) == label(m1, x));

    auto m2 = m1;
    m2.geometry.n_interfaces = 2;
    m2.geometry.w = 1.0;
    m2.geometry.center = 0.2;
    // Same interfaces as a double stripe on (-0.3, 0.7).
    const Vector ym = label(m2, x);
    for (Index i = 0; i < x.rows(); ++i) {
        const double x1 = x(i, 0);
        CHECK(ym(i) == ((x1 >= -0.3 && x1 < 0.7) ? -1.0 : 1.0));
    }
}

TEST_CASE("double interface x_max") {
    CHECK(double_interface_xmax(-0.3) == doctest::Approx(1.18549).epsilon(1e-5));
    for (double xmin : {-0.3, -0.1, -1.0, -2.5}) {
        const double xmax = double_interface_xmax(xmin);
        CHECK(std::abs(oracle::normal_mass(xmin, xmax) - 0.5) <= 1e-10);
        CHECK(std::abs(normal_cdf(xmax) - normal_cdf(xmin) - 0.5) <= 1e-10);
    }
    CHECK(double_interface_xmax(-8.0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK_THROWS(double_interface_xmax(0.0));
    CHECK_THROWS(double_interface_xmax(0.4));
}

TEST_CASE("label balance") {
    const auto t = spec(3);
    const PointMatrix x = sample_points(t, 20000, 5);
    const double f = positive_fraction(label(t, x));
    CHECK(f >= 0.45);
    CHECK(f <= 0.55);
    for (int d : {2, 3, 5}) {
        const auto s = spec(d, GeometryKind::Sphere);
        const double fs = positive_fraction(label(s, sample_points(s, 20000, 6)));
        CHECK(fs >= 0.35);
        CHECK(fs <= 0.65);
    }
    auto dbl = spec(2, GeometryKind::StripeDouble);
    const double fd = positive_fraction(label(dbl, sample_points(dbl, 20000, 7)));
    CHECK(std::abs(fd - 0.5) <= 0.02);
}

TEST_CASE("compress") {
    const PointMatrix x = sample_points(spec(4), 40, 8);
    CHECK(compress(x, 1.0, {1, 2, 3}) == x);
    const PointMatrix c = compress(x, 10.0, {1, 2, 3});
    CHECK(c.col(0) == x.col(0));
    CHECK(c.col(2).isApprox(x.col(2) / 10.0));
    const PointMatrix back = compress(c, 0.1, {1, 2, 3});
    CHECK((back - x).cwiseAbs().maxCoeff() <= 1e-14 * x.cwiseAbs().maxCoeff());
    CHECK(compression_axes(spec(4)) == std::vector<Index>{1, 2, 3});
    CHECK(compression_axes(spec(4, GeometryKind::Sphere)).empty());
}

TEST_CASE("labels are computed before compression") {
    auto t = spec(3, GeometryKind::StripeDouble);
    auto tc = t;
    tc.lambda = 1e-3;
    const Task a = make_classification_task(t, 200, 3);
    const Task b = make_classification_task(tc, 200, 3);
    CHECK(*a.y == *b.y);
    CHECK(b.x.col(1).isApprox(a.x.col(1) * 1e3));
    CHECK(b.x.col(0) == a.x.col(0));
}

TEST_CASE("sphere rejects compression") {
    auto t = spec(3, GeometryKind::Sphere);
    t.lambda = 2.0;
    CHECK_THROWS_AS(t.validate(), std::invalid_argument);
}

TEST_CASE("teacher field invariance under perpendicular coordinates") {
    auto t = spec(4);
    PointMatrix x = sample_points(t, 30, 10);
    const auto teacher = KernelSpec::matern(1.0, 2.0).restricted_to(2);
    const Vector z0 = sample_teacher_field(teacher, x, 77);
    x.col(3).array() += 3.0;
    x.col(2).setConstant(-1.0);
    CHECK(sample_teacher_field(teacher, x, 77) == z0);

    PointMatrix pair(2, 4);
    pair << 0.3, -0.2, 1.0, 2.0, 0.3, -0.2, -5.0, 0.5;
    const Vector zp = sample_teacher_field(teacher, pair, 5);
    CHECK(std::abs(zp(0) - zp(1)) <= 1e-4);
}

TEST_CASE("teacher field single point variance") {
    PointMatrix x = PointMatrix::Zero(1, 2);
    const auto teacher = KernelSpec::matern(1.5, 1.0);
    double s2 = 0.0;
    const int n = 10000;
    for (int r = 0; r < n; ++r) {
        const double z = sample_teacher_field(teacher, x, static_cast<std::uint64_t>(r))(0);
        s2 += z * z;
    }
    CHECK(std::abs(s2 / n - 1.0) <= 0.05);
}

TEST_CASE("teacher field rejects the truncated power kernel") {
    const PointMatrix x = sample_points(spec(2), 5, 1);
    CHECK_THROWS(sample_teacher_field(KernelSpec::truncated_power(1.0, 1.0), x, 1));
}

TEST_CASE("seed mixing is order sensitive and stable") {
    CHECK(mix_seed(1, {2, 3}) != mix_seed(1, {3, 2}));
    CHECK(mix_seed(1, {2, 3}) == mix_seed(1, {2, 3}));
    CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
}

TEST_CASE("task csv dump") {
    const Task t = make_classification_task(spec(2), 5, 1);
    const auto path = std::filesystem::temp_directory_path() / "klc_task_test.csv";
    write_task_csv(t, path.string());
    std::ifstream in(path);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) ++n;
    CHECK(n >= 5);
    std::filesystem::remove(path);
}
