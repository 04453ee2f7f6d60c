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

#include "klc/scaling.hpp"
#include "oracles/oracles.hpp"

using namespace klc;

namespace {

RegimeParams regime(Regime r) {
    RegimeParams p;
    p.regime = r;
    return p;
}

}  // namespace

TEST_CASE("exact power law fits") {
    std::vector<double> x, y;
    for (double v = 10; v <= 1e4; v *= 2) {
        x.push_back(v);
        y.push_back(3.0 * std::pow(v, -0.37));
    }
    const PowerLawFit f = fit_power_law(x, y, {}, WindowPolicy::all());
    CHECK(f.exponent == doctest::Approx(-0.37).epsilon(1e-12));
    CHECK(f.prefactor_log == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(f.exponent_stderr <= 1e-12);
    CHECK(f.r_squared == doctest::Approx(1.0));
    CHECK(f.n_points == static_cast<int>(x.size()));
    CHECK(f.exponent == doctest::Approx(oracle::loglog_slope(x, y)).epsilon(1e-12));

    const PowerLawFit flat = fit_power_law(x, std::vector<double>(x.size(), 0.2), {});
    CHECK(std::abs(flat.exponent) <= 1e-12);
}

TEST_CASE("fit windows") {
    std::vector<double> x, y;
    for (double v = 1; v <= 1024; v *= 2) {
        x.push_back(v);
        y.push_back(v < 30 ? 1.0 : std::pow(v, -0.5));
    }
    const PowerLawFit upper = fit_power_law(x, y, {});
    CHECK(upper.window_min >= std::sqrt(1024.0) - 1e-9);
    CHECK(upper.exponent == doctest::Approx(-0.5).epsilon(1e-12));
    const PowerLawFit ex = fit_power_law(x, y, {}, WindowPolicy::explicit_range(64, 512));
    CHECK(ex.n_points == 4);
    CHECK(ex.window_max == doctest::Approx(512.0));
    CHECK_THROWS(fit_power_law(x, y, {}, WindowPolicy::explicit_range(100, 120)));
    CHECK_THROWS(fit_power_law({1.0, 2.0, 4.0}, {1.0, -1.0, 1.0}, {}, WindowPolicy::all()));
}

TEST_CASE("weighted fits discount noisy points") {
    const std::vector<double> x{1, 2, 4, 8, 16};
    std::vector<double> y{1.0, 0.5, 0.25, 0.125, 0.0625};
    y[4] *= 3.0;
    const std::vector<double> se{1e-3, 1e-3, 1e-3, 1e-3, 10.0};
    const PowerLawFit w = fit_power_law(x, y, se, WindowPolicy::all());
    CHECK(w.weighted);
    CHECK(w.exponent == doctest::Approx(-1.0).epsilon(1e-3));
}

TEST_CASE("large sigma predictions") {
    const auto e2 = predicted_svc_exponents(2, 1.0, regime(Regime::LargeSigma));
    CHECK(e2.beta() == doctest::Approx(0.5));
    CHECK(*e2.p.delta == doctest::Approx(-0.5));
    CHECK(*e2.p.alpha_bar == doctest::Approx(0.5));
    CHECK(*e2.p.r_c == doctest::Approx(-0.5));
    CHECK(*e2.sigma->alpha_bar == doctest::Approx(1.0));

    const auto e3 = predicted_svc_exponents(3, 1.0, regime(Regime::LargeSigma));
    CHECK(e3.beta() == doctest::Approx(3.0 / 7.0));
    CHECK(predicted_svc_exponents(1000, 1.0, regime(Regime::LargeSigma)).beta() == doctest::Approx(1.0 / 3.0).epsilon(1e-2));

    double prev = 1.0;
    for (int d = 1; d <= 30; ++d) {
        for (double xi : {0.3, 1.0, 1.9}) {
            const auto e = predicted_svc_exponents(d, xi, regime(Regime::LargeSigma));
            CHECK(*e.p.epsilon == *e.p.delta);
            if (d >= 2) {
                CHECK(e.beta() > 1.0 / 3.0);
                CHECK(e.beta() < 1.0);
            }
        }
        const double b = predicted_svc_exponents(d, 1.0, regime(Regime::LargeSigma)).beta();
        if (d >= 2) CHECK(b <= prev);
        prev = b;
    }
}

TEST_CASE("other regimes") {
    CHECK(predicted_svc_exponents(5, 1.0, regime(Regime::SmallSigma)).beta() == doctest::Approx(0.2));
    const auto c = predicted_svc_exponents(3, 1.0, regime(Regime::CompressionStripe));
    CHECK(*c.lambda->epsilon == doctest::Approx(-4.0 / 7.0));
    CHECK(*c.lambda->epsilon == *c.lambda->delta);

    const auto im = predicted_svc_exponents(4, 1.0, regime(Regime::IntermediateSigma));
    CHECK(*im.sigma->epsilon == doctest::Approx(-3.0 * 2.0 / 10.0));

    RegimeParams cyl = regime(Regime::CompressionCylinder);
    cyl.d_perp = 2;
    CHECK(*predicted_svc_exponents(4, 1.0, cyl).lambda->epsilon == doctest::Approx(-0.2));
    cyl.d_perp = 4;
    CHECK_THROWS(predicted_svc_exponents(4, 1.0, cyl));

    RegimeParams multi = regime(Regime::MultipleInterfaces);
    multi.n_interfaces = 2;
    const auto m = predicted_svc_exponents(5, 1.0, multi);
    CHECK(*m.w->delta == doctest::Approx(-4.0 * 2.0 / 13.0));
    CHECK_THROWS(predicted_svc_exponents(3, 1.0, regime(Regime::Regression)));
    CHECK(regime_from_string(to_string(Regime::CompressionCylinder)) == Regime::CompressionCylinder);
    CHECK_THROWS(regime_from_string("nope"));
}

TEST_CASE("s_factor") {
    CHECK(s_factor(2, 5, 1.0) == 2.0);
    CHECK(s_factor(3, 5, 1.0) == 3.0);
    CHECK(s_factor(2, 3, 1.0) == 1.0);
    CHECK(s_factor(3, 10, 1.0) == 4.0);
    CHECK_THROWS_AS(s_factor(1, 5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(s_factor(6, 5, 1.0), std::domain_error);
    CHECK_NOTHROW(s_factor(5, 5, 1.0));
    // Non-decreasing in n within each parity, continuous at the switches in d.
    for (int d = 3; d <= 12; ++d) {
        for (int n = 2; n + 2 <= d; ++n) CHECK(s_factor(n + 2, d, 1.0) >= s_factor(n, d, 1.0));
    }
}

TEST_CASE("compare statuses") {
    ObservableExponents pred;
    pred.epsilon = -0.5;
    pred.delta = -0.5;
    pred.alpha_bar = 0.5;
    ObservableFits fits;
    PowerLawFit f;
    f.exponent = -0.55;
    fits.epsilon = f;
    f.exponent = -0.8;
    fits.delta = f;
    fits.r_c = f;
    ComparisonTolerances tol;
    tol.epsilon = 0.1;
    tol.delta = 0.1;
    const auto rep = compare(pred, fits, tol);
    REQUIRE(rep.size() == 4);
    CHECK(rep[0].status == "pass");
    CHECK(rep[1].status == "fail");
    CHECK(rep[2].status == "not_measured");
    CHECK(rep[3].status == "not_predicted");
    CHECK_FALSE(all_pass(rep));
    CHECK(*rep[0].gap() == doctest::Approx(0.05));

    tol.delta.reset();
    const auto rep2 = compare(pred, fits, tol);
    CHECK(rep2[1].status == "report_only");
    CHECK(all_pass(rep2));
    CHECK(to_json(rep2).size() == 4);
    CHECK(format_report(rep2).find("report_only") != std::string::npos);
}

TEST_CASE("tolerances and lambda critical") {
    CHECK(*default_exponent_tolerance(2) == 0.1);
    CHECK(*default_exponent_tolerance(3) == 0.1);
    CHECK(*default_exponent_tolerance(5) == 0.15);
    CHECK_FALSE(default_exponent_tolerance(10).has_value());
    CHECK(lambda_critical(1000.0) == 1000.0);
    CHECK_THROWS(lambda_critical(0.5));
}

TEST_CASE("prediction json") {
    const auto j = to_json(predicted_svc_exponents(3, 1.0, regime(Regime::LargeSigma)));
    CHECK(j.contains("p_exponents"));
    CHECK(j["beta"].get<double>() == doctest::Approx(3.0 / 7.0));
    CHECK(j["d"] == 3);
}
