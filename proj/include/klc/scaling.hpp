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
#include <vector>

#include <json.hpp>

namespace klc {

struct WindowPolicy {
    enum class Kind { UpperHalf, All, Explicit };
    Kind kind = Kind::UpperHalf;
    double x_min = 0.0;  // Explicit only, inclusive
    double x_max = 0.0;

    static WindowPolicy upper_half() { return {}; }
    static WindowPolicy all() { return {Kind::All, 0.0, 0.0}; }
    static WindowPolicy explicit_range(double lo, double hi) { return {Kind::Explicit, lo, hi}; }
};

struct PowerLawFit {
    double exponent = 0.0;
    double exponent_stderr = 0.0;
    double prefactor_log = 0.0;
    double window_min = 0.0;
    double window_max = 0.0;
    int n_points = 0;
    double r_squared = 0.0;
    bool weighted = false;
};

/// Least squares of log(mean) on log(x) inside the window. Weights are
/// (mean / stderr)^2 when every stderr is positive, uniform otherwise. The
/// slope error is scaled by the reduced chi-square.
PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& means,
                          const std::vector<double>& stderrs, const WindowPolicy& window = {});

enum class Regime {
    LargeSigma,
    IntermediateSigma,
    SmallSigma,
    MultipleInterfaces,
    CompressionStripe,
    CompressionCylinder,
    Regression
};

std::string to_string(Regime regime);
Regime regime_from_string(const std::string& name);

struct RegimeParams {
    Regime regime = Regime::LargeSigma;
    int n_interfaces = 1;  // MultipleInterfaces
    int d_perp = 1;        // CompressionCylinder
};

/// Signed exponents: observable ~ variable^exponent. Unset = no prediction.
struct ObservableExponents {
    std::optional<double> epsilon;
    std::optional<double> delta;
    std::optional<double> alpha_bar;
    std::optional<double> r_c;
};

struct ExponentPrediction {
    RegimeParams regime;
    int d = 0;
    double xi = 0.0;
    ObservableExponents p;
    std::optional<ObservableExponents> lambda;
    std::optional<ObservableExponents> sigma;  // in sigma / gamma
    std::optional<ObservableExponents> w;

    /// Learning-curve exponent, epsilon ~ p^-beta.
    [[nodiscard]] double beta() const;
};

/// Piecewise multiple-interface factor. Throws std::domain_error above
/// d + xi - 1 and std::invalid_argument for n = 1.
double s_factor(int n, int d, double xi);

ExponentPrediction predicted_svc_exponents(int d, double xi, const RegimeParams& regime);

/// Compression scale where the stripe task crosses over to the 1-d problem.
double lambda_critical(double p);

/// Exponent tolerance by dimension; nullopt means report only.
std::optional<double> default_exponent_tolerance(int d);

struct ComparisonEntry {
    std::string observable;
    std::optional<double> predicted;
    std::optional<PowerLawFit> fit;
    std::optional<double> tolerance;
    std::string status;  // pass, fail, report_only, not_measured, not_predicted

    [[nodiscard]] std::optional<double> gap() const;
};

struct ObservableFits {
    std::optional<PowerLawFit> epsilon;
    std::optional<PowerLawFit> delta;
    std::optional<PowerLawFit> alpha_bar;
    std::optional<PowerLawFit> r_c;
};

struct ComparisonTolerances {
    std::optional<double> epsilon;
    std::optional<double> delta;
    std::optional<double> alpha_bar;
    std::optional<double> r_c;
};

std::vector<ComparisonEntry> compare(const ObservableExponents& predicted, const ObservableFits& fits,
                                     const ComparisonTolerances& tolerances);

[[nodiscard]] bool all_pass(const std::vector<ComparisonEntry>& report);

nlohmann::json to_json(const PowerLawFit& fit);
nlohmann::json to_json(const ObservableExponents& e);
nlohmann::json to_json(const ExponentPrediction& prediction);
nlohmann::json to_json(const std::vector<ComparisonEntry>& report);

/// Fixed-width text table of a comparison report.
std::string format_report(const std::vector<ComparisonEntry>& report);

}  // namespace klc
