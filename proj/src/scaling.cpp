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

#include "klc/scaling.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace klc {
namespace {

double denom(int d, double xi) { return 3.0 * d - 3.0 + xi; }

void validate_xi(double xi) {
    if (!(xi > 0.0 && xi < 2.0)) throw std::invalid_argument("scaling: xi must lie in (0, 2)");
}

ObservableExponents large_sigma_p(int d, double xi) {
    const double den = denom(d, xi);
    ObservableExponents e;
    e.epsilon = -(d - 1.0 + xi) / den;
    e.delta = e.epsilon;
    e.alpha_bar = 2.0 * xi / den;
    e.r_c = -2.0 / den;
    return e;
}

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& means,
                          const std::vector<double>& stderrs, const WindowPolicy& window) {
    if (x.size() != means.size() || (!stderrs.empty() && stderrs.size() != x.size())) {
        throw std::invalid_argument("fit_power_law: input lengths differ");
    }
    if (x.empty()) throw std::invalid_argument("fit_power_law: no data");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(means[i] > 0.0)) {
            throw std::invalid_argument("fit_power_law: values must be positive to take logarithms");
        }
    }
    double lo = x.front();
    double hi = x.front();
    for (double v : x) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    switch (window.kind) {
        case WindowPolicy::Kind::All: break;
        case WindowPolicy::Kind::UpperHalf: lo = std::sqrt(lo * hi); break;
        case WindowPolicy::Kind::Explicit:
            lo = window.x_min;
            hi = window.x_max;
            break;
    }
    // Tiny slack so grid points computed in floating point land inside.
    const double lo_cut = lo * (1.0 - 1e-9);
    const double hi_cut = hi * (1.0 + 1e-9);

    std::vector<double> lx;
    std::vector<double> ly;
    std::vector<double> sy;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < lo_cut || x[i] > hi_cut) continue;
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(means[i]));
        sy.push_back(stderrs.empty() ? 0.0 : stderrs[i] / means[i]);
    }
    const auto n = lx.size();
    if (n < 3) throw std::invalid_argument("fit_power_law: fewer than 3 points in the window");

    bool weighted = true;
    for (double s : sy) {
        if (!(s > 0.0) || !std::isfinite(s)) weighted = false;
    }
    std::vector<double> w(n, 1.0);
    if (weighted) {
        for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / (sy[i] * sy[i]);
    }
    double sw = 0.0, sx = 0.0, sy_ = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sw += w[i];
        sx += w[i] * lx[i];
        sy_ += w[i] * ly[i];
    }
    const double mx = sx / sw;
    const double my = sy_ / sw;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = lx[i] - mx;
        const double dy = ly[i] - my;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * dy;
        syy += w[i] * dy * dy;
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("fit_power_law: window holds a single abscissa");

    PowerLawFit f;
    f.exponent = sxy / sxx;
    f.prefactor_log = my - f.exponent * mx;
    double chi2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - f.prefactor_log - f.exponent * lx[i];
        chi2 += w[i] * r * r;
    }
    f.exponent_stderr = std::sqrt(chi2 / static_cast<double>(n - 2) / sxx);
    f.r_squared = syy > 0.0 ? 1.0 - chi2 / syy : 1.0;
    f.window_min = std::exp(lx.front());
    f.window_max = f.window_min;
    for (double v : lx) {
        f.window_min = std::min(f.window_min, std::exp(v));
        f.window_max = std::max(f.window_max, std::exp(v));
    }
    f.n_points = static_cast<int>(n);
    f.weighted = weighted;
    return f;
}

std::string to_string(Regime regime) {
    switch (regime) {
        case Regime::LargeSigma: return "large_sigma";
        case Regime::IntermediateSigma: return "intermediate_sigma";
        case Regime::SmallSigma: return "small_sigma";
        case Regime::MultipleInterfaces: return "multiple_interfaces";
        case Regime::CompressionStripe: return "compression_stripe";
        case Regime::CompressionCylinder: return "compression_cylinder";
        case Regime::Regression: return "regression";
    }
    return "unknown";
}

Regime regime_from_string(const std::string& name) {
    for (Regime r : {Regime::LargeSigma, Regime::IntermediateSigma, Regime::SmallSigma, Regime::MultipleInterfaces,
                     Regime::CompressionStripe, Regime::CompressionCylinder, Regime::Regression}) {
        if (to_string(r) == name) return r;
    }
    throw std::invalid_argument("unknown regime '" + name + "'");
}

double ExponentPrediction::beta() const {
    if (!p.epsilon) throw std::logic_error("ExponentPrediction: no test-error exponent");
    return -*p.epsilon;
}

double s_factor(int n, int d, double xi) {
    validate_xi(xi);
    if (n == 1) throw std::invalid_argument("s_factor: a single interface is the large-sigma regime");
    if (n < 1) throw std::invalid_argument("s_factor: n must be positive");
    const double top = d + xi - 1.0;
    if (n > top) {
        throw std::domain_error("s_factor: n = " + std::to_string(n) + " lies in the gray region above d + xi - 1");
    }
    if (n % 2 == 1) return n <= d + xi - 4.0 ? n + 1.0 : d + xi - 3.0;
    return n <= d + xi - 3.0 ? static_cast<double>(n) : d + xi - 3.0;
}

ExponentPrediction predicted_svc_exponents(int d, double xi, const RegimeParams& regime) {
    if (d < 1) throw std::invalid_argument("predicted_svc_exponents: d must be >= 1");
    validate_xi(xi);
    const double den = denom(d, xi);
    ExponentPrediction e;
    e.regime = regime;
    e.d = d;
    e.xi = xi;
    e.p = large_sigma_p(d, xi);
    switch (regime.regime) {
        case Regime::LargeSigma: {
            ObservableExponents s;
            s.epsilon = 0.0;
            s.delta = 0.0;
            s.alpha_bar = xi;
            s.r_c = 0.0;
            e.sigma = s;
            break;
        }
        case Regime::IntermediateSigma: {
            ObservableExponents s;
            s.epsilon = -(d - 1.0) * (d - 3.0 + xi) / den;
            s.delta = s.epsilon;
            s.alpha_bar = 2.0 * xi * d / den;
            s.r_c = (d - 3.0 + xi) / den;
            e.sigma = s;
            break;
        }
        case Regime::SmallSigma: {
            e.p = {};
            e.p.epsilon = -1.0 / d;
            e.p.delta = 0.0;
            e.p.alpha_bar = 0.0;
            break;
        }
        case Regime::CompressionStripe: {
            ObservableExponents l;
            l.epsilon = -2.0 * (d - 1.0) / den;
            l.delta = l.epsilon;
            l.alpha_bar = xi * (3.0 * d - 5.0 + xi) / den;
            l.r_c = -(3.0 * d - 5.0 + xi) / den;
            e.lambda = l;
            break;
        }
        case Regime::CompressionCylinder: {
            if (regime.d_perp < 1 || regime.d_perp >= d) {
                throw std::invalid_argument("predicted_svc_exponents: need 1 <= d_perp < d");
            }
            ObservableExponents l;
            l.epsilon = -xi * regime.d_perp / den;
            l.delta = l.epsilon;
            l.alpha_bar = 3.0 * xi * regime.d_perp / den;
            l.r_c = -3.0 * regime.d_perp / den;
            e.lambda = l;
            break;
        }
        case Regime::MultipleInterfaces: {
            if (regime.n_interfaces == 1) break;
            const double s = s_factor(regime.n_interfaces, d, xi);
            ObservableExponents w;
            w.delta = -(d - 1.0) * s / den;
            w.alpha_bar = -xi * s / den;
            w.r_c = s / den;
            e.w = w;
            break;
        }
        case Regime::Regression:
            throw std::invalid_argument("predicted_svc_exponents: regression exponents need teacher and student kernels");
    }
    return e;
}

double lambda_critical(double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("lambda_critical: p must be >= 1");
    return p;
}

std::optional<double> default_exponent_tolerance(int d) {
    if (d <= 3) return 0.1;
    if (d < 10) return 0.15;
    return std::nullopt;
}

std::optional<double> ComparisonEntry::gap() const {
    if (!predicted || !fit) return std::nullopt;
    return std::abs(fit->exponent - *predicted);
}

std::vector<ComparisonEntry> compare(const ObservableExponents& predicted, const ObservableFits& fits,
                                     const ComparisonTolerances& tolerances) {
    std::vector<ComparisonEntry> out;
    auto add = [&](const char* name, const std::optional<double>& pred, const std::optional<PowerLawFit>& fit,
                   const std::optional<double>& tol) {
        ComparisonEntry e{name, pred, fit, tol, ""};
        if (!fit) e.status = "not_measured";
        else if (!pred) e.status = "not_predicted";
        else if (!tol) e.status = "report_only";
        else e.status = *e.gap() <= *tol ? "pass" : "fail";
        out.push_back(std::move(e));
    };
    add("epsilon", predicted.epsilon, fits.epsilon, tolerances.epsilon);
    add("delta", predicted.delta, fits.delta, tolerances.delta);
    add("alpha_bar", predicted.alpha_bar, fits.alpha_bar, tolerances.alpha_bar);
    add("r_c", predicted.r_c, fits.r_c, tolerances.r_c);
    return out;
}

bool all_pass(const std::vector<ComparisonEntry>& report) {
    for (const auto& e : report) {
        if (e.status == "fail") return false;
    }
    return true;
}

nlohmann::json to_json(const PowerLawFit& fit) {
    return {{"exponent", fit.exponent},     {"stderr", fit.exponent_stderr}, {"prefactor_log", fit.prefactor_log},
            {"window", {fit.window_min, fit.window_max}}, {"n_points", fit.n_points},
            {"r_squared", fit.r_squared},   {"weighted", fit.weighted}};
}

nlohmann::json to_json(const ObservableExponents& e) {
    return {{"epsilon", opt(e.epsilon)}, {"delta", opt(e.delta)}, {"alpha_bar", opt(e.alpha_bar)}, {"r_c", opt(e.r_c)}};
}

nlohmann::json to_json(const ExponentPrediction& prediction) {
    nlohmann::json j;
    j["regime"] = to_string(prediction.regime.regime);
    j["d"] = prediction.d;
    j["xi"] = prediction.xi;
    if (prediction.regime.regime == Regime::MultipleInterfaces) j["n_interfaces"] = prediction.regime.n_interfaces;
    if (prediction.regime.regime == Regime::CompressionCylinder) j["d_perp"] = prediction.regime.d_perp;
    j["beta"] = prediction.p.epsilon ? nlohmann::json(prediction.beta()) : nlohmann::json(nullptr);
    j["p_exponents"] = to_json(prediction.p);
    j["lambda_exponents"] = prediction.lambda ? to_json(*prediction.lambda) : nlohmann::json(nullptr);
    j["sigma_exponents"] = prediction.sigma ? to_json(*prediction.sigma) : nlohmann::json(nullptr);
    j["w_exponents"] = prediction.w ? to_json(*prediction.w) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json to_json(const std::vector<ComparisonEntry>& report) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : report) {
        arr.push_back({{"observable", e.observable},
                       {"predicted", opt(e.predicted)},
                       {"fit", e.fit ? to_json(*e.fit) : nlohmann::json(nullptr)},
                       {"gap", opt(e.gap())},
                       {"tolerance", opt(e.tolerance)},
                       {"status", e.status}});
    }
    return arr;
}

std::string format_report(const std::vector<ComparisonEntry>& report) {
    std::ostringstream os;
    os << std::left << std::setw(11) << "observable" << std::right << std::setw(11) << "predicted" << std::setw(11)
       << "fitted" << std::setw(10) << "stderr" << std::setw(9) << "gap" << std::setw(8) << "tol"
       << "  status\n";
    os << std::fixed << std::setprecision(4);
    auto cell = [&](const std::optional<double>& v, int width) {
        if (v) os << std::setw(width) << *v;
        else os << std::setw(width) << "-";
    };
    for (const auto& e : report) {
        os << std::left << std::setw(11) << e.observable << std::right;
        cell(e.predicted, 11);
        cell(e.fit ? std::optional<double>(e.fit->exponent) : std::nullopt, 11);
        cell(e.fit ? std::optional<double>(e.fit->exponent_stderr) : std::nullopt, 10);
        cell(e.gap(), 9);
        cell(e.tolerance, 8);
        os << "  " << e.status << "\n";
    }
    return os.str();
}

}  // namespace klc
