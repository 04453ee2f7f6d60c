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

#include "klc/figures.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "klc/regression.hpp"
#include "klc/scaling.hpp"

namespace klc {
namespace {

using nlohmann::json;

constexpr std::uint64_t kFigureSeed = 20190605;
constexpr int kRcProbes = 20;
constexpr double kAlphaTol = 0.15;
constexpr double kRcTol = 0.2;
constexpr double kRegressionTol = 0.1;
constexpr double kSmallSigmaTol = 0.15;
constexpr double kCompressionTol = 0.15;
constexpr double kMaternTol = 0.12;
constexpr double kCollapseBand = 1.5;
constexpr double kPlateauFactor = 3.0;
constexpr double kLimitEpsTol = 0.05;
constexpr double kLimitDeltaRel = 0.05;
constexpr double kCompressionWindowLo = 1.0;
constexpr double kCompressionWindowHi = 100.0;
constexpr double kCompressionLimitLambda = 1e-4;

std::string num(double v, int digits = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

struct Curve {
    std::vector<double> x;
    std::vector<double> mean;
    std::vector<double> se;
};

Curve p_curve(const std::vector<Aggregate>& agg, std::size_t sweep_index = 0) {
    Curve c;
    for (const auto& a : agg) {
        if (a.sweep_index != sweep_index || a.n < 1) continue;
        c.x.push_back(static_cast<double>(a.p));
        c.mean.push_back(a.mean);
        c.se.push_back(a.stderr_mean);
    }
    return c;
}

Curve sweep_curve(const std::vector<Aggregate>& agg, Index p) {
    Curve c;
    for (const auto& a : agg) {
        if (a.p != p || a.n < 1) continue;
        c.x.push_back(a.sweep_value);
        c.mean.push_back(a.mean);
        c.se.push_back(a.stderr_mean);
    }
    return c;
}

std::optional<PowerLawFit> try_fit(const Curve& c, const WindowPolicy& w = {}) {
    try {
        return fit_power_law(c.x, c.mean, c.se, w);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

CheckResult exponent_check(const std::string& name, const std::optional<PowerLawFit>& fit, double predicted,
                           double tol) {
    CheckResult r;
    r.name = name;
    if (!fit) {
        r.detail = "no fit (fewer than 3 usable points)";
        return r;
    }
    const double gap = std::abs(fit->exponent - predicted);
    r.pass = gap <= tol;
    r.detail = "fit " + num(fit->exponent) + " +- " + num(fit->exponent_stderr) + ", predicted " + num(predicted) +
               ", |gap| " + num(gap) + (r.pass ? " <= " : " > ") + num(tol);
    return r;
}

ExperimentConfig svc_base(const std::string& name, int d, const std::vector<Index>& grid, int replicas) {
    ExperimentConfig c;
    c.name = name;
    c.pipeline = Pipeline::Svc;
    c.task.d = d;
    c.task.sampler = {SamplerKind::GaussianCloud, 1.0};
    c.kernel = KernelSpec::laplace(100.0);
    c.p_grid = grid;
    c.replicas = replicas;
    c.p_test = 10000;
    c.seed = kFigureSeed;
    return c;
}

void enable_rc(ExperimentConfig& c, Index p_max) {
    c.rc.enabled = true;
    c.rc.p_max = p_max;
    c.rc.n_probes = kRcProbes;
    c.rc.c_threshold = 0.9;
}

// Exponent checks shared by the single, double and sphere figures.
void large_sigma_checks(const ExperimentConfig& c, const std::vector<ResultRow>& rows, FigureReport& rep,
                        std::optional<double> delta_cap) {
    const double xi = cusp_exponent(c.kernel);
    const int d = c.task.d;
    const ExponentPrediction pred = predicted_svc_exponents(d, xi, {});
    const double tol = default_exponent_tolerance(d).value_or(0.15);

    const Curve eps = p_curve(aggregate(rows, c, Observable::Epsilon));
    const Curve del = p_curve(aggregate(rows, c, Observable::Delta));
    const Curve alp = p_curve(aggregate(rows, c, Observable::AlphaBar));
    const Curve rc = p_curve(aggregate(rows, c, Observable::Rc));

    ObservableFits fits{try_fit(eps), try_fit(del), try_fit(alp), try_fit(rc)};
    const std::string tag = c.name + " ";
    rep.checks.push_back(exponent_check(tag + "epsilon exponent", fits.epsilon, *pred.p.epsilon, tol));
    rep.checks.push_back(exponent_check(tag + "delta exponent", fits.delta, *pred.p.delta, tol));
    rep.checks.push_back(exponent_check(tag + "alpha_bar exponent", fits.alpha_bar, *pred.p.alpha_bar, kAlphaTol));
    if (c.rc.enabled) rep.checks.push_back(exponent_check(tag + "r_c exponent", fits.r_c, *pred.p.r_c, kRcTol));

    if (delta_cap && fits.delta) {
        CheckResult r{tag + "fit window below w/2", true, ""};
        double worst = 0.0;
        for (std::size_t i = 0; i < del.x.size(); ++i) {
            if (del.x[i] >= fits.delta->window_min) worst = std::max(worst, del.mean[i]);
        }
        r.pass = worst < *delta_cap;
        r.detail = "max delta in window " + num(worst) + (r.pass ? " < " : " >= ") + num(*delta_cap);
        rep.checks.push_back(r);
    }

    const ComparisonTolerances tols{tol, tol, kAlphaTol, kRcTol};
    ObservableExponents predicted = pred.p;
    if (!c.rc.enabled) predicted.r_c.reset();
    const auto cmp = compare(predicted, fits, tols);
    rep.json["configs"][c.name] = {{"prediction", to_json(pred)}, {"comparison", to_json(cmp)}};
}

// Interpolated log(eps/w) of curve b at log(delta/w) = lx; nullopt outside b's range.
std::optional<double> interp_log(const std::vector<double>& lx, const std::vector<double>& ly, double x) {
    for (std::size_t i = 0; i + 1 < lx.size(); ++i) {
        const double a = std::min(lx[i], lx[i + 1]);
        const double b = std::max(lx[i], lx[i + 1]);
        if (x >= a && x <= b) {
            if (b == a) return ly[i];
            const double t = (x - lx[i]) / (lx[i + 1] - lx[i]);
            return ly[i] + t * (ly[i + 1] - ly[i]);
        }
    }
    return std::nullopt;
}

void analyze_stripe_like(const std::vector<ExperimentConfig>& configs, const std::vector<std::vector<ResultRow>>& results,
                         FigureReport& rep) {
    for (std::size_t i = 0; i < configs.size(); ++i) {
        std::optional<double> cap;
        if (configs[i].task.geometry.kind == GeometryKind::StripeDouble) {
            const double xmin = configs[i].task.geometry.x_min;
            cap = 0.5 * (double_interface_xmax(xmin) - xmin);
        }
        large_sigma_checks(configs[i], results[i], rep, cap);
    }
}

void analyze_regression(const std::vector<ExperimentConfig>& configs, const std::vector<std::vector<ResultRow>>& results,
                        FigureReport& rep) {
    std::map<double, std::vector<std::pair<int, PowerLawFit>>> by_nu;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const ExperimentConfig& c = configs[i];
        const KernelSpec& teacher = *c.task.geometry.teacher;
        const int d_intrinsic = c.task.sampler.kind == SamplerKind::UniformSphere ? c.task.d - 1 : c.task.d;
        const int d_par = c.task.geometry.d_parallel;
        const double beta = predicted_regression_exponent(teacher, c.kernel, d_intrinsic, std::min(d_par, d_intrinsic));
        const auto fit = try_fit(p_curve(aggregate(results[i], c, Observable::Epsilon)));
        rep.checks.push_back(exponent_check(c.name + " beta", fit, -beta, kRegressionTol));
        rep.json["configs"][c.name] = {{"predicted_beta", beta}, {"fit", fit ? to_json(*fit) : json(nullptr)}};
        if (fit) by_nu[teacher.nu].emplace_back(d_par, *fit);
    }
    for (const auto& [nu, fits] : by_nu) {
        for (std::size_t a = 0; a < fits.size(); ++a) {
            for (std::size_t b = a + 1; b < fits.size(); ++b) {
                const auto& fa = fits[a].second;
                const auto& fb = fits[b].second;
                const double combined = std::hypot(fa.exponent_stderr, fb.exponent_stderr);
                const double gap = std::abs(fa.exponent - fb.exponent);
                CheckResult r;
                r.name = "nu=" + num(nu, 1) + " d_par " + std::to_string(fits[a].first) + " vs " +
                         std::to_string(fits[b].first) + " agreement";
                r.pass = gap <= 2.0 * combined;
                r.detail = "|diff| " + num(gap) + (r.pass ? " <= " : " > ") + "2 x combined stderr " + num(2.0 * combined);
                rep.checks.push_back(r);
            }
        }
    }
}

void analyze_gap_collapse(const std::vector<ExperimentConfig>& configs, const std::vector<std::vector<ResultRow>>& results,
                          FigureReport& rep) {
    struct LogCurve {
        double w;
        std::vector<double> lx, ly;
    };
    std::vector<LogCurve> curves;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const double w = configs[i].task.geometry.w;
        const Curve e = p_curve(aggregate(results[i], configs[i], Observable::Epsilon));
        const Curve d = p_curve(aggregate(results[i], configs[i], Observable::Delta));
        LogCurve lc{w, {}, {}};
        for (std::size_t k = 0; k < std::min(e.x.size(), d.x.size()); ++k) {
            if (e.mean[k] <= 0.0 || d.mean[k] <= 0.0) continue;
            lc.lx.push_back(std::log(d.mean[k] / w));
            lc.ly.push_back(std::log(e.mean[k] / w));
        }
        json pts = json::array();
        for (std::size_t k = 0; k < lc.lx.size(); ++k) pts.push_back({std::exp(lc.lx[k]), std::exp(lc.ly[k])});
        rep.json["curves"][num(w, 2)] = pts;
        curves.push_back(std::move(lc));
    }
    for (std::size_t a = 0; a < curves.size(); ++a) {
        for (std::size_t b = a + 1; b < curves.size(); ++b) {
            double worst = 1.0;
            int overlap = 0;
            auto scan = [&](const LogCurve& from, const LogCurve& to) {
                for (std::size_t k = 0; k < from.lx.size(); ++k) {
                    const auto y = interp_log(to.lx, to.ly, from.lx[k]);
                    if (!y) continue;
                    ++overlap;
                    worst = std::max(worst, std::exp(std::abs(from.ly[k] - *y)));
                }
            };
            scan(curves[a], curves[b]);
            scan(curves[b], curves[a]);
            CheckResult r;
            r.name = "collapse w=" + num(curves[a].w, 2) + " vs w=" + num(curves[b].w, 2);
            r.pass = overlap >= 2 && worst <= kCollapseBand;
            r.detail = overlap < 2 ? "curves do not overlap in delta/w"
                                   : "max ratio " + num(worst, 3) + (worst <= kCollapseBand ? " <= " : " > ") +
                                         num(kCollapseBand, 1) + " over " + std::to_string(overlap) + " points";
            rep.checks.push_back(r);
        }
    }
}

void analyze_small_sigma(const std::vector<ExperimentConfig>& configs, const std::vector<std::vector<ResultRow>>& results,
                         FigureReport& rep) {
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const ExperimentConfig& c = configs[i];
        RegimeParams rp;
        rp.regime = Regime::SmallSigma;
        const auto pred = predicted_svc_exponents(c.task.d, cusp_exponent(c.kernel), rp);
        const auto fit = try_fit(p_curve(aggregate(results[i], c, Observable::Epsilon)));
        rep.checks.push_back(exponent_check(c.name + " epsilon exponent", fit, *pred.p.epsilon, kSmallSigmaTol));
        rep.json["configs"][c.name] = {{"prediction", to_json(pred)}, {"fit", fit ? to_json(*fit) : json(nullptr)}};
    }
}

void analyze_compression(const std::vector<ExperimentConfig>& configs, const std::vector<std::vector<ResultRow>>& results,
                         FigureReport& rep) {
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const ExperimentConfig& c = configs[i];
        RegimeParams rp;
        rp.regime = Regime::CompressionStripe;
        const auto pred = predicted_svc_exponents(c.task.d, cusp_exponent(c.kernel), rp);
        const Index p = c.p_grid.front();
        const auto eps_agg = aggregate(results[i], c, Observable::Epsilon);
        const auto del_agg = aggregate(results[i], c, Observable::Delta);
        const auto alp_agg = aggregate(results[i], c, Observable::AlphaBar);
        const auto fit = try_fit(sweep_curve(eps_agg, p),
                                 WindowPolicy::explicit_range(kCompressionWindowLo, kCompressionWindowHi));
        rep.checks.push_back(exponent_check(c.name + " epsilon lambda-exponent", fit, *pred.lambda->epsilon,
                                            kCompressionTol));

        auto at_limit = [&](const std::vector<Aggregate>& agg) -> std::optional<double> {
            for (const auto& a : agg) {
                if (a.p == p && a.sweep_value == kCompressionLimitLambda) return a.mean;
            }
            return std::nullopt;
        };
        const auto eps0 = at_limit(eps_agg);
        const auto del0 = at_limit(del_agg);
        const auto alp0 = at_limit(alp_agg);
        const double delta_target = std::sqrt(2.0 / std::numbers::pi);
        CheckResult le{c.name + " epsilon limit at lambda=1e-4", false, "missing"};
        if (eps0) {
            le.pass = std::abs(*eps0 - 0.5) <= kLimitEpsTol;
            le.detail = "epsilon " + num(*eps0) + ", target 0.5 +- " + num(kLimitEpsTol, 2);
        }
        CheckResult ld{c.name + " delta limit at lambda=1e-4", false, "missing"};
        if (del0) {
            ld.pass = std::abs(*del0 / delta_target - 1.0) <= kLimitDeltaRel;
            ld.detail = "delta " + num(*del0) + ", target " + num(delta_target) + " +- 5%";
        }
        rep.checks.push_back(le);
        rep.checks.push_back(ld);
        rep.json["configs"][c.name] = {{"prediction", to_json(pred)},
                                       {"fit", fit ? to_json(*fit) : json(nullptr)},
                                       {"limit", {{"epsilon", eps0 ? json(*eps0) : json(nullptr)},
                                                  {"delta", del0 ? json(*del0) : json(nullptr)},
                                                  {"alpha_bar", alp0 ? json(*alp0) : json(nullptr)}}},
                                       {"lambda_critical", lambda_critical(static_cast<double>(p))}};
    }
}

void analyze_matern(const std::vector<ExperimentConfig>& configs, const std::vector<std::vector<ResultRow>>& results,
                    FigureReport& rep) {
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const ExperimentConfig& c = configs[i];
        const double xi = cusp_exponent(c.kernel);
        const auto pred = predicted_svc_exponents(c.task.d, xi, {});
        const auto fit = try_fit(p_curve(aggregate(results[i], c, Observable::Epsilon)));
        rep.checks.push_back(exponent_check(c.name + " epsilon exponent", fit, *pred.p.epsilon, kMaternTol));
        rep.json["configs"][c.name] = {{"prediction", to_json(pred)}, {"fit", fit ? to_json(*fit) : json(nullptr)}};
    }
}

double extra(const ResultRow& r, const std::string& key) {
    for (const auto& [k, v] : r.extras) {
        if (k == key) return v;
    }
    throw std::runtime_error("missing extra '" + key + "'");
}

void analyze_structure_factor(const std::vector<ExperimentConfig>& configs,
                              const std::vector<std::vector<ResultRow>>& results, FigureReport& rep) {
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const ExperimentConfig& c = configs[i];
        for (Index p : c.p_grid) {
            std::vector<double> ratios;
            double worst_zero = 0.0;
            bool zero_ok = true;
            json per = json::array();
            for (const ResultRow& r : results[i]) {
                if (r.key.p != p || !r.ok() || !r.r_c) continue;
                const double q2_inf = extra(r, "q2_inf");
                const double total = extra(r, "sum_alpha");
                std::vector<double> plateau;
                for (const auto& s : r.structure_factor) {
                    if (s.k == 0.0) {
                        const double bound = std::pow(c.solver.kkt_tol * total, 2);
                        worst_zero = std::max(worst_zero, s.q2 / bound);
                        zero_ok = zero_ok && s.q2 <= bound;
                    } else if (s.k > 1.0 / *r.r_c) {
                        plateau.push_back(s.q2);
                    }
                }
                if (plateau.empty()) continue;
                std::sort(plateau.begin(), plateau.end());
                const std::size_t m = plateau.size();
                const double median = m % 2 ? plateau[m / 2] : 0.5 * (plateau[m / 2 - 1] + plateau[m / 2]);
                ratios.push_back(median / q2_inf);
                per.push_back({{"replica", r.key.replica}, {"r_c", *r.r_c}, {"plateau", median}, {"q2_inf", q2_inf}});
            }
            CheckResult pl{c.name + " p=" + std::to_string(p) + " plateau / Q_inf^2", false, "no data"};
            if (!ratios.empty()) {
                double mean = 0.0;
                for (double v : ratios) mean += v;
                mean /= static_cast<double>(ratios.size());
                pl.pass = mean >= 1.0 / kPlateauFactor && mean <= kPlateauFactor;
                pl.detail = "mean ratio " + num(mean, 3) + " over " + std::to_string(ratios.size()) +
                            " replicas, band [1/3, 3]";
            }
            CheckResult z{c.name + " p=" + std::to_string(p) + " Q^2(0) <= (kkt_tol sum alpha)^2", zero_ok && !ratios.empty(),
                          "worst Q^2(0) / bound " + num(worst_zero, 6)};
            rep.checks.push_back(pl);
            rep.checks.push_back(z);
            rep.json["configs"][c.name]["p=" + std::to_string(p)] = per;
        }
    }
}

}  // namespace

Scale scale_from_string(const std::string& name) {
    if (name == "desk") return Scale::Desk;
    if (name == "paper") return Scale::Paper;
    throw std::invalid_argument("unknown scale '" + name + "'");
}

bool FigureReport::pass() const {
    if (checks.empty()) return false;
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

const std::vector<std::string>& figure_ids() {
    static const std::vector<std::string> ids{"regression_fig2", "stripe_single", "stripe_double",
                                              "gap_collapse",    "sphere",        "compression",
                                              "small_sigma",     "structure_factor", "matern_svc"};
    return ids;
}

std::vector<Index> pow2_grid(Index lo, Index hi) {
    std::vector<Index> g;
    for (Index p = lo; p <= hi; p *= 2) g.push_back(p);
    return g;
}

std::vector<double> log_grid(double lo, double hi, int n_per_decade) {
    std::vector<double> g;
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    const int n = static_cast<int>(std::lround((b - a) * n_per_decade));
    for (int k = 0; k <= n; ++k) {
        // Round to 12 significant digits so that grid values are stable keys.
        const double v = std::pow(10.0, a + (b - a) * k / n);
        std::ostringstream os;
        os << std::setprecision(12) << v;
        g.push_back(std::stod(os.str()));
    }
    return g;
}

std::vector<ExperimentConfig> figure_configs(const std::string& id, Scale scale, const std::string& out_dir) {
    const bool desk = scale == Scale::Desk;
    const auto svc_grid = desk ? pow2_grid(64, 8192) : pow2_grid(64, 65536);
    const int svc_reps = desk ? 10 : 25;
    std::vector<ExperimentConfig> out;

    if (id == "regression_fig2") {
        for (double nu : {0.5, 1.0, 1.5}) {
            for (int d_par : {1, 2, 3}) {
                ExperimentConfig c;
                c.name = "nu" + num(nu, 1) + "_dpar" + std::to_string(d_par);
                c.pipeline = Pipeline::Regression;
                c.task.d = 4;
                c.task.sampler = {SamplerKind::UniformSphere, 1.0};
                c.task.geometry.kind = GeometryKind::RegressionField;
                c.task.geometry.d_parallel = d_par;
                c.task.geometry.teacher = KernelSpec::matern(nu, 4.0);
                c.kernel = KernelSpec::laplace(4.0);
                c.p_grid = desk ? pow2_grid(64, 4096) : pow2_grid(64, 16384);
                c.replicas = desk ? 8 : 25;
                c.p_test = 1000;
                c.seed = kFigureSeed;
                out.push_back(c);
            }
        }
    } else if (id == "stripe_single" || id == "stripe_double" || id == "sphere") {
        for (int d : {2, 3, 5}) {
            ExperimentConfig c = svc_base(id + "_d" + std::to_string(d), d, svc_grid, svc_reps);
            if (id == "stripe_double") {
                c.task.geometry.kind = GeometryKind::StripeDouble;
                c.task.geometry.x_min = -0.3;
            } else if (id == "sphere") {
                c.task.geometry.kind = GeometryKind::Sphere;
            }
            enable_rc(c, 2048);
            out.push_back(c);
        }
    } else if (id == "gap_collapse") {
        for (double w : {0.5, 1.0, 2.0}) {
            // Extended to small p so that every pair of w overlaps in delta / w.
            const auto grid = desk ? pow2_grid(32, 8192) : pow2_grid(32, 65536);
            ExperimentConfig c = svc_base("gap_w" + num(w, 1), 5, grid, svc_reps);
            c.task.geometry.kind = GeometryKind::StripeMultiple;
            c.task.geometry.n_interfaces = 2;
            c.task.geometry.w = w;
            c.task.geometry.center = -1.0 + 0.5 * w;
            out.push_back(c);
        }
    } else if (id == "small_sigma") {
        for (int d : {2, 3, 5}) {
            ExperimentConfig c = svc_base("small_sigma_d" + std::to_string(d), d, svc_grid, svc_reps);
            c.kernel = KernelSpec::laplace(1e-2);
            c.zero_bias = true;
            out.push_back(c);
        }
    } else if (id == "compression") {
        for (int d : {3, 5}) {
            ExperimentConfig c = svc_base("compression_d" + std::to_string(d), d, {1000}, desk ? 10 : 25);
            c.sweep_variable = SweepVariable::Lambda;
            c.sweep_values = {kCompressionLimitLambda};
            for (double v : log_grid(1e-2, 1e4, 4)) c.sweep_values.push_back(v);
            out.push_back(c);
        }
    } else if (id == "structure_factor") {
        ExperimentConfig c = svc_base("structure_factor_d5", 5, {1000, 4000}, desk ? 5 : 25);
        enable_rc(c, 4000);
        c.structure_factor.enabled = true;
        c.structure_factor.n_wavevectors = 2000;
        c.structure_factor.k = {0.0};
        for (double v : log_grid(1e-1, 1e3, 5)) c.structure_factor.k.push_back(v);
        out.push_back(c);
    } else if (id == "matern_svc") {
        for (double nu : {0.3, 0.5, 0.7}) {
            ExperimentConfig c = svc_base("matern_nu" + num(nu, 1), 3, svc_grid, svc_reps);
            c.kernel = KernelSpec::matern(nu, 100.0);
            out.push_back(c);
        }
    } else {
        throw std::invalid_argument("unknown figure id '" + id + "'");
    }
    const std::string dir = (std::filesystem::path(out_dir) / id).string();
    for (auto& c : out) {
        c.output_path = (std::filesystem::path(dir) / (c.name + ".csv")).string();
        c.validate();
    }
    return out;
}

FigureReport analyze_figure(const std::string& id, const std::vector<ExperimentConfig>& configs,
                            const std::vector<std::vector<ResultRow>>& results) {
    FigureReport rep;
    rep.figure_id = id;
    rep.json = {{"figure_id", id}, {"git_describe", git_describe()}};
    for (std::size_t i = 0; i < configs.size(); ++i) {
        int failed = 0;
        for (const auto& r : results[i]) failed += r.ok() ? 0 : 1;
        if (failed > 0) {
            rep.checks.push_back({configs[i].name + " cells", false,
                                  std::to_string(failed) + " of " + std::to_string(results[i].size()) +
                                      " cells failed or hit the dual cap"});
        }
    }
    if (id == "regression_fig2") analyze_regression(configs, results, rep);
    else if (id == "stripe_single" || id == "stripe_double" || id == "sphere") analyze_stripe_like(configs, results, rep);
    else if (id == "gap_collapse") analyze_gap_collapse(configs, results, rep);
    else if (id == "small_sigma") analyze_small_sigma(configs, results, rep);
    else if (id == "compression") analyze_compression(configs, results, rep);
    else if (id == "structure_factor") analyze_structure_factor(configs, results, rep);
    else if (id == "matern_svc") analyze_matern(configs, results, rep);
    else throw std::invalid_argument("unknown figure id '" + id + "'");

    json checks = json::array();
    for (const auto& c : rep.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    rep.json["checks"] = checks;
    rep.json["pass"] = rep.pass();
    return rep;
}

FigureReport reproduce_figure(const std::string& id, Scale scale, const std::string& out_dir, const RunOptions& options) {
    const auto configs = figure_configs(id, scale, out_dir);
    std::vector<std::vector<ResultRow>> results;
    for (const auto& c : configs) results.push_back(run(c, options).rows);
    FigureReport rep = analyze_figure(id, configs, results);
    json cfgs = json::array();
    for (const auto& c : configs) cfgs.push_back(to_json(c));
    rep.json["run_configs"] = cfgs;
    const auto dir = std::filesystem::path(out_dir) / id;
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "report.json") << rep.json.dump(2) << '\n';
    std::ofstream(dir / "report.txt") << format_report(rep);
    return rep;
}

std::string format_report(const FigureReport& report) {
    std::ostringstream os;
    os << report.figure_id << ": " << (report.pass() ? "PASS" : "FAIL") << '\n';
    for (const auto& c : report.checks) os << "  [" << (c.pass ? "pass" : "FAIL") << "] " << c.name << ": " << c.detail << '\n';
    return os.str();
}

}  // namespace klc
