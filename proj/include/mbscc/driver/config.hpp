#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "../amortization.hpp"
#include "../coupon_curve.hpp"
#include "../errors.hpp"
#include "../factor_model.hpp"
#include "../intensity.hpp"
#include "../path_engine.hpp"

namespace mbscc {

/// Intensity selection. "refi-incentive" is gamma_base + k (m - z)^+;
/// "rate-linear" adds gamma_slope * x to it.
struct IntensityConfig {
    std::string name = "refi-incentive";
    double gamma_base = 0.045;
    double k = 5.0;
    double gamma_slope = 0.0;

    RefiIncentiveIntensity model() const { return {gamma_base, k, gamma_slope}; }
};

/// Reporting grid: explicit bounds, or invariant-law quantiles when bounds are absent.
struct GridConfig {
    std::optional<double> lo;
    std::optional<double> hi;
    std::size_t n = 31;
    double lo_quantile = 0.005;
    double hi_quantile = 0.995;
};

struct ContractionConfig {
    double tol = 1e-5;  ///< rate units
    std::size_t max_iter = 25;
};

struct VerifyConfig {
    std::size_t paths = 200000;
    std::size_t lln_paths = 4000;
    std::size_t loans = 1;
};

struct ExperimentConfig {
    CirParams cir{0.25, 0.06, 0.1, 0.06};
    MortgageSpec spec{30.0};
    IntensityConfig intensity;
    Decomposition decomposition = Decomposition::zero_baseline;
    McConfig mc;
    GridConfig grid;
    ContractionConfig contraction;
    VerifyConfig verify;
    std::string output;  ///< empty: standard output
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());

    /// Throws ConfigError on the first violated invariant.
    void validate() const {
        cir.validate();
        detail::require_config(intensity.name == "refi-incentive" || intensity.name == "rate-linear",
                               "intensity.name must be \"refi-incentive\" or \"rate-linear\", got \"" +
                                   intensity.name + "\"");
        detail::require_config(intensity.name == "rate-linear" || intensity.gamma_slope == 0.0,
                               "intensity.gamma_slope is only valid for \"rate-linear\"");
        intensity.model().decompose(decomposition);
        mc.validate();
        detail::require_config(mc.horizon == spec.maturity(), "monte_carlo horizon must equal the mortgage maturity");
        detail::require_config(grid.n >= 1, "grid.n must be >= 1");
        detail::require_config(grid.lo.has_value() == grid.hi.has_value(), "grid.lo and grid.hi must be given together");
        if (grid.lo) {
            detail::require_config(*grid.lo > 0.0, "grid.lo must be positive");
            detail::require_config(grid.n == 1 ? *grid.hi >= *grid.lo : *grid.hi > *grid.lo,
                                   "grid.hi must exceed grid.lo");
        } else {
            detail::require_config(0.0 < grid.lo_quantile && grid.lo_quantile < grid.hi_quantile &&
                                       grid.hi_quantile < 1.0,
                                   "grid quantiles must satisfy 0 < lo_quantile < hi_quantile < 1");
        }
        detail::require_config(contraction.tol > 0.0, "contraction.tol_bps must be positive");
        detail::require_config(contraction.max_iter >= 1, "contraction.max_iter must be >= 1");
        detail::require_config(verify.paths >= 1 && verify.lln_paths >= 1 && verify.loans >= 1,
                               "verify path and loan counts must be >= 1");
        detail::require_config(workers >= 1, "workers must be >= 1");
    }

    StandardIntensity model() const { return intensity.model().decompose(decomposition); }

    /// Reporting grid rates.
    std::vector<double> rates() const {
        const double lo = grid.lo ? *grid.lo : invariant_quantile(cir, grid.lo_quantile);
        const double hi = grid.hi ? *grid.hi : invariant_quantile(cir, grid.hi_quantile);
        if (grid.n == 1) return {lo};
        return linear_grid(lo, hi, grid.n);
    }
};

inline Decomposition parse_decomposition(const std::string& s) {
    if (s == "zero" || s == "zero-baseline") return Decomposition::zero_baseline;
    if (s == "const" || s == "constant-baseline") return Decomposition::constant_baseline;
    throw ConfigError("decomposition must be \"zero\" or \"const\", got \"" + s + "\"");
}

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> known) {
    require_config(obj.is_object(), where + " must be an object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        require_config(ok, "unknown key \"" + key + "\" in " + where);
    }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if constexpr (std::is_same_v<T, std::string>) {
        require_config(v.is_string(), where + "." + key + " must be a string");
    } else if constexpr (std::is_unsigned_v<T>) {
        require_config(v.is_number_unsigned(), where + "." + key + " must be a non-negative integer");
    } else if constexpr (std::is_integral_v<T>) {
        require_config(v.is_number_integer(), where + "." + key + " must be an integer");
    } else {
        require_config(v.is_number(), where + "." + key + " must be a number");
    }
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

}  // namespace detail

/// Apply a JSON document on top of `base`. Unknown keys are rejected.
inline ExperimentConfig config_from_json(const nlohmann::json& doc, ExperimentConfig base = {}) {
    using detail::read;
    detail::reject_unknown(doc, "config",
                           {"cir", "mortgage", "intensity", "decomposition", "monte_carlo", "grid", "contraction",
                            "verify", "output", "workers"});
    ExperimentConfig c = std::move(base);
    bool r0_given = false;
    if (doc.contains("cir")) {
        const auto& j = doc["cir"];
        detail::reject_unknown(j, "cir", {"kappa", "theta", "sigma", "r0"});
        read(j, "kappa", c.cir.kappa, "cir");
        read(j, "theta", c.cir.theta, "cir");
        read(j, "sigma", c.cir.sigma, "cir");
        r0_given = j.contains("r0");
        read(j, "r0", c.cir.r0, "cir");
    }
    if (!r0_given) c.cir.r0 = c.cir.theta;
    if (doc.contains("mortgage")) {
        const auto& j = doc["mortgage"];
        detail::reject_unknown(j, "mortgage", {"maturity"});
        double T = c.spec.maturity();
        read(j, "maturity", T, "mortgage");
        c.spec = MortgageSpec(T);
    }
    c.mc.horizon = c.spec.maturity();
    if (doc.contains("intensity")) {
        const auto& j = doc["intensity"];
        detail::reject_unknown(j, "intensity", {"name", "gamma_base", "k", "gamma_slope"});
        read(j, "name", c.intensity.name, "intensity");
        read(j, "gamma_base", c.intensity.gamma_base, "intensity");
        read(j, "k", c.intensity.k, "intensity");
        read(j, "gamma_slope", c.intensity.gamma_slope, "intensity");
    }
    if (doc.contains("decomposition")) {
        std::string d;
        read(doc, "decomposition", d, "config");
        c.decomposition = parse_decomposition(d);
    }
    if (doc.contains("monte_carlo")) {
        const auto& j = doc["monte_carlo"];
        detail::reject_unknown(j, "monte_carlo", {"paths", "steps_per_year", "seed"});
        read(j, "paths", c.mc.n_paths, "monte_carlo");
        read(j, "steps_per_year", c.mc.steps_per_year, "monte_carlo");
        read(j, "seed", c.mc.seed, "monte_carlo");
    }
    if (doc.contains("grid")) {
        const auto& j = doc["grid"];
        detail::reject_unknown(j, "grid", {"lo", "hi", "n", "lo_quantile", "hi_quantile"});
        if (j.contains("lo")) c.grid.lo = j["lo"].is_number() ? j["lo"].get<double>() : throw ConfigError("grid.lo has the wrong type");
        if (j.contains("hi")) c.grid.hi = j["hi"].is_number() ? j["hi"].get<double>() : throw ConfigError("grid.hi has the wrong type");
        read(j, "n", c.grid.n, "grid");
        read(j, "lo_quantile", c.grid.lo_quantile, "grid");
        read(j, "hi_quantile", c.grid.hi_quantile, "grid");
    }
    if (doc.contains("contraction")) {
        const auto& j = doc["contraction"];
        detail::reject_unknown(j, "contraction", {"tol_bps", "max_iter"});
        if (j.contains("tol_bps")) {
            double bps = 0.0;
            read(j, "tol_bps", bps, "contraction");
            c.contraction.tol = bps * 1e-4;
        }
        read(j, "max_iter", c.contraction.max_iter, "contraction");
    }
    if (doc.contains("verify")) {
        const auto& j = doc["verify"];
        detail::reject_unknown(j, "verify", {"paths", "lln_paths", "loans"});
        read(j, "paths", c.verify.paths, "verify");
        read(j, "lln_paths", c.verify.lln_paths, "verify");
        read(j, "loans", c.verify.loans, "verify");
    }
    read(doc, "output", c.output, "config");
    read(doc, "workers", c.workers, "config");
    return c;
}

/// Parse a configuration file. Syntax errors and unreadable files are ConfigErrors.
inline ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
    return config_from_json(doc, std::move(base));
}

/// Every numeric input that affects the results, in a fixed order. Worker count and
/// output path are excluded: they do not change any reported number.
inline std::vector<std::pair<std::string, std::string>> config_echo(const ExperimentConfig& c) {
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.15g", v);
        return std::string(buf);
    };
    std::vector<std::pair<std::string, std::string>> e{
        {"cir.kappa", num(c.cir.kappa)},
        {"cir.theta", num(c.cir.theta)},
        {"cir.sigma", num(c.cir.sigma)},
        {"mortgage.maturity", num(c.spec.maturity())},
        {"intensity.name", c.intensity.name},
        {"intensity.gamma_base", num(c.intensity.gamma_base)},
        {"intensity.k", num(c.intensity.k)},
        {"intensity.gamma_slope", num(c.intensity.gamma_slope)},
        {"decomposition", to_string(c.decomposition)},
        {"monte_carlo.paths", std::to_string(c.mc.n_paths)},
        {"monte_carlo.steps_per_year", std::to_string(c.mc.steps_per_year)},
        {"monte_carlo.seed", std::to_string(c.mc.seed)},
    };
    if (c.grid.lo) {
        e.emplace_back("grid.lo", num(*c.grid.lo));
        e.emplace_back("grid.hi", num(*c.grid.hi));
    } else {
        e.emplace_back("grid.lo_quantile", num(c.grid.lo_quantile));
        e.emplace_back("grid.hi_quantile", num(c.grid.hi_quantile));
    }
    e.emplace_back("grid.n", std::to_string(c.grid.n));
    e.emplace_back("contraction.tol_bps", num(c.contraction.tol * 1e4));
    e.emplace_back("contraction.max_iter", std::to_string(c.contraction.max_iter));
    return e;
}

}  // namespace mbscc
