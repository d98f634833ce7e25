#pragma once

#include "wbce/harness.hpp"

#include <json.hpp>

#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

namespace wbce {

namespace detail {

inline double snr_from_json(const nlohmann::json& v)
{
    if (v.is_null()) {
        return std::numeric_limits<double>::infinity();
    }
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "inf" || s == "noiseless") {
            return std::numeric_limits<double>::infinity();
        }
        throw std::invalid_argument("config: snr_db entry '" + s + "' is not a number, null, \"inf\" or \"noiseless\"");
    }
    return v.get<double>();
}

} // namespace detail

/*
 * Overlays a JSON object onto the defaults for its "experiment" kind.
 * Unknown keys are rejected.
 */
inline ExperimentConfig config_from_json(const nlohmann::json& j, const std::string& fallback_kind = "")
{
    if (!j.is_object()) {
        throw std::invalid_argument("config: top level must be a JSON object");
    }
    std::string kind = fallback_kind;
    if (j.contains("experiment")) {
        kind = j.at("experiment").get<std::string>();
    }
    if (kind.empty()) {
        throw std::invalid_argument("config: missing \"experiment\"");
    }
    ExperimentConfig c = default_config(kind);

    static const std::set<std::string> known{
        "experiment",      "carrier_hz",        "symbol_rate_hz",     "oversampling",
        "n_train",         "n_data",            "rolloff",            "truncation_symbols",
        "margin_symbols",  "paths",             "delta_gamma_over_T", "delta_a",
        "offset_divisors", "gamma_min_s",       "gamma_max_s",        "a_max",
        "grid_delta_gamma_over_T",              "grid_delta_a",       "n_paths",
        "column_limit",    "snr_db",            "trials",             "seed",
        "threads",         "offset_policy",     "b_const",            "strict_assumptions",
        "omp_max_iters",   "bp_lambdas",        "bp_max_iters",       "bp_tol",
        "fbmp_p",          "fbmp_breadth",      "fbmp_gain_var",      "noiseless_floor_db",
        "fc_T",            "e_wideband_target"};
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) {
            throw std::invalid_argument("config: unknown key \"" + key + "\"");
        }
    }

    auto get = [&j](const char* key, auto& field) {
        if (j.contains(key)) {
            field = j.at(key).get<std::decay_t<decltype(field)>>();
        }
    };
    get("carrier_hz", c.carrier_hz);
    get("symbol_rate_hz", c.symbol_rate_hz);
    get("oversampling", c.oversampling);
    get("n_train", c.n_train);
    get("n_data", c.n_data);
    get("rolloff", c.rolloff);
    get("truncation_symbols", c.truncation_symbols);
    get("margin_symbols", c.margin_symbols);
    get("delta_gamma_over_T", c.delta_gamma_over_T);
    get("delta_a", c.delta_a);
    get("offset_divisors", c.offset_divisors);
    get("gamma_min_s", c.gamma_min_s);
    get("gamma_max_s", c.gamma_max_s);
    get("a_max", c.a_max);
    get("grid_delta_gamma_over_T", c.grid_delta_gamma_over_T);
    get("grid_delta_a", c.grid_delta_a);
    get("n_paths", c.n_paths);
    get("column_limit", c.column_limit);
    get("trials", c.trials);
    get("seed", c.seed);
    get("threads", c.threads);
    get("offset_policy", c.offset_policy);
    get("b_const", c.b_const);
    get("strict_assumptions", c.strict_assumptions);
    get("omp_max_iters", c.omp_max_iters);
    get("bp_lambdas", c.bp_lambdas);
    get("bp_max_iters", c.bp_max_iters);
    get("bp_tol", c.bp_tol);
    get("fbmp_p", c.fbmp_p);
    get("fbmp_breadth", c.fbmp_breadth);
    get("fbmp_gain_var", c.fbmp_gain_var);
    get("noiseless_floor_db", c.noiseless_floor_db);
    get("fc_T", c.fc_T);
    get("e_wideband_target", c.e_wideband_target);

    if (j.contains("snr_db")) {
        c.snr_db.clear();
        for (const auto& v : j.at("snr_db")) {
            c.snr_db.push_back(detail::snr_from_json(v));
        }
    }
    if (j.contains("paths")) {
        static const std::set<std::string> path_keys{"gamma_s", "a", "theta_re", "theta_im"};
        c.paths.clear();
        for (const auto& pj : j.at("paths")) {
            for (const auto& [key, _] : pj.items()) {
                if (!path_keys.count(key)) {
                    throw std::invalid_argument("config: unknown path key \"" + key + "\"");
                }
            }
            PathConfig p;
            p.gamma_s = pj.value("gamma_s", 0.0);
            p.a = pj.value("a", 0.0);
            p.theta_re = pj.value("theta_re", 1.0);
            p.theta_im = pj.value("theta_im", 0.0);
            c.paths.push_back(p);
        }
    }
    validate(c);
    return c;
}

inline ExperimentConfig load_config(const std::string& path, const std::string& fallback_kind = "")
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("config: cannot open " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument("config: " + path + ": " + e.what());
    }
    return config_from_json(j, fallback_kind);
}

} // namespace wbce
