#include "mni/error.hpp"
#include "mni/experiments.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>
#include <set>

namespace mni {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<Scenario, const char*>, 8> kScenarioNames{{
    {Scenario::t2_rate, "t2_rate"},
    {Scenario::t1_rate, "t1_rate"},
    {Scenario::linf_profile, "linf_profile"},
    {Scenario::variance_decay, "variance_decay"},
    {Scenario::anderson_scan, "anderson_scan"},
    {Scenario::dyadic_diagnostic, "dyadic_diagnostic"},
    {Scenario::complexity_scan, "complexity_scan"},
    {Scenario::inductive_bias_scan, "inductive_bias_scan"},
}};

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object())
        throw ConfigError(where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const bool known =
            std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; });
        if (!known)
            throw ConfigError("unknown field '" + it.key() + "' in " + where);
    }
}

template <typename T>
void read_field(const json& j, const char* name, T& out) {
    if (!j.contains(name))
        return;
    try {
        out = j.at(name).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + name + "': " + e.what());
    }
}

template <typename T>
void read_optional(const json& j, const char* name, std::optional<T>& out) {
    if (!j.contains(name) || j.at(name).is_null())
        return;
    T v{};
    read_field(j, name, v);
    out = v;
}

std::vector<std::size_t> read_grid(const json& j, const char* name) {
    std::vector<std::size_t> out;
    if (!j.contains(name))
        return out;
    const json& g = j.at(name);
    if (!g.is_array())
        throw ConfigError(std::string(name) + " must be an array of positive integers");
    for (const json& v : g) {
        if (!v.is_number_integer() || v.get<long long>() < 1)
            throw ConfigError(std::string(name) + " must contain positive integers");
        out.push_back(v.get<std::size_t>());
    }
    return out;
}

} // namespace

std::string to_string(Scenario s) {
    for (const auto& [value, name] : kScenarioNames)
        if (value == s)
            return name;
    throw ConfigError("unknown scenario");
}

Scenario scenario_from_string(const std::string& s) {
    for (const auto& [value, name] : kScenarioNames)
        if (s == name)
            return value;
    throw ConfigError("unknown scenario '" + s + "'");
}

bool is_rate_scenario(Scenario s) {
    return s == Scenario::t2_rate || s == Scenario::t1_rate || s == Scenario::variance_decay;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    reject_unknown(j, "config",
                   {"scenario", "p", "d_grid", "n_grid", "design", "noise", "truth", "mc", "solver", "seed",
                    "output_dir", "workers", "verdict", "reverse_efron_stein"});
    ExperimentConfig c;
    if (!j.contains("scenario"))
        throw ConfigError("config needs a scenario");
    c.scenario = scenario_from_string(j.at("scenario").get<std::string>());
    read_field(j, "p", c.p);
    c.d_grid = read_grid(j, "d_grid");
    c.n_grid = read_grid(j, "n_grid");
    if (j.contains("design")) {
        const json& d = j.at("design");
        reject_unknown(d, "design", {"distribution", "gamma", "scaling"});
        if (d.contains("distribution"))
            c.design.distribution = distribution_from_string(d.at("distribution").get<std::string>());
        if (d.contains("scaling"))
            c.design.scaling = scaling_from_string(d.at("scaling").get<std::string>());
        read_field(d, "gamma", c.design.gamma);
    }
    if (j.contains("noise")) {
        const json& n = j.at("noise");
        reject_unknown(n, "noise", {"kind", "variance"});
        if (n.contains("kind"))
            c.noise.kind = noise_kind_from_string(n.at("kind").get<std::string>());
        read_field(n, "variance", c.noise.variance);
    }
    if (j.contains("truth")) {
        const json& t = j.at("truth");
        reject_unknown(t, "truth", {"support", "values"});
        c.truth_support.clear();
        c.truth_values.clear();
        read_field(t, "support", c.truth_support);
        read_field(t, "values", c.truth_values);
    }
    if (j.contains("mc")) {
        const json& m = j.at("mc");
        reject_unknown(m, "mc", {"outer", "inner", "multistarts"});
        read_field(m, "outer", c.outer);
        read_field(m, "inner", c.inner);
        read_field(m, "multistarts", c.multistarts);
    }
    if (j.contains("solver")) {
        const json& s = j.at("solver");
        reject_unknown(s, "solver", {"tol_feasibility", "tol_kkt", "max_iterations", "homotopy_steps"});
        read_field(s, "tol_feasibility", c.solver.tol_feasibility);
        read_field(s, "tol_kkt", c.solver.tol_kkt);
        read_field(s, "max_iterations", c.solver.max_iterations);
        read_field(s, "homotopy_steps", c.solver.homotopy_steps);
    }
    read_field(j, "seed", c.seed);
    read_field(j, "output_dir", c.output_dir);
    read_field(j, "workers", c.workers);
    if (j.contains("verdict")) {
        const json& v = j.at("verdict");
        reject_unknown(v, "verdict", {"tolerance", "envelope_factor"});
        read_optional(v, "tolerance", c.verdict.tolerance);
        read_optional(v, "envelope_factor", c.verdict.envelope_factor);
    }
    if (j.contains("reverse_efron_stein")) {
        const json& r = j.at("reverse_efron_stein");
        reject_unknown(r, "reverse_efron_stein", {"enabled", "C", "tolerance_factor"});
        read_field(r, "enabled", c.reverse_efron_stein);
        read_field(r, "C", c.reverse_efron_stein_constants.constant_C);
        read_field(r, "tolerance_factor", c.reverse_efron_stein_constants.tolerance_factor);
    }
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
    return from_json(j);
}

json ExperimentConfig::to_json() const {
    return json{
        {"scenario", to_string(scenario)},
        {"p", p},
        {"d_grid", d_grid},
        {"n_grid", n_grid},
        {"design",
         {{"distribution", to_string(design.distribution)},
          {"gamma", design.gamma},
          {"scaling", to_string(design.scaling)}}},
        {"noise", {{"kind", to_string(noise.kind)}, {"variance", noise.variance}}},
        {"truth", {{"support", truth_support}, {"values", truth_values}}},
        {"mc", {{"outer", outer}, {"inner", inner}, {"multistarts", multistarts}}},
        {"solver",
         {{"tol_feasibility", solver.tol_feasibility},
          {"tol_kkt", solver.tol_kkt},
          {"max_iterations", solver.max_iterations},
          {"homotopy_steps", solver.homotopy_steps}}},
        {"seed", seed},
        {"output_dir", output_dir},
        {"workers", workers},
        {"verdict", {{"tolerance", resolved_tolerance()}, {"envelope_factor", resolved_envelope()}}},
        {"reverse_efron_stein",
         {{"enabled", reverse_efron_stein},
          {"C", reverse_efron_stein_constants.constant_C},
          {"tolerance_factor", reverse_efron_stein_constants.tolerance_factor}}},
    };
}

void ExperimentConfig::validate() const {
    if (!(p > 1.0 && p <= 2.0))
        throw ConfigError("p must lie in (1, 2], got " + std::to_string(p));
    solver.validate();
    noise.validate();
    if (design.distribution == Distribution::uniform_bounded && !(design.gamma > 0.0))
        throw ConfigError("uniform_bounded design requires gamma > 0");
    if (outer < 2 || inner < 2)
        throw ConfigError("mc.outer and mc.inner must be >= 2");
    if (multistarts < 1)
        throw ConfigError("mc.multistarts must be >= 1");
    if (workers < 1)
        throw ConfigError("workers must be >= 1");
    if (truth_support.size() != truth_values.size())
        throw ConfigError("truth.support and truth.values differ in length");
    if (std::set<std::size_t>(truth_support.begin(), truth_support.end()).size() != truth_support.size())
        throw ConfigError("truth.support has repeated indices");
    if (verdict.tolerance && !(*verdict.tolerance > 0.0))
        throw ConfigError("verdict.tolerance must be positive");
    if (verdict.envelope_factor && !(*verdict.envelope_factor > 0.0))
        throw ConfigError("verdict.envelope_factor must be positive");
    if (!(reverse_efron_stein_constants.constant_C > 0.0) || !(reverse_efron_stein_constants.tolerance_factor > 0.0))
        throw ConfigError("reverse_efron_stein constants must be positive");
    if (reverse_efron_stein && scenario != Scenario::t2_rate)
        throw ConfigError("reverse_efron_stein is only available for t2_rate");

    auto require_size = [](const std::vector<std::size_t>& g, const char* name, std::size_t lo, std::size_t hi) {
        if (g.size() < lo || g.size() > hi)
            throw ConfigError(std::string(name) + " must have " +
                              (lo == hi ? std::to_string(lo) : "at least " + std::to_string(lo)) + " entries");
    };
    const std::size_t many = std::numeric_limits<std::size_t>::max();
    const std::size_t min_grid = is_rate_scenario(scenario) ? 3 : 1;
    switch (scenario) {
    case Scenario::t1_rate:
        require_size(n_grid, "n_grid", min_grid, many);
        require_size(d_grid, "d_grid", 1, 1);
        break;
    case Scenario::dyadic_diagnostic:
        require_size(n_grid, "n_grid", 1, 1);
        require_size(d_grid, "d_grid", 1, 1);
        break;
    case Scenario::complexity_scan:
        require_size(n_grid, "n_grid", 1, many);
        require_size(d_grid, "d_grid", 1, many);
        break;
    case Scenario::anderson_scan:
        require_size(d_grid, "d_grid", 1, many);
        break;
    case Scenario::linf_profile:
        require_size(n_grid, "n_grid", 1, 1);
        require_size(d_grid, "d_grid", 2, many);
        break;
    default:
        require_size(n_grid, "n_grid", 1, 1);
        require_size(d_grid, "d_grid", min_grid, many);
        break;
    }
    if (scenario != Scenario::anderson_scan) {
        const std::size_t n_max = *std::max_element(n_grid.begin(), n_grid.end());
        const std::size_t d_min = *std::min_element(d_grid.begin(), d_grid.end());
        if (scenario != Scenario::complexity_scan && n_max > d_min)
            throw ConfigError("every n must be <= every d (overparameterized regime)");
    }
    const std::size_t d_min = *std::min_element(d_grid.begin(), d_grid.end());
    for (std::size_t idx : truth_support)
        if (idx >= d_min)
            throw ConfigError("truth support index " + std::to_string(idx) + " exceeds the smallest d");
}

double ExperimentConfig::resolved_tolerance() const {
    if (verdict.tolerance)
        return *verdict.tolerance;
    switch (scenario) {
    case Scenario::t2_rate:
        return 0.2;
    default:
        return 0.3;
    }
}

double ExperimentConfig::resolved_envelope() const {
    if (verdict.envelope_factor)
        return *verdict.envelope_factor;
    switch (scenario) {
    case Scenario::linf_profile:
        return 2.0;
    case Scenario::anderson_scan:
        return 3.0;
    case Scenario::dyadic_diagnostic:
        return 10.0;
    default:
        return 1.0;
    }
}

} // namespace mni
