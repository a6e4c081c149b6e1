#include "botdrive/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace botdrive {

namespace {

std::string summarize(const std::string& head, const std::vector<Diagnostic>& diagnostics) {
    std::ostringstream os;
    os << head;
    for (const Diagnostic& d : diagnostics) {
        os << "\n  " << d.field << ": " << d.message;
    }
    return os.str();
}

// Field lists, written once and shared by the reader and the writer.
template <typename V> void visit(V& v, IdmParams& p) {
    v("max_accel", p.max_accel);
    v("comfortable_decel", p.comfortable_decel);
    v("min_gap", p.min_gap);
    v("time_headway", p.time_headway);
    v("exponent", p.exponent);
}

template <typename V> void visit(V& v, MobilParams& p) {
    v("politeness", p.politeness);
    v("threshold", p.threshold);
    v("safe_decel", p.safe_decel);
}

template <typename V> void visit(V& v, StyleBounds& p) {
    v("desired_speed_min", p.desired_speed_min);
    v("desired_speed_max", p.desired_speed_max);
    v("lookahead_min", p.lookahead_min);
    v("lookahead_max", p.lookahead_max);
}

template <typename V> void visit(V& v, DriverConfig& p) {
    v("idm", p.idm);
    v("mobil", p.mobil);
    v("style_bounds", p.style_bounds);
    v("emergency_decel", p.emergency_decel);
    v("yaw_rate_max", p.yaw_rate_max);
    v("gap_epsilon", p.gap_epsilon);
    v("lf_lookahead_min", p.lf_lookahead_min);
    v("lf_lookahead_time", p.lf_lookahead_time);
    v("lc_complete_offset", p.lc_complete_offset);
    v("lc_complete_heading", p.lc_complete_heading);
    v("lc_intention_bias", p.lc_intention_bias);
    v("lane_occupancy_margin", p.lane_occupancy_margin);
    v("vehicle_length", p.vehicle_length);
    v("vehicle_width", p.vehicle_width);
}

template <typename V> void visit(V& v, RewardWeights& p) {
    v("collision", p.collision);
    v("efficiency", p.efficiency);
    v("goal", p.goal);
    v("goal_exponent", p.goal_exponent);
    v("lane_change", p.lane_change);
    v("desired_speed", p.desired_speed);
    v("discount", p.discount);
    v("unreachable_goal_distance", p.unreachable_goal_distance);
}

template <typename V> void visit(V& v, ObservationNoise& p) {
    v("position", p.position);
    v("heading", p.heading);
    v("speed", p.speed);
}

template <typename V> void visit(V& v, PomdpConfig& p) {
    v("dt", p.dt);
    v("lf_duration", p.lf_duration);
    v("lc_duration", p.lc_duration);
    v("reward", p.reward);
    v("ego_lookahead", p.ego_lookahead);
    v("noise", p.noise);
}

template <typename V> void visit(V& v, InferenceConfig& p) {
    v("particles_per_intention", p.particles_per_intention);
    v("style_jitter_fraction", p.style_jitter_fraction);
    v("position_jitter", p.position_jitter);
    v("heading_jitter", p.heading_jitter);
    v("speed_jitter", p.speed_jitter);
    v("likelihood_floor", p.likelihood_floor);
    v("intention_floor", p.intention_floor);
    v("resample_ess_fraction", p.resample_ess_fraction);
    v("regeneration_fraction", p.regeneration_fraction);
}

template <typename V> void visit(V& v, PlannerBudget& p) {
    v("max_expansions", p.max_expansions);
    v("max_ms", p.max_ms);
}

template <typename V> void visit(V& v, PlannerConfig& p) {
    v("num_scenarios", p.num_scenarios);
    v("horizon", p.horizon);
    v("budget", p.budget);
    v("regularization", p.regularization);
    v("xi", p.xi);
    v("s_bucket", p.s_bucket);
    v("speed_bucket", p.speed_bucket);
    v("convergence_gap", p.convergence_gap);
    v("max_likelihood_only", p.max_likelihood_only);
}

template <typename V> void visit(V& v, TrajOptConfig& p) {
    v("mix", p.mix);
    v("num_samples", p.num_samples);
    v("speed_scales", p.speed_scales);
    v("dedup_distance", p.dedup_distance);
}

template <typename V> void visit(V& v, HarnessConfig& p) {
    v("workers", p.workers);
    v("short_horizon", p.short_horizon);
}

template <typename V> void visit(V& v, Config& p) {
    v("driver", p.driver);
    v("pomdp", p.pomdp);
    v("inference", p.inference);
    v("planner", p.planner);
    v("traj_opt", p.traj_opt);
    v("harness", p.harness);
}

struct Writer {
    nlohmann::json& out;

    template <typename T> void operator()(const char* key, T& value) {
        if constexpr (std::is_arithmetic_v<T> || std::is_same_v<T, std::vector<double>>) {
            out[key] = value;
        } else {
            nlohmann::json sub = nlohmann::json::object();
            Writer w{sub};
            visit(w, value);
            out[key] = std::move(sub);
        }
    }
};

struct Reader {
    const nlohmann::json& in;
    std::string path;
    std::vector<Diagnostic>& diagnostics;
    std::set<std::string> seen;

    template <typename T> void operator()(const char* key, T& value) {
        seen.insert(key);
        const auto it = in.find(key);
        if (it == in.end()) {
            return;
        }
        const std::string field = path.empty() ? std::string(key) : path + "." + key;
        if constexpr (std::is_same_v<T, bool>) {
            if (!it->is_boolean()) {
                diagnostics.push_back({field, "expected a boolean"});
                return;
            }
            value = it->template get<bool>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!it->is_number_integer()) {
                diagnostics.push_back({field, "expected an integer"});
                return;
            }
            value = it->template get<T>();
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!it->is_number()) {
                diagnostics.push_back({field, "expected a number"});
                return;
            }
            value = it->template get<T>();
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
            if (!it->is_array() || !std::all_of(it->begin(), it->end(), [](const auto& e) { return e.is_number(); })) {
                diagnostics.push_back({field, "expected an array of numbers"});
                return;
            }
            value = it->template get<std::vector<double>>();
        } else {
            if (!it->is_object()) {
                diagnostics.push_back({field, "expected an object"});
                return;
            }
            read_object(*it, field, value, diagnostics);
        }
    }

    template <typename T>
    static void read_object(const nlohmann::json& j, const std::string& path, T& value,
                            std::vector<Diagnostic>& diagnostics) {
        Reader r{j, path, diagnostics, {}};
        visit(r, value);
        for (const auto& [k, unused] : j.items()) {
            if (!r.seen.contains(k)) {
                diagnostics.push_back({path.empty() ? k : path + "." + k, "unknown key"});
            }
        }
    }
};

bool multiple_of(double value, double step) {
    const double ratio = value / step;
    return std::abs(ratio - std::round(ratio)) < 1e-9;
}

}  // namespace

ValidationError::ValidationError(std::string what, std::vector<Diagnostic> diagnostics)
    : std::invalid_argument(summarize(what, diagnostics)), diagnostics_(std::move(diagnostics)) {}

ConfigError::ConfigError(std::vector<Diagnostic> diagnostics)
    : ValidationError("invalid config", std::move(diagnostics)) {}

std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::wo_unc: return "wo_unc";
        case Variant::wo_is: return "wo_is";
        case Variant::h4: return "h4";
    }
    return "full";
}

Variant parse_variant(std::string_view text) {
    for (const Variant v : kAllVariants) {
        if (to_string(v) == text) {
            return v;
        }
    }
    throw ConfigError(std::vector<Diagnostic>{{"variant", "unknown variant '" + std::string(text) + "'"}});
}

nlohmann::json to_json(const Config& cfg) {
    nlohmann::json out = nlohmann::json::object();
    Writer w{out};
    Config copy = cfg;
    visit(w, copy);
    return out;
}

Config config_from_json(const nlohmann::json& j, const Config& base) {
    std::vector<Diagnostic> diagnostics;
    if (!j.is_object()) {
        throw ConfigError(std::vector<Diagnostic>{{"<root>", "expected an object"}});
    }
    Config cfg = base;
    Reader::read_object(j, "", cfg, diagnostics);
    if (diagnostics.empty()) {
        diagnostics = validate_config(cfg);
    }
    if (!diagnostics.empty()) {
        throw ConfigError(std::move(diagnostics));
    }
    return cfg;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(std::vector<Diagnostic>{{"<file>", "cannot open " + path.string()}});
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::vector<Diagnostic>{{"<file>", e.what()}});
    }
    return config_from_json(j);
}

std::vector<Diagnostic> validate_config(const Config& cfg) {
    std::vector<Diagnostic> out;
    auto require = [&](bool ok, const char* field, const char* message) {
        if (!ok) {
            out.push_back({field, message});
        }
    };
    const PomdpConfig& p = cfg.pomdp;
    require(p.dt > 0.0, "pomdp.dt", "must be positive");
    if (p.dt > 0.0) {
        require(p.lf_duration > 0.0 && multiple_of(p.lf_duration, p.dt), "pomdp.lf_duration",
                "must be a positive multiple of dt");
        require(p.lc_duration > 0.0 && multiple_of(p.lc_duration, p.dt), "pomdp.lc_duration",
                "must be a positive multiple of dt");
    }
    require(p.reward.discount > 0.0 && p.reward.discount <= 1.0, "pomdp.reward.discount", "must lie in (0, 1]");
    require(p.reward.collision >= 0.0 && p.reward.efficiency >= 0.0 && p.reward.goal >= 0.0 &&
                p.reward.lane_change >= 0.0,
            "pomdp.reward", "weights must be non-negative");
    require(p.reward.desired_speed > 0.0, "pomdp.reward.desired_speed", "must be positive");
    require(p.noise.position > 0.0 && p.noise.heading > 0.0 && p.noise.speed > 0.0, "pomdp.noise",
            "standard deviations must be positive");
    require(p.ego_lookahead > 0.0, "pomdp.ego_lookahead", "must be positive");

    const DriverConfig& d = cfg.driver;
    require(d.idm.max_accel > 0.0 && d.idm.comfortable_decel > 0.0 && d.idm.time_headway >= 0.0 &&
                d.idm.min_gap >= 0.0 && d.idm.exponent > 0.0,
            "driver.idm", "parameters out of range");
    require(d.emergency_decel > 0.0, "driver.emergency_decel", "must be positive");
    require(d.yaw_rate_max > 0.0, "driver.yaw_rate_max", "must be positive");
    require(d.gap_epsilon > 0.0, "driver.gap_epsilon", "must be positive");
    require(d.vehicle_length > 0.0 && d.vehicle_width > 0.0, "driver.vehicle_length", "must be positive");
    require(d.style_bounds.desired_speed_min > 0.0 && d.style_bounds.desired_speed_min < d.style_bounds.desired_speed_max,
            "driver.style_bounds", "desired speed range is empty");
    require(d.style_bounds.lookahead_min > 0.0 && d.style_bounds.lookahead_min < d.style_bounds.lookahead_max,
            "driver.style_bounds", "lookahead range is empty");

    const InferenceConfig& inf = cfg.inference;
    require(inf.particles_per_intention >= 1, "inference.particles_per_intention", "must be at least 1");
    require(inf.likelihood_floor > 0.0, "inference.likelihood_floor", "must be positive");
    require(inf.intention_floor >= 0.0 && inf.intention_floor < 1.0 / 3.0, "inference.intention_floor",
            "must lie in [0, 1/3)");
    require(inf.resample_ess_fraction >= 0.0 && inf.resample_ess_fraction <= 1.0, "inference.resample_ess_fraction",
            "must lie in [0, 1]");
    require(inf.regeneration_fraction >= 0.0 && inf.regeneration_fraction <= 1.0, "inference.regeneration_fraction",
            "must lie in [0, 1]");

    const PlannerConfig& pl = cfg.planner;
    require(pl.num_scenarios >= 1, "planner.num_scenarios", "must be at least 1");
    require(pl.horizon > 0.0, "planner.horizon", "must be positive");
    require(pl.budget.max_expansions >= 0, "planner.budget.max_expansions", "must be non-negative");
    require(pl.budget.max_ms >= 0.0, "planner.budget.max_ms", "must be non-negative");
    require(pl.regularization >= 0.0, "planner.regularization", "must be non-negative");
    require(pl.xi >= 0.0 && pl.xi <= 1.0, "planner.xi", "must lie in [0, 1]");
    require(pl.s_bucket > 0.0 && pl.speed_bucket > 0.0, "planner.s_bucket", "buckets must be positive");

    const TrajOptConfig& t = cfg.traj_opt;
    require(t.mix >= 0.0 && t.mix <= 1.0, "traj_opt.mix", "must lie in [0, 1]");
    require(t.num_samples >= 1, "traj_opt.num_samples", "must be at least 1");
    require(!t.speed_scales.empty() &&
                std::all_of(t.speed_scales.begin(), t.speed_scales.end(), [](double s) { return s > 0.0; }),
            "traj_opt.speed_scales", "must be a non-empty list of positive scales");
    require(t.dedup_distance >= 0.0, "traj_opt.dedup_distance", "must be non-negative");

    require(cfg.harness.workers >= 1, "harness.workers", "must be at least 1");
    require(cfg.harness.short_horizon > 0.0, "harness.short_horizon", "must be positive");
    return out;
}

Config apply_variant(Config cfg, Variant variant) {
    switch (variant) {
        case Variant::full:
            break;
        case Variant::wo_unc:
            cfg.planner.max_likelihood_only = true;
            cfg.planner.num_scenarios = 1;
            break;
        case Variant::wo_is:
            cfg.traj_opt.mix = 0.0;
            break;
        case Variant::h4:
            cfg.planner.horizon = cfg.harness.short_horizon;
            break;
    }
    return cfg;
}

}  // namespace botdrive
