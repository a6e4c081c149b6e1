#include "botdrive/trace.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace botdrive {

using nlohmann::json;

namespace {

json action_json(const MacroAction& a) { return {{"kind", std::string(to_string(a.kind))}, {"duration", a.duration}}; }

std::string number_or_blank(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) {
        return "";
    }
    std::ostringstream os;
    os << std::setprecision(12) << j[key].get<double>();
    return os.str();
}

}  // namespace

json agent_json(const AgentState& agent) {
    const PhysicalState& s = agent.state;
    json j = {{"id", agent.id},
              {"x", s.position.x},
              {"y", s.position.y},
              {"heading", s.heading},
              {"speed", s.speed},
              {"accel", s.acceleration},
              {"yaw_rate", s.yaw_rate},
              {"lane", s.lane.value},
              {"s", s.s},
              {"d", s.d},
              {"intention", std::string(to_string(agent.intention.kind))},
              {"committed", agent.intention.committed},
              {"desired_speed", agent.style.desired_speed},
              {"lookahead", agent.style.lookahead}};
    j["target_lane"] = agent.intention.target_lane ? json(agent.intention.target_lane->value) : json(nullptr);
    return j;
}

json metrics_json(const EpisodeMetrics& m) {
    return {{"reward", m.reward},
            {"collided", m.collided},
            {"missed_goal", m.missed_goal},
            {"time_to_goal", m.time_to_goal ? json(*m.time_to_goal) : json(nullptr)},
            {"comfort", m.comfort},
            {"ticks", m.ticks}};
}

json trace_header(const EpisodeResult& result) {
    json initial = json::array();
    initial.push_back(agent_json(result.initial.ego));
    for (const AgentState& a : result.initial.exos) {
        initial.push_back(agent_json(a));
    }
    return {{"record", "header"},
            {"format", "botdrive-trace"},
            {"version", kTraceVersion},
            {"variant", std::string(to_string(result.variant))},
            {"seed", result.seed},
            {"config", to_json(result.config)},
            {"spec", to_json(result.spec)},
            {"comfort_definition", "stand-in: fraction of ticks with |accel| <= 2.5 and |jerk| <= 4"},
            {"initial", initial},
            {"metrics", metrics_json(result.metrics)}};
}

json tick_json(const TickRecord& t) {
    json agents = json::array();
    agents.push_back(agent_json(t.truth.ego));
    for (const AgentState& a : t.truth.exos) {
        agents.push_back(agent_json(a));
    }
    json obs = json::array();
    for (const AgentObservation& o : t.observation.agents) {
        obs.push_back({{"id", o.id}, {"x", o.position.x}, {"y", o.position.y}, {"heading", o.heading}, {"speed", o.speed}});
    }
    json belief = json::array();
    for (const auto& [id, summary] : t.belief) {
        json probs = json::object();
        for (const auto& [kind, p] : summary.intentions) {
            probs[std::string(to_string(kind))] = p;
        }
        belief.push_back({{"id", id},
                          {"intention_prob", probs},
                          {"desired_speed_mean", summary.mean_style.desired_speed},
                          {"lookahead_mean", summary.mean_style.lookahead}});
    }
    json sequence = json::array();
    for (const MacroAction& a : t.sequence) {
        sequence.push_back(action_json(a));
    }
    return {{"record", "tick"},
            {"tick", t.tick},
            {"time", t.time},
            {"agents", agents},
            {"observation", {{"timestamp", t.observation.timestamp}, {"agents", obs}}},
            {"belief", belief},
            {"planner",
             {{"expansions", t.planner.expansions},
              {"nodes", t.planner.nodes},
              {"root_lower", t.planner.root_lower},
              {"root_upper", t.planner.root_upper},
              {"max_depth", t.planner.max_depth}}},
            {"action", action_json(t.action)},
            {"sequence", sequence},
            {"speed_scale", t.speed_scale},
            {"candidates", t.candidates},
            {"reward", t.reward},
            {"collided", t.collided}};
}

std::string trace_text(const EpisodeResult& result) {
    std::string out = trace_header(result).dump();
    out += '\n';
    for (const TickRecord& t : result.ticks) {
        out += tick_json(t).dump();
        out += '\n';
    }
    return out;
}

void write_trace(const std::filesystem::path& path, const EpisodeResult& result) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << trace_text(result);
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

TraceFile read_trace(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    TraceFile trace;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        const std::string kind = j.value("record", "");
        if (line_no == 1) {
            if (kind != "header" || j.value("format", "") != "botdrive-trace") {
                throw std::runtime_error(path.string() + ": missing trace header");
            }
            trace.header = std::move(j);
        } else if (kind == "tick") {
            trace.ticks.push_back(std::move(j));
        } else {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": unexpected record");
        }
    }
    if (trace.header.is_null()) {
        throw std::runtime_error(path.string() + ": empty trace");
    }
    return trace;
}

std::string agents_plotdata_csv(const TraceFile& trace) {
    std::ostringstream os;
    os << "time,agent,x,y,heading,speed,accel,lane,d,intention,p_lf,p_lc_l,p_lc_r,desired_speed_mean\n";
    for (const json& t : trace.ticks) {
        std::map<int, const json*> beliefs;
        for (const json& b : t["belief"]) {
            beliefs[b["id"].get<int>()] = &b;
        }
        for (const json& a : t["agents"]) {
            const int id = a["id"].get<int>();
            os << number_or_blank(t, "time") << ',' << id << ',' << number_or_blank(a, "x") << ','
               << number_or_blank(a, "y") << ',' << number_or_blank(a, "heading") << ',' << number_or_blank(a, "speed")
               << ',' << number_or_blank(a, "accel") << ',' << a["lane"].get<int>() << ',' << number_or_blank(a, "d")
               << ',' << a["intention"].get<std::string>();
            if (const auto it = beliefs.find(id); it != beliefs.end()) {
                const json& probs = (*it->second)["intention_prob"];
                os << ',' << number_or_blank(probs, "LF") << ',' << number_or_blank(probs, "LC_L") << ','
                   << number_or_blank(probs, "LC_R") << ',' << number_or_blank(*it->second, "desired_speed_mean");
            } else {
                os << ",,,,";
            }
            os << '\n';
        }
    }
    return os.str();
}

void check_trace_invariants(const TraceFile& trace) {
    const json& cfg = trace.header.at("config");
    const double dt = cfg.at("pomdp").at("dt").get<double>();
    const double lf = cfg.at("pomdp").at("lf_duration").get<double>();
    const double lc = cfg.at("pomdp").at("lc_duration").get<double>();
    const double horizon = cfg.at("planner").at("horizon").get<double>();
    auto fail = [](int tick, const std::string& what) {
        throw InvariantViolation("tick " + std::to_string(tick) + ": " + what);
    };
    auto check_action = [&](int tick, const json& a) {
        const IntentionKind kind = parse_intention_kind(a.at("kind").get<std::string>());
        const double duration = a.at("duration").get<double>();
        if (duration != (is_lane_change(kind) ? lc : lf)) {
            fail(tick, "macro-action duration does not match its kind");
        }
        const double ticks = duration / dt;
        if (std::abs(ticks - std::round(ticks)) > 1e-9) {
            fail(tick, "macro-action is not a whole number of ticks");
        }
    };
    int expected = 1;
    for (const json& t : trace.ticks) {
        const int tick = t.at("tick").get<int>();
        if (tick != expected) {
            fail(tick, "ticks are not consecutive");
        }
        ++expected;
        check_action(tick, t.at("action"));
        for (const json& a : t.at("sequence")) {
            check_action(tick, a);
        }
        const json& p = t.at("planner");
        if (p.at("max_depth").get<double>() > horizon + 1e-9) {
            fail(tick, "belief tree deeper than the planning horizon");
        }
        if (p.at("root_lower").get<double>() > p.at("root_upper").get<double>() + 1e-9) {
            fail(tick, "root lower bound above upper bound");
        }
    }
}

std::string planner_plotdata_csv(const TraceFile& trace) {
    std::ostringstream os;
    os << "time,ego_speed,ego_accel,ego_lane,action,speed_scale,root_lower,root_upper,expansions,reward,collided\n";
    for (const json& t : trace.ticks) {
        const json& ego = t["agents"][0];
        const json& p = t["planner"];
        os << number_or_blank(t, "time") << ',' << number_or_blank(ego, "speed") << ','
           << number_or_blank(ego, "accel") << ',' << ego["lane"].get<int>() << ','
           << t["action"]["kind"].get<std::string>() << ',' << number_or_blank(t, "speed_scale") << ','
           << number_or_blank(p, "root_lower") << ',' << number_or_blank(p, "root_upper") << ','
           << p["expansions"].get<int>() << ',' << number_or_blank(t, "reward") << ','
           << (t["collided"].get<bool>() ? 1 : 0) << '\n';
    }
    return os.str();
}

}  // namespace botdrive
