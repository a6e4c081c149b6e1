#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "botdrive/episode.hpp"

namespace botdrive {

inline constexpr int kTraceVersion = 1;

nlohmann::json agent_json(const AgentState& agent);
nlohmann::json metrics_json(const EpisodeMetrics& metrics);
/// First trace line: format tag, variant, seed, resolved config, spec, metrics.
nlohmann::json trace_header(const EpisodeResult& result);
nlohmann::json tick_json(const TickRecord& tick);

/// Header line followed by one line per tick, newline terminated.
std::string trace_text(const EpisodeResult& result);
void write_trace(const std::filesystem::path& path, const EpisodeResult& result);

struct TraceFile {
    nlohmann::json header;
    std::vector<nlohmann::json> ticks;
};

/// Throws std::runtime_error on malformed input.
TraceFile read_trace(const std::filesystem::path& path);

/// Throws InvariantViolation when a trace breaks what the closed loop guarantees:
/// consecutive ticks, macro-action durations matching their kind (a whole number
/// of ticks), belief trees within the horizon and root bounds in order.
void check_trace_invariants(const TraceFile& trace);

/// Long-format per-tick agent series: one row per (tick, agent).
std::string agents_plotdata_csv(const TraceFile& trace);
/// Per-tick ego and planner series.
std::string planner_plotdata_csv(const TraceFile& trace);

}  // namespace botdrive
