// botdrive: run episodes, batches and trace post-processing from the shell.
//
// Exit codes: 0 success, 1 invalid input, 2 internal invariant violation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "botdrive/config.hpp"
#include "botdrive/episode.hpp"
#include "botdrive/scenario_spec.hpp"
#include "botdrive/scene_generator.hpp"
#include "botdrive/trace.hpp"

namespace fs = std::filesystem;
using namespace botdrive;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kInternal = 2;

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) {
        throw std::runtime_error("cannot write " + path.string());
    }
}

Config resolve_config(const std::string& path, int workers) {
    Config cfg = path.empty() ? Config{} : load_config(path);
    if (workers > 0) {
        cfg.harness.workers = workers;
    }
    return cfg;
}

void print_metrics(const std::string& label, const EpisodeMetrics& m) {
    std::cout << label << " reward=" << m.reward << " collided=" << m.collided << " missed_goal=" << m.missed_goal
              << " time_to_goal=";
    if (m.time_to_goal) {
        std::cout << *m.time_to_goal;
    } else {
        std::cout << "none";
    }
    std::cout << " comfort=" << m.comfort << " ticks=" << m.ticks << '\n';
}

std::vector<std::string> split(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (const char c : text) {
        if (c == ',') {
            if (!cur.empty()) {
                out.push_back(cur);
            }
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) {
        out.push_back(cur);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"botdrive: driving under intention uncertainty"};
    app.require_subcommand(1);

    std::string config_path;
    int workers = 0;

    // run-once
    auto* once = app.add_subcommand("run-once", "Run one closed-loop episode and write its trace");
    std::string spec_path;
    std::string once_template;
    std::uint64_t scene_seed = 0;
    std::uint64_t seed = 0;
    std::string variant_name = "full";
    std::string out_dir = ".";
    double duration = 0.0;
    once->add_option("--spec", spec_path, "Scenario file (JSON)");
    once->add_option("--template", once_template, "Generate the scene from a template instead");
    once->add_option("--scene-seed", scene_seed, "Seed for the scene template");
    once->add_option("--seed", seed, "Episode seed");
    once->add_option("--variant", variant_name, "full, wo_unc, wo_is or h4");
    once->add_option("--config", config_path, "Config file (JSON, partial override)");
    once->add_option("--out", out_dir, "Output directory");
    once->add_option("--duration", duration, "Override the template episode length (s)");

    // run-batch
    auto* batch = app.add_subcommand("run-batch", "Run a template suite over variants and seeds");
    std::string batch_template = "merge";
    int count = 1;
    std::uint64_t scene_seed_base = 0;
    std::string variants_text = "full";
    std::string seeds_text = "0";
    std::string batch_out = ".";
    int exo_count = -1;
    double batch_duration = 40.0;
    batch->add_option("--template", batch_template, "merge, junction or multilane");
    batch->add_option("--count", count, "Number of generated scenes")->check(CLI::PositiveNumber);
    batch->add_option("--scene-seed-base", scene_seed_base, "First scene seed");
    batch->add_option("--variants", variants_text, "Comma separated variants");
    batch->add_option("--seeds", seeds_text, "Comma separated episode seeds");
    batch->add_option("--exo-count", exo_count, "Moving exo-agents per scene (template default when negative)");
    batch->add_option("--duration", batch_duration, "Episode length (s)");
    batch->add_option("--config", config_path, "Config file (JSON, partial override)");
    batch->add_option("--workers", workers, "Worker threads (overrides the config)");
    batch->add_option("--out", batch_out, "Output directory");

    // validate-spec
    auto* validate = app.add_subcommand("validate-spec", "Check a scenario file");
    std::string validate_path;
    validate->add_option("spec", validate_path, "Scenario file")->required();
    validate->add_option("--config", config_path, "Config file used for dt and style bounds");

    // emit-plotdata
    auto* plot = app.add_subcommand("emit-plotdata", "Convert a trace into per-tick CSV series");
    std::string trace_path;
    std::string plot_out = ".";
    plot->add_option("trace", trace_path, "Trace file (JSONL)")->required();
    plot->add_option("--out", plot_out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        if (*once) {
            const Config cfg = resolve_config(config_path, 0);
            ScenarioSpec spec;
            if (!spec_path.empty()) {
                spec = load_spec(spec_path, cfg);
            } else if (!once_template.empty()) {
                SceneParams params;
                if (duration > 0.0) {
                    params.duration = duration;
                }
                spec = generate_scene(once_template, params, scene_seed);
            } else {
                std::cerr << "run-once needs --spec or --template\n";
                return kInvalid;
            }
            const Variant variant = parse_variant(variant_name);
            const EpisodeResult result = run_episode(spec, cfg, variant, seed);
            fs::create_directories(out_dir);
            write_trace(fs::path(out_dir) / "trace.jsonl", result);
            write_file(fs::path(out_dir) / "metrics.csv",
                       episodes_csv({BatchRow{spec.name, variant, seed, result.metrics}}));
            print_metrics(spec.name + " " + variant_name, result.metrics);
        } else if (*batch) {
            const Config cfg = resolve_config(config_path, workers);
            std::vector<Variant> variants;
            for (const std::string& v : split(variants_text)) {
                variants.push_back(parse_variant(v));
            }
            std::vector<std::uint64_t> seeds;
            for (const std::string& s : split(seeds_text)) {
                seeds.push_back(std::stoull(s));
            }
            if (variants.empty() || seeds.empty()) {
                std::cerr << "run-batch needs at least one variant and one seed\n";
                return kInvalid;
            }
            SceneParams params;
            params.exo_count = exo_count;
            params.duration = batch_duration;
            std::vector<BatchJob> jobs;
            for (int i = 0; i < count; ++i) {
                const ScenarioSpec spec = generate_scene(batch_template, params, scene_seed_base + i);
                for (const Variant v : variants) {
                    for (const std::uint64_t s : seeds) {
                        jobs.push_back({spec, v, s});
                    }
                }
            }
            const auto rows = run_batch(jobs, cfg);
            const auto summaries = summarize(rows);
            fs::create_directories(batch_out);
            write_file(fs::path(batch_out) / "episodes.csv", episodes_csv(rows));
            const std::string table = summary_csv(summaries);
            write_file(fs::path(batch_out) / "summary.csv", table);
            std::cout << table;
        } else if (*validate) {
            const Config cfg = resolve_config(config_path, 0);
            load_spec(validate_path, cfg);
            std::cout << validate_path << ": ok\n";
        } else if (*plot) {
            const TraceFile trace = read_trace(trace_path);
            check_trace_invariants(trace);
            fs::create_directories(plot_out);
            write_file(fs::path(plot_out) / "agents.csv", agents_plotdata_csv(trace));
            write_file(fs::path(plot_out) / "planner.csv", planner_plotdata_csv(trace));
            std::cout << "wrote " << trace.ticks.size() << " ticks to " << plot_out << '\n';
        }
    } catch (const ValidationError& e) {
        std::cerr << e.what() << '\n';
        return kInvalid;
    } catch (const UnknownTemplate& e) {
        std::cerr << e.what() << '\n';
        return kInvalid;
    } catch (const InvariantViolation& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kInternal;
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << '\n';
        return kInvalid;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "malformed input: " << e.what() << '\n';
        return kInvalid;
    } catch (const std::logic_error& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kInternal;
    } catch (const std::runtime_error& e) {
        std::cerr << e.what() << '\n';
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kInternal;
    }
    return kOk;
}
