#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "streamnet/analysis.hpp"
#include "streamnet/config.hpp"
#include "streamnet/executor.hpp"
#include "streamnet/streams.hpp"

namespace {

using namespace streamnet;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitInvariant = 4;

int exit_code_for(const Error& e) {
    switch (e.code()) {
        case Errc::IoError:
        case Errc::ParseError:
        case Errc::SourceError:
            return kExitIo;
        case Errc::NonFiniteValue:
            return kExitNumeric;
        default:
            return kExitConfig;
    }
}

struct CommonOpts {
    std::string config_path;
    std::string input = "-";
    std::string output;
    std::string format;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> steps;
    bool print_config = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_input) {
    cmd->add_option("--config", opts.config_path, "JSON config file");
    if (with_input) {
        cmd->add_option("--input", opts.input, "input records file, '-' for stdin")
            ->capture_default_str();
    }
    cmd->add_option("--output", opts.output, "output file, '-' for stdout");
    cmd->add_option("--format", opts.format, "output format: csv|jsonl")
        ->check(CLI::IsMember({"csv", "jsonl"}));
    cmd->add_option("--seed", opts.seed, "override signal seed");
    cmd->add_option("--steps", opts.steps, "override step count");
    cmd->add_flag("--print-config", opts.print_config, "print the effective config and exit");
}

ExperimentConfig resolve_config(const CommonOpts& opts, ExperimentConfig base) {
    if (!opts.config_path.empty()) {
        base = load_config_file(opts.config_path, std::move(base));
    }
    if (opts.seed) base.signal.seed = *opts.seed;
    if (opts.format == "csv") base.format = OutputFormat::Csv;
    if (opts.format == "jsonl") base.format = OutputFormat::Jsonl;
    return base;
}

/// Output stream bound to a file or stdout ('-' or empty).
class OutStream {
public:
    explicit OutStream(const std::string& path) {
        if (!path.empty() && path != "-") {
            file_.open(path, std::ios::trunc);
            if (!file_) throw Error(Errc::IoError, "cannot open output file: " + path);
        }
    }
    std::ostream& get() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

std::string short_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

void print_summary(const RunSummary& s) {
    std::fprintf(stderr, "steps: %" PRIu64 "\n", s.steps);
    std::fprintf(stderr, "final_state_digest: %016" PRIx64 "\n", s.final_state_digest);
    std::fprintf(stderr, "step_time_ns: min=%.0f mean=%.1f max=%.0f\n", s.step_time.min_ns,
                 s.step_time.mean_ns, s.step_time.max_ns);
    std::fprintf(stderr, "peak_engine_memory_bytes: %zu\n", s.peak_engine_memory_bytes);
    if (s.fault) std::fprintf(stderr, "fault: %s\n", s.fault->c_str());
}

int cmd_run(const CommonOpts& opts) {
    ExperimentConfig cfg = resolve_config(opts, default_run_config());
    if (opts.print_config) {
        std::cout << config_to_json(cfg) << "\n";
        return kExitOk;
    }
    NetworkSpec spec = cfg.to_network();
    NetworkState state = initial_network_state(spec);
    auto source = fused_consumption_guard(open_record_source(opts.input));

    OutStream out(opts.output);
    auto writer = cfg.format == OutputFormat::Csv ? make_csv_writer(out.get())
                                                  : make_jsonl_writer(out.get());
    RunSummary summary = run_stream(spec, state, *source,
                                    [&](const StepRecord& rec) { writer->write(rec); },
                                    opts.steps);
    print_summary(summary);
    if (summary.fault) return kExitNumeric;
    return kExitOk;
}

int cmd_verify(const std::string& suite, const CommonOpts& opts) {
    ExperimentConfig cfg = resolve_config(opts, default_verify_config());
    if (opts.print_config) {
        std::cout << config_to_json(cfg) << "\n";
        return kExitOk;
    }
    std::vector<ProbeResult> results;
    if (suite == "contraction") {
        results = verify_contraction(cfg.verify);
    } else if (suite == "bounds") {
        results = verify_bounds(cfg.verify);
    } else if (suite == "collapse") {
        results = verify_collapse(cfg.verify);
    } else if (suite == "all") {
        results = verify_all(cfg.verify);
    } else {
        throw Error(Errc::InvalidSpec, "unknown verify suite: " + suite);
    }

    bool all_pass = true;
    for (const auto& r : results) {
        std::printf("%-44s %s  %s\n", r.name.c_str(), r.pass ? "PASS" : "FAIL", r.detail.c_str());
        all_pass = all_pass && r.pass;
    }
    if (!opts.output.empty()) {
        OutStream out(opts.output);
        for (const auto& r : results) {
            out.get() << "{\"name\":\"" << r.name << "\",\"pass\":" << (r.pass ? "true" : "false")
                      << ",\"detail\":\"" << r.detail << "\"}\n";
        }
    }
    return all_pass ? kExitOk : kExitInvariant;
}

int cmd_phase(const CommonOpts& opts) {
    ExperimentConfig cfg = resolve_config(opts, default_phase_config());
    if (opts.steps) cfg.total_steps = *opts.steps;
    if (opts.print_config) {
        std::cout << config_to_json(cfg) << "\n";
        return kExitOk;
    }
    if (cfg.layers.size() != 1) {
        throw Error(Errc::InvalidSpec, "phase runs a single neuron; configure one layer");
    }
    PhaseConfig pc{cfg.layers[0], cfg.signal, cfg.total_steps, cfg.burn_in};

    OutStream out(opts.output.empty() ? std::string("phase.csv") : opts.output);
    out.get() << "variant,t,p1,p2\n";

    for (bool enabled : {true, false}) {
        const char* variant = enabled ? "state_enabled" : "state_disabled";
        auto points = phase_trajectory(pc, enabled);
        for (std::size_t i = 0; i < points.size(); ++i) {
            out.get() << variant << ',' << (cfg.burn_in + i) << ',' << format_double(points[i].a)
                      << ',' << format_double(points[i].b) << '\n';
        }
        double scale = 0.0;
        for (const auto& p : points) scale = std::max({scale, std::fabs(p.a), std::fabs(p.b)});
        const double eps_fp = cfg.eps_fp_scale * (1.0 + scale);
        const double diam = trajectory_diameter(points);
        const double eps_rec =
            std::max(cfg.eps_rec_scale * diam, std::numeric_limits<double>::min());
        auto verdict = classify_attractor(points, eps_fp, eps_rec, cfg.min_period);
        std::printf("%s: %s diameter=%.6g recurrence=%.3g", variant,
                    attractor_kind_name(verdict.kind), verdict.diameter,
                    verdict.recurrence_distance);
        if (verdict.period) std::printf(" period=%" PRIu64, *verdict.period);
        std::printf("\n");
    }
    return kExitOk;
}

int cmd_retention(const CommonOpts& opts) {
    ExperimentConfig cfg = resolve_config(opts, default_retention_config());
    if (opts.steps) cfg.retention_steps = *opts.steps;
    if (opts.print_config) {
        std::cout << config_to_json(cfg) << "\n";
        return kExitOk;
    }
    const Vector s0({cfg.retention_s0});

    const bool to_stdout = opts.output == "-";
    for (double lambda : cfg.retention_lambdas) {
        auto series = retention_curve(lambda, s0, cfg.retention_steps);
        std::unique_ptr<OutStream> out;
        if (to_stdout) {
            out = std::make_unique<OutStream>("-");
        } else {
            std::string base = opts.output.empty() ? std::string("retention.csv") : opts.output;
            const auto dot = base.rfind('.');
            std::string tagged = (dot == std::string::npos)
                                     ? base + "_lambda" + short_double(lambda)
                                     : base.substr(0, dot) + "_lambda" + short_double(lambda) +
                                           base.substr(dot);
            out = std::make_unique<OutStream>(tagged);
        }
        out->get() << "t,norm_s,lambda\n";
        for (std::size_t t = 0; t < series.size(); ++t) {
            out->get() << t << ',' << format_double(series[t]) << ',' << short_double(lambda)
                       << '\n';
        }
        auto hl = half_life(series);
        std::printf("lambda=%s: half_life=%s\n", short_double(lambda).c_str(),
                    hl ? std::to_string(*hl).c_str() : "none");
    }
    return kExitOk;
}

int cmd_track(const CommonOpts& opts) {
    ExperimentConfig cfg = resolve_config(opts, default_track_config());
    if (opts.steps) cfg.total_steps = *opts.steps;
    if (opts.print_config) {
        std::cout << config_to_json(cfg) << "\n";
        return kExitOk;
    }
    TrackingConfig tc{cfg.signal, cfg.tracking_lambda, cfg.total_steps, cfg.transient};

    OutStream out(opts.output.empty() ? std::string("tracking.csv") : opts.output);
    out.get() << "t,r,y_stateless,y_stateful\n";
    auto report = tracking_experiment(tc, [&](std::uint64_t t, double r, double ysl, double ysf) {
        out.get() << t << ',' << format_double(r) << ',' << format_double(ysl) << ','
                  << format_double(ysf) << '\n';
    });
    std::printf("mse_stateful=%s mse_stateless=%s gain=%s window=%" PRIu64 "\n",
                format_double(report.mse_stateful).c_str(),
                format_double(report.mse_stateless).c_str(), format_double(report.gain).c_str(),
                report.window);
    std::printf("stateful_tracks_better: %s\n",
                report.mse_stateful < report.mse_stateless ? "yes" : "no");
    return kExitOk;
}

int cmd_bench(const CommonOpts& opts) {
    ExperimentConfig cfg = resolve_config(opts, default_bench_config());
    if (opts.steps) cfg.bench_total = *opts.steps;
    if (opts.print_config) {
        std::cout << config_to_json(cfg) << "\n";
        return kExitOk;
    }
    if (cfg.layers.size() != 1) {
        throw Error(Errc::InvalidSpec, "bench runs a single neuron; configure one layer");
    }
    BenchConfig bc{cfg.layers[0], cfg.signal, cfg.bench_total, cfg.bench_window,
                   cfg.bench_early_start, cfg.bench_late_start};
    auto report = bench_experiment(bc);
    std::printf("steps: %" PRIu64 "\n", report.steps);
    std::printf("early_ns_per_step: %.2f\n", report.early_ns_per_step);
    std::printf("late_ns_per_step: %.2f\n", report.late_ns_per_step);
    std::printf("late_over_early_ratio: %.4f\n", report.ratio);
    std::printf("engine_memory_bytes_early: %zu\n", report.memory_bytes_early);
    std::printf("engine_memory_bytes_late: %zu\n", report.memory_bytes_late);
    std::printf("memory_constant: %s\n",
                report.memory_bytes_early == report.memory_bytes_late ? "yes" : "no");
    if (!opts.output.empty()) {
        OutStream out(opts.output);
        out.get() << "{\"steps\":" << report.steps << ",\"early_ns_per_step\":"
                  << format_double(report.early_ns_per_step)
                  << ",\"late_ns_per_step\":" << format_double(report.late_ns_per_step)
                  << ",\"ratio\":" << format_double(report.ratio)
                  << ",\"memory_bytes_early\":" << report.memory_bytes_early
                  << ",\"memory_bytes_late\":" << report.memory_bytes_late << "}\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"streamnet: persistent-state stream neuron execution engine"};
    app.require_subcommand(1);

    CommonOpts run_opts, verify_opts, phase_opts, retention_opts, track_opts, bench_opts;
    std::string verify_suite = "all";

    auto* run = app.add_subcommand("run", "stream inputs through the network once");
    add_common(run, run_opts, true);

    auto* verify = app.add_subcommand("verify", "machine-check the structural guarantees");
    verify->add_option("suite", verify_suite, "contraction|bounds|collapse|all")
        ->check(CLI::IsMember({"contraction", "bounds", "collapse", "all"}));
    add_common(verify, verify_opts, false);

    auto* phase = app.add_subcommand("phase", "phase-space trajectories and attractor verdicts");
    add_common(phase, phase_opts, false);

    auto* retention = app.add_subcommand("retention", "state retention curves per decay factor");
    add_common(retention, retention_opts, false);

    auto* track = app.add_subcommand("track", "continuous tracking comparison");
    add_common(track, track_opts, false);

    auto* bench = app.add_subcommand("bench", "constant-cost execution benchmark");
    add_common(bench, bench_opts, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (run->parsed()) return cmd_run(run_opts);
        if (verify->parsed()) return cmd_verify(verify_suite, verify_opts);
        if (phase->parsed()) return cmd_phase(phase_opts);
        if (retention->parsed()) return cmd_retention(retention_opts);
        if (track->parsed()) return cmd_track(track_opts);
        if (bench->parsed()) return cmd_bench(bench_opts);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (...) {
        std::fprintf(stderr, "error: unexpected failure\n");
        return kExitConfig;
    }
    return kExitConfig;
}
