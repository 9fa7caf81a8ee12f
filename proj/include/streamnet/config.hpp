#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "streamnet/analysis.hpp"
#include "streamnet/executor.hpp"

namespace streamnet {

enum class OutputFormat { Csv, Jsonl };

/// One JSON document that fully determines a run. Every field has a
/// default; per-command reference defaults come from the factory
/// functions below and user files overlay them key by key. Unknown keys
/// are rejected.
struct ExperimentConfig {
    std::vector<NeuronParams> layers;

    SignalSpec signal;
    std::uint64_t total_steps = 3000;
    std::uint64_t burn_in = 500;
    std::uint64_t transient = 500;

    // phase classification thresholds
    double eps_fp_scale = 1e-6;
    double eps_rec_scale = 1e-3;
    std::uint64_t min_period = 3;

    // retention
    std::vector<double> retention_lambdas{0.5, 0.9, 0.99};
    std::uint64_t retention_steps = 1000;
    double retention_s0 = 1.0;

    // tracking
    double tracking_lambda = 0.9;

    // bench
    std::uint64_t bench_total = 1'001'000;
    std::uint64_t bench_window = 1000;
    std::uint64_t bench_early_start = 1000;
    std::uint64_t bench_late_start = 1'000'000;

    VerifyConfig verify;

    OutputFormat format = OutputFormat::Csv;

    NetworkSpec to_network() const { return NetworkSpec(layers); }
};

/// Identity pass-through network (scalar, no state retention).
ExperimentConfig default_run_config();
/// Reference single tanh neuron driven by a sinusoid (phase/bench default).
ExperimentConfig default_phase_config();
ExperimentConfig default_retention_config();
/// Reference noisy-sinusoid tracking setup.
ExperimentConfig default_track_config();
ExperimentConfig default_bench_config();
ExperimentConfig default_verify_config();

/// Overlay a JSON document (text) onto a base config. Throws Error with
/// InvalidSpec on schema violations.
ExperimentConfig parse_config_text(const std::string& text, ExperimentConfig base);

/// Overlay a JSON file onto a base config.
ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base);

/// Effective config as a JSON document (the `--print-config` payload).
std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace streamnet
