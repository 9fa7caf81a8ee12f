#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "streamnet/executor.hpp"
#include "streamnet/neuron.hpp"
#include "streamnet/streams.hpp"

namespace streamnet {

// ---------------------------------------------------------------------------
// Contraction probe
// ---------------------------------------------------------------------------

/// Two state trajectories evolved under a shared input sequence. Ratios are
/// recorded only while the previous separation is nonzero.
struct ContractionReport {
    double lambda = 0.0;
    std::vector<double> ratios;        // ||ds_t|| / ||ds_{t-1}||
    double max_abs_deviation = 0.0;    // max |ratio - lambda|
    std::uint64_t max_ulp_deviation = 0;  // max ulps(||ds_t||, lambda*||ds_{t-1}||)
    std::uint64_t max_ulp_deviation_closed_form = 0;  // vs lambda^t * ||ds_0||
    std::uint64_t steps_measured = 0;
};

ContractionReport contraction_probe(double lambda, const Vector& s_a, const Vector& s_b,
                                    std::span<const Vector> y_seq);

/// n copies of the zero vector: the drive under which the separation decay
/// is exact to rounding (adding a zero term is exact in IEEE arithmetic).
std::vector<Vector> zero_drive(std::size_t dim, std::size_t n);

// ---------------------------------------------------------------------------
// Bound probe
// ---------------------------------------------------------------------------

struct BoundReport {
    double max_abs_state = 0.0;  // running max of elementwise |s|
    double bound = 0.0;          // M in effect
    std::uint64_t steps = 0;
};

/// Run one neuron over the source, tracking the largest state magnitude.
/// Starts from the zero state unless s0 is given (|s0| must not exceed the
/// bound). Refuses unbounded activations unless an external bound is
/// supplied.
BoundReport bound_probe(const NeuronParams& params, StreamSource& source, std::uint64_t steps,
                        std::optional<double> external_bound = {},
                        std::optional<Vector> s0 = {});

// ---------------------------------------------------------------------------
// Retention curve
// ---------------------------------------------------------------------------

/// ||s_t|| for t = 0..steps under pure decay: zero input, zero bias, zero
/// state feedback, so y = sigma(0) = 0 and s_t = lambda s_{t-1} exactly as
/// evaluated by the step kernel. Requires sigma(0) = 0.
std::vector<double> retention_curve(double lambda, const Vector& s0, std::uint64_t steps,
                                    ActivationKind activation = ActivationKind::Tanh);

/// First t with series[t] <= 0.5 * series[0].
std::optional<std::uint64_t> half_life(std::span<const double> series);

// ---------------------------------------------------------------------------
// Phase trajectories and attractor classification
// ---------------------------------------------------------------------------

struct PhasePoint {
    double a = 0.0;
    double b = 0.0;
};

struct PhaseConfig {
    NeuronParams params;
    SignalSpec signal;
    std::uint64_t total_steps = 3000;
    std::uint64_t burn_in = 500;
};

/// Post-burn-in phase points of the neuron run over the signal. State
/// enabled: the stream neuron; state disabled: the memoryless map with the
/// state reported identically zero. Scalar state embeds as (s_{t-1}, s_t);
/// vector state as the first two components of s_t.
std::vector<PhasePoint> phase_trajectory(const PhaseConfig& config, bool state_enabled);

struct AttractorVerdict {
    enum class Kind { FixedPoint, LimitCycle, Unclassified };
    Kind kind = Kind::Unclassified;
    double diameter = 0.0;
    double recurrence_distance = 0.0;
    std::optional<std::uint64_t> period;
};

const char* attractor_kind_name(AttractorVerdict::Kind k) noexcept;

/// Largest pairwise distance over the trajectory.
double trajectory_diameter(std::span<const PhasePoint> trajectory);

/// FixedPoint if the trajectory diameter is at most eps_fp; else LimitCycle
/// if some period >= min_period recurs within eps_rec consistently through
/// the trajectory end; else Unclassified.
AttractorVerdict classify_attractor(std::span<const PhasePoint> trajectory, double eps_fp,
                                    double eps_rec, std::uint64_t min_period);

/// Default thresholds: eps_fp scales with trajectory extent, eps_rec with
/// its diameter.
double default_eps_fp(std::span<const PhasePoint> trajectory);
double default_eps_rec(double diameter);

// ---------------------------------------------------------------------------
// Lag sensitivity (temporal-dependence probe)
// ---------------------------------------------------------------------------

enum class ModelKind { Stateful, Stateless };

/// Final-step output of the model run over the whole input sequence from
/// the zero initial state.
Vector model_final_output(ModelKind model, const NeuronParams& params,
                          std::span<const Vector> inputs);

/// Finite-difference dependence of y_t (t = last index) on x_{t-k}:
/// max over input coordinates of ||y_t(perturbed) - y_t(base)|| / h,
/// perturbing one coordinate by +h at a time.
double lag_sensitivity(ModelKind model, const NeuronParams& params,
                       std::span<const Vector> base_inputs, std::uint64_t k, double h);

struct SensitivityReport {
    std::uint64_t k = 0;
    double h = 0.0;
    double stateless_sensitivity = 0.0;
    double stateful_sensitivity = 0.0;
};

SensitivityReport lag_sensitivity_report(const NeuronParams& params,
                                         std::span<const Vector> base_inputs, std::uint64_t k,
                                         double h);

// ---------------------------------------------------------------------------
// Tracking experiment
// ---------------------------------------------------------------------------

struct TrackingConfig {
    SignalSpec signal;          // scalar noisy sinusoid with clean reference
    double lambda = 0.9;        // decay of the state-enabled tracker
    std::uint64_t total_steps = 4500;
    std::uint64_t transient = 500;
};

struct TrackingReport {
    double mse_stateful = 0.0;
    double mse_stateless = 0.0;
    std::uint64_t transient = 0;
    std::uint64_t window = 0;  // post-transient steps scored
    double gain = 0.0;         // EMA amplitude gain at the signal frequency
};

/// Per-step series consumer: (t, reference, stateless output, stateful output).
using TrackingSink = std::function<void(std::uint64_t, double, double, double)>;

/// Amplitude gain of the decay filter at angular frequency omega:
/// (1-lambda) / sqrt(1 - 2 lambda cos(omega) + lambda^2).
double ema_gain(double lambda, double omega);

/// Run the state-enabled and state-disabled trackers over the identical
/// noisy stream (same seed) and score both against the clean reference
/// after the transient. The state-disabled output is the raw pass-through;
/// the state-enabled output is the state with amplitude compensation 1/gain.
TrackingReport tracking_experiment(const TrackingConfig& config, const TrackingSink& sink = {});

// ---------------------------------------------------------------------------
// Constant-cost benchmark
// ---------------------------------------------------------------------------

struct BenchConfig {
    NeuronParams params;
    SignalSpec signal;                         // defaults to white noise
    std::uint64_t total_steps = 1'001'000;
    std::uint64_t window = 1000;               // timed window length
    std::uint64_t early_start = 1000;          // first timed window offset
    std::uint64_t late_start = 1'000'000;      // second timed window offset
};

struct BenchReport {
    std::uint64_t steps = 0;
    double early_ns_per_step = 0.0;
    double late_ns_per_step = 0.0;
    double ratio = 1.0;  // late / early
    std::size_t memory_bytes_early = 0;
    std::size_t memory_bytes_late = 0;
};

BenchReport bench_experiment(const BenchConfig& config);

// ---------------------------------------------------------------------------
// Verification suites
// ---------------------------------------------------------------------------

struct VerifyConfig {
    // contraction
    std::vector<double> contraction_lambdas{0.0, 0.25, 0.5, 0.9, 0.999};
    std::uint64_t contraction_pairs = 1000;
    std::uint64_t contraction_steps = 100;
    std::size_t contraction_dim = 8;
    std::uint64_t contraction_seed = 1001;
    double contraction_min_separation = 0.25;
    std::uint64_t contraction_max_ulps = 64;
    // bounds
    std::uint64_t bound_draws = 100;
    std::uint64_t bound_steps = 100'000;
    std::uint64_t bound_seed = 2002;
    double bound_noise_std = 2.0;
    double bound_slack_eps = 4.0;  // allowance in units of machine epsilon
    // collapse
    std::vector<std::uint64_t> collapse_lags{1, 2, 5, 10};
    std::uint64_t collapse_input_len = 32;
    std::uint64_t collapse_seed = 7;
    double collapse_h = 1e-3;
    double collapse_stateful_floor = 1e-4;
};

struct ProbeResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

std::vector<ProbeResult> verify_contraction(const VerifyConfig& cfg);
std::vector<ProbeResult> verify_bounds(const VerifyConfig& cfg);
std::vector<ProbeResult> verify_collapse(const VerifyConfig& cfg);

/// All suites. Independent probes may run concurrently; STREAMNET_THREADS
/// caps the worker count.
std::vector<ProbeResult> verify_all(const VerifyConfig& cfg);

}  // namespace streamnet
