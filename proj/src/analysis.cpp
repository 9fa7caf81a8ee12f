#include "streamnet/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <thread>

#include "streamnet/fputil.hpp"
#include "streamnet/rng.hpp"

namespace streamnet {

// ---------------------------------------------------------------------------
// Contraction probe
// ---------------------------------------------------------------------------

std::vector<Vector> zero_drive(std::size_t dim, std::size_t n) {
    return std::vector<Vector>(n, Vector::zeros(dim));
}

ContractionReport contraction_probe(double lambda, const Vector& s_a, const Vector& s_b,
                                    std::span<const Vector> y_seq) {
    if (!(lambda >= 0.0 && lambda < 1.0)) {
        throw Error(Errc::LambdaOutOfRange, "lambda must lie in [0, 1)");
    }
    if (s_a.dim() != s_b.dim()) {
        throw Error(Errc::DimensionMismatch, "state pair dimensions differ");
    }
    if (s_a == s_b) {
        throw Error(Errc::DegenerateInput, "state pair must differ");
    }

    ContractionReport report;
    report.lambda = lambda;
    report.ratios.reserve(y_seq.size());

    Vector a = s_a;
    Vector b = s_b;
    const double d0 = norm(a - b);
    double d_prev = d0;
    std::uint64_t t = 0;
    for (const Vector& y : y_seq) {
        a = state_update_only(lambda, a, y);
        b = state_update_only(lambda, b, y);
        const double d = norm(a - b);
        ++t;
        if (d_prev == 0.0) break;  // separation gone; nothing left to measure
        report.ratios.push_back(d / d_prev);
        report.max_abs_deviation =
            std::max(report.max_abs_deviation, std::fabs(d / d_prev - lambda));
        report.max_ulp_deviation =
            std::max(report.max_ulp_deviation, ulps_between(d, lambda * d_prev));
        report.max_ulp_deviation_closed_form =
            std::max(report.max_ulp_deviation_closed_form,
                     ulps_between(d, std::pow(lambda, static_cast<double>(t)) * d0));
        ++report.steps_measured;
        d_prev = d;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Bound probe
// ---------------------------------------------------------------------------

BoundReport bound_probe(const NeuronParams& params, StreamSource& source, std::uint64_t steps,
                        std::optional<double> external_bound, std::optional<Vector> s0) {
    ensure_valid_params(params);
    double bound = activation_bound(params.activation);
    if (!activation_is_bounded(params.activation)) {
        if (!external_bound) {
            throw Error(Errc::UnboundedActivation,
                        std::string(activation_name(params.activation)) +
                            " has no output bound; supply one explicitly");
        }
        bound = *external_bound;
    }

    BoundReport report;
    report.bound = bound;
    NeuronState state = initial_state(params);
    if (s0) {
        if (s0->dim() != params.out_dim()) {
            throw Error(Errc::DimensionMismatch, "s0 dimension does not match the neuron");
        }
        if (max_abs(*s0) > bound) {
            throw Error(Errc::InvalidInput, "|s0| must not exceed the bound");
        }
        state.s = std::move(*s0);
    }
    report.max_abs_state = max_abs(state.s);
    while (report.steps < steps) {
        auto x = source.next();
        if (!x) break;
        StepOutput out = neuron_step(params, state, *x);
        state = std::move(out.next_state);
        report.max_abs_state = std::max(report.max_abs_state, max_abs(state.s));
        ++report.steps;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Retention curve
// ---------------------------------------------------------------------------

std::vector<double> retention_curve(double lambda, const Vector& s0, std::uint64_t steps,
                                    ActivationKind activation) {
    if (!(lambda >= 0.0 && lambda < 1.0)) {
        throw Error(Errc::LambdaOutOfRange, "lambda must lie in [0, 1)");
    }
    if (activation_at_zero(activation) != 0.0) {
        throw Error(Errc::InvalidActivation,
                    std::string(activation_name(activation)) +
                        " has sigma(0) != 0 and would bias the decay");
    }
    if (s0.dim() == 0) {
        throw Error(Errc::InvalidInput, "initial state must be non-empty");
    }

    const std::size_t dim = s0.dim();
    NeuronParams p;
    p.W = Matrix::zeros(dim, 1);
    p.W_s = Matrix::zeros(dim, dim);
    p.b = Vector::zeros(dim);
    p.alpha = 0.0;
    p.lambda = lambda;
    p.activation = activation;

    NeuronState state{s0, 0};
    const Vector x = Vector::zeros(1);
    std::vector<double> series;
    series.reserve(steps + 1);
    series.push_back(norm(state.s));
    for (std::uint64_t t = 0; t < steps; ++t) {
        StepOutput out = neuron_step(p, state, x);
        state = std::move(out.next_state);
        series.push_back(norm(state.s));
    }
    return series;
}

std::optional<std::uint64_t> half_life(std::span<const double> series) {
    if (series.empty()) return std::nullopt;
    const double target = 0.5 * series[0];
    for (std::size_t t = 1; t < series.size(); ++t) {
        if (series[t] <= target) return t;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Phase trajectories and attractor classification
// ---------------------------------------------------------------------------

std::vector<PhasePoint> phase_trajectory(const PhaseConfig& config, bool state_enabled) {
    ensure_valid_params(config.params);
    validate_signal_spec(config.signal);
    if (config.burn_in >= config.total_steps) {
        throw Error(Errc::InvalidSpec, "burn-in must be shorter than the run");
    }

    auto source = fused_consumption_guard(make_signal_source(config.signal, config.total_steps));
    const bool scalar = config.params.out_dim() == 1;

    std::vector<PhasePoint> points;
    points.reserve(config.total_steps - config.burn_in);

    NeuronState state = initial_state(config.params);
    for (std::uint64_t t = 0; t < config.total_steps; ++t) {
        auto x = source->next();
        if (!x) break;
        double s_before = state.s[0];
        if (state_enabled) {
            StepOutput out = neuron_step(config.params, state, *x);
            state = std::move(out.next_state);
        } else {
            (void)stateless_step(config.params, *x);  // output only; state stays zero
        }
        if (t >= config.burn_in) {
            if (scalar) {
                points.push_back(PhasePoint{s_before, state.s[0]});
            } else {
                points.push_back(
                    PhasePoint{state.s[0], config.params.out_dim() > 1 ? state.s[1] : 0.0});
            }
        }
    }
    if (source->consumed() != config.total_steps) {
        throw Error(Errc::SourceError, "signal source ended before the configured step count");
    }
    return points;
}

const char* attractor_kind_name(AttractorVerdict::Kind k) noexcept {
    switch (k) {
        case AttractorVerdict::Kind::FixedPoint: return "FixedPoint";
        case AttractorVerdict::Kind::LimitCycle: return "LimitCycle";
        case AttractorVerdict::Kind::Unclassified: return "Unclassified";
    }
    return "?";
}

namespace {

double point_dist(const PhasePoint& p, const PhasePoint& q) {
    const double dx = p.a - q.a;
    const double dy = p.b - q.b;
    return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

double trajectory_diameter(std::span<const PhasePoint> trajectory) {
    double diameter = 0.0;
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
        for (std::size_t j = i + 1; j < trajectory.size(); ++j) {
            diameter = std::max(diameter, point_dist(trajectory[i], trajectory[j]));
        }
    }
    return diameter;
}

AttractorVerdict classify_attractor(std::span<const PhasePoint> trajectory, double eps_fp,
                                    double eps_rec, std::uint64_t min_period) {
    if (trajectory.empty()) {
        throw Error(Errc::EmptyTrajectory, "cannot classify an empty trajectory");
    }
    if (!(eps_fp > 0.0) || !(eps_rec > 0.0)) {
        throw Error(Errc::InvalidInput, "classification thresholds must be positive");
    }

    AttractorVerdict verdict;
    const double diameter = trajectory_diameter(trajectory);
    verdict.diameter = diameter;

    if (diameter <= eps_fp) {
        verdict.kind = AttractorVerdict::Kind::FixedPoint;
        verdict.recurrence_distance = diameter;
        return verdict;
    }

    // Smallest period whose recurrence stays within eps_rec through the end.
    double best_rec = std::numeric_limits<double>::infinity();
    const std::size_t n = trajectory.size();
    const std::size_t max_period = n / 2;
    for (std::uint64_t p = std::max<std::uint64_t>(min_period, 1); p <= max_period; ++p) {
        double worst = 0.0;
        bool ok = true;
        for (std::size_t t = 0; t + p < n; ++t) {
            const double d = point_dist(trajectory[t], trajectory[t + p]);
            worst = std::max(worst, d);
            if (worst > eps_rec) {
                ok = false;
                break;
            }
        }
        best_rec = std::min(best_rec, worst);
        if (ok) {
            verdict.kind = AttractorVerdict::Kind::LimitCycle;
            verdict.recurrence_distance = worst;
            verdict.period = p;
            return verdict;
        }
    }

    verdict.kind = AttractorVerdict::Kind::Unclassified;
    verdict.recurrence_distance = std::isfinite(best_rec) ? best_rec : diameter;
    return verdict;
}

double default_eps_fp(std::span<const PhasePoint> trajectory) {
    double scale = 0.0;
    for (const auto& p : trajectory) {
        scale = std::max(scale, std::max(std::fabs(p.a), std::fabs(p.b)));
    }
    return 1e-6 * (1.0 + scale);
}

double default_eps_rec(double diameter) { return 1e-3 * diameter; }

// ---------------------------------------------------------------------------
// Lag sensitivity
// ---------------------------------------------------------------------------

Vector model_final_output(ModelKind model, const NeuronParams& params,
                          std::span<const Vector> inputs) {
    ensure_valid_params(params);
    if (inputs.empty()) {
        throw Error(Errc::InvalidInput, "input sequence must be non-empty");
    }
    if (model == ModelKind::Stateless) {
        Vector y;
        for (const Vector& x : inputs) y = stateless_step(params, x);
        return y;
    }
    NeuronState state = initial_state(params);
    Vector y;
    for (const Vector& x : inputs) {
        StepOutput out = neuron_step(params, state, x);
        y = std::move(out.y);
        state = std::move(out.next_state);
    }
    return y;
}

double lag_sensitivity(ModelKind model, const NeuronParams& params,
                       std::span<const Vector> base_inputs, std::uint64_t k, double h) {
    if (k < 1 || base_inputs.size() < k + 1) {
        throw Error(Errc::LagOutOfRange, "need k >= 1 and at least k+1 inputs");
    }
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw Error(Errc::InvalidInput, "perturbation must be positive and finite");
    }

    const Vector base_y = model_final_output(model, params, base_inputs);
    const std::size_t target = base_inputs.size() - 1 - k;
    const std::size_t dim = base_inputs[target].dim();

    double worst = 0.0;
    for (std::size_t coord = 0; coord < dim; ++coord) {
        std::vector<Vector> perturbed(base_inputs.begin(), base_inputs.end());
        std::vector<double> e = perturbed[target].elements();
        e[coord] += h;
        perturbed[target] = Vector(std::move(e));
        const Vector y = model_final_output(model, params, perturbed);
        worst = std::max(worst, norm(y - base_y) / h);
    }
    return worst;
}

SensitivityReport lag_sensitivity_report(const NeuronParams& params,
                                         std::span<const Vector> base_inputs, std::uint64_t k,
                                         double h) {
    SensitivityReport report;
    report.k = k;
    report.h = h;
    report.stateless_sensitivity = lag_sensitivity(ModelKind::Stateless, params, base_inputs, k, h);
    report.stateful_sensitivity = lag_sensitivity(ModelKind::Stateful, params, base_inputs, k, h);
    return report;
}

// ---------------------------------------------------------------------------
// Tracking experiment
// ---------------------------------------------------------------------------

double ema_gain(double lambda, double omega) {
    return (1.0 - lambda) /
           std::sqrt(1.0 - 2.0 * lambda * std::cos(omega) + lambda * lambda);
}

TrackingReport tracking_experiment(const TrackingConfig& config, const TrackingSink& sink) {
    validate_signal_spec(config.signal);
    if (config.signal.dim != 1) {
        throw Error(Errc::InvalidSpec, "tracking runs on a scalar signal");
    }
    if (config.signal.kind != SignalKind::NoisySinusoid &&
        config.signal.kind != SignalKind::Sinusoid) {
        throw Error(Errc::InvalidSpec, "tracking needs a sinusoid reference signal");
    }
    if (config.transient >= config.total_steps) {
        throw Error(Errc::InvalidSpec, "transient must be shorter than the run");
    }
    if (!(config.lambda >= 0.0 && config.lambda < 1.0)) {
        throw Error(Errc::LambdaOutOfRange, "lambda must lie in [0, 1)");
    }

    // Identity pass-through neuron: y = x, s = decayed average of x.
    NeuronParams p;
    p.W = Matrix::identity(1);
    p.W_s = Matrix::zeros(1, 1);
    p.b = Vector::zeros(1);
    p.alpha = 0.0;
    p.lambda = config.lambda;
    p.activation = ActivationKind::Identity;

    // The two execution regimes consume identical noisy streams (same seed).
    auto stateful_src = fused_consumption_guard(make_signal_source(config.signal, config.total_steps));
    auto stateless_src =
        fused_consumption_guard(make_signal_source(config.signal, config.total_steps));

    const double gain = ema_gain(config.lambda, config.signal.omega);
    NeuronState state = initial_state(p);

    double se_stateful = 0.0;
    double se_stateless = 0.0;
    std::uint64_t scored = 0;
    for (std::uint64_t t = 0; t < config.total_steps; ++t) {
        auto x_f = stateful_src->next();
        auto x_l = stateless_src->next();
        if (!x_f || !x_l) {
            throw Error(Errc::SourceError, "signal source ended before the configured step count");
        }
        const double reference = signal_clean_value(config.signal, t)[0];

        StepOutput out = neuron_step(p, state, *x_f);
        state = std::move(out.next_state);
        const double y_stateful = state.s[0] / gain;

        const double y_stateless = stateless_step(p, *x_l)[0];

        if (t >= config.transient) {
            se_stateful += (y_stateful - reference) * (y_stateful - reference);
            se_stateless += (y_stateless - reference) * (y_stateless - reference);
            ++scored;
        }
        if (sink) sink(t, reference, y_stateless, y_stateful);
    }

    if (stateful_src->consumed() != config.total_steps ||
        stateless_src->consumed() != config.total_steps) {
        throw Error(Errc::SourceError, "consumption count does not match step count");
    }

    TrackingReport report;
    report.transient = config.transient;
    report.window = scored;
    report.gain = gain;
    report.mse_stateful = se_stateful / static_cast<double>(scored);
    report.mse_stateless = se_stateless / static_cast<double>(scored);
    return report;
}

// ---------------------------------------------------------------------------
// Constant-cost benchmark
// ---------------------------------------------------------------------------

BenchReport bench_experiment(const BenchConfig& config) {
    using clock = std::chrono::steady_clock;
    ensure_valid_params(config.params);
    validate_signal_spec(config.signal);

    NetworkSpec spec = single_neuron_network(config.params);
    NetworkState state = initial_network_state(spec);
    auto source = fused_consumption_guard(make_signal_source(config.signal, config.total_steps));

    const std::uint64_t total = config.total_steps;
    const std::uint64_t window = std::max<std::uint64_t>(config.window, 1);
    // Clamp both windows inside the run; degenerate runs fall back to one
    // window measured over whatever is available.
    const std::uint64_t early_begin = std::min(config.early_start, total > window ? total - window : 0);
    const std::uint64_t early_end = std::min(early_begin + window, total);
    const std::uint64_t late_begin = std::min(config.late_start, total > window ? total - window : 0);
    const std::uint64_t late_end = std::min(late_begin + window, total);

    BenchReport report;
    clock::time_point early_t0, early_t1, late_t0, late_t1;
    std::size_t mem_early = 0, mem_late = 0;

    std::uint64_t t = 0;
    while (t < total) {
        if (t == early_begin) {
            mem_early = engine_memory_bytes(spec, state);
            early_t0 = clock::now();
        }
        if (t == late_begin) {
            mem_late = engine_memory_bytes(spec, state);
            late_t0 = clock::now();
        }

        auto x = source->next();
        if (!x) break;
        NetworkStepOutput out = network_step(spec, state, *x);
        state = std::move(out.next_state);
        ++t;

        if (t == early_end) early_t1 = clock::now();
        if (t == late_end) late_t1 = clock::now();
    }
    report.steps = t;
    if (source->consumed() != t) {
        throw Error(Errc::SourceError, "consumption count does not match step count");
    }

    auto window_ns = [](clock::time_point a, clock::time_point b, std::uint64_t n) {
        if (n == 0) return 0.0;
        return std::chrono::duration<double, std::nano>(b - a).count() / static_cast<double>(n);
    };
    report.early_ns_per_step = window_ns(early_t0, early_t1, early_end - early_begin);
    report.late_ns_per_step = window_ns(late_t0, late_t1, late_end - late_begin);
    if (mem_early == 0) mem_early = engine_memory_bytes(spec, state);
    if (mem_late == 0) mem_late = engine_memory_bytes(spec, state);
    report.memory_bytes_early = mem_early;
    report.memory_bytes_late = mem_late;
    report.ratio = (report.early_ns_per_step > 0.0 && report.late_ns_per_step > 0.0)
                       ? report.late_ns_per_step / report.early_ns_per_step
                       : 1.0;
    return report;
}

// ---------------------------------------------------------------------------
// Verification suites
// ---------------------------------------------------------------------------

namespace {

Vector random_state(Rng& rng, std::size_t dim) {
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return Vector(std::move(v));
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

std::vector<ProbeResult> verify_contraction(const VerifyConfig& cfg) {
    std::vector<ProbeResult> results;
    for (double lambda : cfg.contraction_lambdas) {
        Rng rng(cfg.contraction_seed);
        std::uint64_t worst_ulps = 0;
        double worst_abs = 0.0;
        bool pass = true;
        const auto drive =
            zero_drive(cfg.contraction_dim, static_cast<std::size_t>(cfg.contraction_steps));
        for (std::uint64_t i = 0; i < cfg.contraction_pairs; ++i) {
            Vector a = random_state(rng, cfg.contraction_dim);
            Vector b = random_state(rng, cfg.contraction_dim);
            while (norm(a - b) < cfg.contraction_min_separation) {
                a = random_state(rng, cfg.contraction_dim);
                b = random_state(rng, cfg.contraction_dim);
            }
            const auto report = contraction_probe(lambda, a, b, drive);
            worst_ulps = std::max(worst_ulps, report.max_ulp_deviation);
            worst_abs = std::max(worst_abs, report.max_abs_deviation);
            if (report.max_ulp_deviation > cfg.contraction_max_ulps) pass = false;
        }
        ProbeResult r;
        r.name = "contraction lambda=" + fmt(lambda);
        r.pass = pass;
        r.detail = "max ulp dev " + std::to_string(worst_ulps) + " (gate " +
                   std::to_string(cfg.contraction_max_ulps) + "), max |ratio-lambda| " +
                   fmt(worst_abs);
        results.push_back(std::move(r));
    }
    return results;
}

std::vector<ProbeResult> verify_bounds(const VerifyConfig& cfg) {
    const double gate = 1.0 + cfg.bound_slack_eps * std::numeric_limits<double>::epsilon();
    double worst = 0.0;
    bool pass = true;
    Rng meta(cfg.bound_seed);
    for (std::uint64_t draw = 0; draw < cfg.bound_draws; ++draw) {
        const std::size_t dim = 1 + static_cast<std::size_t>(meta.next_u64() % 4);
        const double alpha = meta.uniform(-2.0, 2.0);
        const double lambda = meta.uniform(0.0, 0.999);
        NeuronParams p = make_seeded_params(cfg.bound_seed + 17 * (draw + 1), dim, dim,
                                            ActivationKind::Tanh, alpha, lambda);
        SignalSpec noise;
        noise.kind = SignalKind::WhiteNoise;
        noise.noise_std = cfg.bound_noise_std;
        noise.seed = cfg.bound_seed + 31 * (draw + 1);
        noise.dim = dim;
        auto source = make_signal_source(noise, cfg.bound_steps);
        const auto report = bound_probe(p, *source, cfg.bound_steps);
        worst = std::max(worst, report.max_abs_state);
        if (!(report.max_abs_state <= gate)) pass = false;
    }
    ProbeResult r;
    r.name = "bounded state (tanh)";
    r.pass = pass;
    r.detail = "max |s| " + fmt(worst) + " (gate 1+" + fmt(cfg.bound_slack_eps) + "eps = " +
               fmt(gate) + ") over " + std::to_string(cfg.bound_draws) + " draws x " +
               std::to_string(cfg.bound_steps) + " steps";
    std::vector<ProbeResult> results;
    results.push_back(std::move(r));
    return results;
}

std::vector<ProbeResult> verify_collapse(const VerifyConfig& cfg) {
    NeuronParams p;
    p.W = Matrix(1, 1, {0.5});
    p.W_s = Matrix(1, 1, {0.5});
    p.b = Vector::zeros(1);
    p.alpha = 1.0;
    p.lambda = 0.9;
    p.activation = ActivationKind::Tanh;

    Rng rng(cfg.collapse_seed);
    std::vector<Vector> inputs;
    inputs.reserve(cfg.collapse_input_len);
    for (std::uint64_t i = 0; i < cfg.collapse_input_len; ++i) {
        inputs.push_back(Vector({rng.uniform(-1.0, 1.0)}));
    }

    std::vector<ProbeResult> results;
    for (std::uint64_t k : cfg.collapse_lags) {
        const auto report = lag_sensitivity_report(p, inputs, k, cfg.collapse_h);
        ProbeResult r;
        r.name = "stateless collapse k=" + std::to_string(k);
        r.pass = report.stateless_sensitivity == 0.0;
        r.detail = "stateless sensitivity " + fmt(report.stateless_sensitivity) +
                   " (must be exactly 0), stateful " + fmt(report.stateful_sensitivity);
        if (k == 1) {
            r.name += " + stateful memory";
            r.pass = r.pass && report.stateful_sensitivity > cfg.collapse_stateful_floor;
            r.detail += " (floor " + fmt(cfg.collapse_stateful_floor) + ")";
        }
        results.push_back(std::move(r));
    }
    return results;
}

namespace {

std::size_t probe_thread_cap() {
    if (const char* env = std::getenv("STREAMNET_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n >= 1) return static_cast<std::size_t>(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

}  // namespace

std::vector<ProbeResult> verify_all(const VerifyConfig& cfg) {
    using Task = std::function<std::vector<ProbeResult>()>;
    std::vector<Task> tasks{
        [&] { return verify_contraction(cfg); },
        [&] { return verify_bounds(cfg); },
        [&] { return verify_collapse(cfg); },
    };

    std::vector<std::vector<ProbeResult>> buckets(tasks.size());
    const std::size_t workers = std::min(probe_thread_cap(), tasks.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) buckets[i] = tasks[i]();
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= tasks.size()) return;
                    buckets[i] = tasks[i]();
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    std::vector<ProbeResult> all;
    for (auto& bucket : buckets) {
        for (auto& r : bucket) all.push_back(std::move(r));
    }
    return all;
}

}  // namespace streamnet
