#include "streamnet/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace streamnet {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(Errc::InvalidSpec, what); }

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    if (!j.is_object()) bad(where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) bad("unknown key '" + it.key() + "' in " + where);
    }
}

double get_num(const json& j, const std::string& where) {
    if (!j.is_number()) bad(where + " must be a number");
    return j.get<double>();
}

std::uint64_t get_count(const json& j, const std::string& where) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
        bad(where + " must be a non-negative integer");
    }
    return j.get<std::uint64_t>();
}

Matrix parse_matrix(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) bad(where + " must be a non-empty array of rows");
    const std::size_t rows = j.size();
    std::size_t cols = 0;
    std::vector<double> entries;
    for (std::size_t r = 0; r < rows; ++r) {
        const json& row = j[r];
        if (!row.is_array() || row.empty()) bad(where + " rows must be non-empty arrays");
        if (r == 0) {
            cols = row.size();
        } else if (row.size() != cols) {
            bad(where + " rows have inconsistent lengths");
        }
        for (const auto& v : row) entries.push_back(get_num(v, where + " entry"));
    }
    return Matrix(rows, cols, std::move(entries));
}

Vector parse_vector(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) bad(where + " must be a non-empty array");
    std::vector<double> v;
    for (const auto& x : j) v.push_back(get_num(x, where + " entry"));
    return Vector(std::move(v));
}

NeuronParams parse_layer(const json& j, const std::string& where) {
    check_keys(j, where, {"activation", "alpha", "lambda", "W", "W_s", "b"});
    NeuronParams p;
    if (auto it = j.find("activation"); it != j.end()) {
        if (!it->is_string()) bad(where + ".activation must be a string");
        auto kind = parse_activation(it->get<std::string>());
        if (!kind) bad(where + ".activation: unknown kind '" + it->get<std::string>() + "'");
        p.activation = *kind;
    }
    if (auto it = j.find("alpha"); it != j.end()) p.alpha = get_num(*it, where + ".alpha");
    if (auto it = j.find("lambda"); it != j.end()) p.lambda = get_num(*it, where + ".lambda");
    if (!j.contains("W") || !j.contains("W_s") || !j.contains("b")) {
        bad(where + " needs W, W_s and b");
    }
    p.W = parse_matrix(j["W"], where + ".W");
    p.W_s = parse_matrix(j["W_s"], where + ".W_s");
    p.b = parse_vector(j["b"], where + ".b");
    if (auto issue = validate_params(p)) {
        throw Error(issue->code, where + ": " + issue->detail);
    }
    return p;
}

std::vector<NeuronParams> parse_network(const json& j) {
    check_keys(j, "network", {"layers", "generated"});
    if (j.contains("layers") == j.contains("generated")) {
        bad("network needs exactly one of 'layers' or 'generated'");
    }
    if (j.contains("layers")) {
        const json& layers = j["layers"];
        if (!layers.is_array() || layers.empty()) bad("network.layers must be a non-empty array");
        std::vector<NeuronParams> out;
        for (std::size_t k = 0; k < layers.size(); ++k) {
            out.push_back(parse_layer(layers[k], "network.layers[" + std::to_string(k) + "]"));
        }
        return out;
    }
    const json& g = j["generated"];
    check_keys(g, "network.generated", {"seed", "dims", "activation", "alpha", "lambda"});
    if (!g.contains("dims")) bad("network.generated needs dims");
    std::vector<std::size_t> dims;
    for (const auto& d : g["dims"]) {
        const auto v = get_count(d, "network.generated.dims entry");
        if (v == 0) bad("network.generated.dims entries must be >= 1");
        dims.push_back(static_cast<std::size_t>(v));
    }
    ActivationKind kind = ActivationKind::Tanh;
    if (auto it = g.find("activation"); it != g.end()) {
        auto parsed = parse_activation(it->get<std::string>());
        if (!parsed) bad("network.generated.activation: unknown kind");
        kind = *parsed;
    }
    const std::uint64_t seed = g.contains("seed") ? get_count(g["seed"], "seed") : 0;
    const double alpha = g.contains("alpha") ? get_num(g["alpha"], "alpha") : 1.0;
    const double lambda = g.contains("lambda") ? get_num(g["lambda"], "lambda") : 0.9;
    return make_seeded_network(seed, dims, kind, alpha, lambda).layers();
}

SignalSpec parse_signal(const json& j, SignalSpec base) {
    check_keys(j, "signal", {"kind", "amplitude", "omega", "phase", "noise_std", "seed", "dim"});
    if (auto it = j.find("kind"); it != j.end()) {
        if (!it->is_string()) bad("signal.kind must be a string");
        auto kind = parse_signal_kind(it->get<std::string>());
        if (!kind) bad("signal.kind: unknown kind '" + it->get<std::string>() + "'");
        base.kind = *kind;
    }
    if (auto it = j.find("amplitude"); it != j.end()) base.amplitude = get_num(*it, "signal.amplitude");
    if (auto it = j.find("omega"); it != j.end()) base.omega = get_num(*it, "signal.omega");
    if (auto it = j.find("phase"); it != j.end()) base.phase = get_num(*it, "signal.phase");
    if (auto it = j.find("noise_std"); it != j.end()) base.noise_std = get_num(*it, "signal.noise_std");
    if (auto it = j.find("seed"); it != j.end()) base.seed = get_count(*it, "signal.seed");
    if (auto it = j.find("dim"); it != j.end()) {
        base.dim = static_cast<std::size_t>(get_count(*it, "signal.dim"));
    }
    validate_signal_spec(base);
    return base;
}

VerifyConfig parse_verify(const json& j, VerifyConfig base) {
    check_keys(j, "verify",
               {"contraction_lambdas", "contraction_pairs", "contraction_steps", "contraction_dim",
                "contraction_seed", "contraction_min_separation", "contraction_max_ulps",
                "bound_draws", "bound_steps", "bound_seed", "bound_noise_std", "bound_slack_eps",
                "collapse_lags", "collapse_input_len", "collapse_seed", "collapse_h",
                "collapse_stateful_floor"});
    if (auto it = j.find("contraction_lambdas"); it != j.end()) {
        base.contraction_lambdas.clear();
        for (const auto& v : *it) base.contraction_lambdas.push_back(get_num(v, "lambda"));
    }
    if (auto it = j.find("contraction_pairs"); it != j.end()) base.contraction_pairs = get_count(*it, "contraction_pairs");
    if (auto it = j.find("contraction_steps"); it != j.end()) base.contraction_steps = get_count(*it, "contraction_steps");
    if (auto it = j.find("contraction_dim"); it != j.end()) base.contraction_dim = static_cast<std::size_t>(get_count(*it, "contraction_dim"));
    if (auto it = j.find("contraction_seed"); it != j.end()) base.contraction_seed = get_count(*it, "contraction_seed");
    if (auto it = j.find("contraction_min_separation"); it != j.end()) base.contraction_min_separation = get_num(*it, "contraction_min_separation");
    if (auto it = j.find("contraction_max_ulps"); it != j.end()) base.contraction_max_ulps = get_count(*it, "contraction_max_ulps");
    if (auto it = j.find("bound_draws"); it != j.end()) base.bound_draws = get_count(*it, "bound_draws");
    if (auto it = j.find("bound_steps"); it != j.end()) base.bound_steps = get_count(*it, "bound_steps");
    if (auto it = j.find("bound_seed"); it != j.end()) base.bound_seed = get_count(*it, "bound_seed");
    if (auto it = j.find("bound_noise_std"); it != j.end()) base.bound_noise_std = get_num(*it, "bound_noise_std");
    if (auto it = j.find("bound_slack_eps"); it != j.end()) base.bound_slack_eps = get_num(*it, "bound_slack_eps");
    if (auto it = j.find("collapse_lags"); it != j.end()) {
        base.collapse_lags.clear();
        for (const auto& v : *it) base.collapse_lags.push_back(get_count(v, "lag"));
    }
    if (auto it = j.find("collapse_input_len"); it != j.end()) base.collapse_input_len = get_count(*it, "collapse_input_len");
    if (auto it = j.find("collapse_seed"); it != j.end()) base.collapse_seed = get_count(*it, "collapse_seed");
    if (auto it = j.find("collapse_h"); it != j.end()) base.collapse_h = get_num(*it, "collapse_h");
    if (auto it = j.find("collapse_stateful_floor"); it != j.end()) base.collapse_stateful_floor = get_num(*it, "collapse_stateful_floor");
    return base;
}

NeuronParams reference_phase_neuron() {
    NeuronParams p;
    p.W = Matrix(1, 1, {1.0});
    p.W_s = Matrix(1, 1, {0.5});
    p.b = Vector::zeros(1);
    p.alpha = 1.0;
    p.lambda = 0.9;
    p.activation = ActivationKind::Tanh;
    return p;
}

NeuronParams identity_pass_through() {
    NeuronParams p;
    p.W = Matrix::identity(1);
    p.W_s = Matrix::zeros(1, 1);
    p.b = Vector::zeros(1);
    p.alpha = 0.0;
    p.lambda = 0.0;
    p.activation = ActivationKind::Identity;
    return p;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m.at(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

ExperimentConfig default_run_config() {
    ExperimentConfig cfg;
    cfg.layers = {identity_pass_through()};
    cfg.signal.kind = SignalKind::Sinusoid;
    cfg.signal.omega = 2.0 * 3.141592653589793238462643383279502884 / 50.0;
    return cfg;
}

ExperimentConfig default_phase_config() {
    ExperimentConfig cfg;
    cfg.layers = {reference_phase_neuron()};
    cfg.signal.kind = SignalKind::Sinusoid;
    cfg.signal.amplitude = 1.2;
    cfg.signal.omega = 2.0 * 3.141592653589793238462643383279502884 / 50.0;
    cfg.total_steps = 3000;
    cfg.burn_in = 500;
    return cfg;
}

ExperimentConfig default_retention_config() {
    ExperimentConfig cfg = default_phase_config();
    return cfg;
}

ExperimentConfig default_track_config() {
    ExperimentConfig cfg;
    cfg.layers = {identity_pass_through()};
    cfg.signal.kind = SignalKind::NoisySinusoid;
    cfg.signal.amplitude = 1.0;
    cfg.signal.omega = 0.02;
    cfg.signal.noise_std = 0.3;
    cfg.signal.seed = 42;
    cfg.total_steps = 4500;
    cfg.transient = 500;
    cfg.tracking_lambda = 0.9;
    return cfg;
}

ExperimentConfig default_bench_config() {
    ExperimentConfig cfg;
    cfg.layers = {reference_phase_neuron()};
    cfg.signal.kind = SignalKind::WhiteNoise;
    cfg.signal.noise_std = 1.0;
    cfg.signal.seed = 5;
    return cfg;
}

ExperimentConfig default_verify_config() {
    ExperimentConfig cfg = default_phase_config();
    return cfg;
}

ExperimentConfig parse_config_text(const std::string& text, ExperimentConfig base) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        bad(std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(j, "config",
               {"network", "signal", "steps", "phase", "retention", "tracking", "bench", "verify",
                "output"});

    if (j.contains("network")) base.layers = parse_network(j["network"]);
    if (j.contains("signal")) base.signal = parse_signal(j["signal"], base.signal);
    if (j.contains("steps")) {
        const json& s = j["steps"];
        check_keys(s, "steps", {"total", "burn_in", "transient"});
        if (auto it = s.find("total"); it != s.end()) base.total_steps = get_count(*it, "steps.total");
        if (auto it = s.find("burn_in"); it != s.end()) base.burn_in = get_count(*it, "steps.burn_in");
        if (auto it = s.find("transient"); it != s.end()) base.transient = get_count(*it, "steps.transient");
    }
    if (j.contains("phase")) {
        const json& p = j["phase"];
        check_keys(p, "phase", {"eps_fp_scale", "eps_rec_scale", "min_period"});
        if (auto it = p.find("eps_fp_scale"); it != p.end()) base.eps_fp_scale = get_num(*it, "phase.eps_fp_scale");
        if (auto it = p.find("eps_rec_scale"); it != p.end()) base.eps_rec_scale = get_num(*it, "phase.eps_rec_scale");
        if (auto it = p.find("min_period"); it != p.end()) base.min_period = get_count(*it, "phase.min_period");
    }
    if (j.contains("retention")) {
        const json& r = j["retention"];
        check_keys(r, "retention", {"lambdas", "steps", "s0"});
        if (auto it = r.find("lambdas"); it != r.end()) {
            base.retention_lambdas.clear();
            for (const auto& v : *it) base.retention_lambdas.push_back(get_num(v, "retention lambda"));
        }
        if (auto it = r.find("steps"); it != r.end()) base.retention_steps = get_count(*it, "retention.steps");
        if (auto it = r.find("s0"); it != r.end()) base.retention_s0 = get_num(*it, "retention.s0");
    }
    if (j.contains("tracking")) {
        const json& t = j["tracking"];
        check_keys(t, "tracking", {"lambda"});
        if (auto it = t.find("lambda"); it != t.end()) base.tracking_lambda = get_num(*it, "tracking.lambda");
    }
    if (j.contains("bench")) {
        const json& b = j["bench"];
        check_keys(b, "bench", {"total", "window", "early_start", "late_start"});
        if (auto it = b.find("total"); it != b.end()) base.bench_total = get_count(*it, "bench.total");
        if (auto it = b.find("window"); it != b.end()) base.bench_window = get_count(*it, "bench.window");
        if (auto it = b.find("early_start"); it != b.end()) base.bench_early_start = get_count(*it, "bench.early_start");
        if (auto it = b.find("late_start"); it != b.end()) base.bench_late_start = get_count(*it, "bench.late_start");
    }
    if (j.contains("verify")) base.verify = parse_verify(j["verify"], base.verify);
    if (j.contains("output")) {
        const json& o = j["output"];
        check_keys(o, "output", {"format"});
        if (auto it = o.find("format"); it != o.end()) {
            const std::string f = it->get<std::string>();
            if (f == "csv") base.format = OutputFormat::Csv;
            else if (f == "jsonl") base.format = OutputFormat::Jsonl;
            else bad("output.format must be 'csv' or 'jsonl'");
        }
    }

    // Cross-field sanity shared by the experiment commands.
    for (const auto& layer : base.layers) ensure_valid_params(layer);
    (void)NetworkSpec(base.layers);
    return base;
}

ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) bad("cannot open config file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), std::move(base));
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json layers = json::array();
    for (const auto& p : cfg.layers) {
        layers.push_back(json{{"activation", activation_name(p.activation)},
                              {"alpha", p.alpha},
                              {"lambda", p.lambda},
                              {"W", matrix_to_json(p.W)},
                              {"W_s", matrix_to_json(p.W_s)},
                              {"b", p.b.elements()}});
    }
    json j{
        {"network", {{"layers", layers}}},
        {"signal",
         {{"kind", signal_kind_name(cfg.signal.kind)},
          {"amplitude", cfg.signal.amplitude},
          {"omega", cfg.signal.omega},
          {"phase", cfg.signal.phase},
          {"noise_std", cfg.signal.noise_std},
          {"seed", cfg.signal.seed},
          {"dim", cfg.signal.dim}}},
        {"steps",
         {{"total", cfg.total_steps}, {"burn_in", cfg.burn_in}, {"transient", cfg.transient}}},
        {"phase",
         {{"eps_fp_scale", cfg.eps_fp_scale},
          {"eps_rec_scale", cfg.eps_rec_scale},
          {"min_period", cfg.min_period}}},
        {"retention",
         {{"lambdas", cfg.retention_lambdas},
          {"steps", cfg.retention_steps},
          {"s0", cfg.retention_s0}}},
        {"tracking", {{"lambda", cfg.tracking_lambda}}},
        {"bench",
         {{"total", cfg.bench_total},
          {"window", cfg.bench_window},
          {"early_start", cfg.bench_early_start},
          {"late_start", cfg.bench_late_start}}},
        {"verify",
         {{"contraction_lambdas", cfg.verify.contraction_lambdas},
          {"contraction_pairs", cfg.verify.contraction_pairs},
          {"contraction_steps", cfg.verify.contraction_steps},
          {"contraction_dim", cfg.verify.contraction_dim},
          {"contraction_seed", cfg.verify.contraction_seed},
          {"contraction_min_separation", cfg.verify.contraction_min_separation},
          {"contraction_max_ulps", cfg.verify.contraction_max_ulps},
          {"bound_draws", cfg.verify.bound_draws},
          {"bound_steps", cfg.verify.bound_steps},
          {"bound_seed", cfg.verify.bound_seed},
          {"bound_noise_std", cfg.verify.bound_noise_std},
          {"bound_slack_eps", cfg.verify.bound_slack_eps},
          {"collapse_lags", cfg.verify.collapse_lags},
          {"collapse_input_len", cfg.verify.collapse_input_len},
          {"collapse_seed", cfg.verify.collapse_seed},
          {"collapse_h", cfg.verify.collapse_h},
          {"collapse_stateful_floor", cfg.verify.collapse_stateful_floor}}},
        {"output", {{"format", cfg.format == OutputFormat::Csv ? "csv" : "jsonl"}}},
    };
    return j.dump(2);
}

}  // namespace streamnet
