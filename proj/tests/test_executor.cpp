#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "streamnet/executor.hpp"
#include "streamnet/rng.hpp"

using namespace streamnet;

namespace {

NeuronParams pass_through() {
    NeuronParams p;
    p.W = Matrix::identity(1);
    p.W_s = Matrix::zeros(1, 1);
    p.b = Vector::zeros(1);
    p.alpha = 0.0;
    p.lambda = 0.0;
    p.activation = ActivationKind::Identity;
    return p;
}

SignalSpec noisy_spec(std::uint64_t seed) {
    SignalSpec s;
    s.kind = SignalKind::NoisySinusoid;
    s.amplitude = 1.0;
    s.omega = 0.07;
    s.noise_std = 0.4;
    s.seed = seed;
    return s;
}

NetworkSpec tanh_net(std::uint64_t seed) {
    return make_seeded_network(seed, std::vector<std::size_t>{1, 1, 1}, ActivationKind::Tanh, 1.0,
                               0.85);
}

}  // namespace

TEST_CASE("single pass-through layer forwards the input") {
    NetworkSpec spec = single_neuron_network(pass_through());
    auto out = network_step(spec, initial_network_state(spec), Vector({0.3}));
    CHECK(out.y[0] == 0.3);
    CHECK(out.next_state.step == 1);
}

TEST_CASE("two chained pass-through layers forward the input") {
    NetworkSpec spec({pass_through(), pass_through()});
    auto out = network_step(spec, initial_network_state(spec), Vector({0.3}));
    CHECK(out.y[0] == 0.3);
}

TEST_CASE("two-layer tanh network matches the per-layer scalar oracle") {
    NetworkSpec spec = tanh_net(99);
    NetworkState state = initial_network_state(spec);

    // independent oracle: evaluate both layers with plain scalar arithmetic
    double s0 = 0.0, s1 = 0.0;
    Rng rng(123);
    for (int t = 0; t < 20; ++t) {
        const double x = rng.uniform(-1.0, 1.0);
        auto out = network_step(spec, state, Vector({x}));
        state = std::move(out.next_state);

        const auto& l0 = spec.layers()[0];
        const auto& l1 = spec.layers()[1];
        const double z0 = l0.W.at(0, 0) * x + l0.alpha * (l0.W_s.at(0, 0) * s0) + l0.b[0];
        const double y0 = std::tanh(z0);
        s0 = l0.lambda * s0 + (1.0 - l0.lambda) * y0;
        const double z1 = l1.W.at(0, 0) * y0 + l1.alpha * (l1.W_s.at(0, 0) * s1) + l1.b[0];
        const double y1 = std::tanh(z1);
        s1 = l1.lambda * s1 + (1.0 - l1.lambda) * y1;

        CHECK(out.y[0] == y1);
        CHECK(state.layers[0].s[0] == s0);
        CHECK(state.layers[1].s[0] == s1);
    }
}

TEST_CASE("network spec rejects inconsistent chains") {
    NeuronParams wide;
    wide.W = Matrix(2, 1, {1.0, 0.5});
    wide.W_s = Matrix::zeros(2, 2);
    wide.b = Vector::zeros(2);
    wide.lambda = 0.0;
    wide.activation = ActivationKind::Identity;
    CHECK_THROWS_AS(NetworkSpec({pass_through(), wide, pass_through()}), Error);
    CHECK_THROWS_AS(NetworkSpec(std::vector<NeuronParams>{}), Error);
}

TEST_CASE("network_step rejects desynced layer counters") {
    NetworkSpec spec({pass_through(), pass_through()});
    NetworkState state = initial_network_state(spec);
    state.layers[1].step = 3;  // out of sync with the global counter
    try {
        network_step(spec, state, Vector({0.1}));
        FAIL("expected InvalidInput");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::InvalidInput);
    }
}

TEST_CASE("snapshot decode rejects empty payloads") {
    CHECK_THROWS_AS(decode_snapshot(std::vector<std::uint8_t>{}), Error);
}

TEST_CASE("load_snapshot rejects a layer-count mismatch") {
    NetworkSpec two({pass_through(), pass_through()});
    Snapshot snap = save_snapshot(two, initial_network_state(two));
    snap.layer_states.pop_back();
    try {
        load_snapshot(two, snap);
        FAIL("expected CorruptSnapshot");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::CorruptSnapshot);
    }
}

TEST_CASE("run_stream over an empty source") {
    NetworkSpec spec = single_neuron_network(pass_through());
    NetworkState state = initial_network_state(spec);
    SignalSpec sig;
    sig.kind = SignalKind::Constant;
    auto guard = fused_consumption_guard(make_signal_source(sig, 0));
    auto summary = run_stream(spec, state, *guard, nullptr);
    CHECK(summary.steps == 0);
    CHECK_FALSE(summary.fault.has_value());
}

TEST_CASE("run_stream counts match single consumption") {
    NetworkSpec spec = single_neuron_network(pass_through());
    NetworkState state = initial_network_state(spec);
    auto guard = fused_consumption_guard(make_signal_source(noisy_spec(3), 1000));
    auto summary = run_stream(spec, state, *guard, nullptr);
    CHECK(summary.steps == 1000);
    CHECK(guard->consumed() == 1000);
    CHECK(state.step == 1000);
}

TEST_CASE("run_stream respects the step limit") {
    NetworkSpec spec = single_neuron_network(pass_through());
    NetworkState state = initial_network_state(spec);
    auto guard = fused_consumption_guard(make_signal_source(noisy_spec(3), {}));
    auto summary = run_stream(spec, state, *guard, nullptr, 250);
    CHECK(summary.steps == 250);
    CHECK(guard->consumed() == 250);
}

TEST_CASE("pass-through run forwards the generator values to the sink") {
    NetworkSpec spec = single_neuron_network(pass_through());
    NetworkState state = initial_network_state(spec);
    SignalSpec sig;
    sig.kind = SignalKind::Sinusoid;
    sig.amplitude = 0.8;
    sig.omega = 0.3;
    auto src = make_signal_source(sig, 64);
    std::uint64_t expected_t = 1;
    auto summary = run_stream(spec, state, *src, [&](const StepRecord& rec) {
        CHECK(rec.t == expected_t);
        CHECK(rec.y[0] == signal_clean_value(sig, rec.t - 1)[0]);
        CHECK(rec.s.dim() == 1);
        CHECK_FALSE(rec.r.has_value());
        ++expected_t;
    });
    CHECK(summary.steps == 64);
}

TEST_CASE("a numeric fault aborts the run and preserves the last good state") {
    NeuronParams p = pass_through();
    p.W = Matrix(1, 1, {1e308});
    NetworkSpec spec = single_neuron_network(p);
    NetworkState state = initial_network_state(spec);

    SignalSpec sig;
    sig.kind = SignalKind::Constant;
    sig.amplitude = 10.0;  // 1e308 * 10 overflows
    auto src = make_signal_source(sig, 5);
    auto summary = run_stream(spec, state, *src, nullptr);
    REQUIRE(summary.fault.has_value());
    CHECK(summary.steps == 0);
    CHECK(state.step == 0);
    CHECK(state.layers[0].s[0] == 0.0);
}

TEST_CASE("snapshot round-trip restores an equal state") {
    NetworkSpec spec = tanh_net(5);
    NetworkState state = initial_network_state(spec);
    auto src = make_signal_source(noisy_spec(8), 100);
    run_stream(spec, state, *src, nullptr);

    const Snapshot snap = save_snapshot(spec, state);
    const NetworkState restored = load_snapshot(spec, snap);
    REQUIRE(restored.layers.size() == state.layers.size());
    CHECK(restored.step == state.step);
    for (std::size_t k = 0; k < state.layers.size(); ++k) {
        CHECK(restored.layers[k].s == state.layers[k].s);
        CHECK(restored.layers[k].step == state.layers[k].step);
    }
    CHECK(state_digest(restored) == state_digest(state));
}

TEST_CASE("snapshot resume reproduces uninterrupted execution bit-exactly") {
    NetworkSpec spec = tanh_net(5);

    // uninterrupted reference: 1000 steps
    NetworkState full = initial_network_state(spec);
    auto src_full = make_signal_source(noisy_spec(8), 1000);
    run_stream(spec, full, *src_full, nullptr);

    // interrupted: 500 steps, snapshot to bytes, restore, 500 more from the
    // same ongoing source
    NetworkState first = initial_network_state(spec);
    auto src_live = make_signal_source(noisy_spec(8), 1000);
    run_stream(spec, first, *src_live, nullptr, 500);
    const auto bytes = encode_snapshot(save_snapshot(spec, first));
    NetworkState resumed = load_snapshot(spec, decode_snapshot(bytes));
    run_stream(spec, resumed, *src_live, nullptr);

    CHECK(resumed.step == full.step);
    for (std::size_t k = 0; k < full.layers.size(); ++k) {
        CHECK(resumed.layers[k].s == full.layers[k].s);
    }
    CHECK(state_digest(resumed) == state_digest(full));
}

TEST_CASE("snapshot resume holds for wide multi-layer networks") {
    const NetworkSpec spec = make_seeded_network(11, std::vector<std::size_t>{3, 4, 2},
                                                 ActivationKind::Tanh, 1.0, 0.8);
    SignalSpec sig = noisy_spec(77);
    sig.dim = 3;

    NetworkState full = initial_network_state(spec);
    auto src_full = make_signal_source(sig, 400);
    run_stream(spec, full, *src_full, nullptr);

    NetworkState part = initial_network_state(spec);
    auto src_live = make_signal_source(sig, 400);
    run_stream(spec, part, *src_live, nullptr, 150);
    NetworkState resumed =
        load_snapshot(spec, decode_snapshot(encode_snapshot(save_snapshot(spec, part))));
    run_stream(spec, resumed, *src_live, nullptr);

    CHECK(resumed.step == 400);
    for (std::size_t k = 0; k < full.layers.size(); ++k) {
        CHECK(resumed.layers[k].s == full.layers[k].s);
    }
}

TEST_CASE("snapshot digest pinning") {
    NetworkSpec spec = tanh_net(5);
    NetworkState state = initial_network_state(spec);
    Snapshot snap = save_snapshot(spec, state);

    NetworkSpec other = tanh_net(6);
    try {
        load_snapshot(other, snap);
        FAIL("expected DigestMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::DigestMismatch);
    }

    snap.spec_digest ^= 1;
    CHECK_THROWS_AS(load_snapshot(spec, snap), Error);
}

TEST_CASE("snapshot decode rejects damage") {
    NetworkSpec spec = single_neuron_network(pass_through());
    auto bytes = encode_snapshot(save_snapshot(spec, initial_network_state(spec)));

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode_snapshot(bad_magic), Error);

    auto bad_version = bytes;
    bad_version[8] = 0x7f;
    try {
        decode_snapshot(bad_version);
        FAIL("expected VersionUnsupported");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::VersionUnsupported);
    }

    auto truncated = bytes;
    truncated.resize(bytes.size() - 3);
    try {
        decode_snapshot(truncated);
        FAIL("expected CorruptSnapshot");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::CorruptSnapshot);
    }

    auto trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS_AS(decode_snapshot(trailing), Error);
}

TEST_CASE("snapshot file round-trip") {
    NetworkSpec spec = tanh_net(5);
    NetworkState state = initial_network_state(spec);
    auto src = make_signal_source(noisy_spec(8), 50);
    run_stream(spec, state, *src, nullptr);

    const auto path = std::filesystem::temp_directory_path() / "streamnet_snapshot_test.stnn";
    write_snapshot_file(path, save_snapshot(spec, state));
    const Snapshot back = read_snapshot_file(path);
    std::filesystem::remove(path);
    CHECK(back.spec_digest == spec.digest());
    CHECK(back.step == 50);
    CHECK(load_snapshot(spec, back).layers[0].s == state.layers[0].s);
}

TEST_CASE("engine memory is constant in stream length") {
    NetworkSpec spec = tanh_net(5);
    NetworkState state = initial_network_state(spec);

    auto src1 = make_signal_source(noisy_spec(8), 1000);
    run_stream(spec, state, *src1, nullptr);
    const std::size_t after_1k = engine_memory_bytes(spec, state);

    auto src2 = make_signal_source(noisy_spec(9), 9000);
    run_stream(spec, state, *src2, nullptr);
    const std::size_t after_10k = engine_memory_bytes(spec, state);

    CHECK(after_1k == after_10k);
}

TEST_CASE("seeded parameter generation is deterministic and in range") {
    auto a = make_seeded_params(77, 3, 2, ActivationKind::Tanh, 1.0, 0.5);
    auto b = make_seeded_params(77, 3, 2, ActivationKind::Tanh, 1.0, 0.5);
    CHECK(a.W == b.W);
    CHECK(a.W_s == b.W_s);
    CHECK(a.b == b.b);
    for (double v : a.W.entries()) {
        CHECK(v >= -0.5);
        CHECK(v < 0.5);
    }
    CHECK(make_seeded_params(78, 3, 2, ActivationKind::Tanh, 1.0, 0.5).W != a.W);
}

TEST_CASE("spec digests separate distinct networks") {
    CHECK(tanh_net(5).digest() == tanh_net(5).digest());
    CHECK(tanh_net(5).digest() != tanh_net(6).digest());
}

TEST_CASE("independent streams can run concurrently over a shared spec") {
    const NetworkSpec spec = tanh_net(5);

    auto run_one = [&](std::uint64_t seed) {
        NetworkState state = initial_network_state(spec);
        auto src = make_signal_source(noisy_spec(seed), 2000);
        run_stream(spec, state, *src, nullptr);
        return state_digest(state);
    };

    const std::uint64_t seq_a = run_one(100);
    const std::uint64_t seq_b = run_one(200);

    std::uint64_t par_a = 0, par_b = 0;
    std::thread ta([&] { par_a = run_one(100); });
    std::thread tb([&] { par_b = run_one(200); });
    ta.join();
    tb.join();
    CHECK(par_a == seq_a);
    CHECK(par_b == seq_b);
}
