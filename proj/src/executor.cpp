#include "streamnet/executor.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "streamnet/fputil.hpp"
#include "streamnet/rng.hpp"

namespace streamnet {

namespace {

void hash_u32(std::uint64_t& h, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    h = fnv1a64(b, sizeof b, h);
}

void hash_u64(std::uint64_t& h, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    h = fnv1a64(b, sizeof b, h);
}

void hash_f64(std::uint64_t& h, double v) { hash_u64(h, std::bit_cast<std::uint64_t>(v)); }

void hash_f64s(std::uint64_t& h, std::span<const double> vs) {
    for (double v : vs) hash_f64(h, v);
}

std::uint64_t compute_spec_digest(const std::vector<NeuronParams>& layers) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    hash_u32(h, static_cast<std::uint32_t>(layers.size()));
    for (const auto& p : layers) {
        hash_u32(h, static_cast<std::uint32_t>(p.out_dim()));
        hash_u32(h, static_cast<std::uint32_t>(p.in_dim()));
        hash_u32(h, static_cast<std::uint32_t>(p.activation));
        hash_f64(h, p.alpha);
        hash_f64(h, p.lambda);
        hash_f64s(h, p.W.entries());
        hash_f64s(h, p.W_s.entries());
        hash_f64s(h, p.b.span());
    }
    return h;
}

}  // namespace

NetworkSpec::NetworkSpec(std::vector<NeuronParams> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) {
        throw Error(Errc::InvalidSpec, "network needs at least one layer");
    }
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        if (auto issue = validate_params(layers_[k])) {
            throw Error(issue->code, "layer " + std::to_string(k) + ": " + issue->detail);
        }
        if (k > 0 && layers_[k].in_dim() != layers_[k - 1].out_dim()) {
            throw Error(Errc::DimensionMismatch,
                        "layer " + std::to_string(k) + " input dim does not match previous output");
        }
    }
    digest_ = compute_spec_digest(layers_);
}

NetworkSpec single_neuron_network(NeuronParams params) {
    std::vector<NeuronParams> layers;
    layers.push_back(std::move(params));
    return NetworkSpec(std::move(layers));
}

NeuronParams make_seeded_params(std::uint64_t seed, std::size_t in_dim, std::size_t out_dim,
                                ActivationKind activation, double alpha, double lambda) {
    Rng rng(seed);
    auto draw = [&](std::size_t n) {
        std::vector<double> v(n);
        for (auto& x : v) x = rng.uniform(-0.5, 0.5);
        return v;
    };
    NeuronParams p;
    p.W = Matrix(out_dim, in_dim, draw(out_dim * in_dim));
    p.W_s = Matrix(out_dim, out_dim, draw(out_dim * out_dim));
    p.b = Vector(draw(out_dim));
    p.alpha = alpha;
    p.lambda = lambda;
    p.activation = activation;
    ensure_valid_params(p);
    return p;
}

NetworkSpec make_seeded_network(std::uint64_t seed, std::span<const std::size_t> dims,
                                ActivationKind activation, double alpha, double lambda) {
    if (dims.size() < 2) {
        throw Error(Errc::InvalidSpec, "dimension chain needs at least input and one layer");
    }
    std::vector<NeuronParams> layers;
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
        layers.push_back(
            make_seeded_params(seed + k, dims[k], dims[k + 1], activation, alpha, lambda));
    }
    return NetworkSpec(std::move(layers));
}

NetworkState initial_network_state(const NetworkSpec& spec) {
    NetworkState st;
    st.layers.reserve(spec.layer_count());
    for (const auto& p : spec.layers()) st.layers.push_back(initial_state(p));
    st.step = 0;
    return st;
}

Vector flatten_state(const NetworkState& state) {
    std::vector<double> flat;
    for (const auto& layer : state.layers) {
        flat.insert(flat.end(), layer.s.elements().begin(), layer.s.elements().end());
    }
    return Vector(std::move(flat));
}

std::uint64_t state_digest(const NetworkState& state) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    hash_u64(h, state.step);
    hash_u32(h, static_cast<std::uint32_t>(state.layers.size()));
    for (const auto& layer : state.layers) {
        hash_u32(h, static_cast<std::uint32_t>(layer.s.dim()));
        hash_f64s(h, layer.s.span());
    }
    return h;
}

namespace {

void check_state_matches(const NetworkSpec& spec, const NetworkState& state) {
    if (state.layers.size() != spec.layer_count()) {
        throw Error(Errc::DimensionMismatch, "state layer count does not match spec");
    }
    for (std::size_t k = 0; k < state.layers.size(); ++k) {
        if (state.layers[k].s.dim() != spec.layers()[k].out_dim()) {
            throw Error(Errc::DimensionMismatch,
                        "state dim of layer " + std::to_string(k) + " does not match spec");
        }
        if (state.layers[k].step != state.step) {
            throw Error(Errc::InvalidInput, "layer step counters out of sync with global counter");
        }
    }
}

}  // namespace

NetworkStepOutput network_step(const NetworkSpec& spec, const NetworkState& state,
                               const Vector& x) {
    check_state_matches(spec, state);
    NetworkState next;
    next.layers.reserve(spec.layer_count());
    Vector carry = x;
    for (std::size_t k = 0; k < spec.layer_count(); ++k) {
        StepOutput out = neuron_step(spec.layers()[k], state.layers[k], carry);
        carry = std::move(out.y);
        next.layers.push_back(std::move(out.next_state));
    }
    next.step = state.step + 1;
    return NetworkStepOutput{std::move(carry), std::move(next)};
}

std::size_t engine_memory_bytes(const NetworkSpec& spec, const NetworkState& state) {
    std::size_t bytes = sizeof(NetworkSpec) + sizeof(NetworkState);
    for (const auto& p : spec.layers()) {
        bytes += sizeof(NeuronParams);
        bytes += p.W.entries().capacity() * sizeof(double);
        bytes += p.W_s.entries().capacity() * sizeof(double);
        bytes += p.b.elements().capacity() * sizeof(double);
    }
    for (const auto& layer : state.layers) {
        bytes += sizeof(NeuronState);
        bytes += layer.s.elements().capacity() * sizeof(double);
    }
    return bytes;
}

RunSummary run_stream(const NetworkSpec& spec, NetworkState& state, StreamSource& source,
                      const StepSink& sink, std::optional<std::uint64_t> limit) {
    using clock = std::chrono::steady_clock;
    check_state_matches(spec, state);

    RunSummary summary;
    summary.peak_engine_memory_bytes = engine_memory_bytes(spec, state);
    double total_ns = 0.0;
    double min_ns = std::numeric_limits<double>::infinity();
    double max_ns = 0.0;

    while (!limit || summary.steps < *limit) {
        auto item = source.next();
        if (!item) break;

        const auto t0 = clock::now();
        NetworkStepOutput out;
        try {
            out = network_step(spec, state, *item);
        } catch (const Error& e) {
            if (e.code() == Errc::NonFiniteValue) {
                summary.fault = e.what();
                break;
            }
            throw;
        }
        const auto t1 = clock::now();
        // the consumed input dies here; only y and s survive the step
        item.reset();

        state = std::move(out.next_state);
        ++summary.steps;

        const double ns = std::chrono::duration<double, std::nano>(t1 - t0).count();
        total_ns += ns;
        if (ns < min_ns) min_ns = ns;
        if (ns > max_ns) max_ns = ns;

        if (sink) {
            sink(StepRecord{state.step, std::move(out.y), flatten_state(state), std::nullopt});
        }

        if ((summary.steps & 0x3ff) == 0) {
            summary.peak_engine_memory_bytes =
                std::max(summary.peak_engine_memory_bytes, engine_memory_bytes(spec, state));
        }
    }

    summary.peak_engine_memory_bytes =
        std::max(summary.peak_engine_memory_bytes, engine_memory_bytes(spec, state));
    summary.final_state_digest = state_digest(state);
    if (summary.steps > 0) {
        summary.step_time = StepTimeStats{min_ns, total_ns / static_cast<double>(summary.steps),
                                          max_ns};
    }
    return summary;
}

Snapshot save_snapshot(const NetworkSpec& spec, const NetworkState& state) {
    check_state_matches(spec, state);
    Snapshot snap;
    snap.version = kSnapshotVersion;
    snap.spec_digest = spec.digest();
    snap.layer_states.reserve(state.layers.size());
    for (const auto& layer : state.layers) snap.layer_states.push_back(layer.s);
    snap.step = state.step;
    return snap;
}

NetworkState load_snapshot(const NetworkSpec& spec, const Snapshot& snapshot) {
    if (snapshot.version != kSnapshotVersion) {
        throw Error(Errc::VersionUnsupported,
                    "snapshot version " + std::to_string(snapshot.version) + " not supported");
    }
    if (snapshot.spec_digest != spec.digest()) {
        throw Error(Errc::DigestMismatch, "snapshot was taken against a different network spec");
    }
    if (snapshot.layer_states.size() != spec.layer_count()) {
        throw Error(Errc::CorruptSnapshot, "snapshot layer count does not match spec");
    }
    NetworkState st;
    st.layers.reserve(snapshot.layer_states.size());
    for (std::size_t k = 0; k < snapshot.layer_states.size(); ++k) {
        if (snapshot.layer_states[k].dim() != spec.layers()[k].out_dim()) {
            throw Error(Errc::CorruptSnapshot,
                        "snapshot state dim of layer " + std::to_string(k) + " does not match spec");
        }
        st.layers.push_back(NeuronState{snapshot.layer_states[k], snapshot.step});
    }
    st.step = snapshot.step;
    return st;
}

namespace {

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64le(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64le(std::vector<std::uint8_t>& out, double v) {
    put_u64le(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint32_t u32le() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64le() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }

    double f64le() { return std::bit_cast<double>(u64le()); }

    void raw(void* dst, std::size_t n) {
        need(n);
        std::memcpy(dst, bytes_.data() + pos_, n);
        pos_ += n;
    }

    bool exhausted() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) {
        if (pos_ + n > bytes_.size()) {
            throw Error(Errc::CorruptSnapshot, "snapshot truncated");
        }
    }
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_snapshot(const Snapshot& snapshot) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), std::begin(kSnapshotMagic), std::end(kSnapshotMagic));
    put_u32le(out, snapshot.version);
    put_u64le(out, snapshot.spec_digest);
    put_u32le(out, static_cast<std::uint32_t>(snapshot.layer_states.size()));
    for (const auto& s : snapshot.layer_states) {
        put_u32le(out, static_cast<std::uint32_t>(s.dim()));
        for (double v : s.elements()) put_f64le(out, v);
    }
    put_u64le(out, snapshot.step);
    return out;
}

Snapshot decode_snapshot(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    char magic[8];
    r.raw(magic, 8);
    if (std::memcmp(magic, kSnapshotMagic, 8) != 0) {
        throw Error(Errc::CorruptSnapshot, "bad snapshot magic");
    }
    Snapshot snap;
    snap.version = r.u32le();
    if (snap.version != kSnapshotVersion) {
        throw Error(Errc::VersionUnsupported,
                    "snapshot version " + std::to_string(snap.version) + " not supported");
    }
    snap.spec_digest = r.u64le();
    const std::uint32_t layers = r.u32le();
    snap.layer_states.reserve(layers);
    for (std::uint32_t k = 0; k < layers; ++k) {
        const std::uint32_t dim = r.u32le();
        std::vector<double> vals(dim);
        for (auto& v : vals) v = r.f64le();
        try {
            snap.layer_states.emplace_back(std::move(vals));
        } catch (const Error&) {
            throw Error(Errc::CorruptSnapshot, "snapshot holds non-finite state values");
        }
    }
    snap.step = r.u64le();
    if (!r.exhausted()) {
        throw Error(Errc::CorruptSnapshot, "trailing bytes after snapshot payload");
    }
    return snap;
}

void write_snapshot_file(const std::filesystem::path& path, const Snapshot& snapshot) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot open snapshot file for write: " + path.string());
    const auto bytes = encode_snapshot(snapshot);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::IoError, "snapshot write failed: " + path.string());
}

Snapshot read_snapshot_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open snapshot file: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(Errc::IoError, "snapshot read failed: " + path.string());
    return decode_snapshot(bytes);
}

}  // namespace streamnet
