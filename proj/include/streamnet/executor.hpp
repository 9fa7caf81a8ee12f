#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "streamnet/neuron.hpp"
#include "streamnet/streams.hpp"

namespace streamnet {

/// Feed-forward chain of stream neurons. Layer k's output feeds layer k+1
/// within the same time step. Validated on construction; immutable after.
class NetworkSpec {
public:
    explicit NetworkSpec(std::vector<NeuronParams> layers);

    const std::vector<NeuronParams>& layers() const noexcept { return layers_; }
    std::size_t layer_count() const noexcept { return layers_.size(); }
    std::size_t input_dim() const noexcept { return layers_.front().in_dim(); }
    std::size_t output_dim() const noexcept { return layers_.back().out_dim(); }

    /// Content hash of every layer's shape and coefficients.
    std::uint64_t digest() const noexcept { return digest_; }

private:
    std::vector<NeuronParams> layers_;
    std::uint64_t digest_ = 0;
};

/// Single-layer convenience wrapper.
NetworkSpec single_neuron_network(NeuronParams params);

/// Deterministic seeded parameters: weights and bias uniform in
/// [-0.5, 0.5] from the named generator.
NeuronParams make_seeded_params(std::uint64_t seed, std::size_t in_dim, std::size_t out_dim,
                                ActivationKind activation, double alpha, double lambda);

/// Seeded network over a dimension chain dims[0] -> dims[1] -> ... Every
/// layer shares activation/alpha/lambda; weights come from one seeded
/// stream in layer order.
NetworkSpec make_seeded_network(std::uint64_t seed, std::span<const std::size_t> dims,
                                ActivationKind activation, double alpha, double lambda);

/// Per-layer persistent state plus the global step counter. All layer
/// counters equal the global counter.
struct NetworkState {
    std::vector<NeuronState> layers;
    std::uint64_t step = 0;
};

NetworkState initial_network_state(const NetworkSpec& spec);

/// Concatenation of the per-layer state vectors.
Vector flatten_state(const NetworkState& state);

/// Content hash of the state vectors and step counter.
std::uint64_t state_digest(const NetworkState& state);

struct NetworkStepOutput {
    Vector y;
    NetworkState next_state;
};

/// Advance every layer once, feed-forward, consuming x. Returns the final
/// layer's output and the advanced state; retains no copy of x.
NetworkStepOutput network_step(const NetworkSpec& spec, const NetworkState& state, const Vector& x);

/// Bytes of heap memory held by the engine between steps: the spec's
/// coefficient storage plus the state vectors. Constant in stream length.
std::size_t engine_memory_bytes(const NetworkSpec& spec, const NetworkState& state);

struct StepTimeStats {
    double min_ns = 0.0;
    double mean_ns = 0.0;
    double max_ns = 0.0;
};

/// Outcome of a stream run. `steps` equals the number of source items
/// consumed and processed; a NonFiniteValue abort is reported in `fault`
/// with the last good state left in the caller's NetworkState.
struct RunSummary {
    std::uint64_t steps = 0;
    std::uint64_t final_state_digest = 0;
    StepTimeStats step_time;
    std::size_t peak_engine_memory_bytes = 0;
    std::optional<std::string> fault;
};

using StepSink = std::function<void(const StepRecord&)>;

/// Pull inputs from the source exactly once each, in order, advancing the
/// state in place and forwarding (t, y_t, s_t) to the sink. Terminates at
/// source exhaustion or after `limit` steps. Source errors propagate; a
/// numeric fault stops the run and is recorded in the summary.
RunSummary run_stream(const NetworkSpec& spec, NetworkState& state, StreamSource& source,
                      const StepSink& sink, std::optional<std::uint64_t> limit = {});

/// Persistent execution checkpoint: state and position, never inputs.
struct Snapshot {
    std::uint32_t version = 1;
    std::uint64_t spec_digest = 0;
    std::vector<Vector> layer_states;
    std::uint64_t step = 0;
};

inline constexpr char kSnapshotMagic[8] = {'S', 'T', 'N', 'N', 'S', 'N', 'A', 'P'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

Snapshot save_snapshot(const NetworkSpec& spec, const NetworkState& state);

/// Rebuild a NetworkState from a snapshot taken against the same spec.
/// Rejects digest mismatches, unsupported versions and structural damage.
NetworkState load_snapshot(const NetworkSpec& spec, const Snapshot& snapshot);

/// Self-describing little-endian binary layout:
/// magic "STNNSNAP", version u32, spec digest u64, layer count u32,
/// per layer (dim u32, dim f64 values), step counter u64.
std::vector<std::uint8_t> encode_snapshot(const Snapshot& snapshot);
Snapshot decode_snapshot(std::span<const std::uint8_t> bytes);

void write_snapshot_file(const std::filesystem::path& path, const Snapshot& snapshot);
Snapshot read_snapshot_file(const std::filesystem::path& path);

}  // namespace streamnet
