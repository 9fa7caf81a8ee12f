#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>

#include "streamnet/core.hpp"

namespace streamnet {

/// Forward-only input source. next() yields the next vector or nullopt at
/// end of stream; there is no rewind and no peek-behind, and End is
/// absorbing. A source is owned by exactly one consumer.
class StreamSource {
public:
    virtual ~StreamSource() = default;
    virtual std::optional<Vector> next() = 0;
};

enum class SignalKind : std::uint8_t {
    Constant,
    Step,
    Sinusoid,
    NoisySinusoid,
    WhiteNoise,
};

const char* signal_kind_name(SignalKind k) noexcept;
std::optional<SignalKind> parse_signal_kind(const std::string& name) noexcept;

/// Synthetic test-signal description. `omega` is angular frequency in
/// radians per step. For the Step kind, `phase` is reused as the onset step
/// index. Noise is Gaussian, drawn from the seeded generator in Rng.
struct SignalSpec {
    SignalKind kind = SignalKind::Sinusoid;
    double amplitude = 1.0;
    double omega = 0.0;
    double phase = 0.0;
    double noise_std = 0.0;
    std::uint64_t seed = 0;
    std::size_t dim = 1;
};

/// Rejects invalid specs (negative noise std, zero dimension, non-finite
/// fields) with InvalidSpec.
void validate_signal_spec(const SignalSpec& spec);

/// Deterministic generator source; yields `length` items when given,
/// otherwise unbounded. Identical specs (including seed) yield identical
/// sequences.
std::unique_ptr<StreamSource> make_signal_source(const SignalSpec& spec,
                                                 std::optional<std::uint64_t> length = {});

/// Noise-free closed-form value of the signal at step t (the clean
/// reference a tracking evaluation compares against).
Vector signal_clean_value(const SignalSpec& spec, std::uint64_t t);

/// Line-delimited numeric vectors from a stream: one whitespace- or
/// comma-separated vector per line, blank lines skipped. A malformed line
/// raises ParseError carrying its 1-based line number.
std::unique_ptr<StreamSource> make_record_source(std::istream& in);

/// As make_record_source, reading from a file ("-" means standard input).
std::unique_ptr<StreamSource> open_record_source(const std::filesystem::path& path);

/// Wraps a source, counting yields. Tolerates draining plus one further
/// End-returning call; retrieving again after End has been delivered twice
/// raises StreamMisuse.
class ConsumptionGuard final : public StreamSource {
public:
    explicit ConsumptionGuard(std::unique_ptr<StreamSource> inner);
    std::optional<Vector> next() override;
    std::uint64_t consumed() const noexcept { return consumed_; }

private:
    std::unique_ptr<StreamSource> inner_;
    std::uint64_t consumed_ = 0;
    int end_returns_ = 0;
};

std::unique_ptr<ConsumptionGuard> fused_consumption_guard(std::unique_ptr<StreamSource> inner);

/// One step of trajectory output: step index, instantaneous output, the
/// flattened persistent state, and an optional environment-supplied
/// reference value. Never carries the input.
struct StepRecord {
    std::uint64_t t = 0;
    Vector y;
    Vector s;
    std::optional<double> r;
};

/// Record sink writing CSV (header `t,y0..,s0..,r`) or line-delimited JSON.
class RecordWriter {
public:
    virtual ~RecordWriter() = default;
    virtual void write(const StepRecord& rec) = 0;
};

std::unique_ptr<RecordWriter> make_csv_writer(std::ostream& out);
std::unique_ptr<RecordWriter> make_jsonl_writer(std::ostream& out);

/// 17-significant-digit decimal form that round-trips the exact double.
std::string format_double(double v);

}  // namespace streamnet
