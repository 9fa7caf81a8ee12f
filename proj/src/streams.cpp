#include "streamnet/streams.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "streamnet/rng.hpp"

namespace streamnet {

const char* signal_kind_name(SignalKind k) noexcept {
    switch (k) {
        case SignalKind::Constant: return "constant";
        case SignalKind::Step: return "step";
        case SignalKind::Sinusoid: return "sinusoid";
        case SignalKind::NoisySinusoid: return "noisy_sinusoid";
        case SignalKind::WhiteNoise: return "white_noise";
    }
    return "?";
}

std::optional<SignalKind> parse_signal_kind(const std::string& name) noexcept {
    if (name == "constant") return SignalKind::Constant;
    if (name == "step") return SignalKind::Step;
    if (name == "sinusoid") return SignalKind::Sinusoid;
    if (name == "noisy_sinusoid") return SignalKind::NoisySinusoid;
    if (name == "white_noise") return SignalKind::WhiteNoise;
    return std::nullopt;
}

void validate_signal_spec(const SignalSpec& spec) {
    if (spec.dim == 0) throw Error(Errc::InvalidSpec, "signal dimension must be >= 1");
    if (!(spec.noise_std >= 0.0) || !std::isfinite(spec.noise_std)) {
        throw Error(Errc::InvalidSpec, "noise std must be finite and >= 0");
    }
    if (!std::isfinite(spec.amplitude) || !std::isfinite(spec.omega) || !std::isfinite(spec.phase)) {
        throw Error(Errc::InvalidSpec, "signal parameters must be finite");
    }
}

namespace {

double clean_sample(const SignalSpec& spec, std::uint64_t t) {
    switch (spec.kind) {
        case SignalKind::Constant:
            return spec.amplitude;
        case SignalKind::Step:
            return static_cast<double>(t) >= spec.phase ? spec.amplitude : 0.0;
        case SignalKind::Sinusoid:
        case SignalKind::NoisySinusoid:
            return spec.amplitude * std::sin(spec.omega * static_cast<double>(t) + spec.phase);
        case SignalKind::WhiteNoise:
            return 0.0;
    }
    return 0.0;
}

bool kind_has_noise(SignalKind k) {
    return k == SignalKind::NoisySinusoid || k == SignalKind::WhiteNoise;
}

class SignalSource final : public StreamSource {
public:
    SignalSource(SignalSpec spec, std::optional<std::uint64_t> length)
        : spec_(spec), length_(length), rng_(spec.seed) {}

    std::optional<Vector> next() override {
        if (length_ && t_ >= *length_) return std::nullopt;
        std::vector<double> v(spec_.dim);
        const double base = clean_sample(spec_, t_);
        for (std::size_t i = 0; i < spec_.dim; ++i) {
            double x = base;
            if (kind_has_noise(spec_.kind) && spec_.noise_std > 0.0) {
                x += spec_.noise_std * rng_.normal();
            }
            v[i] = x;
        }
        ++t_;
        return Vector(std::move(v));
    }

private:
    SignalSpec spec_;
    std::optional<std::uint64_t> length_;
    Rng rng_;
    std::uint64_t t_ = 0;
};

class RecordSource final : public StreamSource {
public:
    explicit RecordSource(std::istream& in) : in_(in) {}

    std::optional<Vector> next() override {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            return parse_line(line);
        }
        if (in_.bad()) throw Error(Errc::IoError, "read failure on input stream");
        return std::nullopt;
    }

private:
    Vector parse_line(const std::string& line) {
        std::vector<double> v;
        const char* p = line.c_str();
        const char* end = p + line.size();
        while (p < end) {
            while (p < end && (*p == ' ' || *p == '\t' || *p == ',' || *p == '\r')) ++p;
            if (p >= end) break;
            char* after = nullptr;
            const double x = std::strtod(p, &after);
            if (after == p) {
                throw Error(Errc::ParseError,
                            "malformed value at line " + std::to_string(line_no_));
            }
            if (!std::isfinite(x)) {
                throw Error(Errc::ParseError,
                            "non-finite value at line " + std::to_string(line_no_));
            }
            v.push_back(x);
            p = after;
        }
        if (v.empty()) {
            throw Error(Errc::ParseError, "malformed value at line " + std::to_string(line_no_));
        }
        return Vector(std::move(v));
    }

    std::istream& in_;
    std::uint64_t line_no_ = 0;
};

/// Record source that owns its file stream.
class FileRecordSource final : public StreamSource {
public:
    explicit FileRecordSource(const std::filesystem::path& path)
        : file_(path), inner_(file_) {
        if (!file_) throw Error(Errc::IoError, "cannot open input file: " + path.string());
    }
    std::optional<Vector> next() override { return inner_.next(); }

private:
    std::ifstream file_;
    RecordSource inner_;
};

}  // namespace

std::unique_ptr<StreamSource> make_signal_source(const SignalSpec& spec,
                                                 std::optional<std::uint64_t> length) {
    validate_signal_spec(spec);
    return std::make_unique<SignalSource>(spec, length);
}

Vector signal_clean_value(const SignalSpec& spec, std::uint64_t t) {
    validate_signal_spec(spec);
    return Vector(std::vector<double>(spec.dim, clean_sample(spec, t)));
}

std::unique_ptr<StreamSource> make_record_source(std::istream& in) {
    return std::make_unique<RecordSource>(in);
}

std::unique_ptr<StreamSource> open_record_source(const std::filesystem::path& path) {
    if (path == "-") return std::make_unique<RecordSource>(std::cin);
    return std::make_unique<FileRecordSource>(path);
}

ConsumptionGuard::ConsumptionGuard(std::unique_ptr<StreamSource> inner)
    : inner_(std::move(inner)) {}

std::optional<Vector> ConsumptionGuard::next() {
    if (end_returns_ >= 2) {
        throw Error(Errc::StreamMisuse, "next() called after end of stream was already delivered");
    }
    auto item = inner_->next();
    if (!item) {
        ++end_returns_;
        return std::nullopt;
    }
    ++consumed_;
    return item;
}

std::unique_ptr<ConsumptionGuard> fused_consumption_guard(std::unique_ptr<StreamSource> inner) {
    return std::make_unique<ConsumptionGuard>(std::move(inner));
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

class CsvWriter final : public RecordWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void write(const StepRecord& rec) override {
        if (!wrote_header_) {
            out_ << "t";
            for (std::size_t i = 0; i < rec.y.dim(); ++i) out_ << ",y" << i;
            for (std::size_t i = 0; i < rec.s.dim(); ++i) out_ << ",s" << i;
            out_ << ",r\n";
            wrote_header_ = true;
        }
        out_ << rec.t;
        for (double v : rec.y.elements()) out_ << ',' << format_double(v);
        for (double v : rec.s.elements()) out_ << ',' << format_double(v);
        out_ << ',';
        if (rec.r) out_ << format_double(*rec.r);
        out_ << '\n';
        if (!out_) throw Error(Errc::IoError, "write failure on output stream");
    }

private:
    std::ostream& out_;
    bool wrote_header_ = false;
};

class JsonlWriter final : public RecordWriter {
public:
    explicit JsonlWriter(std::ostream& out) : out_(out) {}

    void write(const StepRecord& rec) override {
        out_ << "{\"t\":" << rec.t << ",\"y\":[";
        list(rec.y);
        out_ << "],\"s\":[";
        list(rec.s);
        out_ << "]";
        if (rec.r) out_ << ",\"r\":" << format_double(*rec.r);
        out_ << "}\n";
        if (!out_) throw Error(Errc::IoError, "write failure on output stream");
    }

private:
    void list(const Vector& v) {
        for (std::size_t i = 0; i < v.dim(); ++i) {
            if (i) out_ << ',';
            out_ << format_double(v[i]);
        }
    }
    std::ostream& out_;
};

}  // namespace

std::unique_ptr<RecordWriter> make_csv_writer(std::ostream& out) {
    return std::make_unique<CsvWriter>(out);
}

std::unique_ptr<RecordWriter> make_jsonl_writer(std::ostream& out) {
    return std::make_unique<JsonlWriter>(out);
}

}  // namespace streamnet
