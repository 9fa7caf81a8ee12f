#include "streamnet/core.hpp"

#include <algorithm>
#include <cmath>

namespace streamnet {

const char* errc_name(Errc c) noexcept {
    switch (c) {
        case Errc::InvalidInput: return "InvalidInput";
        case Errc::NonFiniteValue: return "NonFiniteValue";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::LambdaOutOfRange: return "LambdaOutOfRange";
        case Errc::UnboundedActivation: return "UnboundedActivation";
        case Errc::InvalidActivation: return "InvalidActivation";
        case Errc::DegenerateInput: return "DegenerateInput";
        case Errc::LagOutOfRange: return "LagOutOfRange";
        case Errc::EmptyTrajectory: return "EmptyTrajectory";
        case Errc::InvalidSpec: return "InvalidSpec";
        case Errc::SourceError: return "SourceError";
        case Errc::ParseError: return "ParseError";
        case Errc::IoError: return "IoError";
        case Errc::DigestMismatch: return "DigestMismatch";
        case Errc::VersionUnsupported: return "VersionUnsupported";
        case Errc::CorruptSnapshot: return "CorruptSnapshot";
        case Errc::StreamMisuse: return "StreamMisuse";
    }
    return "UnknownError";
}

namespace {

void require_all_finite(std::span<const double> xs, const char* what) {
    for (double x : xs) {
        if (!std::isfinite(x)) {
            throw Error(Errc::NonFiniteValue, std::string(what) + " contains a non-finite element");
        }
    }
}

}  // namespace

Vector::Vector(std::vector<double> elements) : e_(std::move(elements)) {
    require_all_finite(e_, "vector");
}

Vector Vector::zeros(std::size_t dim) {
    return Vector(std::vector<double>(dim, 0.0));
}

Vector operator-(const Vector& a, const Vector& b) {
    if (a.dim() != b.dim()) {
        throw Error(Errc::DimensionMismatch, "vector subtraction with mismatched dims");
    }
    std::vector<double> out(a.dim());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
    return Vector(std::move(out));
}

Vector operator+(const Vector& a, const Vector& b) {
    if (a.dim() != b.dim()) {
        throw Error(Errc::DimensionMismatch, "vector addition with mismatched dims");
    }
    std::vector<double> out(a.dim());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
    return Vector(std::move(out));
}

Vector operator*(double k, const Vector& v) {
    std::vector<double> out(v.dim());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = k * v[i];
    return Vector(std::move(out));
}

double norm(const Vector& v) {
    if (v.dim() == 1) return std::fabs(v[0]);
    double acc = 0.0;
    for (double x : v.elements()) acc += x * x;
    return std::sqrt(acc);
}

double max_abs(const Vector& v) {
    double m = 0.0;
    for (double x : v.elements()) m = std::max(m, std::fabs(x));
    return m;
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), e_(std::move(entries)) {
    if (rows_ == 0 || cols_ == 0) {
        throw Error(Errc::InvalidInput, "matrix extents must be positive");
    }
    if (e_.size() != rows_ * cols_) {
        throw Error(Errc::DimensionMismatch, "matrix entry count does not match extents");
    }
    require_all_finite(e_, "matrix");
}

Matrix Matrix::zeros(std::size_t rows, std::size_t cols) {
    return Matrix(rows, cols, std::vector<double>(rows * cols, 0.0));
}

Matrix Matrix::identity(std::size_t n) {
    std::vector<double> e(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) e[i * n + i] = 1.0;
    return Matrix(n, n, std::move(e));
}

Vector matvec(const Matrix& m, const Vector& x) {
    if (m.cols() != x.dim()) {
        throw Error(Errc::DimensionMismatch, "matvec dims");
    }
    std::vector<double> out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double acc = 0.0;
        auto row = m.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * x[c];
        out[r] = acc;
    }
    return Vector(std::move(out));
}

const char* activation_name(ActivationKind k) noexcept {
    switch (k) {
        case ActivationKind::Identity: return "identity";
        case ActivationKind::Tanh: return "tanh";
        case ActivationKind::Sigmoid: return "sigmoid";
        case ActivationKind::Relu: return "relu";
    }
    return "?";
}

std::optional<ActivationKind> parse_activation(const std::string& name) noexcept {
    if (name == "identity") return ActivationKind::Identity;
    if (name == "tanh") return ActivationKind::Tanh;
    if (name == "sigmoid") return ActivationKind::Sigmoid;
    if (name == "relu") return ActivationKind::Relu;
    return std::nullopt;
}

bool activation_is_bounded(ActivationKind k) noexcept {
    return k == ActivationKind::Tanh || k == ActivationKind::Sigmoid;
}

double activation_bound(ActivationKind k) noexcept {
    return activation_is_bounded(k) ? 1.0 : std::numeric_limits<double>::infinity();
}

double activation_at_zero(ActivationKind k) noexcept {
    return k == ActivationKind::Sigmoid ? 0.5 : 0.0;
}

double activation_scalar(ActivationKind k, double z) {
    switch (k) {
        case ActivationKind::Identity: return z;
        case ActivationKind::Tanh: return std::tanh(z);
        case ActivationKind::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
        case ActivationKind::Relu: return z > 0.0 ? z : 0.0;
    }
    return z;
}

Vector activation_apply(ActivationKind k, const Vector& z) {
    // Vector construction already rejects non-finite elements; an empty
    // vector is the only degenerate shape left to pass through.
    std::vector<double> out(z.dim());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = activation_scalar(k, z[i]);
    return Vector(std::move(out));
}

std::optional<ParamIssue> validate_params(const NeuronParams& p) {
    if (!(p.lambda >= 0.0 && p.lambda < 1.0)) {
        return ParamIssue{Errc::LambdaOutOfRange, "lambda must lie in [0, 1)"};
    }
    if (p.W.rows() == 0 || p.W.cols() == 0) {
        return ParamIssue{Errc::DimensionMismatch, "W must be non-empty"};
    }
    const std::size_t out = p.W.rows();
    if (p.W_s.rows() != out || p.W_s.cols() != out) {
        return ParamIssue{Errc::DimensionMismatch, "W_s must be out_dim x out_dim"};
    }
    if (p.b.dim() != out) {
        return ParamIssue{Errc::DimensionMismatch, "b dimension must equal out_dim"};
    }
    if (!std::isfinite(p.alpha)) {
        return ParamIssue{Errc::NonFiniteValue, "alpha is not finite"};
    }
    return std::nullopt;
}

void ensure_valid_params(const NeuronParams& p) {
    if (auto issue = validate_params(p)) {
        throw Error(issue->code, issue->detail);
    }
}

}  // namespace streamnet
