#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "streamnet/errors.hpp"

namespace streamnet {

/// Dense real vector with all elements finite. Dimension is fixed at
/// construction; there is no mutable element access.
class Vector {
public:
    Vector() = default;
    explicit Vector(std::vector<double> elements);

    static Vector zeros(std::size_t dim);

    std::size_t dim() const noexcept { return e_.size(); }
    double operator[](std::size_t i) const { return e_[i]; }
    const std::vector<double>& elements() const noexcept { return e_; }
    std::span<const double> span() const noexcept { return {e_.data(), e_.size()}; }

    friend bool operator==(const Vector&, const Vector&) = default;

private:
    std::vector<double> e_;
};

Vector operator-(const Vector& a, const Vector& b);
Vector operator+(const Vector& a, const Vector& b);
Vector operator*(double k, const Vector& v);

/// Euclidean norm. Dimension 1 returns |x| exactly (no sqrt round-trip).
double norm(const Vector& v);
/// Largest |element|; 0 for the empty vector.
double max_abs(const Vector& v);

/// Dense row-major matrix with finite entries and positive extents.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

    static Matrix zeros(std::size_t rows, std::size_t cols);
    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double at(std::size_t r, std::size_t c) const { return e_[r * cols_ + c]; }
    const std::vector<double>& entries() const noexcept { return e_; }
    std::span<const double> row(std::size_t r) const { return {e_.data() + r * cols_, cols_}; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> e_;
};

/// y = M x
Vector matvec(const Matrix& m, const Vector& x);

enum class ActivationKind : std::uint8_t {
    Identity = 0,
    Tanh = 1,
    Sigmoid = 2,
    Relu = 3,
};

const char* activation_name(ActivationKind k) noexcept;
std::optional<ActivationKind> parse_activation(const std::string& name) noexcept;

/// True for kinds whose output magnitude is bounded for every finite input.
bool activation_is_bounded(ActivationKind k) noexcept;

/// Output magnitude bound M for bounded kinds (Tanh and Sigmoid: 1.0);
/// +infinity for Identity and Relu.
double activation_bound(ActivationKind k) noexcept;

/// sigma(0); zero exactly for Identity, Tanh and Relu.
double activation_at_zero(ActivationKind k) noexcept;

/// Elementwise activation. Rejects non-finite input.
Vector activation_apply(ActivationKind k, const Vector& z);

/// Scalar activation kernel shared by every evaluation path.
double activation_scalar(ActivationKind k, double z);

/// Parameters of one stream neuron:
///   z = W x + alpha (W_s s) + b,  y = sigma(z),  s' = lambda s + (1-lambda) y.
struct NeuronParams {
    Matrix W;       // out x in
    Matrix W_s;     // out x out, state feedback
    Vector b;       // out
    double alpha = 0.0;   // feedback gain
    double lambda = 0.0;  // decay factor, [0, 1)
    ActivationKind activation = ActivationKind::Tanh;

    std::size_t in_dim() const noexcept { return W.cols(); }
    std::size_t out_dim() const noexcept { return W.rows(); }
};

struct ParamIssue {
    Errc code;
    std::string detail;
};

/// First violated invariant, or nullopt when the parameter set is valid.
/// Check order: lambda range, dimension chain, finiteness of scalars.
std::optional<ParamIssue> validate_params(const NeuronParams& p);

/// Throwing form of validate_params.
void ensure_valid_params(const NeuronParams& p);

}  // namespace streamnet
