#include "streamnet/neuron.hpp"

#include <cmath>

namespace streamnet {

namespace {

double dot_row(const Matrix& m, std::size_t r, std::span<const double> v) {
    double acc = 0.0;
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * v[c];
    return acc;
}

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw Error(Errc::NonFiniteValue, std::string(what) + " overflowed to a non-finite value");
    }
}

}  // namespace

NeuronState initial_state(const NeuronParams& p) {
    ensure_valid_params(p);
    return NeuronState{Vector::zeros(p.out_dim()), 0};
}

StepOutput neuron_step(const NeuronParams& p, const NeuronState& state, const Vector& x) {
    ensure_valid_params(p);
    if (x.dim() != p.in_dim()) {
        throw Error(Errc::DimensionMismatch, "input dimension does not match W columns");
    }
    if (state.s.dim() != p.out_dim()) {
        throw Error(Errc::DimensionMismatch, "state dimension does not match W rows");
    }

    const std::size_t n = p.out_dim();
    const double lambda = p.lambda;
    const double retain = 1.0 - lambda;
    std::vector<double> y(n);
    std::vector<double> s_next(n);
    const auto s_prev = state.s.span();

    for (std::size_t i = 0; i < n; ++i) {
        const double drive = dot_row(p.W, i, x.span());
        const double feedback = p.alpha * dot_row(p.W_s, i, s_prev);
        const double z = (drive + feedback) + p.b[i];
        require_finite(z, "pre-activation");
        const double yi = activation_scalar(p.activation, z);
        require_finite(yi, "activation output");
        const double si = lambda * s_prev[i] + retain * yi;
        require_finite(si, "state update");
        y[i] = yi;
        s_next[i] = si;
    }

    return StepOutput{Vector(std::move(y)), NeuronState{Vector(std::move(s_next)), state.step + 1}};
}

Vector stateless_step(const NeuronParams& p, const Vector& x) {
    ensure_valid_params(p);
    if (x.dim() != p.in_dim()) {
        throw Error(Errc::DimensionMismatch, "input dimension does not match W columns");
    }
    const std::size_t n = p.out_dim();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = dot_row(p.W, i, x.span()) + p.b[i];
        require_finite(z, "pre-activation");
        y[i] = activation_scalar(p.activation, z);
        require_finite(y[i], "activation output");
    }
    return Vector(std::move(y));
}

Vector state_update_only(double lambda, const Vector& s_prev, const Vector& y) {
    if (!(lambda >= 0.0 && lambda < 1.0)) {
        throw Error(Errc::LambdaOutOfRange, "lambda must lie in [0, 1)");
    }
    if (s_prev.dim() != y.dim()) {
        throw Error(Errc::DimensionMismatch, "state and input dimensions differ");
    }
    const double retain = 1.0 - lambda;
    std::vector<double> out(s_prev.dim());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = lambda * s_prev[i] + retain * y[i];
    }
    return Vector(std::move(out));
}

}  // namespace streamnet
