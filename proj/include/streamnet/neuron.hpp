#pragma once

#include <cstdint>

#include "streamnet/core.hpp"

namespace streamnet {

/// Persistent temporal state of one stream neuron. The state vector is the
/// sole carrier of history; the step counter advances by exactly one per
/// step operation.
struct NeuronState {
    Vector s;
    std::uint64_t step = 0;
};

/// Result of one neuron step: instantaneous output plus the advanced state.
/// Carries nothing else; in particular, no copy of the input.
struct StepOutput {
    Vector y;
    NeuronState next_state;
};

/// Zero state of matching dimension (|s_0| <= M for every bounded kind).
NeuronState initial_state(const NeuronParams& p);

/// One step of the stream neuron:
///   z = W x + alpha (W_s s) + b,  y = sigma(z),  s' = lambda s + (1-lambda) y.
/// The decay update is evaluated literally in that form; any non-finite
/// intermediate aborts with NonFiniteValue before state is produced.
StepOutput neuron_step(const NeuronParams& p, const NeuronState& state, const Vector& x);

/// Memoryless evaluation sigma(W x + b). Reads and writes no state; equals
/// the neuron_step output y when alpha = 0.
Vector stateless_step(const NeuronParams& p, const Vector& x);

/// The decay update in isolation: lambda s_prev + (1-lambda) y, evaluated
/// literally (term by term, no algebraic reordering).
Vector state_update_only(double lambda, const Vector& s_prev, const Vector& y);

}  // namespace streamnet
