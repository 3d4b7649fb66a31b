#include "msnn/lif.hpp"

#include "msnn/errors.hpp"

namespace msnn {

void LifParams::validate() const {
    if (capacitance <= 0.0f) throw ConfigError("lif: capacitance must be positive");
    if (dt <= 0.0f) throw ConfigError("lif: dt must be positive");
    if (v_th <= v_reset) throw ConfigError("lif: v_th must exceed v_reset");
    if (alpha < 0.0f || alpha >= 1.0f) throw ConfigError("lif: alpha must lie in [0, 1)");
    if (beta < 0.0f) throw ConfigError("lif: beta must be non-negative");
    if (gamma < 0.0f) throw ConfigError("lif: gamma must be non-negative");
}

LayerState LayerState::zeros(int batch, int neurons, const LifParams& p) {
    LayerState s;
    s.v_f = Eigen::ArrayXXf::Constant(batch, neurons, p.v_rest);
    s.v_r = Eigen::ArrayXXf::Constant(batch, neurons, p.v_rest);
    s.a = Eigen::ArrayXXf::Zero(batch, neurons);
    s.s_f = Eigen::ArrayXXf::Zero(batch, neurons);
    s.s_r = Eigen::ArrayXXf::Zero(batch, neurons);
    s.ref_f = Eigen::ArrayXXi::Zero(batch, neurons);
    s.ref_r = Eigen::ArrayXXi::Zero(batch, neurons);
    return s;
}

void lif_integrate(LayerState& state, const Eigen::ArrayXXf& i_ff,
                   const Eigen::ArrayXXf& i_rec, const LifParams& p) {
    if (i_ff.rows() != state.v_f.rows() || i_ff.cols() != state.v_f.cols() ||
        i_rec.rows() != state.v_r.rows() || i_rec.cols() != state.v_r.cols())
        throw ShapeError("lif: current shape does not match state");
    if (!i_ff.isFinite().all() || !i_rec.isFinite().all())
        throw NumericsError("lif: non-finite input current");

    const float k = p.dt / p.capacitance;
    const Eigen::ArrayXXf gate_f = (state.ref_f == 0).cast<float>();
    const Eigen::ArrayXXf gate_r = (state.ref_r == 0).cast<float>();
    // Spike flags still hold the previous tick's values here; they gate the
    // leak term.
    const Eigen::ArrayXXf leak_gate = 1.0f - state.s_f - state.s_r;

    state.v_f += gate_f * k *
                 (-p.conductance * (state.v_f - p.v_rest) * leak_gate + i_ff -
                  p.gamma * state.a);
    state.v_r += gate_r * k * i_rec;
}

Eigen::ArrayXXf relaxed_spike(const Eigen::ArrayXXf& v, const Eigen::ArrayXXf& threshold,
                              float v_win) {
    return (v - threshold + v_win).max(0.0f).min(2.0f * v_win);
}

void fire_and_reset(LayerState& state, const LifParams& p, SpikeMode mode, float v_win) {
    const Eigen::ArrayXXf threshold = p.v_th + p.gamma * state.a;
    if (mode == SpikeMode::relaxed) {
        // Soft spikes, multiplicative reset, no refractory bookkeeping.
        state.s_f = relaxed_spike(state.v_f, threshold, v_win);
        state.s_r = relaxed_spike(state.v_r, threshold, v_win);
        state.v_f = state.v_f * (1.0f - state.s_f) + p.v_reset * state.s_f;
        state.v_r = state.v_r * (1.0f - state.s_r) + p.v_reset * state.s_r;
        return;
    }

    const int ticks = p.ref_ticks();
    state.s_f = (state.v_f >= threshold).cast<float>();
    state.s_r = (state.v_r >= threshold).cast<float>();
    state.v_f = state.v_f * (1.0f - state.s_f) + p.v_reset * state.s_f;
    state.v_r = state.v_r * (1.0f - state.s_r) + p.v_reset * state.s_r;
    state.ref_f = (state.s_f > 0.5f).select(ticks, (state.ref_f - 1).max(0));
    state.ref_r = (state.s_r > 0.5f).select(ticks, (state.ref_r - 1).max(0));
}

void adapt_threshold(LayerState& state, const LifParams& p) {
    state.a += p.dt * ((p.alpha - 1.0f) * state.a + p.beta * (state.s_f + state.s_r));
}

} // namespace msnn
