#pragma once

#include <Eigen/Dense>

namespace msnn {

// LIF and adaptive-threshold parameters. Units follow the usual convention
// (mV, ms); dt is one simulation tick.
struct LifParams {
    float capacitance = 1.0f;  // C
    float conductance = 0.2f;  // g
    float v_rest = 0.0f;
    float v_reset = 0.0f;
    float v_th = 0.5f;
    float tau_ref = 1.0f;      // refractory period, ms
    float dt = 1.0f;           // tick length, ms
    float alpha = 0.9f;        // threshold decay
    float beta = 0.1f;         // threshold gain per spike
    float gamma = 1.0f;        // threshold coupling

    int ref_ticks() const { return static_cast<int>(tau_ref / dt + 0.5f); }
    void validate() const;
};

// How the spike nonlinearity is evaluated. `binary` is the production step
// function; `relaxed` substitutes a unit-slope ramp across the surrogate
// window so gradients can be checked against finite differences.
enum class SpikeMode { binary, relaxed };

// State of one layer at one tick, batched over samples (rows) and neurons
// (columns). Feed-forward and recurrent channels keep separate potentials,
// spike flags, and refractory clocks; `a` is the shared adaptive threshold.
struct LayerState {
    Eigen::ArrayXXf v_f, v_r;    // membrane potentials
    Eigen::ArrayXXf a;           // adaptive thresholds
    Eigen::ArrayXXf s_f, s_r;    // spike flags of the current tick
    Eigen::ArrayXXi ref_f, ref_r; // remaining refractory ticks

    static LayerState zeros(int batch, int neurons, const LifParams& p);

    int batch() const { return static_cast<int>(v_f.rows()); }
    int neurons() const { return static_cast<int>(v_f.cols()); }

    // Combined spike output S = min(S_f + S_r, 1).
    Eigen::ArrayXXf combined_spikes() const { return (s_f + s_r).min(1.0f); }
};

// One integration step. The leak acts on the feed-forward channel only and is
// gated by the previous tick's spike flags; the recurrent channel integrates
// its input current with no leak. Neurons inside their refractory period hold
// the reset potential and integrate nothing. Throws NumericsError on
// non-finite currents.
void lif_integrate(LayerState& state, const Eigen::ArrayXXf& i_ff,
                   const Eigen::ArrayXXf& i_rec, const LifParams& p);

// Threshold crossing against V_th + gamma * a, per channel: spike, reset to
// V_reset, arm the refractory clock; otherwise decrement the clock. In
// relaxed mode the flag is the ramp value and clocks are left untouched.
void fire_and_reset(LayerState& state, const LifParams& p,
                    SpikeMode mode = SpikeMode::binary, float v_win = 0.5f);

// Threshold adaptation a += dt * ((alpha - 1) * a + beta * (S_f + S_r)).
void adapt_threshold(LayerState& state, const LifParams& p);

// Ramp spike used by SpikeMode::relaxed: 0 below the window, slope 1 across
// it, saturating at 2 * v_win. Matches the window gradient of the surrogate.
Eigen::ArrayXXf relaxed_spike(const Eigen::ArrayXXf& v, const Eigen::ArrayXXf& threshold,
                              float v_win);

} // namespace msnn
