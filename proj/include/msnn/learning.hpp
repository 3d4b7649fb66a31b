#pragma once

#include <Eigen/Dense>
#include <vector>

#include "msnn/network.hpp"

namespace msnn {

struct SurrogateConfig {
    float v_win = 0.5f; // gradient window half-width around the threshold
    float lr = 1e-4f;   // shared learning rate for every weight family

    void validate() const;
};

// Fixed random projection for the reward rule. Drawn once, never updated;
// it maps the class embedding onto a hidden target rate pattern. Only the
// fully-connected integration layer carries targets: a shared conv kernel
// cannot chase independent per-position targets, their sum cancels toward
// silence.
struct RewardConfig {
    Eigen::MatrixXf b_rand_hidden; // hidden x classes
    Eigen::MatrixXf r_embed;       // classes x classes, one row per class
    int sign_orientation = 1;      // +1: updates descend toward the targets
};

RewardConfig make_reward_config(const Network& net, float target_rate, Rng& rng);

// Gradient accumulators shaped exactly like Weights.
struct GradientSet {
    Eigen::MatrixXf w_conv_v, w_conv_a, w_proj_v, w_proj_a, w_rec, w_out;

    static GradientSet zeros_like(const Weights& w);
};

// Window-bounded constant derivative of the spike nonlinearity: 1 when the
// potential sits within v_win of the effective threshold V_th + gamma * a,
// else 0.
float surrogate_grad(float v, const LifParams& p, float a, const SurrogateConfig& cfg);

// Reverse-mode pass over a recorded trace: cross-entropy on the softmax of
// the time-averaged readout, spike nonlinearities differentiated through the
// surrogate window, recurrent contributions gated by the mask. The leak-gate
// occupancy, refractory clocks, and threshold-adaptation chain are treated as
// constants of the forward pass.
GradientSet bptt_backward(const Network& net, const ForwardTrace& trace,
                          const std::vector<int>& targets, const Weights& w,
                          const MotifMask& mask, const SurrogateConfig& cfg);

// Layer-local rule: the output layer receives the softmax error; the
// integration layer receives (rate - B_rand * R_embed[target]) with the
// projected target clipped into the feasible rate range [0, 1], applied
// through the outer product with its time-averaged presynaptic rates. The
// recurrent update adds a one-hop transport of the hidden term through the
// masked recurrent weights; no gradient crosses layers, and conv kernels are
// left untouched.
GradientSet reward_backward(const Network& net, const ForwardTrace& trace,
                            const std::vector<int>& targets, const Weights& w,
                            const MotifMask& mask, const RewardConfig& rcfg);

// W <- W - lr * grad for every tensor; restores the zero recurrent diagonal
// and rejects non-finite updates.
void apply_updates(Weights& w, const GradientSet& grads, float lr);

Eigen::MatrixXf softmax_rows(const Eigen::MatrixXf& logits);
float cross_entropy(const Eigen::MatrixXf& logits, const std::vector<int>& targets);

} // namespace msnn
