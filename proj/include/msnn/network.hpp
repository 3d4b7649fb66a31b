#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "msnn/dataset.hpp"
#include "msnn/encoding.hpp"
#include "msnn/lif.hpp"
#include "msnn/motif.hpp"
#include "msnn/rng.hpp"

namespace msnn {

// Four-layer topology: per-modality spiking convolution feeding a shared
// mask-gated recurrent integration layer, read out by a non-spiking leaky
// accumulator.
struct NetworkConfig {
    int hidden_size = 200;
    int conv_kernel = 5;
    int conv_channels = 8;
    int conv_stride = 2;
    int n_classes = 10;
    Modality modality = Modality::visual;
    int T = 28;
    // Per-branch input geometry; auditory inputs are a 1 x F row per tick.
    int visual_rows = 28, visual_cols = 28;
    int audio_rows = 1, audio_cols = 28;

    void validate() const;
};

// Static geometry of one convolution branch. A kernel dimension larger than
// the input collapses to the input size, so a 1 x F row gets a 1 x k kernel.
struct BranchGeometry {
    int in_h = 0, in_w = 0;
    int kh = 0, kw = 0;
    int stride = 1;
    int out_h = 0, out_w = 0;
    int positions = 0; // out_h * out_w
    int window = 0;    // kh * kw
    int channels = 0;
    int conv_dim = 0;  // positions * channels
    std::vector<int> gather; // positions * window flattened input indices

    static BranchGeometry make(int in_h, int in_w, int kernel, int stride, int channels);
    int input_dim() const { return in_h * in_w; }
};

struct Weights {
    Eigen::MatrixXf w_conv_v, w_conv_a; // window x channels
    Eigen::MatrixXf w_proj_v, w_proj_a; // hidden x conv_dim
    Eigen::MatrixXf w_rec;              // hidden x hidden, w_rec(i,j) = synapse i->j,
                                        // zero diagonal; same orientation as MotifMask
    Eigen::MatrixXf w_out;              // classes x hidden

    long param_count(bool count_recurrent, const MotifMask* mask = nullptr) const;
};

// Per-tick records needed to run the adjoint pass.
struct BranchTick {
    Eigen::MatrixXf x;       // batch x input_dim input spikes
    Eigen::ArrayXXf v_pre;   // (batch*positions) x channels, pre-reset potential
    Eigen::ArrayXXf s;       // spike output
    Eigen::ArrayXXf gate;    // 1 where the neuron integrated this tick
};

struct HiddenTick {
    Eigen::ArrayXXf v_f_pre, v_r_pre;
    Eigen::ArrayXXf eff_th;          // V_th + gamma * a at fire time
    Eigen::ArrayXXf gate_f, gate_r;  // integration gates
    Eigen::ArrayXXf s_f, s_r;
};

struct ForwardTrace {
    int T = 0;
    int batch = 0;
    SpikeMode mode = SpikeMode::binary;
    std::vector<BranchTick> visual, audio; // empty when the branch saw no input
    std::vector<HiddenTick> hidden;
    Eigen::MatrixXf logits;

    void check_length(int expected_T) const;
};

struct ForwardResult {
    Eigen::MatrixXf logits; // batch x classes
    std::optional<ForwardTrace> trace;
};

// Per-tick batched inputs; an empty vector means the modality is absent and
// is treated exactly as all-zero spikes.
struct BatchInput {
    std::vector<Eigen::MatrixXf> x_v;
    std::vector<Eigen::MatrixXf> x_a;

    int ticks() const { return static_cast<int>(std::max(x_v.size(), x_a.size())); }
    int batch() const;
};

// Stacks per-sample spike trains (T x C each) into per-tick batch matrices.
std::vector<Eigen::MatrixXf> stack_ticks(const std::vector<SpikeTrain>& trains);

class Network {
public:
    Network(const NetworkConfig& cfg, const LifParams& lif);

    const NetworkConfig& config() const { return cfg_; }
    const LifParams& lif() const { return lif_; }
    const BranchGeometry& visual_geometry() const { return visual_; }
    const BranchGeometry& audio_geometry() const { return audio_; }
    bool has_visual() const { return cfg_.modality != Modality::auditory; }
    bool has_audio() const { return cfg_.modality != Modality::visual; }
    float readout_decay() const;

    Weights init_weights(Rng& rng) const;

    // Runs the full window. The mask gates the recurrent matrix elementwise;
    // a zero mask reproduces the pure feed-forward network.
    ForwardResult forward(const BatchInput& input, const Weights& w, const MotifMask& mask,
                          bool record_trace, SpikeMode mode = SpikeMode::binary,
                          float v_win = 0.5f) const;

    // im2col over one tick of input spikes: (batch*positions) x window.
    Eigen::MatrixXf gather_patches(const BranchGeometry& g, const Eigen::MatrixXf& x) const;

    // Folds (batch*positions) x channels conv spikes into batch x conv_dim
    // rows (column index = position * channels + channel).
    Eigen::MatrixXf fold_conv(const BranchGeometry& g, const Eigen::ArrayXXf& s, int batch) const;
    Eigen::ArrayXXf unfold_conv(const BranchGeometry& g, const Eigen::MatrixXf& m, int batch) const;

private:
    NetworkConfig cfg_;
    LifParams lif_;
    BranchGeometry visual_, audio_;
};

// Argmax with ties broken toward the lowest index.
int predict(const Eigen::VectorXf& logits);
std::vector<int> predict_batch(const Eigen::MatrixXf& logits);

} // namespace msnn
