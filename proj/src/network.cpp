#include "msnn/network.hpp"

#include <cmath>

#include "msnn/errors.hpp"

namespace msnn {

void NetworkConfig::validate() const {
    if (hidden_size < 3) throw ConfigError("network: hidden_size must be >= 3");
    if (n_classes < 2) throw ConfigError("network: need at least two classes");
    if (T < 1) throw ConfigError("network: T must be >= 1");
    if (conv_kernel < 1 || conv_channels < 1 || conv_stride < 1)
        throw ConfigError("network: conv geometry must be positive");
}

BranchGeometry BranchGeometry::make(int in_h, int in_w, int kernel, int stride, int channels) {
    BranchGeometry g;
    g.in_h = in_h;
    g.in_w = in_w;
    g.kh = std::min(kernel, in_h);
    g.kw = std::min(kernel, in_w);
    g.stride = stride;
    if (in_h < 1 || in_w < 1) throw ConfigError("conv input must be non-empty");
    g.out_h = (in_h - g.kh) / stride + 1;
    g.out_w = (in_w - g.kw) / stride + 1;
    g.positions = g.out_h * g.out_w;
    g.window = g.kh * g.kw;
    g.channels = channels;
    g.conv_dim = g.positions * channels;
    g.gather.resize(std::size_t(g.positions) * g.window);
    int p = 0;
    for (int oy = 0; oy < g.out_h; ++oy)
        for (int ox = 0; ox < g.out_w; ++ox, ++p) {
            int k = 0;
            for (int dy = 0; dy < g.kh; ++dy)
                for (int dx = 0; dx < g.kw; ++dx, ++k)
                    g.gather[std::size_t(p) * g.window + k] =
                        (oy * stride + dy) * in_w + (ox * stride + dx);
        }
    return g;
}

long Weights::param_count(bool count_recurrent, const MotifMask* mask) const {
    long n = w_conv_v.size() + w_conv_a.size() + w_proj_v.size() + w_proj_a.size() +
             w_out.size();
    if (count_recurrent) {
        if (mask != nullptr)
            n += mask->edge_count();
        else
            n += long(w_rec.rows()) * (w_rec.rows() - 1);
    }
    return n;
}

void ForwardTrace::check_length(int expected_T) const {
    if (T != expected_T || int(hidden.size()) != expected_T)
        throw TraceError("trace length does not match the simulation window");
}

int BatchInput::batch() const {
    if (!x_v.empty()) return static_cast<int>(x_v[0].rows());
    if (!x_a.empty()) return static_cast<int>(x_a[0].rows());
    return 0;
}

std::vector<Eigen::MatrixXf> stack_ticks(const std::vector<SpikeTrain>& trains) {
    std::vector<Eigen::MatrixXf> out;
    if (trains.empty()) return out;
    const int T = trains[0].T();
    const int C = trains[0].channels();
    const int B = static_cast<int>(trains.size());
    out.resize(T);
    for (int t = 0; t < T; ++t) out[t].resize(B, C);
    for (int b = 0; b < B; ++b) {
        if (trains[b].T() != T || trains[b].channels() != C)
            throw ShapeError("spike trains in one batch must share shape");
        for (int t = 0; t < T; ++t) out[t].row(b) = trains[b].data.row(t);
    }
    return out;
}

Network::Network(const NetworkConfig& cfg, const LifParams& lif) : cfg_(cfg), lif_(lif) {
    cfg_.validate();
    lif_.validate();
    visual_ = BranchGeometry::make(cfg.visual_rows, cfg.visual_cols, cfg.conv_kernel,
                                   cfg.conv_stride, cfg.conv_channels);
    audio_ = BranchGeometry::make(cfg.audio_rows, cfg.audio_cols, cfg.conv_kernel,
                                  cfg.conv_stride, cfg.conv_channels);
}

float Network::readout_decay() const {
    return 1.0f - lif_.conductance * lif_.dt / lif_.capacitance;
}

namespace {

Eigen::MatrixXf uniform_matrix(int rows, int cols, float scale, Rng& rng) {
    Eigen::MatrixXf m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            m(r, c) = static_cast<float>(rng.uniform(-scale, scale));
    return m;
}

} // namespace

Weights Network::init_weights(Rng& rng) const {
    // Uniform fan-in scaling, boosted so early membrane potentials reach the
    // surrogate window instead of sitting silent at rest.
    constexpr float kConvGain = 3.0f;
    constexpr float kProjGain = 3.0f;
    constexpr float kRecGain = 1.0f;
    constexpr float kOutGain = 1.0f;

    Weights w;
    if (has_visual()) {
        w.w_conv_v = uniform_matrix(visual_.window, visual_.channels,
                                    kConvGain / std::sqrt(float(visual_.window)), rng);
        w.w_proj_v = uniform_matrix(cfg_.hidden_size, visual_.conv_dim,
                                    kProjGain / std::sqrt(float(visual_.conv_dim)), rng);
    }
    if (has_audio()) {
        w.w_conv_a = uniform_matrix(audio_.window, audio_.channels,
                                    kConvGain / std::sqrt(float(audio_.window)), rng);
        w.w_proj_a = uniform_matrix(cfg_.hidden_size, audio_.conv_dim,
                                    kProjGain / std::sqrt(float(audio_.conv_dim)), rng);
    }
    w.w_rec = uniform_matrix(cfg_.hidden_size, cfg_.hidden_size,
                             kRecGain / std::sqrt(float(cfg_.hidden_size)), rng);
    w.w_rec.diagonal().setZero();
    w.w_out = uniform_matrix(cfg_.n_classes, cfg_.hidden_size,
                             kOutGain / std::sqrt(float(cfg_.hidden_size)), rng);
    return w;
}

Eigen::MatrixXf Network::gather_patches(const BranchGeometry& g, const Eigen::MatrixXf& x) const {
    const int B = static_cast<int>(x.rows());
    if (x.cols() != g.input_dim()) throw ShapeError("input spikes do not match branch geometry");
    Eigen::MatrixXf patches(std::size_t(B) * g.positions, g.window);
    for (int b = 0; b < B; ++b)
        for (int p = 0; p < g.positions; ++p) {
            const int row = b * g.positions + p;
            const int* idx = &g.gather[std::size_t(p) * g.window];
            for (int k = 0; k < g.window; ++k) patches(row, k) = x(b, idx[k]);
        }
    return patches;
}

Eigen::MatrixXf Network::fold_conv(const BranchGeometry& g, const Eigen::ArrayXXf& s,
                                   int batch) const {
    Eigen::MatrixXf out(batch, g.conv_dim);
    for (int b = 0; b < batch; ++b)
        for (int p = 0; p < g.positions; ++p)
            for (int c = 0; c < g.channels; ++c)
                out(b, p * g.channels + c) = s(b * g.positions + p, c);
    return out;
}

Eigen::ArrayXXf Network::unfold_conv(const BranchGeometry& g, const Eigen::MatrixXf& m,
                                     int batch) const {
    Eigen::ArrayXXf out(std::size_t(batch) * g.positions, g.channels);
    for (int b = 0; b < batch; ++b)
        for (int p = 0; p < g.positions; ++p)
            for (int c = 0; c < g.channels; ++c)
                out(b * g.positions + p, c) = m(b, p * g.channels + c);
    return out;
}

ForwardResult Network::forward(const BatchInput& input, const Weights& w, const MotifMask& mask,
                               bool record_trace, SpikeMode mode, float v_win) const {
    const int T = cfg_.T;
    const int B = input.batch();
    if (B == 0) throw ShapeError("empty batch");
    const bool use_visual = has_visual() && !input.x_v.empty();
    const bool use_audio = has_audio() && !input.x_a.empty();
    if (!use_visual && !use_audio) throw ShapeError("at least one modality must be present");
    if (use_visual && int(input.x_v.size()) != T)
        throw ShapeError("visual input must provide one row per tick");
    if (use_audio && int(input.x_a.size()) != T)
        throw ShapeError("auditory input must provide one row per tick");
    if (mask.n() != cfg_.hidden_size) throw ShapeError("mask does not match hidden size");

    const Eigen::MatrixXf rec_masked = w.w_rec.cwiseProduct(mask.adj);

    LayerState conv_v = LayerState::zeros(use_visual ? B * visual_.positions : 0,
                                          visual_.channels, lif_);
    LayerState conv_a = LayerState::zeros(use_audio ? B * audio_.positions : 0,
                                          audio_.channels, lif_);
    LayerState hidden = LayerState::zeros(B, cfg_.hidden_size, lif_);
    Eigen::MatrixXf v_out = Eigen::MatrixXf::Zero(B, cfg_.n_classes);
    Eigen::MatrixXf s_comb_prev = Eigen::MatrixXf::Zero(B, cfg_.hidden_size);
    const float d_out = readout_decay();

    ForwardResult result;
    ForwardTrace trace;
    if (record_trace) {
        trace.T = T;
        trace.batch = B;
        trace.mode = mode;
        trace.hidden.resize(T);
        if (use_visual) trace.visual.resize(T);
        if (use_audio) trace.audio.resize(T);
    }

    const Eigen::ArrayXXf zero_hidden = Eigen::ArrayXXf::Zero(B, cfg_.hidden_size);

    auto run_branch = [&](const BranchGeometry& g, LayerState& state,
                          const Eigen::MatrixXf& x, const Eigen::MatrixXf& w_conv,
                          BranchTick* tick) -> Eigen::MatrixXf {
        const Eigen::MatrixXf patches = gather_patches(g, x);
        const Eigen::ArrayXXf i_conv = (patches * w_conv).array();
        const Eigen::ArrayXXf zero = Eigen::ArrayXXf::Zero(i_conv.rows(), i_conv.cols());
        if (tick) tick->gate = (state.ref_f == 0).cast<float>();
        lif_integrate(state, i_conv, zero, lif_);
        if (tick) tick->v_pre = state.v_f;
        fire_and_reset(state, lif_, mode, v_win);
        if (tick) {
            tick->x = x;
            tick->s = state.s_f;
        }
        return fold_conv(g, state.s_f, static_cast<int>(x.rows()));
    };

    for (int t = 0; t < T; ++t) {
        Eigen::MatrixXf i_ff = Eigen::MatrixXf::Zero(B, cfg_.hidden_size);
        if (use_visual) {
            BranchTick* tick = record_trace ? &trace.visual[t] : nullptr;
            const Eigen::MatrixXf s_v = run_branch(visual_, conv_v, input.x_v[t], w.w_conv_v, tick);
            i_ff.noalias() += s_v * w.w_proj_v.transpose();
        }
        if (use_audio) {
            BranchTick* tick = record_trace ? &trace.audio[t] : nullptr;
            const Eigen::MatrixXf s_a = run_branch(audio_, conv_a, input.x_a[t], w.w_conv_a, tick);
            i_ff.noalias() += s_a * w.w_proj_a.transpose();
        }
        const Eigen::MatrixXf i_rec = s_comb_prev * rec_masked;

        HiddenTick* htick = record_trace ? &trace.hidden[t] : nullptr;
        if (htick) {
            htick->gate_f = (hidden.ref_f == 0).cast<float>();
            htick->gate_r = (hidden.ref_r == 0).cast<float>();
            htick->eff_th = lif_.v_th + lif_.gamma * hidden.a;
        }
        lif_integrate(hidden, i_ff.array(), i_rec.array(), lif_);
        if (htick) {
            htick->v_f_pre = hidden.v_f;
            htick->v_r_pre = hidden.v_r;
        }
        fire_and_reset(hidden, lif_, mode, v_win);
        adapt_threshold(hidden, lif_);
        if (htick) {
            htick->s_f = hidden.s_f;
            htick->s_r = hidden.s_r;
        }

        const Eigen::MatrixXf s_comb = hidden.combined_spikes().matrix();
        v_out = d_out * v_out + s_comb * w.w_out.transpose();
        s_comb_prev = s_comb;
    }

    result.logits = v_out / float(T);
    if (record_trace) {
        trace.logits = result.logits;
        result.trace = std::move(trace);
    }
    return result;
}

int predict(const Eigen::VectorXf& logits) {
    if (!logits.allFinite()) throw NumericsError("predict: non-finite logits");
    int best = 0;
    for (int i = 1; i < logits.size(); ++i)
        if (logits(i) > logits(best)) best = i;
    return best;
}

std::vector<int> predict_batch(const Eigen::MatrixXf& logits) {
    std::vector<int> out(logits.rows());
    for (int b = 0; b < logits.rows(); ++b) {
        const Eigen::VectorXf row = logits.row(b);
        out[b] = predict(row);
    }
    return out;
}

} // namespace msnn
