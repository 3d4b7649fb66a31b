#include "msnn/learning.hpp"

#include <cmath>

#include "msnn/errors.hpp"

namespace msnn {

namespace {

// 1 inside the open window |v - threshold| < v_win, else 0.
Eigen::ArrayXXf window(const Eigen::ArrayXXf& v, const Eigen::ArrayXXf& threshold, float v_win) {
    return ((v - threshold).abs() < v_win).cast<float>();
}

Eigen::MatrixXf onehot_rows(const std::vector<int>& targets, int classes) {
    Eigen::MatrixXf m = Eigen::MatrixXf::Zero(targets.size(), classes);
    for (std::size_t b = 0; b < targets.size(); ++b) {
        if (targets[b] < 0 || targets[b] >= classes)
            throw RangeError("target class out of range");
        m(static_cast<int>(b), targets[b]) = 1.0f;
    }
    return m;
}

Eigen::MatrixXf uniform_matrix(int rows, int cols, float scale, Rng& rng) {
    Eigen::MatrixXf m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            m(r, c) = static_cast<float>(rng.uniform(-scale, scale));
    return m;
}

} // namespace

void SurrogateConfig::validate() const {
    if (v_win <= 0.0f) throw ConfigError("surrogate: v_win must be positive");
    if (lr <= 0.0f) throw ConfigError("surrogate: lr must be positive");
}

float surrogate_grad(float v, const LifParams& p, float a, const SurrogateConfig& cfg) {
    if (!std::isfinite(v)) throw NumericsError("surrogate: non-finite potential");
    const float threshold = p.v_th + p.gamma * a;
    return std::abs(v - threshold) < cfg.v_win ? 1.0f : 0.0f;
}

RewardConfig make_reward_config(const Network& net, float target_rate, Rng& rng) {
    const int classes = net.config().n_classes;
    const float scale = 1.0f / std::sqrt(float(classes));
    RewardConfig rc;
    rc.b_rand_hidden = uniform_matrix(net.config().hidden_size, classes, scale, rng);
    rc.r_embed = target_rate * Eigen::MatrixXf::Identity(classes, classes);
    return rc;
}

GradientSet GradientSet::zeros_like(const Weights& w) {
    GradientSet g;
    g.w_conv_v = Eigen::MatrixXf::Zero(w.w_conv_v.rows(), w.w_conv_v.cols());
    g.w_conv_a = Eigen::MatrixXf::Zero(w.w_conv_a.rows(), w.w_conv_a.cols());
    g.w_proj_v = Eigen::MatrixXf::Zero(w.w_proj_v.rows(), w.w_proj_v.cols());
    g.w_proj_a = Eigen::MatrixXf::Zero(w.w_proj_a.rows(), w.w_proj_a.cols());
    g.w_rec = Eigen::MatrixXf::Zero(w.w_rec.rows(), w.w_rec.cols());
    g.w_out = Eigen::MatrixXf::Zero(w.w_out.rows(), w.w_out.cols());
    return g;
}

Eigen::MatrixXf softmax_rows(const Eigen::MatrixXf& logits) {
    Eigen::MatrixXf out(logits.rows(), logits.cols());
    for (int b = 0; b < logits.rows(); ++b) {
        const Eigen::ArrayXf shifted = logits.row(b).array() - logits.row(b).maxCoeff();
        const Eigen::ArrayXf e = shifted.exp();
        out.row(b) = (e / e.sum()).matrix().transpose();
    }
    return out;
}

float cross_entropy(const Eigen::MatrixXf& logits, const std::vector<int>& targets) {
    if (logits.rows() != static_cast<int>(targets.size()))
        throw ShapeError("cross_entropy: batch size mismatch");
    double loss = 0.0;
    for (int b = 0; b < logits.rows(); ++b) {
        const Eigen::ArrayXf shifted = logits.row(b).array() - logits.row(b).maxCoeff();
        const double lse = std::log(shifted.exp().sum());
        loss += lse - shifted(targets[b]);
    }
    return static_cast<float>(loss / double(logits.rows()));
}

GradientSet bptt_backward(const Network& net, const ForwardTrace& trace,
                          const std::vector<int>& targets, const Weights& w,
                          const MotifMask& mask, const SurrogateConfig& cfg) {
    cfg.validate();
    const NetworkConfig& ncfg = net.config();
    trace.check_length(ncfg.T);
    const LifParams& p = net.lif();
    const int T = trace.T;
    const int B = trace.batch;
    if (B != static_cast<int>(targets.size()))
        throw TraceError("bptt: trace batch does not match target count");
    const float k = p.dt / p.capacitance;
    const float d_out = net.readout_decay();
    const bool use_visual = !trace.visual.empty();
    const bool use_audio = !trace.audio.empty();

    const Eigen::MatrixXf rec_masked = w.w_rec.cwiseProduct(mask.adj);
    GradientSet g = GradientSet::zeros_like(w);

    // dL/dlogits for the mean cross-entropy, then into the readout
    // accumulator at the final tick.
    const Eigen::MatrixXf sm = softmax_rows(trace.logits);
    Eigen::MatrixXf delta_vout =
        (sm - onehot_rows(targets, ncfg.n_classes)) / (float(B) * float(T));

    Eigen::ArrayXXf mu_f = Eigen::ArrayXXf::Zero(B, ncfg.hidden_size);
    Eigen::ArrayXXf mu_r = Eigen::ArrayXXf::Zero(B, ncfg.hidden_size);
    Eigen::MatrixXf carry_ds = Eigen::MatrixXf::Zero(B, ncfg.hidden_size);
    Eigen::ArrayXXf mu_cv, mu_ca;
    if (use_visual)
        mu_cv = Eigen::ArrayXXf::Zero(std::size_t(B) * net.visual_geometry().positions,
                                      net.visual_geometry().channels);
    if (use_audio)
        mu_ca = Eigen::ArrayXXf::Zero(std::size_t(B) * net.audio_geometry().positions,
                                      net.audio_geometry().channels);

    auto branch_backward = [&](const BranchGeometry& geom, const std::vector<BranchTick>& ticks,
                               const Eigen::MatrixXf& w_proj, Eigen::MatrixXf& g_proj,
                               Eigen::MatrixXf& g_conv, Eigen::ArrayXXf& mu_c,
                               const Eigen::MatrixXf& d_iff, int t) {
        const BranchTick& tick = ticks[t];
        const Eigen::MatrixXf s_mat = net.fold_conv(geom, tick.s, B);
        g_proj.noalias() += d_iff.transpose() * s_mat;
        const Eigen::MatrixXf ds_mat = d_iff * w_proj; // B x conv_dim
        const Eigen::ArrayXXf ds_conv = net.unfold_conv(geom, ds_mat, B);

        const Eigen::ArrayXXf th =
            Eigen::ArrayXXf::Constant(tick.v_pre.rows(), tick.v_pre.cols(), p.v_th);
        const Eigen::ArrayXXf sg = window(tick.v_pre, th, cfg.v_win);
        const Eigen::ArrayXXf lambda =
            ds_conv * sg + mu_c * ((1.0f - tick.s) + (p.v_reset - tick.v_pre) * sg);
        const Eigen::ArrayXXf d_iconv = lambda * tick.gate * k;

        const Eigen::MatrixXf patches = net.gather_patches(geom, tick.x);
        g_conv.noalias() += patches.transpose() * d_iconv.matrix();

        // Carry to t-1 through the potential chain (leak gate uses the
        // previous tick's spikes, held neurons carry identity).
        Eigen::ArrayXXf leak_prev;
        if (t > 0)
            leak_prev = 1.0f - ticks[t - 1].s;
        else
            leak_prev = Eigen::ArrayXXf::Ones(tick.s.rows(), tick.s.cols());
        mu_c = lambda * (1.0f - tick.gate * (k * p.conductance) * leak_prev);
    };

    for (int t = T - 1; t >= 0; --t) {
        const HiddenTick& h = trace.hidden[t];
        const Eigen::ArrayXXf s_comb = (h.s_f + h.s_r).min(1.0f);

        g.w_out.noalias() += delta_vout.transpose() * s_comb.matrix();
        Eigen::MatrixXf ds = delta_vout * w.w_out + carry_ds;
        delta_vout *= d_out;

        // The clip S = min(S_f + S_r, 1) passes gradient only while unsaturated.
        const Eigen::ArrayXXf clip_gate = ((h.s_f + h.s_r) <= 1.0f + 1e-6f).cast<float>();
        const Eigen::ArrayXXf ds_gated = ds.array() * clip_gate;

        const Eigen::ArrayXXf sg_f = window(h.v_f_pre, h.eff_th, cfg.v_win);
        const Eigen::ArrayXXf sg_r = window(h.v_r_pre, h.eff_th, cfg.v_win);
        const Eigen::ArrayXXf lambda_f =
            ds_gated * sg_f + mu_f * ((1.0f - h.s_f) + (p.v_reset - h.v_f_pre) * sg_f);
        const Eigen::ArrayXXf lambda_r =
            ds_gated * sg_r + mu_r * ((1.0f - h.s_r) + (p.v_reset - h.v_r_pre) * sg_r);

        const Eigen::MatrixXf d_iff = (lambda_f * h.gate_f * k).matrix();
        const Eigen::MatrixXf d_irec = (lambda_r * h.gate_r * k).matrix();

        if (t > 0) {
            const HiddenTick& hp = trace.hidden[t - 1];
            const Eigen::MatrixXf s_prev = ((hp.s_f + hp.s_r).min(1.0f)).matrix();
            g.w_rec.noalias() += s_prev.transpose() * d_irec; // (pre, post)
        }
        carry_ds = d_irec * rec_masked.transpose();

        if (use_visual)
            branch_backward(net.visual_geometry(), trace.visual, w.w_proj_v, g.w_proj_v,
                            g.w_conv_v, mu_cv, d_iff, t);
        if (use_audio)
            branch_backward(net.audio_geometry(), trace.audio, w.w_proj_a, g.w_proj_a,
                            g.w_conv_a, mu_ca, d_iff, t);

        Eigen::ArrayXXf leak_prev;
        if (t > 0) {
            const HiddenTick& hp = trace.hidden[t - 1];
            leak_prev = 1.0f - hp.s_f - hp.s_r;
        } else {
            leak_prev = Eigen::ArrayXXf::Ones(B, ncfg.hidden_size);
        }
        mu_f = lambda_f * (1.0f - h.gate_f * (k * p.conductance) * leak_prev);
        mu_r = lambda_r; // recurrent channel integrates without leak
    }

    g.w_rec = g.w_rec.cwiseProduct(mask.adj);
    g.w_rec.diagonal().setZero();
    return g;
}

GradientSet reward_backward(const Network& net, const ForwardTrace& trace,
                            const std::vector<int>& targets, const Weights& w,
                            const MotifMask& mask, const RewardConfig& rcfg) {
    const NetworkConfig& ncfg = net.config();
    trace.check_length(ncfg.T);
    const int T = trace.T;
    const int B = trace.batch;
    if (B != static_cast<int>(targets.size()))
        throw TraceError("reward: trace batch does not match target count");
    for (int y : targets)
        if (y < 0 || y >= rcfg.r_embed.rows())
            throw ConfigError("reward: no expectation row for class " + std::to_string(y));
    const float sign = rcfg.sign_orientation >= 0 ? 1.0f : -1.0f;
    const bool use_visual = !trace.visual.empty();
    const bool use_audio = !trace.audio.empty();

    GradientSet g = GradientSet::zeros_like(w);

    // Class embeddings of the batch targets.
    Eigen::MatrixXf r_sel(B, rcfg.r_embed.cols());
    for (int b = 0; b < B; ++b) r_sel.row(b) = rcfg.r_embed.row(targets[b]);

    // Time-averaged rates.
    Eigen::MatrixXf h_rate = Eigen::MatrixXf::Zero(B, ncfg.hidden_size);
    for (int t = 0; t < T; ++t)
        h_rate += ((trace.hidden[t].s_f + trace.hidden[t].s_r).min(1.0f)).matrix();
    h_rate /= float(T);

    // Output layer: softmax error against the one-hot target, through the
    // hidden rates.
    const Eigen::MatrixXf sm = softmax_rows(trace.logits);
    Eigen::MatrixXf e = sm;
    for (int b = 0; b < B; ++b) e(b, targets[b]) -= 1.0f;
    g.w_out.noalias() = e.transpose() * h_rate / float(B);

    // Hidden layer: rate minus projected target, plus a one-hop transport
    // through the masked recurrent weights for the recurrent update. The
    // target pattern is clipped into [0, 1]: rates cannot chase negative
    // expectations and unreachable targets would drift the weights forever.
    const Eigen::MatrixXf rec_masked = w.w_rec.cwiseProduct(mask.adj);
    const Eigen::MatrixXf target =
        (r_sel * rcfg.b_rand_hidden.transpose()).cwiseMax(0.0f).cwiseMin(1.0f);
    const Eigen::MatrixXf d_hidden = sign * (h_rate - target);
    const Eigen::MatrixXf d_rec = d_hidden + d_hidden * rec_masked.transpose();
    g.w_rec.noalias() = (h_rate.transpose() * d_rec / float(B)).cwiseProduct(mask.adj);
    g.w_rec.diagonal().setZero();

    // Conv kernels stay fixed under this rule; only the fully-connected
    // projections receive the hidden discrepancy.
    auto branch_reward = [&](const BranchGeometry& geom, const std::vector<BranchTick>& ticks,
                             Eigen::MatrixXf& g_proj) {
        Eigen::MatrixXf conv_rate = Eigen::MatrixXf::Zero(B, geom.conv_dim);
        for (int t = 0; t < T; ++t) conv_rate += net.fold_conv(geom, ticks[t].s, B);
        conv_rate /= float(T);
        g_proj.noalias() = d_hidden.transpose() * conv_rate / float(B);
    };

    if (use_visual) branch_reward(net.visual_geometry(), trace.visual, g.w_proj_v);
    if (use_audio) branch_reward(net.audio_geometry(), trace.audio, g.w_proj_a);

    return g;
}

void apply_updates(Weights& w, const GradientSet& grads, float lr) {
    auto step = [lr](Eigen::MatrixXf& weight, const Eigen::MatrixXf& grad, const char* name) {
        if (weight.size() == 0 && grad.size() == 0) return;
        if (weight.rows() != grad.rows() || weight.cols() != grad.cols())
            throw ShapeError(std::string("apply_updates: shape mismatch for ") + name);
        if (!grad.allFinite())
            throw NumericsError(std::string("apply_updates: non-finite update for ") + name);
        weight.noalias() -= lr * grad;
    };
    step(w.w_conv_v, grads.w_conv_v, "w_conv_v");
    step(w.w_conv_a, grads.w_conv_a, "w_conv_a");
    step(w.w_proj_v, grads.w_proj_v, "w_proj_v");
    step(w.w_proj_a, grads.w_proj_a, "w_proj_a");
    step(w.w_rec, grads.w_rec, "w_rec");
    step(w.w_out, grads.w_out, "w_out");
    w.w_rec.diagonal().setZero();
}

} // namespace msnn
