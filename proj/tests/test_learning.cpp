#include <doctest.h>

#include <cmath>

#include "msnn/errors.hpp"
#include "msnn/learning.hpp"
#include "toy_net.hpp"

using namespace msnn;
using namespace msnn_test;

namespace {

float relaxed_loss(const Network& net, const BatchInput& input, const Weights& w,
                   const MotifMask& mask, const std::vector<int>& targets, float v_win) {
    const ForwardResult fwd = net.forward(input, w, mask, false, SpikeMode::relaxed, v_win);
    return cross_entropy(fwd.logits, targets);
}

struct FdCheck {
    int checked = 0;
    float worst = 0.0f;
};

// Central differences of the relaxed loss against the adjoint, entry by
// entry, with per-tensor access.
FdCheck finite_difference_check(const Network& net, const BatchInput& input, Weights w,
                                const MotifMask& mask, const std::vector<int>& targets,
                                float v_win, float step, float tol_abs, float tol_rel) {
    const ForwardResult fwd = net.forward(input, w, mask, true, SpikeMode::relaxed, v_win);
    const SurrogateConfig scfg{v_win, 1e-4f};
    const GradientSet g = bptt_backward(net, *fwd.trace, targets, w, mask, scfg);

    FdCheck result;
    auto check_tensor = [&](Eigen::MatrixXf& tensor, const Eigen::MatrixXf& grad) {
        for (int r = 0; r < tensor.rows(); ++r)
            for (int c = 0; c < tensor.cols(); ++c) {
                const float saved = tensor(r, c);
                tensor(r, c) = saved + step;
                const float lp = relaxed_loss(net, input, w, mask, targets, v_win);
                tensor(r, c) = saved - step;
                const float lm = relaxed_loss(net, input, w, mask, targets, v_win);
                tensor(r, c) = saved;
                const float fd = (lp - lm) / (2.0f * step);
                const float err = std::abs(fd - grad(r, c));
                REQUIRE(err <= std::max(tol_abs, tol_rel * std::abs(grad(r, c))));
                result.worst = std::max(result.worst, err);
                ++result.checked;
            }
    };
    check_tensor(w.w_conv_v, g.w_conv_v);
    check_tensor(w.w_proj_v, g.w_proj_v);
    check_tensor(w.w_rec, g.w_rec);
    check_tensor(w.w_out, g.w_out);
    return result;
}

MotifMask random_mask(int n, double density, Rng& rng) {
    MotifMask m = MotifMask::zeros(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && rng.uniform() < density) m.adj(i, j) = 1.0f;
    return m;
}

} // namespace

TEST_CASE("learning: surrogate window values") {
    LifParams p;
    SurrogateConfig cfg{0.5f, 1e-4f};
    CHECK(surrogate_grad(0.5f, p, 0.0f, cfg) == 1.0f);  // at threshold
    CHECK(surrogate_grad(1.1f, p, 0.0f, cfg) == 0.0f);  // above window
    CHECK(surrogate_grad(-0.1f, p, 0.0f, cfg) == 0.0f); // |v - th| = 0.6
    CHECK(surrogate_grad(1.2f, p, 1.0f, cfg) == 1.0f);  // adaptive threshold shifts the window
    CHECK(surrogate_grad(0.6f, p, 1.0f, cfg) == 0.0f);
}

TEST_CASE("learning: silent trace yields all-zero gradients") {
    const NetworkConfig cfg = toy_config(4, 4, 4);
    Network net(cfg, LifParams{});
    Weights w;
    w.w_conv_v = Eigen::MatrixXf::Zero(net.visual_geometry().window, 2);
    w.w_proj_v = Eigen::MatrixXf::Zero(4, net.visual_geometry().conv_dim);
    w.w_rec = Eigen::MatrixXf::Zero(4, 4);
    w.w_out = Eigen::MatrixXf::Zero(2, 4);

    BatchInput input;
    for (int t = 0; t < cfg.T; ++t)
        input.x_v.push_back(Eigen::MatrixXf::Zero(1, net.visual_geometry().input_dim()));
    const ForwardResult fwd = net.forward(input, w, MotifMask::full(4), true);
    const GradientSet g =
        bptt_backward(net, *fwd.trace, {0}, w, MotifMask::full(4), SurrogateConfig{});
    CHECK(g.w_conv_v.cwiseAbs().maxCoeff() == 0.0f);
    CHECK(g.w_proj_v.cwiseAbs().maxCoeff() == 0.0f);
    CHECK(g.w_rec.cwiseAbs().maxCoeff() == 0.0f);
    CHECK(g.w_out.cwiseAbs().maxCoeff() == 0.0f);
}

TEST_CASE("learning: single-tick gradients match central differences") {
    const NetworkConfig cfg = toy_config(3, 1, 3);
    Network net(cfg, toy_lif_smooth());
    Rng rng(21);
    Weights w = net.init_weights(rng);
    scale_weights(w, 0.4f);

    Rng in_rng(22);
    const BatchInput input = toy_input(net, 2, in_rng, 0.8);
    const std::vector<int> targets = {0, 1};
    Rng mrng(23);
    const MotifMask mask = random_mask(3, 0.7, mrng);

    const FdCheck fd =
        finite_difference_check(net, input, w, mask, targets, 0.5f, 1e-2f, 5e-5f, 1e-4f);
    CHECK(fd.checked > 0);
}

TEST_CASE("learning: two-tick recurrent gradients match central differences within 1e-3") {
    const NetworkConfig cfg = toy_config(3, 2, 3);
    Network net(cfg, toy_lif_smooth());
    Rng rng(31);
    Weights w = net.init_weights(rng);
    scale_weights(w, 0.45f);

    Rng in_rng(32);
    const BatchInput input = toy_input(net, 3, in_rng, 0.7);
    const std::vector<int> targets = {0, 1, 0};
    Rng mrng(33);
    const MotifMask mask = random_mask(3, 0.8, mrng);

    const FdCheck fd =
        finite_difference_check(net, input, w, mask, targets, 0.5f, 1e-3f, 1e-3f, 0.0f);
    CHECK(fd.checked > 0);
}

TEST_CASE("learning: masked-out entries receive exactly zero updates under both rules") {
    const NetworkConfig cfg = toy_config(6, 4, 4);
    Network net(cfg, LifParams{});
    Rng rng(41);
    Weights w = net.init_weights(rng);
    scale_weights(w, 2.0f);
    RewardConfig rcfg = make_reward_config(net, 1.0f, rng);

    Rng in_rng(42);
    const BatchInput input = toy_input(net, 3, in_rng);
    const std::vector<int> targets = {0, 1, 1};

    for (int trial = 0; trial < 20; ++trial) {
        Rng mrng(500 + trial);
        const MotifMask mask = random_mask(6, 0.5, mrng);
        const ForwardResult fwd = net.forward(input, w, mask, true);
        const GradientSet g_bp =
            bptt_backward(net, *fwd.trace, targets, w, mask, SurrogateConfig{});
        const GradientSet g_rw = reward_backward(net, *fwd.trace, targets, w, mask, rcfg);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                if (mask.adj(i, j) == 0.0f) {
                    REQUIRE(g_bp.w_rec(i, j) == 0.0f);
                    REQUIRE(g_rw.w_rec(i, j) == 0.0f);
                }
    }
}

TEST_CASE("learning: zero mask kills the whole recurrent update") {
    const NetworkConfig cfg = toy_config(5, 4, 4);
    Network net(cfg, LifParams{});
    Rng rng(51);
    Weights w = net.init_weights(rng);
    scale_weights(w, 2.0f);
    RewardConfig rcfg = make_reward_config(net, 1.0f, rng);
    Rng in_rng(52);
    const BatchInput input = toy_input(net, 2, in_rng);
    const MotifMask zero = MotifMask::zeros(5);

    const ForwardResult fwd = net.forward(input, w, zero, true);
    CHECK(bptt_backward(net, *fwd.trace, {0, 1}, w, zero, SurrogateConfig{})
              .w_rec.cwiseAbs()
              .maxCoeff() == 0.0f);
    CHECK(reward_backward(net, *fwd.trace, {0, 1}, w, zero, rcfg).w_rec.cwiseAbs().maxCoeff() ==
          0.0f);
}

TEST_CASE("learning: reward hidden gradient vanishes at its fixed point") {
    const NetworkConfig cfg = toy_config(4, 4, 4);
    Network net(cfg, LifParams{});
    Rng rng(61);
    Weights w = net.init_weights(rng);
    scale_weights(w, 2.0f);
    Rng in_rng(62);
    const BatchInput input = toy_input(net, 1, in_rng);
    const MotifMask mask = MotifMask::full(4);

    const ForwardResult fwd = net.forward(input, w, mask, true);
    // Hidden time-averaged rates of this single sample.
    Eigen::VectorXf h = Eigen::VectorXf::Zero(4);
    for (const HiddenTick& t : fwd.trace->hidden)
        h += ((t.s_f + t.s_r).min(1.0f)).matrix().row(0).transpose();
    h /= float(cfg.T);

    RewardConfig rcfg = make_reward_config(net, 1.0f, rng);
    rcfg.b_rand_hidden.col(0) = h; // B_rand * onehot(0) == h exactly
    const GradientSet g = reward_backward(net, *fwd.trace, {0}, w, mask, rcfg);
    CHECK(g.w_proj_v.cwiseAbs().maxCoeff() == 0.0f);
    CHECK(g.w_rec.cwiseAbs().maxCoeff() == 0.0f);
}

TEST_CASE("learning: saturated softmax leaves a sub-1e-3 output error") {
    Eigen::MatrixXf logits = Eigen::MatrixXf::Zero(1, 10);
    logits(0, 3) = 10.0f; // margin 10 over every other class
    Eigen::MatrixXf e = softmax_rows(logits);
    e(0, 3) -= 1.0f;
    CHECK(e.cwiseAbs().maxCoeff() < 1e-3f);
}

TEST_CASE("learning: reward hidden gradients ignore the output weights") {
    const NetworkConfig cfg = toy_config(4, 4, 4);
    Network net(cfg, LifParams{});
    Rng rng(71);
    Weights w = net.init_weights(rng);
    scale_weights(w, 2.0f);
    RewardConfig rcfg = make_reward_config(net, 1.0f, rng);
    Rng in_rng(72);
    const BatchInput input = toy_input(net, 2, in_rng);
    const MotifMask mask = MotifMask::full(4);
    const std::vector<int> targets = {0, 1};

    const ForwardResult base_fwd = net.forward(input, w, mask, true);
    const GradientSet base = reward_backward(net, *base_fwd.trace, targets, w, mask, rcfg);

    Weights perturbed = w;
    perturbed.w_out.array() += 0.73f;
    const ForwardResult pert_fwd = net.forward(input, perturbed, mask, true);
    const GradientSet pert = reward_backward(net, *pert_fwd.trace, targets, perturbed, mask, rcfg);

    CHECK((base.w_proj_v - pert.w_proj_v).cwiseAbs().maxCoeff() == 0.0f);
    CHECK((base.w_rec - pert.w_rec).cwiseAbs().maxCoeff() == 0.0f);
    CHECK((base.w_conv_v - pert.w_conv_v).cwiseAbs().maxCoeff() == 0.0f);
}

TEST_CASE("learning: apply_updates contract") {
    const NetworkConfig cfg = toy_config(4, 2, 3);
    Network net(cfg, LifParams{});
    Rng rng(81);
    Weights w = net.init_weights(rng);
    const Weights before = w;

    SUBCASE("zero gradients leave weights unchanged") {
        apply_updates(w, GradientSet::zeros_like(w), 0.5f);
        CHECK((w.w_proj_v - before.w_proj_v).cwiseAbs().maxCoeff() == 0.0f);
        CHECK((w.w_rec - before.w_rec).cwiseAbs().maxCoeff() == 0.0f);
    }
    SUBCASE("a single gradient entry moves its weight by exactly -lr * g") {
        GradientSet g = GradientSet::zeros_like(w);
        g.w_out(1, 2) = 3.0f;
        apply_updates(w, g, 0.25f);
        CHECK(w.w_out(1, 2) == doctest::Approx(before.w_out(1, 2) - 0.75f));
    }
    SUBCASE("recurrent diagonal is restored to zero") {
        GradientSet g = GradientSet::zeros_like(w);
        g.w_rec(2, 2) = -4.0f; // would push the diagonal positive
        apply_updates(w, g, 1.0f);
        CHECK(w.w_rec(2, 2) == 0.0f);
    }
    SUBCASE("non-finite updates raise NumericsError") {
        GradientSet g = GradientSet::zeros_like(w);
        g.w_rec(0, 1) = std::numeric_limits<float>::infinity();
        CHECK_THROWS_AS(apply_updates(w, g, 1.0f), NumericsError);
    }
}

TEST_CASE("learning: both rules descend the loss on a fixed toy set") {
    // 32 samples, two classes with complementary input patterns, full-batch
    // updates so the per-epoch loss sequence carries no shuffling noise.
    const NetworkConfig cfg = toy_config(24, 16, 16);
    Network net(cfg, LifParams{});
    const int batch = 32;

    Rng data_rng(91);
    BatchInput input;
    std::vector<int> targets(batch);
    for (int b = 0; b < batch; ++b) targets[b] = b % 2;
    for (int t = 0; t < cfg.T; ++t) {
        Eigen::MatrixXf x(batch, net.visual_geometry().input_dim());
        for (int b = 0; b < batch; ++b)
            for (int c = 0; c < x.cols(); ++c) {
                const double base =
                    (targets[b] == 0) ? (c < 8 ? 0.95 : 0.05) : (c < 8 ? 0.05 : 0.95);
                x(b, c) = data_rng.uniform() < base ? 1.0f : 0.0f;
            }
        input.x_v.push_back(x);
    }
    const MotifMask mask = MotifMask::full(cfg.hidden_size);

    for (const std::string rule : {std::string("bp"), std::string("reward")}) {
        Rng wrng(rule == "bp" ? 93 : 593);
        Weights w = net.init_weights(wrng);
        Rng rrng(94);
        RewardConfig rcfg = make_reward_config(net, 1.0f, rrng);
        // Step sizes tuned per rule for this toy scale.
        const float lr = rule == "bp" ? 0.6f : 0.25f;
        SurrogateConfig scfg{0.5f, lr};

        std::vector<float> losses;
        for (int epoch = 0; epoch < 50; ++epoch) {
            const ForwardResult fwd = net.forward(input, w, mask, true);
            losses.push_back(cross_entropy(fwd.logits, targets));
            const GradientSet g =
                rule == "bp" ? bptt_backward(net, *fwd.trace, targets, w, mask, scfg)
                             : reward_backward(net, *fwd.trace, targets, w, mask, rcfg);
            apply_updates(w, g, lr);
        }
        int decreases = 0;
        for (std::size_t e = 1; e < losses.size(); ++e)
            if (losses[e] < losses[e - 1]) ++decreases;
        INFO("rule ", rule, " first ", losses.front(), " last ", losses.back());
        CHECK(decreases >= 45);
        CHECK(losses.back() < losses.front());
    }
}
