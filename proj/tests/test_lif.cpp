#include <doctest.h>

#include <cmath>

#include "msnn/errors.hpp"
#include "msnn/lif.hpp"

using namespace msnn;

namespace {

Eigen::ArrayXXf scalar(float v) { return Eigen::ArrayXXf::Constant(1, 1, v); }

// Independent scalar reference for one feed-forward LIF neuron, written as a
// direct transcription of the update rule.
struct ScalarLif {
    float v = 0.0f, a = 0.0f;
    float s = 0.0f;
    int ref = 0;

    void tick(float i_ff, const LifParams& p) {
        const float k = p.dt / p.capacitance;
        if (ref == 0)
            v += k * (-p.conductance * (v - p.v_rest) * (1.0f - s) + i_ff - p.gamma * a);
        const float threshold = p.v_th + p.gamma * a;
        if (v >= threshold) {
            s = 1.0f;
            v = p.v_reset;
            ref = p.ref_ticks();
        } else {
            s = 0.0f;
            if (ref > 0) --ref;
        }
        a += p.dt * ((p.alpha - 1.0f) * a + p.beta * s);
    }
};

} // namespace

TEST_CASE("lif: equilibrium state stays unchanged without input") {
    LifParams p;
    LayerState st = LayerState::zeros(1, 4, p);
    lif_integrate(st, Eigen::ArrayXXf::Zero(1, 4), Eigen::ArrayXXf::Zero(1, 4), p);
    CHECK(st.v_f.cwiseAbs().maxCoeff() == 0.0f);
    CHECK(st.v_r.cwiseAbs().maxCoeff() == 0.0f);
}

TEST_CASE("lif: unit current from rest integrates to exactly 1.0") {
    LifParams p; // g=0.2, C=1, dt=1
    LayerState st = LayerState::zeros(1, 1, p);
    lif_integrate(st, scalar(1.0f), scalar(0.0f), p);
    CHECK(st.v_f(0, 0) == doctest::Approx(1.0f));
}

TEST_CASE("lif: 5-tick constant-current trace matches the scalar reference") {
    LifParams p;
    LayerState st = LayerState::zeros(1, 1, p);
    ScalarLif ref;
    for (int t = 0; t < 5; ++t) {
        lif_integrate(st, scalar(0.2f), scalar(0.0f), p);
        fire_and_reset(st, p);
        adapt_threshold(st, p);
        ref.tick(0.2f, p);
        CHECK(st.v_f(0, 0) == doctest::Approx(ref.v).epsilon(1e-6));
        CHECK(st.s_f(0, 0) == ref.s);
        CHECK(st.a(0, 0) == doctest::Approx(ref.a).epsilon(1e-6));
    }
}

TEST_CASE("lif: long constant-drive trace with spiking matches the scalar reference") {
    LifParams p;
    LayerState st = LayerState::zeros(1, 1, p);
    ScalarLif ref;
    for (int t = 0; t < 200; ++t) {
        lif_integrate(st, scalar(0.35f), scalar(0.0f), p);
        fire_and_reset(st, p);
        adapt_threshold(st, p);
        ref.tick(0.35f, p);
        REQUIRE(st.v_f(0, 0) == doctest::Approx(ref.v).epsilon(1e-5));
        REQUIRE(st.s_f(0, 0) == ref.s);
        REQUIRE(st.a(0, 0) == doctest::Approx(ref.a).epsilon(1e-5));
    }
}

TEST_CASE("lif: firing semantics") {
    LifParams p;

    SUBCASE("below threshold does not fire") {
        LayerState st = LayerState::zeros(1, 1, p);
        st.v_f = scalar(0.49f);
        fire_and_reset(st, p);
        CHECK(st.s_f(0, 0) == 0.0f);
        CHECK(st.v_f(0, 0) == doctest::Approx(0.49f));
    }

    SUBCASE("crossing fires, resets, and arms the refractory clock") {
        LayerState st = LayerState::zeros(1, 1, p);
        st.v_f = scalar(0.6f);
        fire_and_reset(st, p);
        CHECK(st.s_f(0, 0) == 1.0f);
        CHECK(st.v_f(0, 0) == p.v_reset);
        CHECK(st.ref_f(0, 0) == 1);
    }

    SUBCASE("adaptive threshold raises the bar") {
        LayerState st = LayerState::zeros(1, 1, p);
        st.v_f = scalar(0.6f);
        st.a = scalar(1.0f); // effective threshold 1.5
        fire_and_reset(st, p);
        CHECK(st.s_f(0, 0) == 0.0f);
    }
}

TEST_CASE("lif: threshold fixed points for 0, 1, and 2 input channels") {
    LifParams p; // alpha 0.9, beta 0.1 => a* = s
    for (int s_channels : {0, 1, 2}) {
        LayerState st = LayerState::zeros(1, 1, p);
        st.s_f = scalar(s_channels >= 1 ? 1.0f : 0.0f);
        st.s_r = scalar(s_channels >= 2 ? 1.0f : 0.0f);
        for (int i = 0; i < 600; ++i) adapt_threshold(st, p);
        const float expected = p.beta * float(s_channels) / (1.0f - p.alpha);
        CHECK(std::abs(st.a(0, 0) - expected) < 1e-6f);
    }
}

TEST_CASE("lif: adaptation is monotone toward its fixed point") {
    LifParams p;
    for (float a0 : {0.0f, 0.5f, 1.5f, 3.0f}) {
        LayerState st = LayerState::zeros(1, 1, p);
        st.s_f = scalar(1.0f);
        st.a = scalar(a0);
        const float target = p.beta / (1.0f - p.alpha); // 1.0
        const float before = st.a(0, 0);
        adapt_threshold(st, p);
        const float after = st.a(0, 0);
        if (before < target)
            CHECK(after > before);
        else if (before > target)
            CHECK(after < before);
    }
}

TEST_CASE("lif: refractory period suppresses firing and holds the reset potential") {
    LifParams p;
    p.tau_ref = 3.0f; // 3 ticks
    LayerState st = LayerState::zeros(1, 1, p);

    lif_integrate(st, scalar(1.0f), scalar(0.0f), p);
    fire_and_reset(st, p);
    CHECK(st.s_f(0, 0) == 1.0f);

    // Under massive drive, no spike can occur for ref_ticks ticks.
    for (int t = 0; t < 3; ++t) {
        lif_integrate(st, scalar(100.0f), scalar(0.0f), p);
        CHECK(st.v_f(0, 0) == p.v_reset); // held
        fire_and_reset(st, p);
        CHECK(st.s_f(0, 0) == 0.0f);
    }
    // Clock expired: integration resumes and the neuron can fire again.
    lif_integrate(st, scalar(100.0f), scalar(0.0f), p);
    fire_and_reset(st, p);
    CHECK(st.s_f(0, 0) == 1.0f);
}

TEST_CASE("lif: potential equals v_reset immediately after any spike") {
    LifParams p;
    p.v_reset = 0.0f;
    LayerState st = LayerState::zeros(2, 3, p);
    st.v_f = Eigen::ArrayXXf::Random(2, 3).abs() + 0.5f;
    st.v_r = Eigen::ArrayXXf::Random(2, 3).abs() + 0.5f;
    fire_and_reset(st, p);
    for (int b = 0; b < 2; ++b)
        for (int n = 0; n < 3; ++n) {
            if (st.s_f(b, n) == 1.0f) CHECK(st.v_f(b, n) == p.v_reset);
            if (st.s_r(b, n) == 1.0f) CHECK(st.v_r(b, n) == p.v_reset);
        }
}

TEST_CASE("lif: recurrent channel integrates without leak") {
    LifParams p;
    LayerState st = LayerState::zeros(1, 1, p);
    lif_integrate(st, scalar(0.0f), scalar(0.2f), p);
    CHECK(st.v_r(0, 0) == doctest::Approx(0.2f));
    lif_integrate(st, scalar(0.0f), scalar(0.0f), p);
    CHECK(st.v_r(0, 0) == doctest::Approx(0.2f)); // no decay
}

TEST_CASE("lif: non-finite current raises NumericsError") {
    LifParams p;
    LayerState st = LayerState::zeros(1, 1, p);
    CHECK_THROWS_AS(
        lif_integrate(st, scalar(std::numeric_limits<float>::quiet_NaN()), scalar(0.0f), p),
        NumericsError);
}

TEST_CASE("lif: combined spikes clip to {0,1}") {
    LifParams p;
    LayerState st = LayerState::zeros(1, 2, p);
    st.s_f << 1.0f, 0.0f;
    st.s_r << 1.0f, 0.0f;
    const Eigen::ArrayXXf s = st.combined_spikes();
    CHECK(s(0, 0) == 1.0f);
    CHECK(s(0, 1) == 0.0f);
}

TEST_CASE("lif: parameter validation") {
    LifParams p;
    p.alpha = 1.0f;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = LifParams{};
    p.v_th = p.v_reset;
    CHECK_THROWS_AS(p.validate(), ConfigError);
}
