#include <doctest.h>

#include <cmath>

#include "msnn/encoding.hpp"
#include "msnn/errors.hpp"

using namespace msnn;

namespace {
#include "mfcc_frozen.inc"

EncoderConfig sine_config() {
    EncoderConfig cfg;
    cfg.T = 28;
    cfg.mfcc_coeffs = 28;
    cfg.fft_window = 512;
    cfg.fft_hop = 256;
    cfg.mel_filters = 40;
    return cfg;
}

AudioSample sine_440_20k() {
    AudioSample a;
    a.sample_rate = 20000;
    a.samples.resize(20000);
    for (int n = 0; n < 20000; ++n)
        a.samples[n] = static_cast<float>(std::sin(2.0 * M_PI * 440.0 * n / 20000.0));
    return a;
}

} // namespace

TEST_CASE("mfcc: 440 Hz sine matches the independent reference within 1e-6 relative") {
    const Eigen::MatrixXd frames = mfcc_frames(sine_440_20k(), sine_config());
    REQUIRE(frames.rows() == kFrozenFrameCount);
    REQUIRE(frames.cols() == kFrozenCoeffs);

    for (std::size_t fi = 0; fi < sizeof(kFrozenFrames) / sizeof(int); ++fi) {
        const int f = kFrozenFrames[fi];
        for (int c = 0; c < kFrozenCoeffs; ++c) {
            const double expected = kFrozenMfcc[fi][c];
            const double got = frames(f, c);
            const double tol = 1e-6 * std::max(1.0, std::abs(expected));
            CHECK(std::abs(got - expected) <= tol);
        }
    }

    const double mean_abs = frames.array().abs().mean();
    CHECK(mean_abs == doctest::Approx(kFrozenMeanAbs).epsilon(1e-6));
}

TEST_CASE("mfcc: constant-zero audio yields identical frames and zero normalization") {
    AudioSample a;
    a.sample_rate = 20000;
    a.samples.assign(4096, 0.0f);
    const EncoderConfig cfg = sine_config();

    const Eigen::MatrixXd frames = mfcc_frames(a, cfg);
    for (int f = 1; f < frames.rows(); ++f)
        CHECK((frames.row(f) - frames.row(0)).cwiseAbs().maxCoeff() == 0.0);

    const Spectrogram spec = compute_mfcc(a, cfg);
    CHECK(spec.frames.rows() == cfg.T);
    CHECK(spec.frames.cols() == cfg.mfcc_coeffs);
    CHECK(spec.frames.maxCoeff() == 0.0f); // zero-range columns map to 0
}

TEST_CASE("mfcc: audio of exactly one window resamples by repetition") {
    AudioSample a;
    a.sample_rate = 20000;
    a.samples.resize(512);
    for (int n = 0; n < 512; ++n)
        a.samples[n] = static_cast<float>(std::sin(2.0 * M_PI * 700.0 * n / 20000.0));
    EncoderConfig cfg = sine_config();
    cfg.fft_hop = cfg.fft_window;

    const Eigen::MatrixXd frames = mfcc_frames(a, cfg);
    CHECK(frames.rows() == 1);
    const Eigen::MatrixXd resampled = resample_rows(frames, cfg.T);
    REQUIRE(resampled.rows() == cfg.T);
    for (int t = 0; t < cfg.T; ++t)
        CHECK((resampled.row(t) - frames.row(0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mfcc: audio shorter than one window raises TooShortError") {
    AudioSample a;
    a.sample_rate = 20000;
    a.samples.assign(100, 0.1f);
    CHECK_THROWS_AS(mfcc_frames(a, sine_config()), TooShortError);
}

TEST_CASE("mfcc: normalization maps every column into [0,1]") {
    const Spectrogram spec = compute_mfcc(sine_440_20k(), sine_config());
    CHECK(spec.frames.minCoeff() >= 0.0f);
    CHECK(spec.frames.maxCoeff() <= 1.0f);
    // Non-degenerate columns span the full range.
    bool spans = false;
    for (int c = 0; c < spec.frames.cols(); ++c)
        if (spec.frames.col(c).maxCoeff() == 1.0f && spec.frames.col(c).minCoeff() == 0.0f)
            spans = true;
    CHECK(spans);
}
