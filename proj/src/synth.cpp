#include "msnn/synth.hpp"

#include <cmath>
#include <filesystem>
#include <vector>

#include "msnn/errors.hpp"

namespace msnn {

namespace {

// Seven-segment membership per digit: A top, B upper-right, C lower-right,
// D bottom, E lower-left, F upper-left, G middle.
constexpr int kSegments[10] = {
    0b0111111, // 0: A B C D E F
    0b0000110, // 1: B C
    0b1011011, // 2: A B D E G
    0b1001111, // 3: A B C D G
    0b1100110, // 4: B C F G
    0b1101101, // 5: A C D F G
    0b1111101, // 6: A C D E F G
    0b0000111, // 7: A B C
    0b1111111, // 8
    0b1101111, // 9: A B C D F G
};

void fill_rect(Eigen::MatrixXf& img, int r0, int r1, int c0, int c1, float value) {
    for (int r = std::max(0, r0); r <= std::min<int>(int(img.rows()) - 1, r1); ++r)
        for (int c = std::max(0, c0); c <= std::min<int>(int(img.cols()) - 1, c1); ++c)
            img(r, c) = value;
}

// Tone table; adjacent pairs below cover digits 0..4, reversed pairs 5..9.
constexpr double kTonesHz[5] = {320.0, 480.0, 700.0, 1000.0, 1450.0};

void digit_tone_pair(int label, double& first, double& second) {
    const int i = label % 5;
    const int j = (i + 1) % 5;
    if (label < 5) {
        first = kTonesHz[i];
        second = kTonesHz[j];
    } else {
        first = kTonesHz[j];
        second = kTonesHz[i];
    }
}

} // namespace

ImageSample synth_digit_image(int label, Rng& rng) {
    if (label < 0 || label > 9) throw RangeError("digit label out of 0..9");
    ImageSample s;
    s.label = label;
    s.pixels = Eigen::MatrixXf::Zero(28, 28);

    const int dx = static_cast<int>(rng.below(5)) - 2;
    const int dy = static_cast<int>(rng.below(5)) - 2;
    const int thick = 2 + static_cast<int>(rng.below(2));
    const float ink = 0.75f + 0.25f * static_cast<float>(rng.uniform());

    const int x0 = 8 + dx, x1 = 19 + dx;
    const int y0 = 4 + dy, ym = 13 + dy, y1 = 22 + dy;
    const int segs = kSegments[label];
    if (segs & 0b0000001) fill_rect(s.pixels, y0, y0 + thick - 1, x0, x1, ink);      // A
    if (segs & 0b0000010) fill_rect(s.pixels, y0, ym + thick - 1, x1 - thick + 1, x1, ink); // B
    if (segs & 0b0000100) fill_rect(s.pixels, ym, y1 + thick - 1, x1 - thick + 1, x1, ink); // C
    if (segs & 0b0001000) fill_rect(s.pixels, y1, y1 + thick - 1, x0, x1, ink);      // D
    if (segs & 0b0010000) fill_rect(s.pixels, ym, y1 + thick - 1, x0, x0 + thick - 1, ink); // E
    if (segs & 0b0100000) fill_rect(s.pixels, y0, ym + thick - 1, x0, x0 + thick - 1, ink); // F
    if (segs & 0b1000000) fill_rect(s.pixels, ym, ym + thick - 1, x0, x1, ink);      // G

    // Sparse salt noise.
    const int flips = 4 + static_cast<int>(rng.below(5));
    for (int i = 0; i < flips; ++i) {
        const int r = static_cast<int>(rng.below(28));
        const int c = static_cast<int>(rng.below(28));
        s.pixels(r, c) = static_cast<float>(rng.uniform(0.2, 0.8));
    }
    return s;
}

AudioSample synth_digit_audio(int label, Rng& rng, int sample_rate) {
    if (label < 0 || label > 9) throw RangeError("digit label out of 0..9");
    AudioSample a;
    a.label = label;
    a.sample_rate = sample_rate;

    double f_first, f_second;
    digit_tone_pair(label, f_first, f_second);

    const double duration = 0.55 + 0.1 * rng.uniform();
    const int n = static_cast<int>(duration * sample_rate);
    const int half = n / 2;
    const double detune = 1.0 + 0.01 * (rng.uniform() - 0.5);
    const double vibrato_hz = 5.0 + 2.0 * rng.uniform();
    const double phase0 = 2.0 * M_PI * rng.uniform();

    a.samples.resize(n);
    for (int i = 0; i < n; ++i) {
        const double t = double(i) / sample_rate;
        const double f = (i < half ? f_first : f_second) * detune;
        const double vib = 1.0 + 0.008 * std::sin(2.0 * M_PI * vibrato_hz * t);
        // Short attack/release ramps around the tone switch.
        double env = 1.0;
        const int ramp = sample_rate / 100;
        if (i < ramp) env = double(i) / ramp;
        if (n - 1 - i < ramp) env = double(n - 1 - i) / ramp;
        const int from_switch = std::abs(i - half);
        if (from_switch < ramp) env *= double(from_switch) / ramp;
        const double ph = phase0 + 2.0 * M_PI * f * vib * t;
        const double tone = std::sin(ph) + 0.5 * std::sin(2.0 * ph) + 0.25 * std::sin(3.0 * ph);
        const double noise = 0.02 * (rng.uniform() * 2.0 - 1.0);
        a.samples[i] = static_cast<float>(0.4 * env * tone / 1.75 + noise);
    }
    return a;
}

void make_visual_corpus(const std::string& images_path, const std::string& labels_path,
                        int count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ImageSample> images;
    std::vector<int> labels;
    images.reserve(count);
    labels.reserve(count);
    for (int i = 0; i < count; ++i) {
        const int label = i % 10;
        images.push_back(synth_digit_image(label, rng));
        labels.push_back(label);
    }
    write_idx_images(images_path, images);
    write_idx_labels(labels_path, labels);
}

void make_audio_corpus(const std::string& dir, int per_class, std::uint64_t seed,
                       int sample_rate) {
    std::filesystem::create_directories(dir);
    Rng rng(seed);
    for (int label = 0; label <= 9; ++label)
        for (int i = 0; i < per_class; ++i) {
            const AudioSample a = synth_digit_audio(label, rng, sample_rate);
            char name[64];
            std::snprintf(name, sizeof(name), "%d_%04d.wav", label, i);
            write_wav((std::filesystem::path(dir) / name).string(), a);
        }
}

} // namespace msnn
