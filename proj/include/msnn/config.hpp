#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msnn/encoding.hpp"
#include "msnn/lif.hpp"
#include "msnn/network.hpp"

namespace msnn {

struct DataConfig {
    std::string train_images, train_labels;
    std::string test_images, test_labels;
    std::string audio_train_dir, audio_test_dir;
    int train_limit = 2000;
    int test_limit = 500;
};

struct TrainConfig {
    float lr = 1e-4f;
    float v_win = 0.5f;
    std::string rule = "bp"; // bp | reward
    int epochs = 30;
    int batch_size = 32;
    std::uint64_t seed = 1;
    int mask_epochs = 8;            // single-sensory phase length for mask learning
    float target_rate = 1.0f;       // scale of the one-hot class embedding
    std::string threshold_rule = "mean-abs";
};

struct NoiseConfig {
    std::string kind = "uniform"; // uniform | voice
    std::vector<double> levels = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    int repeats = 3;
    std::string interferer; // wav path; empty selects a digit-8 recording from the corpus
    int scene = 1;          // 1: matched train/test noise, 2: clean training, voice-noised test
};

struct McgurkConfig {
    int class_a = 2;
    int class_b = 3;
    int inconsistent_visual = 3;
    int inconsistent_audio = 2;
    int epochs = 20;
    int repeats = 3;
    int samples_per_class = 200;
};

struct CostCurveRef {
    std::string csv;  // epoch CSV produced by training
    long params = 0;  // trainable parameter count of that run
};

struct CostConfig {
    int levels = 20;
    std::vector<CostCurveRef> curves;
};

struct ExperimentConfig {
    DataConfig data;
    NetworkConfig network;
    EncoderConfig encoder;
    LifParams lif;
    TrainConfig train;
    NoiseConfig noise;
    McgurkConfig mcgurk;
    CostConfig cost;

    static ExperimentConfig from_file(const std::string& path);
    static ExperimentConfig from_json_text(const std::string& text);
    std::string to_json_text() const; // stable key order, round-trip safe
    void validate() const;
};

} // namespace msnn
