// Generates a self-contained synthetic digit corpus (IDX images + WAV
// utterances) so the pipeline can be exercised without external datasets.

#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "msnn/synth.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
    CLI::App app{"synthetic digit corpus generator"};
    std::string out = "data";
    int train_images = 2000, test_images = 500;
    int train_audio_per_class = 200, test_audio_per_class = 50;
    int sample_rate = 8000;
    std::uint64_t seed = 1234;
    app.add_option("--out", out, "output directory");
    app.add_option("--train-images", train_images, "training image count");
    app.add_option("--test-images", test_images, "test image count");
    app.add_option("--train-audio", train_audio_per_class, "training utterances per digit");
    app.add_option("--test-audio", test_audio_per_class, "test utterances per digit");
    app.add_option("--sample-rate", sample_rate, "wav sample rate");
    app.add_option("--seed", seed, "generator seed");
    CLI11_PARSE(app, argc, argv);

    try {
        fs::create_directories(out);
        msnn::make_visual_corpus((fs::path(out) / "train-images.idx").string(),
                                 (fs::path(out) / "train-labels.idx").string(), train_images,
                                 seed);
        msnn::make_visual_corpus((fs::path(out) / "test-images.idx").string(),
                                 (fs::path(out) / "test-labels.idx").string(), test_images,
                                 seed + 1);
        msnn::make_audio_corpus((fs::path(out) / "audio_train").string(), train_audio_per_class,
                                seed + 2, sample_rate);
        msnn::make_audio_corpus((fs::path(out) / "audio_test").string(), test_audio_per_class,
                                seed + 3, sample_rate);
        std::printf("corpus written under %s\n", out.c_str());
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
