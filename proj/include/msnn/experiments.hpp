#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "msnn/checkpoint.hpp"
#include "msnn/config.hpp"
#include "msnn/dataset.hpp"
#include "msnn/learning.hpp"
#include "msnn/motif.hpp"
#include "msnn/network.hpp"

namespace msnn {

struct NoiseSpec {
    enum class Kind { uniform, voice };
    Kind kind = Kind::uniform;
    double proportion = 0.0;
    const AudioSample* interferer = nullptr; // voice noise only
};

// In-memory corpus; spectrograms are the clean MFCC features, computed once.
struct Corpus {
    std::vector<ImageSample> train_images, test_images;
    std::vector<AudioSample> train_audio, test_audio;
    std::vector<Spectrogram> train_spec, test_spec;
};

Corpus load_corpus(const ExperimentConfig& cfg);
void prepare_spectrograms(Corpus& corpus, const EncoderConfig& enc);

// out = clamp((1 - p) * x + p * u, 0, 1), u ~ U(0,1) elementwise. Applies to
// raw pixel matrices and normalized spectrogram cells alike.
Eigen::MatrixXf inject_uniform_noise(const Eigen::MatrixXf& x, double p, Rng& rng);

// out = (1 - p) * target + p * interferer, interferer resampled to the
// target's rate and looped/truncated to its length, then peak-renormalized
// into [-1, 1].
AudioSample mix_voice(const AudioSample& target, const AudioSample& interferer, double p);

struct EpochStats {
    double train_loss = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;
};

struct TrainedModel {
    Weights weights;
    RewardConfig reward;
    std::vector<EpochStats> epochs;
    long param_count = 0;
};

// One training run: seeded initialization, per-epoch re-encoding, minibatch
// updates under the chosen rule, per-epoch test evaluation. `train_noise`
// applies matched noise to train and test inputs (scene 1); passing nullptr
// trains clean.
TrainedModel train_model(const ExperimentConfig& cfg, const Corpus& corpus, Modality modality,
                         const MotifMask& mask, const std::string& rule, std::uint64_t seed,
                         const NoiseSpec* train_noise, int epochs_override = -1);

// Test accuracy under an optional noise spec (uniform noise or voice-mixed
// audio at evaluation time).
double evaluate(const ExperimentConfig& cfg, const Corpus& corpus, const Weights& w,
                Modality modality, const MotifMask& mask, std::uint64_t seed,
                const NoiseSpec* noise);

// Hidden-layer time-averaged rates for each test sample of the requested
// label pairing; used by the McGurk analysis.
Eigen::MatrixXf hidden_rates(const ExperimentConfig& cfg, const Corpus& corpus,
                             const Weights& w, const MotifMask& mask,
                             const std::vector<int>& image_idx, const std::vector<int>& audio_idx,
                             std::uint64_t seed);

// Single-sensory phase: trains with full recurrence for `mask_epochs`, then
// binarizes the learned recurrent weights under the configured rule.
MotifMask learn_mask(const ExperimentConfig& cfg, const Corpus& corpus, Modality modality,
                     std::uint64_t seed, const NoiseSpec* noise, Weights* learned = nullptr);

struct RunRecord {
    std::string model; // "msnn" or "fsnn"
    double noise = 0.0;
    std::vector<std::uint64_t> seeds;
    std::vector<double> acc_by_seed;
    std::vector<std::vector<EpochStats>> epochs_by_seed;
    double mean = 0.0;
    double stddev = 0.0;
    bool has_std = false;
    double wall_seconds = 0.0;
    long param_count = 0;

    void finalize(); // fills mean/stddev from acc_by_seed
};

struct CocktailResult {
    std::vector<RunRecord> records; // one per (model, noise level)
};

// Full pipeline: per seed, learn the visual and auditory masks, integrate,
// then train the masked and the pure feed-forward network per noise level.
// Scene 1 injects matched uniform noise into both modalities at train and
// test time; scene 2 trains clean and evaluates with a voice interferer mixed
// into the test audio.
CocktailResult run_cocktail(const ExperimentConfig& cfg, const Corpus& corpus,
                            const std::string& out_dir, int n_threads);

struct McgurkCondition {
    std::string name; // "consistent_a", "consistent_b", "inconsistent"
    int assigned_a = 0;
    int assigned_b = 0;
    int assigned_novel = 0;
};

struct McgurkRuleResult {
    std::string rule;
    std::vector<McgurkCondition> conditions; // aggregated over repeats
    double novel_fraction = 0.0;             // inconsistent condition
};

struct McgurkResult {
    McgurkRuleResult reward;
    McgurkRuleResult bp;
};

// Trains one model per rule on the two consistent audio-visual pairings,
// feeds the inconsistent pairing, projects integration-layer rates onto the
// two leading principal components of the consistent features, and assigns
// samples to the nearest class centroid or to a novel cluster when beyond
// the mean 95th-percentile intra-cluster radius.
McgurkResult run_mcgurk(const ExperimentConfig& cfg, const Corpus& corpus,
                        const std::string& out_dir);

// Same analysis with two pre-trained multi-sensory checkpoints instead of
// in-process training.
McgurkResult run_mcgurk_from_checkpoints(const ExperimentConfig& cfg, const Corpus& corpus,
                                         const std::string& out_dir,
                                         const std::string& reward_ck_path,
                                         const std::string& bp_ck_path);

struct CostReport {
    std::vector<double> costs;  // one per algorithm
    std::vector<double> grid;   // shared accuracy levels
    double savings_ratio = 0.0; // 1 - costs[0] / costs[1]
};

// Mean first-epoch-reaching-level over a shared accuracy grid, scaled by the
// parameter count. Curves are made monotone by a running maximum; the grid
// spans [max of the curve minima, min of the curve maxima].
CostReport training_cost(const std::vector<std::vector<double>>& curves,
                         const std::vector<long>& param_counts, int n_levels);

// Checkpoint packing: weight tensors, fixed reward projections, the training
// mask, the seed, and a config snapshot.
Checkpoint model_to_checkpoint(const ExperimentConfig& cfg, const TrainedModel& model,
                               const MotifMask& mask, std::uint64_t seed);
void model_from_checkpoint(const Checkpoint& ck, Weights& w, RewardConfig& rc);

// Writers for the experiment CSV outputs.
void write_epoch_csv(const std::string& path, const std::vector<EpochStats>& epochs);
std::vector<double> read_epoch_csv_accuracy(const std::string& path);
void write_cocktail_summary(const std::string& path, const CocktailResult& result);
void write_cost_csv(const std::string& path, const CostReport& report,
                    const std::vector<long>& param_counts);

} // namespace msnn
