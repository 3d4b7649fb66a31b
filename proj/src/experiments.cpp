#include "msnn/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <thread>

#include "msnn/errors.hpp"

namespace fs = std::filesystem;

namespace msnn {

namespace {

// Stream tags for deterministic seed derivation.
constexpr std::uint64_t kTagWeights = 0x57454947;
constexpr std::uint64_t kTagReward = 0x52455741;
constexpr std::uint64_t kTagShuffle = 0x53485546;
constexpr std::uint64_t kTagEncode = 0x454e434f;
constexpr std::uint64_t kTagNoise = 0x4e4f4953;
constexpr std::uint64_t kTagEval = 0x4556414c;

void parallel_tasks(int n_threads, std::vector<std::function<void()>>& tasks) {
    if (n_threads <= 1 || tasks.size() <= 1) {
        for (auto& t : tasks) t();
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const int workers = std::min<int>(n_threads, static_cast<int>(tasks.size()));
    for (int i = 0; i < workers; ++i)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t k = next.fetch_add(1);
                if (k >= tasks.size()) return;
                tasks[k]();
            }
        });
    for (auto& th : pool) th.join();
}

std::vector<int> audio_partner_indices(const std::vector<ImageSample>& images,
                                       const std::vector<AudioSample>& audio) {
    std::array<std::vector<int>, 10> by_label;
    for (std::size_t i = 0; i < audio.size(); ++i) by_label[audio[i].label].push_back(int(i));
    std::array<int, 10> cursor{};
    std::vector<int> partner(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        const int l = images[i].label;
        if (by_label[l].empty())
            throw DataError("no audio sample for digit " + std::to_string(l));
        partner[i] = by_label[l][cursor[l] % by_label[l].size()];
        ++cursor[l];
    }
    return partner;
}

Eigen::MatrixXf image_matrix(const ImageSample& img) { return img.pixels; }

SpikeTrain encode_visual(const ImageSample& img, const EncoderConfig& enc, std::uint64_t seed,
                         const NoiseSpec* noise, std::uint64_t noise_seed) {
    ImageSample work = img;
    if (noise != nullptr && noise->kind == NoiseSpec::Kind::uniform && noise->proportion > 0.0) {
        Rng nrng(noise_seed);
        work.pixels = inject_uniform_noise(image_matrix(img), noise->proportion, nrng);
    }
    Rng rng(seed);
    return encode_image_bernoulli(work, enc, rng);
}

SpikeTrain encode_auditory(const Spectrogram& spec, const EncoderConfig& enc, std::uint64_t seed,
                           const NoiseSpec* noise, std::uint64_t noise_seed) {
    Spectrogram work = spec;
    if (noise != nullptr && noise->kind == NoiseSpec::Kind::uniform && noise->proportion > 0.0) {
        Rng nrng(noise_seed);
        work.frames = inject_uniform_noise(spec.frames, noise->proportion, nrng);
    }
    Rng rng(seed);
    return encode_spectrogram(work, enc, rng);
}

struct Split {
    const std::vector<ImageSample>* images = nullptr;
    const std::vector<AudioSample>* audio = nullptr;
    const std::vector<Spectrogram>* spec = nullptr;
};

// Builds per-tick batch input for the listed sample indices.
BatchInput encode_batch(const ExperimentConfig& cfg, const Split& split, Modality modality,
                        const std::vector<int>& sample_idx, const std::vector<int>& partner,
                        std::uint64_t seed, std::uint64_t epoch, const NoiseSpec* noise,
                        const std::vector<Spectrogram>* spec_override) {
    BatchInput input;
    const bool use_visual = modality != Modality::auditory;
    const bool use_audio = modality != Modality::visual;
    std::vector<SpikeTrain> trains_v, trains_a;
    for (int idx : sample_idx) {
        if (use_visual) {
            const std::uint64_t es = mix_seed(seed, kTagEncode, epoch * 2654435761ull + idx, 1);
            const std::uint64_t ns = mix_seed(seed, kTagNoise, epoch * 2654435761ull + idx, 1);
            trains_v.push_back(encode_visual((*split.images)[idx], cfg.encoder, es, noise, ns));
        }
        if (use_audio) {
            const int aidx = use_visual ? partner[idx] : idx;
            const Spectrogram& sp =
                spec_override != nullptr ? (*spec_override)[aidx] : (*split.spec)[aidx];
            const std::uint64_t es = mix_seed(seed, kTagEncode, epoch * 2654435761ull + idx, 2);
            const std::uint64_t ns = mix_seed(seed, kTagNoise, epoch * 2654435761ull + idx, 2);
            trains_a.push_back(encode_auditory(sp, cfg.encoder, es, noise, ns));
        }
    }
    if (use_visual) input.x_v = stack_ticks(trains_v);
    if (use_audio) input.x_a = stack_ticks(trains_a);
    return input;
}

std::vector<int> split_labels(const Split& split, Modality modality) {
    std::vector<int> labels;
    if (modality != Modality::auditory) {
        labels.reserve(split.images->size());
        for (const auto& s : *split.images) labels.push_back(s.label);
    } else {
        labels.reserve(split.audio->size());
        for (const auto& s : *split.audio) labels.push_back(s.label);
    }
    return labels;
}

int split_size(const Split& split, Modality modality) {
    return modality != Modality::auditory ? int(split.images->size()) : int(split.audio->size());
}

NetworkConfig network_config_for(const ExperimentConfig& cfg, Modality modality) {
    NetworkConfig ncfg = cfg.network;
    ncfg.modality = modality;
    ncfg.audio_cols = cfg.encoder.mfcc_coeffs;
    ncfg.T = cfg.encoder.T;
    return ncfg;
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

double stddev_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / double(v.size() - 1));
}

} // namespace

Corpus load_corpus(const ExperimentConfig& cfg) {
    Corpus corpus;
    const bool need_visual = cfg.network.modality != Modality::auditory;
    const bool need_audio = cfg.network.modality != Modality::visual;
    if (need_visual) {
        if (cfg.data.train_images.empty() || cfg.data.test_images.empty())
            throw DataError("config: visual dataset paths missing");
        corpus.train_images = load_image_dataset(cfg.data.train_images, cfg.data.train_labels);
        corpus.test_images = load_image_dataset(cfg.data.test_images, cfg.data.test_labels);
        if (cfg.data.train_limit > 0 && int(corpus.train_images.size()) > cfg.data.train_limit)
            corpus.train_images.resize(cfg.data.train_limit);
        if (cfg.data.test_limit > 0 && int(corpus.test_images.size()) > cfg.data.test_limit)
            corpus.test_images.resize(cfg.data.test_limit);
    }
    if (need_audio) {
        if (cfg.data.audio_train_dir.empty() || cfg.data.audio_test_dir.empty())
            throw DataError("config: auditory dataset directories missing");
        corpus.train_audio = load_audio_dataset(scan_wav_dir(cfg.data.audio_train_dir, "train"));
        corpus.test_audio = load_audio_dataset(scan_wav_dir(cfg.data.audio_test_dir, "test"));
        if (corpus.train_audio.empty() || corpus.test_audio.empty())
            throw DataError("auditory corpus is empty");
    }
    prepare_spectrograms(corpus, cfg.encoder);
    return corpus;
}

void prepare_spectrograms(Corpus& corpus, const EncoderConfig& enc) {
    corpus.train_spec.clear();
    corpus.test_spec.clear();
    corpus.train_spec.reserve(corpus.train_audio.size());
    for (const AudioSample& a : corpus.train_audio) corpus.train_spec.push_back(compute_mfcc(a, enc));
    corpus.test_spec.reserve(corpus.test_audio.size());
    for (const AudioSample& a : corpus.test_audio) corpus.test_spec.push_back(compute_mfcc(a, enc));
}

Eigen::MatrixXf inject_uniform_noise(const Eigen::MatrixXf& x, double p, Rng& rng) {
    if (p < 0.0 || p > 1.0) throw RangeError("noise proportion must lie in [0, 1]");
    Eigen::MatrixXf out(x.rows(), x.cols());
    for (int r = 0; r < x.rows(); ++r)
        for (int c = 0; c < x.cols(); ++c) {
            const double u = rng.uniform();
            double v = (1.0 - p) * double(x(r, c)) + p * u;
            v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
            out(r, c) = static_cast<float>(v);
        }
    return out;
}

AudioSample mix_voice(const AudioSample& target, const AudioSample& interferer, double p) {
    if (interferer.samples.empty()) throw ConfigError("voice interferer is empty");
    if (p < 0.0 || p > 1.0) throw RangeError("voice proportion must lie in [0, 1]");

    // Resample the interferer to the target rate, then loop/truncate.
    std::vector<float> inter(target.samples.size());
    const double ratio = double(interferer.sample_rate) / double(target.sample_rate);
    const std::size_t n_inter = interferer.samples.size();
    for (std::size_t i = 0; i < inter.size(); ++i) {
        const double pos = std::fmod(double(i) * ratio, double(n_inter));
        const auto i0 = static_cast<std::size_t>(pos);
        const std::size_t i1 = (i0 + 1) % n_inter;
        const double frac = pos - double(i0);
        inter[i] = static_cast<float>((1.0 - frac) * interferer.samples[i0] +
                                      frac * interferer.samples[i1]);
    }

    AudioSample out;
    out.sample_rate = target.sample_rate;
    out.label = target.label;
    out.samples.resize(target.samples.size());
    float peak = 0.0f;
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        out.samples[i] = static_cast<float>((1.0 - p) * target.samples[i] + p * inter[i]);
        peak = std::max(peak, std::abs(out.samples[i]));
    }
    if (peak > 1.0f)
        for (float& v : out.samples) v /= peak;
    return out;
}

TrainedModel train_model(const ExperimentConfig& cfg, const Corpus& corpus, Modality modality,
                         const MotifMask& mask, const std::string& rule, std::uint64_t seed,
                         const NoiseSpec* train_noise, int epochs_override) {
    const NetworkConfig ncfg = network_config_for(cfg, modality);
    Network net(ncfg, cfg.lif);
    Rng wrng(mix_seed(seed, kTagWeights));
    TrainedModel model;
    model.weights = net.init_weights(wrng);
    Rng rrng(mix_seed(seed, kTagReward));
    model.reward = make_reward_config(net, cfg.train.target_rate, rrng);
    model.param_count = model.weights.param_count(mask.edge_count() > 0, &mask);

    const Split train{&corpus.train_images, &corpus.train_audio, &corpus.train_spec};
    const std::vector<int> labels = split_labels(train, modality);
    const std::vector<int> partner =
        modality == Modality::multi ? audio_partner_indices(corpus.train_images, corpus.train_audio)
                                    : std::vector<int>{};
    const int n = split_size(train, modality);
    if (n == 0) throw DataError("training split is empty");

    SurrogateConfig scfg{cfg.train.v_win, cfg.train.lr};
    const int epochs = epochs_override >= 0 ? epochs_override : cfg.train.epochs;

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(seed, kTagShuffle, epoch));
        shuffle_rng.shuffle(order.begin(), order.end());

        double loss_sum = 0.0;
        long correct = 0;
        for (int start = 0; start < n; start += cfg.train.batch_size) {
            const int stop = std::min(n, start + cfg.train.batch_size);
            const std::vector<int> batch(order.begin() + start, order.begin() + stop);
            const BatchInput input = encode_batch(cfg, train, modality, batch, partner, seed,
                                                  std::uint64_t(epoch), train_noise, nullptr);
            ForwardResult fwd = net.forward(input, model.weights, mask, true);
            std::vector<int> targets(batch.size());
            for (std::size_t b = 0; b < batch.size(); ++b) targets[b] = labels[batch[b]];

            loss_sum += double(cross_entropy(fwd.logits, targets)) * double(batch.size());
            const std::vector<int> preds = predict_batch(fwd.logits);
            for (std::size_t b = 0; b < batch.size(); ++b)
                if (preds[b] == targets[b]) ++correct;

            const GradientSet grads =
                rule == "reward"
                    ? reward_backward(net, *fwd.trace, targets, model.weights, mask, model.reward)
                    : bptt_backward(net, *fwd.trace, targets, model.weights, mask, scfg);
            apply_updates(model.weights, grads, cfg.train.lr);
        }

        EpochStats stats;
        stats.train_loss = loss_sum / double(n);
        stats.train_acc = double(correct) / double(n);
        stats.test_acc = evaluate(cfg, corpus, model.weights, modality, mask,
                                  mix_seed(seed, kTagEval, epoch), train_noise);
        model.epochs.push_back(stats);
    }
    return model;
}

double evaluate(const ExperimentConfig& cfg, const Corpus& corpus, const Weights& w,
                Modality modality, const MotifMask& mask, std::uint64_t seed,
                const NoiseSpec* noise) {
    const NetworkConfig ncfg = network_config_for(cfg, modality);
    Network net(ncfg, cfg.lif);

    const Split test{&corpus.test_images, &corpus.test_audio, &corpus.test_spec};
    const std::vector<int> labels = split_labels(test, modality);
    const std::vector<int> partner =
        modality == Modality::multi ? audio_partner_indices(corpus.test_images, corpus.test_audio)
                                    : std::vector<int>{};
    const int n = split_size(test, modality);
    if (n == 0) throw DataError("test split is empty");

    // Voice interference replaces the audio features wholesale; uniform noise
    // is injected per batch inside the encoders.
    std::vector<Spectrogram> voiced;
    const std::vector<Spectrogram>* spec_override = nullptr;
    const NoiseSpec* encoder_noise = noise;
    if (noise != nullptr && noise->kind == NoiseSpec::Kind::voice && noise->proportion > 0.0) {
        if (noise->interferer == nullptr) throw ConfigError("voice noise needs an interferer");
        voiced.reserve(corpus.test_audio.size());
        for (const AudioSample& a : corpus.test_audio)
            voiced.push_back(compute_mfcc(mix_voice(a, *noise->interferer, noise->proportion),
                                          cfg.encoder));
        spec_override = &voiced;
        encoder_noise = nullptr;
    }

    long correct = 0;
    std::vector<int> batch;
    for (int start = 0; start < n; start += cfg.train.batch_size) {
        const int stop = std::min(n, start + cfg.train.batch_size);
        batch.resize(stop - start);
        std::iota(batch.begin(), batch.end(), start);
        const BatchInput input = encode_batch(cfg, test, modality, batch, partner, seed,
                                              0x45564154ull, encoder_noise, spec_override);
        const ForwardResult fwd = net.forward(input, w, mask, false);
        const std::vector<int> preds = predict_batch(fwd.logits);
        for (std::size_t b = 0; b < batch.size(); ++b)
            if (preds[b] == labels[batch[b]]) ++correct;
    }
    return double(correct) / double(n);
}

Eigen::MatrixXf hidden_rates(const ExperimentConfig& cfg, const Corpus& corpus,
                             const Weights& w, const MotifMask& mask,
                             const std::vector<int>& image_idx, const std::vector<int>& audio_idx,
                             std::uint64_t seed) {
    if (image_idx.size() != audio_idx.size())
        throw ShapeError("hidden_rates: index lists must pair up");
    const NetworkConfig ncfg = network_config_for(cfg, Modality::multi);
    Network net(ncfg, cfg.lif);

    const int n = static_cast<int>(image_idx.size());
    Eigen::MatrixXf rates(n, ncfg.hidden_size);
    for (int start = 0; start < n; start += cfg.train.batch_size) {
        const int stop = std::min(n, start + cfg.train.batch_size);
        std::vector<SpikeTrain> trains_v, trains_a;
        for (int i = start; i < stop; ++i) {
            Rng rv(mix_seed(seed, kTagEncode, i, 1));
            Rng ra(mix_seed(seed, kTagEncode, i, 2));
            trains_v.push_back(
                encode_image_bernoulli(corpus.test_images[image_idx[i]], cfg.encoder, rv));
            trains_a.push_back(
                encode_spectrogram(corpus.test_spec[audio_idx[i]], cfg.encoder, ra));
        }
        BatchInput input;
        input.x_v = stack_ticks(trains_v);
        input.x_a = stack_ticks(trains_a);
        const ForwardResult fwd = net.forward(input, w, mask, true);
        const ForwardTrace& trace = *fwd.trace;
        Eigen::MatrixXf h = Eigen::MatrixXf::Zero(stop - start, ncfg.hidden_size);
        for (int t = 0; t < trace.T; ++t)
            h += ((trace.hidden[t].s_f + trace.hidden[t].s_r).min(1.0f)).matrix();
        rates.middleRows(start, stop - start) = h / float(trace.T);
    }
    return rates;
}

MotifMask learn_mask(const ExperimentConfig& cfg, const Corpus& corpus, Modality modality,
                     std::uint64_t seed, const NoiseSpec* noise, Weights* learned) {
    if (modality == Modality::multi)
        throw StateError("masks are learned from single-sensory runs");
    const MotifMask full = MotifMask::full(cfg.network.hidden_size);
    const TrainedModel model =
        train_model(cfg, corpus, modality, full, "bp", seed, noise, cfg.train.mask_epochs);
    if (learned != nullptr) *learned = model.weights;
    return binarize(model.weights.w_rec, ThresholdRule::parse(cfg.train.threshold_rule));
}

void RunRecord::finalize() {
    mean = mean_of(acc_by_seed);
    has_std = acc_by_seed.size() >= 2;
    stddev = has_std ? stddev_of(acc_by_seed) : 0.0;
}

CocktailResult run_cocktail(const ExperimentConfig& cfg, const Corpus& corpus,
                            const std::string& out_dir, int n_threads) {
    if (!out_dir.empty()) fs::create_directories(out_dir);
    const int repeats = cfg.noise.repeats;
    const bool scene2 = cfg.noise.scene == 2;

    // Scene 2 interferes with the audio using a spoken "8" (or the configured
    // recording) mixed into the test utterances.
    AudioSample interferer;
    if (scene2) {
        if (!cfg.noise.interferer.empty()) {
            interferer = load_wav(cfg.noise.interferer);
        } else {
            const auto it = std::find_if(corpus.train_audio.begin(), corpus.train_audio.end(),
                                         [](const AudioSample& a) { return a.label == 8; });
            if (it == corpus.train_audio.end())
                throw DataError("scene 2 needs a digit-8 recording or an interferer path");
            interferer = *it;
        }
    }

    // Phase A: per-seed single-sensory mask learning (clean data).
    std::vector<MotifMask> masks(repeats);
    {
        std::vector<std::function<void()>> tasks;
        for (int rep = 0; rep < repeats; ++rep)
            tasks.push_back([&, rep] {
                const std::uint64_t seed = cfg.train.seed + std::uint64_t(rep);
                const MotifMask mask_v = learn_mask(cfg, corpus, Modality::visual, seed, nullptr);
                const MotifMask mask_a = learn_mask(cfg, corpus, Modality::auditory, seed, nullptr);
                masks[rep] = integrate(mask_v, mask_a);
            });
        parallel_tasks(n_threads, tasks);
    }

    // Phase B: per (model, level, seed) multi-sensory runs.
    struct Cell {
        double acc = 0.0;
        std::vector<EpochStats> epochs;
        double wall = 0.0;
        long params = 0;
    };
    const std::vector<std::string> models = {"msnn", "fsnn"};
    const auto n_levels = cfg.noise.levels.size();
    std::vector<Cell> cells(models.size() * n_levels * repeats);
    const auto cell_at = [&](std::size_t m, std::size_t l, int rep) -> Cell& {
        return cells[(m * n_levels + l) * repeats + rep];
    };

    std::vector<std::function<void()>> tasks;
    for (std::size_t m = 0; m < models.size(); ++m)
        for (std::size_t l = 0; l < n_levels; ++l)
            for (int rep = 0; rep < repeats; ++rep)
                tasks.push_back([&, m, l, rep] {
                    const std::uint64_t seed = cfg.train.seed + std::uint64_t(rep);
                    const double level = cfg.noise.levels[l];
                    const MotifMask mask =
                        models[m] == "msnn" ? masks[rep] : MotifMask::zeros(cfg.network.hidden_size);

                    const auto t0 = std::chrono::steady_clock::now();
                    NoiseSpec uniform_noise{NoiseSpec::Kind::uniform, level, nullptr};
                    const NoiseSpec* train_noise =
                        (!scene2 && level > 0.0) ? &uniform_noise : nullptr;
                    TrainedModel model = train_model(cfg, corpus, Modality::multi, mask,
                                                     cfg.train.rule, seed, train_noise);
                    Cell& cell = cell_at(m, l, rep);
                    if (scene2) {
                        NoiseSpec voice{NoiseSpec::Kind::voice, level, &interferer};
                        cell.acc = evaluate(cfg, corpus, model.weights, Modality::multi, mask,
                                            mix_seed(seed, kTagEval, 0x564f49), &voice);
                    } else {
                        cell.acc = model.epochs.empty() ? 0.0 : model.epochs.back().test_acc;
                    }
                    cell.epochs = std::move(model.epochs);
                    cell.params = model.param_count;
                    cell.wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                                    .count();
                });
    parallel_tasks(n_threads, tasks);

    CocktailResult result;
    for (std::size_t m = 0; m < models.size(); ++m)
        for (std::size_t l = 0; l < n_levels; ++l) {
            RunRecord rec;
            rec.model = models[m];
            rec.noise = cfg.noise.levels[l];
            for (int rep = 0; rep < repeats; ++rep) {
                const Cell& cell = cell_at(m, l, rep);
                rec.seeds.push_back(cfg.train.seed + std::uint64_t(rep));
                rec.acc_by_seed.push_back(cell.acc);
                rec.epochs_by_seed.push_back(cell.epochs);
                rec.wall_seconds += cell.wall;
                rec.param_count = cell.params;
            }
            rec.finalize();
            if (!out_dir.empty()) {
                for (int rep = 0; rep < repeats; ++rep) {
                    char name[128];
                    std::snprintf(name, sizeof(name), "run_%s_p%02d_s%d.csv", rec.model.c_str(),
                                  int(std::lround(rec.noise * 100)), rep);
                    write_epoch_csv((fs::path(out_dir) / name).string(), rec.epochs_by_seed[rep]);
                }
            }
            result.records.push_back(std::move(rec));
        }

    if (!out_dir.empty())
        write_cocktail_summary((fs::path(out_dir) / "summary.csv").string(), result);
    return result;
}

namespace {

struct Pca2 {
    Eigen::RowVectorXf mean;
    Eigen::MatrixXf basis; // H x 2

    static Pca2 fit(const Eigen::MatrixXf& features) {
        Pca2 pca;
        pca.mean = features.colwise().mean();
        const Eigen::MatrixXf centered = features.rowwise() - pca.mean;
        const Eigen::MatrixXf cov =
            centered.transpose() * centered / float(std::max<int>(1, int(features.rows()) - 1));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXf> solver(cov);
        const int h = static_cast<int>(cov.rows());
        pca.basis.resize(h, 2);
        // Eigenvalues come back ascending; take the top two and pin the sign
        // so projections are reproducible.
        for (int k = 0; k < 2; ++k) {
            Eigen::VectorXf v = solver.eigenvectors().col(h - 1 - k);
            int arg = 0;
            for (int i = 1; i < h; ++i)
                if (std::abs(v(i)) > std::abs(v(arg))) arg = i;
            if (v(arg) < 0.0f) v = -v;
            pca.basis.col(k) = v;
        }
        return pca;
    }

    Eigen::MatrixXf project(const Eigen::MatrixXf& features) const {
        return (features.rowwise() - mean) * basis;
    }
};

} // namespace

namespace {

// Two-class sub-corpus and the three (image, audio) pairings fed to the
// trained models.
struct McgurkSetup {
    Corpus sub;
    std::pair<std::vector<int>, std::vector<int>> cond_a, cond_b, cond_x;
};

McgurkSetup build_mcgurk_setup(const ExperimentConfig& cfg, const Corpus& corpus) {
    const int cls_a = cfg.mcgurk.class_a;
    const int cls_b = cfg.mcgurk.class_b;

    McgurkSetup setup;
    Corpus& sub = setup.sub;
    auto keep_images = [&](const std::vector<ImageSample>& in, std::vector<ImageSample>& out) {
        for (const auto& s : in)
            if (s.label == cls_a || s.label == cls_b) out.push_back(s);
    };
    keep_images(corpus.train_images, sub.train_images);
    keep_images(corpus.test_images, sub.test_images);
    for (std::size_t i = 0; i < corpus.train_audio.size(); ++i)
        if (corpus.train_audio[i].label == cls_a || corpus.train_audio[i].label == cls_b) {
            sub.train_audio.push_back(corpus.train_audio[i]);
            sub.train_spec.push_back(corpus.train_spec[i]);
        }
    for (std::size_t i = 0; i < corpus.test_audio.size(); ++i)
        if (corpus.test_audio[i].label == cls_a || corpus.test_audio[i].label == cls_b) {
            sub.test_audio.push_back(corpus.test_audio[i]);
            sub.test_spec.push_back(corpus.test_spec[i]);
        }
    if (sub.train_images.empty() || sub.train_audio.empty())
        throw DataError("mcgurk: the two classes are missing from the corpus");
    if (cfg.mcgurk.samples_per_class > 0) {
        std::vector<ImageSample> kept;
        int na = 0, nb = 0;
        for (const auto& s : sub.train_images) {
            int& n = s.label == cls_a ? na : nb;
            if (n < cfg.mcgurk.samples_per_class) {
                kept.push_back(s);
                ++n;
            }
        }
        sub.train_images = std::move(kept);
    }

    std::vector<int> img_a, img_b, aud_a, aud_b;
    for (std::size_t i = 0; i < sub.test_images.size(); ++i)
        (sub.test_images[i].label == cls_a ? img_a : img_b).push_back(int(i));
    for (std::size_t i = 0; i < sub.test_audio.size(); ++i)
        (sub.test_audio[i].label == cls_a ? aud_a : aud_b).push_back(int(i));
    if (img_a.empty() || img_b.empty() || aud_a.empty() || aud_b.empty())
        throw DataError("mcgurk: test split lacks one of the two classes");

    auto paired = [](const std::vector<int>& imgs, const std::vector<int>& auds, int limit) {
        std::pair<std::vector<int>, std::vector<int>> out;
        const int n = std::min<int>(limit, int(imgs.size()));
        for (int i = 0; i < n; ++i) {
            out.first.push_back(imgs[i]);
            out.second.push_back(auds[i % auds.size()]);
        }
        return out;
    };
    const int limit = cfg.mcgurk.samples_per_class > 0 ? cfg.mcgurk.samples_per_class : 1 << 30;
    setup.cond_a = paired(img_a, aud_a, limit);
    setup.cond_b = paired(img_b, aud_b, limit);
    const auto& incon_imgs = cfg.mcgurk.inconsistent_visual == cls_a ? img_a : img_b;
    const auto& incon_auds = cfg.mcgurk.inconsistent_audio == cls_a ? aud_a : aud_b;
    setup.cond_x = paired(incon_imgs, incon_auds, limit);
    return setup;
}

// Projects one model's integration-layer rates, assigns the three conditions
// against the consistent-cluster centroids, and appends counts and feature
// rows.
void analyze_mcgurk_model(const ExperimentConfig& cfg, const McgurkSetup& setup,
                          const Weights& weights, const MotifMask& mask, std::uint64_t fseed,
                          int rep, McgurkRuleResult& out, std::ofstream& feat) {
    const Eigen::MatrixXf rates_a = hidden_rates(cfg, setup.sub, weights, mask,
                                                 setup.cond_a.first, setup.cond_a.second, fseed);
    const Eigen::MatrixXf rates_b = hidden_rates(cfg, setup.sub, weights, mask,
                                                 setup.cond_b.first, setup.cond_b.second,
                                                 fseed + 1);
    const Eigen::MatrixXf rates_x = hidden_rates(cfg, setup.sub, weights, mask,
                                                 setup.cond_x.first, setup.cond_x.second,
                                                 fseed + 2);

    Eigen::MatrixXf consistent(rates_a.rows() + rates_b.rows(), rates_a.cols());
    consistent << rates_a, rates_b;
    const Pca2 pca = Pca2::fit(consistent);
    const Eigen::MatrixXf pa = pca.project(rates_a);
    const Eigen::MatrixXf pb = pca.project(rates_b);
    const Eigen::MatrixXf px = pca.project(rates_x);

    const Eigen::RowVector2f centroid_a = pa.colwise().mean();
    const Eigen::RowVector2f centroid_b = pb.colwise().mean();

    // Novelty radius: mean of the two clusters' 95th-percentile distances to
    // their own centroid.
    auto radius95 = [](const Eigen::MatrixXf& pts, const Eigen::RowVector2f& c) {
        std::vector<float> d(pts.rows());
        for (int i = 0; i < pts.rows(); ++i) d[i] = (pts.row(i) - c).norm();
        std::sort(d.begin(), d.end());
        if (d.empty()) return 0.0f;
        const auto k = static_cast<std::size_t>(0.95 * double(d.size() - 1) + 0.5);
        return d[std::min(k, d.size() - 1)];
    };
    const float tau = 0.5f * (radius95(pa, centroid_a) + radius95(pb, centroid_b));

    auto classify = [&](const Eigen::MatrixXf& pts, McgurkCondition& bucket,
                        const std::vector<int>& imgs, const std::vector<int>& auds, int base_id) {
        for (int i = 0; i < pts.rows(); ++i) {
            const float da = (pts.row(i) - centroid_a).norm();
            const float db = (pts.row(i) - centroid_b).norm();
            const char* assigned;
            if (da > tau && db > tau) {
                ++bucket.assigned_novel;
                assigned = "novel";
            } else if (da <= db) {
                ++bucket.assigned_a;
                assigned = "a";
            } else {
                ++bucket.assigned_b;
                assigned = "b";
            }
            if (feat.is_open()) {
                char line[160];
                std::snprintf(line, sizeof(line), "%d,%d,%d,%.6f,%.6f,%s\n",
                              base_id + rep * 100000 + i, setup.sub.test_images[imgs[i]].label,
                              setup.sub.test_audio[auds[i]].label, double(pts(i, 0)),
                              double(pts(i, 1)), assigned);
                feat << line;
            }
        }
    };
    classify(pa, out.conditions[0], setup.cond_a.first, setup.cond_a.second, 0);
    classify(pb, out.conditions[1], setup.cond_b.first, setup.cond_b.second, 1000000);
    classify(px, out.conditions[2], setup.cond_x.first, setup.cond_x.second, 2000000);
}

McgurkResult init_mcgurk_result() {
    McgurkResult result;
    result.reward.rule = "reward";
    result.bp.rule = "bp";
    for (auto* r : {&result.reward, &result.bp})
        r->conditions = {{"consistent_a", 0, 0, 0},
                         {"consistent_b", 0, 0, 0},
                         {"inconsistent", 0, 0, 0}};
    return result;
}

void finish_mcgurk_result(McgurkResult& result, const std::string& out_dir) {
    for (auto* r : {&result.reward, &result.bp}) {
        const McgurkCondition& x = r->conditions[2];
        const int total = x.assigned_a + x.assigned_b + x.assigned_novel;
        r->novel_fraction = total == 0 ? 0.0 : double(x.assigned_novel) / double(total);
    }
    if (!out_dir.empty()) {
        std::ofstream sum((fs::path(out_dir) / "mcgurk_summary.csv").string());
        sum << "rule,condition,assigned_a,assigned_b,assigned_novel\n";
        for (const auto* r : {&result.reward, &result.bp})
            for (const auto& c : r->conditions)
                sum << r->rule << ',' << c.name << ',' << c.assigned_a << ',' << c.assigned_b
                    << ',' << c.assigned_novel << '\n';
    }
}

void open_feature_files(const std::string& out_dir, std::ofstream& feat_reward,
                        std::ofstream& feat_bp) {
    if (out_dir.empty()) return;
    feat_reward.open((fs::path(out_dir) / "mcgurk_features_reward.csv").string());
    feat_bp.open((fs::path(out_dir) / "mcgurk_features_bp.csv").string());
    for (auto* f : {&feat_reward, &feat_bp})
        (*f) << "sample_id,vis_label,aud_label,pc1,pc2,assignment\n";
}

} // namespace

McgurkResult run_mcgurk(const ExperimentConfig& cfg, const Corpus& corpus,
                        const std::string& out_dir) {
    if (!out_dir.empty()) fs::create_directories(out_dir);
    const McgurkSetup setup = build_mcgurk_setup(cfg, corpus);

    ExperimentConfig mc_cfg = cfg;
    mc_cfg.train.epochs = cfg.mcgurk.epochs;

    McgurkResult result = init_mcgurk_result();
    std::ofstream feat_reward, feat_bp;
    open_feature_files(out_dir, feat_reward, feat_bp);

    for (int rep = 0; rep < cfg.mcgurk.repeats; ++rep) {
        const std::uint64_t seed = cfg.train.seed + std::uint64_t(rep);
        const MotifMask mask_v = learn_mask(mc_cfg, setup.sub, Modality::visual, seed, nullptr);
        const MotifMask mask_a = learn_mask(mc_cfg, setup.sub, Modality::auditory, seed, nullptr);
        const MotifMask mask = integrate(mask_v, mask_a);

        for (const std::string rule : {std::string("reward"), std::string("bp")}) {
            const TrainedModel model =
                train_model(mc_cfg, setup.sub, Modality::multi, mask, rule, seed, nullptr);
            McgurkRuleResult& out = rule == "reward" ? result.reward : result.bp;
            std::ofstream& feat = rule == "reward" ? feat_reward : feat_bp;
            const std::uint64_t fseed = mix_seed(seed, 0x4d434755, rule == "reward" ? 1 : 2);
            analyze_mcgurk_model(mc_cfg, setup, model.weights, mask, fseed, rep, out, feat);
        }
    }

    finish_mcgurk_result(result, out_dir);
    return result;
}

McgurkResult run_mcgurk_from_checkpoints(const ExperimentConfig& cfg, const Corpus& corpus,
                                         const std::string& out_dir,
                                         const std::string& reward_ck_path,
                                         const std::string& bp_ck_path) {
    if (!out_dir.empty()) fs::create_directories(out_dir);
    const McgurkSetup setup = build_mcgurk_setup(cfg, corpus);

    McgurkResult result = init_mcgurk_result();
    std::ofstream feat_reward, feat_bp;
    open_feature_files(out_dir, feat_reward, feat_bp);

    const std::pair<std::string, McgurkRuleResult*> runs[2] = {{reward_ck_path, &result.reward},
                                                               {bp_ck_path, &result.bp}};
    for (const auto& [path, out] : runs) {
        const Checkpoint ck = Checkpoint::load(path);
        Weights w;
        RewardConfig rc;
        model_from_checkpoint(ck, w, rc);
        MotifMask mask = ck.mask;
        if (mask.n() != cfg.network.hidden_size)
            throw StateError("mcgurk: checkpoint mask does not match the configured model");
        std::ofstream& feat = out == &result.reward ? feat_reward : feat_bp;
        analyze_mcgurk_model(cfg, setup, w, mask,
                             mix_seed(ck.rng_seed, 0x4d434755, out == &result.reward ? 1 : 2), 0,
                             *out, feat);
    }

    finish_mcgurk_result(result, out_dir);
    return result;
}

CostReport training_cost(const std::vector<std::vector<double>>& curves,
                         const std::vector<long>& param_counts, int n_levels) {
    if (curves.size() < 2) throw GridError("training_cost needs at least two curves");
    if (curves.size() != param_counts.size())
        throw ShapeError("training_cost: one parameter count per curve");
    if (n_levels < 1) throw GridError("training_cost: need at least one level");

    // Monotone envelopes.
    std::vector<std::vector<double>> env(curves.size());
    for (std::size_t i = 0; i < curves.size(); ++i) {
        if (curves[i].empty()) throw GridError("training_cost: empty curve");
        env[i] = curves[i];
        for (std::size_t e = 1; e < env[i].size(); ++e)
            env[i][e] = std::max(env[i][e], env[i][e - 1]);
    }

    double lo = -1e300, hi = 1e300;
    for (const auto& e : env) {
        lo = std::max(lo, e.front());
        hi = std::min(hi, e.back());
    }
    if (lo > hi) throw GridError("training_cost: accuracy ranges do not overlap");

    CostReport report;
    for (int l = 0; l < n_levels; ++l)
        report.grid.push_back(n_levels == 1 ? hi : lo + (hi - lo) * double(l) / double(n_levels - 1));

    for (std::size_t i = 0; i < env.size(); ++i) {
        double epoch_sum = 0.0;
        for (double level : report.grid) {
            std::size_t e = 0;
            while (e < env[i].size() && env[i][e] < level - 1e-12) ++e;
            epoch_sum += double(e + 1); // epochs are 1-indexed
        }
        report.costs.push_back(epoch_sum / double(n_levels) * double(param_counts[i]));
    }
    report.savings_ratio = report.costs[1] == 0.0 ? 0.0 : 1.0 - report.costs[0] / report.costs[1];
    return report;
}

Checkpoint model_to_checkpoint(const ExperimentConfig& cfg, const TrainedModel& model,
                               const MotifMask& mask, std::uint64_t seed) {
    Checkpoint ck;
    ck.config_json = cfg.to_json_text();
    ck.rng_seed = seed;
    ck.sign_orientation = static_cast<std::int8_t>(model.reward.sign_orientation);
    ck.mask = mask;
    const Weights& w = model.weights;
    if (w.w_conv_v.size() > 0) ck.add_tensor("w_conv_v", w.w_conv_v);
    if (w.w_conv_a.size() > 0) ck.add_tensor("w_conv_a", w.w_conv_a);
    if (w.w_proj_v.size() > 0) ck.add_tensor("w_proj_v", w.w_proj_v);
    if (w.w_proj_a.size() > 0) ck.add_tensor("w_proj_a", w.w_proj_a);
    ck.add_tensor("w_rec", w.w_rec);
    ck.add_tensor("w_out", w.w_out);
    ck.add_tensor("b_rand_hidden", model.reward.b_rand_hidden);
    ck.add_tensor("r_embed", model.reward.r_embed);
    return ck;
}

void model_from_checkpoint(const Checkpoint& ck, Weights& w, RewardConfig& rc) {
    auto fetch = [&](const char* name, Eigen::MatrixXf& dst, bool required) {
        const Eigen::MatrixXf* t = ck.find_tensor(name);
        if (t == nullptr) {
            if (required)
                throw CheckpointError(std::string("checkpoint lacks tensor ") + name);
            dst.resize(0, 0);
            return;
        }
        dst = *t;
    };
    fetch("w_conv_v", w.w_conv_v, false);
    fetch("w_conv_a", w.w_conv_a, false);
    fetch("w_proj_v", w.w_proj_v, false);
    fetch("w_proj_a", w.w_proj_a, false);
    fetch("w_rec", w.w_rec, true);
    fetch("w_out", w.w_out, true);
    fetch("b_rand_hidden", rc.b_rand_hidden, false);
    fetch("r_embed", rc.r_embed, false);
    rc.sign_orientation = ck.sign_orientation;
}

void write_epoch_csv(const std::string& path, const std::vector<EpochStats>& epochs) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "epoch,train_loss,train_acc,test_acc\n";
    char buf[128];
    for (std::size_t e = 0; e < epochs.size(); ++e) {
        std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.6f\n", e + 1, epochs[e].train_loss,
                      epochs[e].train_acc, epochs[e].test_acc);
        out << buf;
    }
}

std::vector<double> read_epoch_csv_accuracy(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::vector<double> acc;
    std::string line;
    std::getline(in, line); // header
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto last = line.rfind(',');
        if (last == std::string::npos)
            throw ParseError("epoch csv line " + std::to_string(line_no) + ": no columns");
        try {
            acc.push_back(std::stod(line.substr(last + 1)));
        } catch (const std::exception&) {
            throw ParseError("epoch csv line " + std::to_string(line_no) + ": bad accuracy");
        }
    }
    return acc;
}

void write_cocktail_summary(const std::string& path, const CocktailResult& result) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "model,noise,acc_mean,acc_std\n";
    char buf[128];
    for (const RunRecord& r : result.records) {
        if (r.has_std)
            std::snprintf(buf, sizeof(buf), "%s,%.2f,%.6f,%.6f\n", r.model.c_str(), r.noise,
                          r.mean, r.stddev);
        else
            std::snprintf(buf, sizeof(buf), "%s,%.2f,%.6f,\n", r.model.c_str(), r.noise, r.mean);
        out << buf;
    }
}

void write_cost_csv(const std::string& path, const CostReport& report,
                    const std::vector<long>& param_counts) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "algorithm,params,cost,savings_ratio\n";
    char buf[128];
    for (std::size_t i = 0; i < report.costs.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%ld,%.6f,%.6f\n", i + 1, param_counts[i],
                      report.costs[i], i == 0 ? report.savings_ratio : 0.0);
        out << buf;
    }
}

} // namespace msnn
