#include "msnn/config.hpp"

#include <fstream>

#include <json.hpp>

#include "msnn/errors.hpp"

using nlohmann::json;

namespace msnn {

namespace {

template <typename T>
void read_into(const json& section, const char* key, T& out) {
    if (!section.contains(key)) return;
    try {
        out = section.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: bad value for `") + key + "`: " + e.what());
    }
}

void read_section(const json& root, const char* name, const auto& fn) {
    if (!root.contains(name)) return;
    const json& section = root.at(name);
    if (!section.is_object()) throw ConfigError(std::string("config: `") + name + "` must be an object");
    fn(section);
}

} // namespace

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: parse failure: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config: top level must be an object");

    ExperimentConfig cfg;

    read_section(root, "data", [&](const json& s) {
        read_into(s, "train_images", cfg.data.train_images);
        read_into(s, "train_labels", cfg.data.train_labels);
        read_into(s, "test_images", cfg.data.test_images);
        read_into(s, "test_labels", cfg.data.test_labels);
        read_into(s, "audio_train_dir", cfg.data.audio_train_dir);
        read_into(s, "audio_test_dir", cfg.data.audio_test_dir);
        read_into(s, "train_limit", cfg.data.train_limit);
        read_into(s, "test_limit", cfg.data.test_limit);
    });

    read_section(root, "model", [&](const json& s) {
        read_into(s, "T", cfg.network.T);
        read_into(s, "hidden_size", cfg.network.hidden_size);
        read_into(s, "conv_kernel", cfg.network.conv_kernel);
        read_into(s, "conv_channels", cfg.network.conv_channels);
        read_into(s, "conv_stride", cfg.network.conv_stride);
        read_into(s, "n_classes", cfg.network.n_classes);
        std::string modality = to_string(cfg.network.modality);
        read_into(s, "modality", modality);
        cfg.network.modality = modality_from_string(modality);
        read_into(s, "visual_rows", cfg.network.visual_rows);
        read_into(s, "visual_cols", cfg.network.visual_cols);
        read_into(s, "mfcc_coeffs", cfg.encoder.mfcc_coeffs);
        read_into(s, "fft_window", cfg.encoder.fft_window);
        read_into(s, "fft_hop", cfg.encoder.fft_hop);
        read_into(s, "mel_filters", cfg.encoder.mel_filters);
        read_into(s, "rng_seed", cfg.encoder.rng_seed);
        cfg.encoder.T = cfg.network.T;
        cfg.network.audio_cols = cfg.encoder.mfcc_coeffs;
    });

    read_section(root, "lif", [&](const json& s) {
        read_into(s, "capacitance", cfg.lif.capacitance);
        read_into(s, "conductance", cfg.lif.conductance);
        read_into(s, "v_rest", cfg.lif.v_rest);
        read_into(s, "v_reset", cfg.lif.v_reset);
        read_into(s, "v_th", cfg.lif.v_th);
        read_into(s, "tau_ref", cfg.lif.tau_ref);
        read_into(s, "dt", cfg.lif.dt);
        read_into(s, "alpha", cfg.lif.alpha);
        read_into(s, "beta", cfg.lif.beta);
        read_into(s, "gamma", cfg.lif.gamma);
    });

    read_section(root, "train", [&](const json& s) {
        read_into(s, "lr", cfg.train.lr);
        read_into(s, "v_win", cfg.train.v_win);
        read_into(s, "rule", cfg.train.rule);
        read_into(s, "epochs", cfg.train.epochs);
        read_into(s, "batch_size", cfg.train.batch_size);
        read_into(s, "seed", cfg.train.seed);
        read_into(s, "mask_epochs", cfg.train.mask_epochs);
        read_into(s, "target_rate", cfg.train.target_rate);
        read_into(s, "threshold_rule", cfg.train.threshold_rule);
    });

    read_section(root, "noise", [&](const json& s) {
        read_into(s, "kind", cfg.noise.kind);
        read_into(s, "levels", cfg.noise.levels);
        read_into(s, "repeats", cfg.noise.repeats);
        read_into(s, "interferer", cfg.noise.interferer);
        read_into(s, "scene", cfg.noise.scene);
    });

    read_section(root, "mcgurk", [&](const json& s) {
        read_into(s, "class_a", cfg.mcgurk.class_a);
        read_into(s, "class_b", cfg.mcgurk.class_b);
        read_into(s, "inconsistent_visual", cfg.mcgurk.inconsistent_visual);
        read_into(s, "inconsistent_audio", cfg.mcgurk.inconsistent_audio);
        read_into(s, "epochs", cfg.mcgurk.epochs);
        read_into(s, "repeats", cfg.mcgurk.repeats);
        read_into(s, "samples_per_class", cfg.mcgurk.samples_per_class);
    });

    read_section(root, "cost", [&](const json& s) {
        read_into(s, "levels", cfg.cost.levels);
        if (s.contains("curves")) {
            cfg.cost.curves.clear();
            for (const json& c : s.at("curves")) {
                CostCurveRef ref;
                read_into(c, "csv", ref.csv);
                read_into(c, "params", ref.params);
                cfg.cost.curves.push_back(ref);
            }
        }
    });

    cfg.validate();
    return cfg;
}

void ExperimentConfig::validate() const {
    network.validate();
    encoder.validate();
    lif.validate();
    if (train.rule != "bp" && train.rule != "reward")
        throw ConfigError("config: train.rule must be `bp` or `reward`");
    if (train.epochs < 0 || train.batch_size < 1)
        throw ConfigError("config: bad train.epochs/batch_size");
    if (train.lr <= 0.0f || train.v_win <= 0.0f)
        throw ConfigError("config: lr and v_win must be positive");
    for (double p : noise.levels)
        if (p < 0.0 || p > 0.9 + 1e-9)
            throw RangeError("config: noise levels must lie in [0, 0.9]");
    if (noise.kind != "uniform" && noise.kind != "voice")
        throw ConfigError("config: noise.kind must be `uniform` or `voice`");
    if (noise.scene != 1 && noise.scene != 2)
        throw ConfigError("config: noise.scene must be 1 or 2");
    if (noise.repeats < 1) throw ConfigError("config: noise.repeats must be >= 1");
    if (cost.levels < 1) throw ConfigError("config: cost.levels must be >= 1");
}

std::string ExperimentConfig::to_json_text() const {
    json root;
    root["data"] = {{"train_images", data.train_images},
                    {"train_labels", data.train_labels},
                    {"test_images", data.test_images},
                    {"test_labels", data.test_labels},
                    {"audio_train_dir", data.audio_train_dir},
                    {"audio_test_dir", data.audio_test_dir},
                    {"train_limit", data.train_limit},
                    {"test_limit", data.test_limit}};
    root["model"] = {{"T", network.T},
                     {"hidden_size", network.hidden_size},
                     {"conv_kernel", network.conv_kernel},
                     {"conv_channels", network.conv_channels},
                     {"conv_stride", network.conv_stride},
                     {"n_classes", network.n_classes},
                     {"modality", to_string(network.modality)},
                     {"visual_rows", network.visual_rows},
                     {"visual_cols", network.visual_cols},
                     {"mfcc_coeffs", encoder.mfcc_coeffs},
                     {"fft_window", encoder.fft_window},
                     {"fft_hop", encoder.fft_hop},
                     {"mel_filters", encoder.mel_filters},
                     {"rng_seed", encoder.rng_seed}};
    root["lif"] = {{"capacitance", lif.capacitance}, {"conductance", lif.conductance},
                   {"v_rest", lif.v_rest},           {"v_reset", lif.v_reset},
                   {"v_th", lif.v_th},               {"tau_ref", lif.tau_ref},
                   {"dt", lif.dt},                   {"alpha", lif.alpha},
                   {"beta", lif.beta},               {"gamma", lif.gamma}};
    root["train"] = {{"lr", train.lr},
                     {"v_win", train.v_win},
                     {"rule", train.rule},
                     {"epochs", train.epochs},
                     {"batch_size", train.batch_size},
                     {"seed", train.seed},
                     {"mask_epochs", train.mask_epochs},
                     {"target_rate", train.target_rate},
                     {"threshold_rule", train.threshold_rule}};
    root["noise"] = {{"kind", noise.kind},
                     {"levels", noise.levels},
                     {"repeats", noise.repeats},
                     {"interferer", noise.interferer},
                     {"scene", noise.scene}};
    root["mcgurk"] = {{"class_a", mcgurk.class_a},
                      {"class_b", mcgurk.class_b},
                      {"inconsistent_visual", mcgurk.inconsistent_visual},
                      {"inconsistent_audio", mcgurk.inconsistent_audio},
                      {"epochs", mcgurk.epochs},
                      {"repeats", mcgurk.repeats},
                      {"samples_per_class", mcgurk.samples_per_class}};
    json curves = json::array();
    for (const CostCurveRef& c : cost.curves) curves.push_back({{"csv", c.csv}, {"params", c.params}});
    root["cost"] = {{"levels", cost.levels}, {"curves", curves}};
    return root.dump(2);
}

} // namespace msnn
