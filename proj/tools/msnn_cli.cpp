// Command-line front end: training, mask extraction/integration, triad
// census, and the cocktail/mcgurk/cost simulations.
//
// Exit codes: 0 success, 2 configuration/usage, 3 missing data or state,
// 4 checkpoint problems, 5 malformed text input, 6 experiment definition.

#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "msnn/checkpoint.hpp"
#include "msnn/config.hpp"
#include "msnn/errors.hpp"
#include "msnn/experiments.hpp"
#include "msnn/motif.hpp"

namespace fs = std::filesystem;
using namespace msnn;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 1;
    std::string out = ".";
};

ExperimentConfig load_config(const GlobalArgs& g) {
    ExperimentConfig cfg =
        g.config_path.empty() ? ExperimentConfig{} : ExperimentConfig::from_file(g.config_path);
    if (g.seed_set) cfg.train.seed = g.seed;
    return cfg;
}

int run_train(const GlobalArgs& g, const std::string& modality_arg, const std::string& rule_arg,
              int epochs_arg, const std::string& mask_path) {
    ExperimentConfig cfg = load_config(g);
    if (!modality_arg.empty()) cfg.network.modality = modality_from_string(modality_arg);
    if (!rule_arg.empty()) cfg.train.rule = rule_arg;
    if (epochs_arg >= 0) cfg.train.epochs = epochs_arg;
    cfg.validate();

    if (cfg.network.modality == Modality::multi && mask_path.empty())
        throw ConfigError("train: multi-sensory training requires --mask");

    const Corpus corpus = load_corpus(cfg);
    MotifMask mask = mask_path.empty() ? MotifMask::full(cfg.network.hidden_size)
                                       : read_mask(mask_path);
    if (mask.n() != cfg.network.hidden_size)
        throw ConfigError("train: mask size does not match hidden layer");

    const TrainedModel model = train_model(cfg, corpus, cfg.network.modality, mask,
                                           cfg.train.rule, cfg.train.seed, nullptr);

    fs::create_directories(g.out);
    const Checkpoint ck = model_to_checkpoint(cfg, model, mask, cfg.train.seed);
    ck.save((fs::path(g.out) / "checkpoint.msnn").string());
    write_epoch_csv((fs::path(g.out) / "epochs.csv").string(), model.epochs);
    if (!model.epochs.empty())
        std::printf("final train_acc %.4f test_acc %.4f\n", model.epochs.back().train_acc,
                    model.epochs.back().test_acc);
    std::printf("checkpoint written to %s\n", (fs::path(g.out) / "checkpoint.msnn").c_str());
    return 0;
}

int run_extract_mask(const std::string& ck_path, const std::string& rule_text,
                     const std::string& out_path) {
    const Checkpoint ck = Checkpoint::load(ck_path);
    const Eigen::MatrixXf* w_rec = ck.find_tensor("w_rec");
    if (w_rec == nullptr) throw CheckpointError("checkpoint lacks recurrent weights");
    const MotifMask mask = binarize(*w_rec, ThresholdRule::parse(rule_text));
    write_mask(out_path, mask);
    std::printf("mask %dx%d, %ld edges, density %.4f\n", mask.n(), mask.n(), mask.edge_count(),
                mask.density());
    return 0;
}

int run_integrate(const std::string& mask_s, const std::string& mask_t,
                  const std::string& out_path) {
    const MotifMask a = read_mask(mask_s);
    const MotifMask b = read_mask(mask_t);
    const MotifMask u = integrate(a, b);
    write_mask(out_path, u);
    std::printf("union mask: %ld edges, density %.4f\n", u.edge_count(), u.density());
    return 0;
}

int run_census(const GlobalArgs& g, const std::string& mask_path, int controls,
               const std::string& out_path) {
    const MotifMask mask = read_mask(mask_path);
    MotifCensus census = triad_census(mask);
    EnsembleConfig ecfg;
    ecfg.n_controls = controls;
    ecfg.seed = g.seed_set ? g.seed : 0;
    ecfg.n_threads = g.threads;
    census = significance(mask, census, ecfg);
    write_census_csv(out_path, census);
    std::printf("census written to %s (total connected triples %ld)\n", out_path.c_str(),
                census.total());
    return 0;
}

int run_simulate(const GlobalArgs& g, const std::string& kind,
                 const std::string& reward_ck_path, const std::string& bp_ck_path) {
    ExperimentConfig cfg = load_config(g);
    fs::create_directories(g.out);

    if (kind == "cost") {
        if (cfg.cost.curves.size() < 2)
            throw GridError("simulate cost: config must list at least two curves");
        std::vector<std::vector<double>> curves;
        std::vector<long> params;
        for (const CostCurveRef& ref : cfg.cost.curves) {
            curves.push_back(read_epoch_csv_accuracy(ref.csv));
            params.push_back(ref.params);
        }
        const CostReport report = training_cost(curves, params, cfg.cost.levels);
        write_cost_csv((fs::path(g.out) / "cost.csv").string(), report, params);
        std::printf("cost_1 %.2f cost_2 %.2f savings %.4f\n", report.costs[0], report.costs[1],
                    report.savings_ratio);
        return 0;
    }

    if (kind == "cocktail") {
        cfg.network.modality = Modality::multi;
        const Corpus corpus = load_corpus(cfg);
        const CocktailResult result = run_cocktail(cfg, corpus, g.out, g.threads);
        for (const RunRecord& r : result.records)
            std::printf("%s p=%.1f acc %.4f%s\n", r.model.c_str(), r.noise, r.mean,
                        r.has_std ? (" +- " + std::to_string(r.stddev)).c_str() : "");
        return 0;
    }

    if (kind == "mcgurk") {
        // Either both pre-trained checkpoints or neither (self-training run).
        if (reward_ck_path.empty() != bp_ck_path.empty())
            throw StateError("simulate mcgurk: need both --reward-checkpoint and --bp-checkpoint");
        cfg.network.modality = Modality::multi;
        const Corpus corpus = load_corpus(cfg);
        McgurkResult result;
        if (!reward_ck_path.empty()) {
            result = run_mcgurk_from_checkpoints(cfg, corpus, g.out, reward_ck_path, bp_ck_path);
        } else {
            result = run_mcgurk(cfg, corpus, g.out);
        }
        std::printf("novel fraction: reward %.4f bp %.4f\n", result.reward.novel_fraction,
                    result.bp.novel_fraction);
        return 0;
    }

    throw ConfigError("simulate: unknown kind " + kind);
}

int run_eval(const GlobalArgs& g, const std::string& ck_path) {
    ExperimentConfig cfg = load_config(g);
    const Checkpoint ck = Checkpoint::load(ck_path);
    ExperimentConfig stored = ExperimentConfig::from_json_text(ck.config_json);
    // Data paths may be overridden by the current config; the model geometry
    // comes from the checkpoint snapshot.
    stored.data = cfg.data;
    Weights w;
    RewardConfig rc;
    model_from_checkpoint(ck, w, rc);
    MotifMask mask = ck.mask;
    if (mask.n() == 0) mask = MotifMask::full(stored.network.hidden_size);

    const Corpus corpus = load_corpus(stored);
    const double acc = evaluate(stored, corpus, w, stored.network.modality, mask,
                                mix_seed(ck.rng_seed, 0x4556414c), nullptr);
    std::printf("test accuracy %.4f\n", acc);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"M-SNN: motif-topology improved spiking neural network"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config_path, "experiment config (JSON)");
    auto* seed_opt = app.add_option("--seed", g.seed, "base RNG seed");
    app.add_option("--threads", g.threads, "worker cap for parallel runs");
    app.add_option("--out", g.out, "output directory");

    auto* train = app.add_subcommand("train", "train one modality and write a checkpoint");
    std::string modality_arg, rule_arg, mask_path;
    int epochs_arg = -1;
    train->add_option("--modality", modality_arg, "visual|auditory|multi");
    train->add_option("--rule", rule_arg, "bp|reward");
    train->add_option("--epochs", epochs_arg, "override training epochs");
    train->add_option("--mask", mask_path, "motif mask file (required for multi)");

    auto* extract = app.add_subcommand("extract-mask", "binarize recurrent weights");
    std::string ck_path, threshold_text = "mean-abs", mask_out = "mask.txt";
    extract->add_option("--checkpoint", ck_path, "checkpoint file")->required();
    extract->add_option("--rule", threshold_text, "mean-abs | topk:<frac> | abs:<theta>");
    extract->add_option("--out-mask", mask_out, "output mask file");

    auto* integrate_cmd = app.add_subcommand("integrate", "union of two motif masks");
    std::string mask_s, mask_t, mask_union_out = "mask_union.txt";
    integrate_cmd->add_option("--mask-s", mask_s, "first mask")->required();
    integrate_cmd->add_option("--mask-t", mask_t, "second mask")->required();
    integrate_cmd->add_option("--out-mask", mask_union_out, "output mask file");

    auto* census_cmd = app.add_subcommand("census", "triad census with significance");
    std::string census_mask, census_out = "census.csv";
    int controls = 2000;
    census_cmd->add_option("--mask", census_mask, "mask file")->required();
    census_cmd->add_option("--controls", controls, "control graph count");
    census_cmd->add_option("--out-csv", census_out, "census CSV path");

    auto* simulate = app.add_subcommand("simulate", "run cocktail | mcgurk | cost");
    std::string kind, reward_ck, bp_ck;
    simulate->add_option("kind", kind, "cocktail|mcgurk|cost")->required();
    simulate->add_option("--reward-checkpoint", reward_ck, "pre-trained reward model");
    simulate->add_option("--bp-checkpoint", bp_ck, "pre-trained bp model");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
    std::string eval_ck;
    eval_cmd->add_option("--checkpoint", eval_ck, "checkpoint file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    g.seed_set = seed_opt->count() > 0;

    try {
        if (app.got_subcommand(train))
            return run_train(g, modality_arg, rule_arg, epochs_arg, mask_path);
        if (app.got_subcommand(extract))
            return run_extract_mask(ck_path, threshold_text, mask_out);
        if (app.got_subcommand(integrate_cmd))
            return run_integrate(mask_s, mask_t, mask_union_out);
        if (app.got_subcommand(census_cmd))
            return run_census(g, census_mask, controls, census_out);
        if (app.got_subcommand(simulate))
            return run_simulate(g, kind, reward_ck, bp_ck);
        if (app.got_subcommand(eval_cmd))
            return run_eval(g, eval_ck);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const RangeError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const StateError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const CheckpointError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 5;
    } catch (const MaskError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 5;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 5;
    } catch (const TruncationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 5;
    } catch (const GridError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 6;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
