#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "msnn/checkpoint.hpp"
#include "msnn/motif.hpp"
#include "msnn/synth.hpp"
#include "test_support.hpp"

using namespace msnn;
using msnn_test::TempDir;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(MSNN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Shared tiny corpus + config; built once, reused across cases.
struct CliWorld {
    TempDir tmp{"cli"};
    std::string config_path;

    CliWorld() {
        make_visual_corpus(tmp.file("tri.idx"), tmp.file("trl.idx"), 60, 100);
        make_visual_corpus(tmp.file("tei.idx"), tmp.file("tel.idx"), 20, 101);
        make_audio_corpus(tmp.file("audio_train"), 3, 102, 8000);
        make_audio_corpus(tmp.file("audio_test"), 2, 103, 8000);

        config_path = tmp.file("config.json");
        std::ofstream cfg(config_path);
        cfg << R"({
  "data": {
    "train_images": ")" << tmp.file("tri.idx") << R"(",
    "train_labels": ")" << tmp.file("trl.idx") << R"(",
    "test_images": ")" << tmp.file("tei.idx") << R"(",
    "test_labels": ")" << tmp.file("tel.idx") << R"(",
    "audio_train_dir": ")" << tmp.file("audio_train") << R"(",
    "audio_test_dir": ")" << tmp.file("audio_test") << R"(",
    "train_limit": 60,
    "test_limit": 20
  },
  "model": {"hidden_size": 16, "conv_channels": 3, "fft_window": 256, "fft_hop": 128},
  "train": {"epochs": 1, "mask_epochs": 1, "batch_size": 16, "lr": 0.02, "seed": 5},
  "noise": {"levels": [0.0], "repeats": 1},
  "mcgurk": {"epochs": 1, "repeats": 1, "samples_per_class": 6}
})";
    }
};

CliWorld& world() {
    static CliWorld w;
    return w;
}

} // namespace

TEST_CASE("cli: train writes a deterministic checkpoint and epoch csv") {
    CliWorld& w = world();
    const std::string out1 = w.tmp.file("run1");
    const std::string out2 = w.tmp.file("run2");
    CHECK(run_cli("--config " + w.config_path + " --seed 11 --out " + out1 +
                  " train --modality visual --rule bp --epochs 1") == 0);
    CHECK(run_cli("--config " + w.config_path + " --seed 11 --out " + out2 +
                  " train --modality visual --rule bp --epochs 1") == 0);
    CHECK(slurp(out1 + "/checkpoint.msnn") == slurp(out2 + "/checkpoint.msnn"));
    CHECK(slurp(out1 + "/epochs.csv") == slurp(out2 + "/epochs.csv"));
}

TEST_CASE("cli: multi-sensory training without a mask is a usage error") {
    CliWorld& w = world();
    CHECK(run_cli("--config " + w.config_path + " --out " + w.tmp.file("nomask") +
                  " train --modality multi") == 2);
}

TEST_CASE("cli: zero-epoch training writes the initialization") {
    CliWorld& w = world();
    const std::string out = w.tmp.file("init");
    CHECK(run_cli("--config " + w.config_path + " --seed 3 --out " + out +
                  " train --modality visual --epochs 0") == 0);
    const Checkpoint ck = Checkpoint::load(out + "/checkpoint.msnn");
    CHECK(ck.find_tensor("w_rec") != nullptr);
    // Same seed, fresh initialization elsewhere must agree bit for bit.
    const std::string out_b = w.tmp.file("init_b");
    CHECK(run_cli("--config " + w.config_path + " --seed 3 --out " + out_b +
                  " train --modality visual --epochs 0") == 0);
    CHECK(slurp(out + "/checkpoint.msnn") == slurp(out_b + "/checkpoint.msnn"));
}

TEST_CASE("cli: extract-mask, integrate, census flow") {
    CliWorld& w = world();
    const std::string out = w.tmp.file("flow");
    REQUIRE(run_cli("--config " + w.config_path + " --seed 21 --out " + out +
                    " train --modality visual --rule bp --epochs 1") == 0);

    const std::string mask_v = w.tmp.file("mask_v.txt");
    CHECK(run_cli("extract-mask --checkpoint " + out + "/checkpoint.msnn --out-mask " + mask_v) ==
          0);
    const MotifMask mv = read_mask(mask_v);
    CHECK(mv.n() == 16);

    // Union with itself is idempotent.
    const std::string mask_u = w.tmp.file("mask_u.txt");
    CHECK(run_cli("integrate --mask-s " + mask_v + " --mask-t " + mask_v + " --out-mask " +
                  mask_u) == 0);
    CHECK(slurp(mask_u) == slurp(mask_v));

    // Union with an empty mask returns the original edge set.
    const std::string empty = w.tmp.file("empty.txt");
    write_mask(empty, MotifMask::zeros(16));
    CHECK(run_cli("integrate --mask-s " + mask_v + " --mask-t " + empty + " --out-mask " +
                  mask_u) == 0);
    CHECK(read_mask(mask_u).edge_count() == mv.edge_count());

    // Disjoint single-edge masks sum their edges.
    MotifMask a = MotifMask::zeros(16), b = MotifMask::zeros(16);
    a.adj(0, 1) = 1.0f;
    b.adj(1, 2) = 1.0f;
    write_mask(w.tmp.file("a.txt"), a);
    write_mask(w.tmp.file("b.txt"), b);
    CHECK(run_cli("integrate --mask-s " + w.tmp.file("a.txt") + " --mask-t " +
                  w.tmp.file("b.txt") + " --out-mask " + mask_u) == 0);
    CHECK(read_mask(mask_u).edge_count() == 2);

    const std::string census_csv = w.tmp.file("census.csv");
    CHECK(run_cli("--seed 9 census --mask " + mask_v + " --controls 20 --out-csv " +
                  census_csv) == 0);
    std::ifstream in(census_csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "class_id,canonical_edges,count,frequency,p_value,plausible_frequency");

    // Census is deterministic under a fixed seed.
    const std::string census2 = w.tmp.file("census2.csv");
    CHECK(run_cli("--seed 9 census --mask " + mask_v + " --controls 20 --out-csv " + census2) ==
          0);
    CHECK(slurp(census_csv) == slurp(census2));
}

TEST_CASE("cli: extract-mask on a corrupt checkpoint exits 4") {
    CliWorld& w = world();
    const std::string bad = w.tmp.file("bad.msnn");
    {
        std::ofstream out(bad, std::ios::binary);
        out.write("JUNKJUNKJUNK", 12);
    }
    CHECK(run_cli("extract-mask --checkpoint " + bad + " --out-mask " + w.tmp.file("m.txt")) ==
          4);
}

TEST_CASE("cli: census on a malformed mask exits 5") {
    CliWorld& w = world();
    const std::string bad = w.tmp.file("badmask.txt");
    {
        std::ofstream out(bad);
        out << "4\n1 nonsense\n";
    }
    CHECK(run_cli("census --mask " + bad + " --controls 5 --out-csv " + w.tmp.file("c.csv")) ==
          5);
}

TEST_CASE("cli: census of an empty mask reports zero counts") {
    CliWorld& w = world();
    const std::string empty = w.tmp.file("empty_census.txt");
    write_mask(empty, MotifMask::zeros(8));
    const std::string csv = w.tmp.file("empty_census.csv");
    CHECK(run_cli("census --mask " + empty + " --controls 5 --out-csv " + csv) == 0);
    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        std::istringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ','); // class id
        std::getline(ss, cell, ','); // edges
        std::getline(ss, cell, ','); // count
        CHECK(cell == "0");
    }
    CHECK(rows == 13);
}

TEST_CASE("cli: simulate cost needs two curves, exits 6 with one") {
    CliWorld& w = world();
    const std::string csv1 = w.tmp.file("curve1.csv");
    {
        std::ofstream out(csv1);
        out << "epoch,train_loss,train_acc,test_acc\n1,0.5,0.5,0.5\n2,0.4,0.7,0.9\n";
    }
    const std::string one_curve = w.tmp.file("cost_one.json");
    {
        std::ofstream out(one_curve);
        out << R"({"cost": {"levels": 2, "curves": [{"csv": ")" << csv1
            << R"(", "params": 100}]}})";
    }
    CHECK(run_cli("--config " + one_curve + " --out " + w.tmp.file("cost_out") +
                  " simulate cost") == 6);

    const std::string csv2 = w.tmp.file("curve2.csv");
    {
        std::ofstream out(csv2);
        out << "epoch,train_loss,train_acc,test_acc\n1,0.5,0.5,0.5\n2,0.4,0.6,0.7\n3,0.3,0.8,0.9\n";
    }
    const std::string two_curves = w.tmp.file("cost_two.json");
    {
        std::ofstream out(two_curves);
        out << R"({"cost": {"levels": 2, "curves": [{"csv": ")" << csv1
            << R"(", "params": 100}, {"csv": ")" << csv2 << R"(", "params": 100}]}})";
    }
    CHECK(run_cli("--config " + two_curves + " --out " + w.tmp.file("cost_out2") +
                  " simulate cost") == 0);
    const std::string cost_csv = slurp(w.tmp.file("cost_out2") + "/cost.csv");
    CHECK(cost_csv.find("150.000000") != std::string::npos);
    CHECK(cost_csv.find("200.000000") != std::string::npos);
}

TEST_CASE("cli: simulate mcgurk with only one checkpoint exits 3") {
    CliWorld& w = world();
    CHECK(run_cli("--config " + w.config_path + " --out " + w.tmp.file("mc_out") +
                  " simulate mcgurk --bp-checkpoint " + w.tmp.file("nonexistent.msnn")) == 3);
}

TEST_CASE("cli: eval reports accuracy for a trained checkpoint") {
    CliWorld& w = world();
    const std::string out = w.tmp.file("eval_run");
    REQUIRE(run_cli("--config " + w.config_path + " --seed 13 --out " + out +
                    " train --modality auditory --rule bp --epochs 1") == 0);
    CHECK(run_cli("--config " + w.config_path + " eval --checkpoint " + out +
                  "/checkpoint.msnn") == 0);
}

TEST_CASE("cli: missing config file exits 2, missing data exits 3") {
    CliWorld& w = world();
    CHECK(run_cli("--config /nonexistent/cfg.json train") == 2);

    const std::string bad_data = w.tmp.file("bad_data.json");
    {
        std::ofstream out(bad_data);
        out << R"({"data": {"train_images": "/nonexistent/i.idx", "train_labels": "/nonexistent/l.idx", "test_images": "/nonexistent/ti.idx", "test_labels": "/nonexistent/tl.idx"}})";
    }
    CHECK(run_cli("--config " + bad_data + " train --modality visual") == 3);
}
