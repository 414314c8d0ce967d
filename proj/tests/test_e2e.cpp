#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gdpw/dataset.hpp"
#include "gdpw/eval.hpp"
#include "gdpw/graphs.hpp"
#include "gdpw/synth.hpp"
#include "gdpw/training.hpp"

using namespace gdpw;
namespace fs = std::filesystem;

namespace {

std::vector<char> file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(static_cast<bool>(in));
    return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

synth::SynthSpec small_spec() {
    synth::SynthSpec spec;
    spec.n_users = 30;
    spec.n_pois = 20;
    spec.n_cats = 5;
    spec.sessions_per_user = 6;
    spec.min_session_len = 4;
    spec.max_session_len = 6;
    spec.seed = 11;
    return spec;
}

struct Corpus {
    std::string raw = "e2e_raw.tsv";
    Dataset ds;
    Corpus() {
        synth::write_checkins(raw, small_spec());
        ds = ingest::run_pipeline(raw);
    }
    ~Corpus() { std::remove(raw.c_str()); }
};

int run_cli(const std::string& args) {
    const std::string cmd = std::string(GDPW_BIN) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

}  // namespace

TEST_CASE("pipeline is deterministic and the dataset file round-trips") {
    Corpus c;
    const Dataset& ds = c.ds;
    CHECK(ds.stats.raw_rows > 500);
    CHECK(ds.stats.malformed_rows == 0);
    CHECK(ds.vocab.n_pois() > 0);
    CHECK(ds.vocab.n_cats() > 0);

    const size_t total = ds.train.size() + ds.val.size() + ds.test.size();
    CHECK(ds.train.size() == static_cast<size_t>(0.8 * static_cast<double>(total)));
    CHECK(ds.stats.n_trajectories == static_cast<int64_t>(total));

    ds.save("e2e_ds_a.bin");
    Dataset reloaded = Dataset::load("e2e_ds_a.bin");
    reloaded.save("e2e_ds_b.bin");
    CHECK(file_bytes("e2e_ds_a.bin") == file_bytes("e2e_ds_b.bin"));

    // Re-running the pipeline on the same raw file reproduces the same bytes.
    Dataset again = ingest::run_pipeline(c.raw);
    again.save("e2e_ds_c.bin");
    CHECK(file_bytes("e2e_ds_a.bin") == file_bytes("e2e_ds_c.bin"));
    CHECK(reloaded.vocab.hash() == ds.vocab.hash());

    for (const std::string f : {"e2e_ds_a.bin", "e2e_ds_b.bin", "e2e_ds_c.bin"}) {
        std::remove(f.c_str());
    }
}

TEST_CASE("train, checkpoint and evaluate close the loop") {
    Corpus c;
    const Dataset& ds = c.ds;
    graphs::GraphBundle bundle = graphs::build_bundle(ds);

    model::ModelConfig mc;
    mc.hidden_dim = 8;
    mc.gcn_layers = 1;
    mc.projection_dim = 8;
    mc.learning_rate = 5e-3;
    mc.seed = 3;

    training::FitOptions opts;
    opts.epochs = 3;
    opts.patience = 3;
    opts.batch_size = 32;
    opts.quiet = true;

    training::FitResult fr = training::fit(ds.samples("train"), ds.samples("val"), bundle,
                                           ds.vocab, mc, model::Variant::kFull, opts);
    REQUIRE(!fr.epochs.empty());
    CHECK(fr.epochs.back().train.total < fr.epochs.front().train.total);

    std::vector<PredictionSample> test_samples = ds.samples("test");
    eval::EvalReport direct = eval::evaluate(fr.best, test_samples, bundle);
    CHECK_NOTHROW(direct.validate());
    CHECK(direct.n_samples == static_cast<int>(test_samples.size()));

    // The checkpoint file carries everything needed to reproduce the report.
    fr.best.save("e2e_ckpt.bin");
    training::Checkpoint loaded = training::Checkpoint::load("e2e_ckpt.bin");
    std::remove("e2e_ckpt.bin");
    eval::EvalReport from_file = eval::evaluate(loaded, test_samples, bundle);
    CHECK(from_file.to_text() == direct.to_text());

    // Scoring twice is bit-stable.
    eval::EvalReport rerun = eval::evaluate(fr.best, test_samples, bundle);
    CHECK(rerun.to_text() == direct.to_text());

    // The baseline report computes on the same split without error.
    eval::EvalReport base =
        eval::popularity_baseline(ds.train, test_samples, ds.vocab.n_pois());
    CHECK_NOTHROW(base.validate());
    CHECK(base.n_samples == direct.n_samples);
}

TEST_CASE("ablation runner trains a variant end to end") {
    Corpus c;
    model::ModelConfig mc;
    mc.hidden_dim = 8;
    mc.gcn_layers = 1;
    mc.projection_dim = 8;
    mc.seed = 5;

    training::FitOptions opts;
    opts.epochs = 1;
    opts.batch_size = 32;
    opts.max_steps = 4;
    opts.quiet = true;

    eval::AblationOutcome out = eval::run_ablation(model::Variant::kNoTm, c.ds, mc, opts);
    CHECK(out.variant == model::Variant::kNoTm);
    CHECK(out.report.label == "no_tm");
    CHECK(out.report.n_samples == static_cast<int>(c.ds.samples("test").size()));
    CHECK_NOTHROW(out.report.validate());
}

TEST_CASE("command line closes the loop on a synthetic corpus") {
    Corpus c;
    const std::string dir = "e2e_cli";
    fs::remove_all(dir);
    fs::create_directories(dir);

    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("preprocess --input " + c.raw + " --output " + dir + "/ds.bin") == 0);
    CHECK(fs::exists(dir + "/ds.bin"));
    CHECK(run_cli("stats --dataset " + dir + "/ds.bin") == 0);
    CHECK(run_cli("build-graphs --dataset " + dir + "/ds.bin --output " + dir + "/graphs.bin") ==
          0);
    CHECK(fs::exists(dir + "/graphs.bin"));
    CHECK(run_cli("train --dataset " + dir + "/ds.bin --graphs " + dir + "/graphs.bin --run-dir " +
                  dir + "/run --hidden-dim 8 --gcn-layers 1 --projection-dim 8 --epochs 1 "
                  "--batch-size 32 --max-steps 3 --quiet") == 0);
    CHECK(fs::exists(dir + "/run/best.ckpt"));
    CHECK(fs::exists(dir + "/run/config.txt"));
    CHECK(run_cli("evaluate --checkpoint " + dir + "/run/best.ckpt --dataset " + dir +
                  "/ds.bin --graphs " + dir + "/graphs.bin --split test --baseline --ledger " +
                  dir + "/ledger.tsv") == 0);
    CHECK(fs::exists(dir + "/ledger.tsv"));
    CHECK(run_cli("visualize --what dm --graphs " + dir + "/graphs.bin --out " + dir +
                  "/dm") == 0);
    CHECK(fs::exists(dir + "/dm.png"));
    CHECK(fs::exists(dir + "/dm.csv"));
    // ablate has no --variant flag of its own; it must not probe one (regression).
    CHECK(run_cli("ablate --dataset " + dir + "/ds.bin --variants full,no_tm --hidden-dim 8 "
                  "--gcn-layers 1 --projection-dim 8 --epochs 1 --batch-size 32 --max-steps 2 "
                  "--quiet --out-dir " + dir + "/abl") == 0);
    CHECK(fs::exists(dir + "/abl/ablation.tsv"));
    CHECK(fs::exists(dir + "/abl/no_tm/best.ckpt"));
    CHECK(run_cli("sweep --dataset " + dir + "/ds.bin --graphs " + dir + "/graphs.bin "
                  "--axis hidden_dim --hidden-dims 8 --epochs 1 --batch-size 32 --max-steps 2 "
                  "--quiet --out-dir " + dir + "/sw") == 0);
    CHECK(fs::exists(dir + "/sw/sweep.tsv"));

    // Usage errors exit with 2: missing required flags and unreadable inputs.
    CHECK(run_cli("evaluate") == 2);
    CHECK(run_cli("preprocess --input no_such_file.tsv --output " + dir + "/x.bin") == 2);
    CHECK(run_cli("stats --dataset no_such_dataset.bin") == 2);
    CHECK(run_cli("definitely-not-a-command") == 2);

    fs::remove_all(dir);
}
