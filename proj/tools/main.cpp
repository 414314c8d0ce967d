// Command-line surface. Every command exits 0 on success, 2 on usage or
// input errors, 1 on runtime failures; stdout carries data and paths only,
// stderr carries diagnostics and progress.
#include "CLI11.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gdpw/common.hpp"
#include "gdpw/dataset.hpp"
#include "gdpw/eval.hpp"
#include "gdpw/graphs.hpp"
#include "gdpw/ingest.hpp"
#include "gdpw/model.hpp"
#include "gdpw/runconfig.hpp"
#include "gdpw/training.hpp"
#include "gdpw/viz.hpp"

namespace {

namespace fs = std::filesystem;
using namespace gdpw;

// Default root for run directories; GDPW_OUT_ROOT overrides.
std::string out_root() {
    const char* env = std::getenv("GDPW_OUT_ROOT");
    return (env && *env) ? std::string(env) : std::string("runs");
}

void ensure_parent_dir(const std::string& file_path) {
    fs::path p(file_path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void print_dataset_stats(const Dataset& ds) {
    std::cout << "users " << ds.stats.n_users << "\n"
              << "pois " << ds.stats.n_pois << "\n"
              << "categories " << ds.stats.n_cats << "\n"
              << "checkins " << ds.stats.filtered_checkins << "\n"
              << "trajectories " << ds.stats.n_trajectories << "\n"
              << "train_trajectories " << ds.train.size() << "\n"
              << "val_trajectories " << ds.val.size() << "\n"
              << "test_trajectories " << ds.test.size() << "\n"
              << "raw_rows " << ds.stats.raw_rows << "\n"
              << "malformed_rows " << ds.stats.malformed_rows << "\n";
}

// Keys allowed in a --config file: every model key plus run-level settings,
// so a run directory's config snapshot can be replayed as-is.
const std::set<std::string>& run_config_keys() {
    static const std::set<std::string> keys = [] {
        std::set<std::string> k = runconfig::model_config_keys();
        k.insert({"dataset", "graphs", "run_dir", "out_dir", "epochs", "patience", "batch_size",
                  "grad_clip", "max_steps", "log_first_steps", "sweep_hidden_dims",
                  "sweep_gcn_layers"});
        return k;
    }();
    return keys;
}

model::ModelConfig model_config_of(const runconfig::Config& cfg) {
    runconfig::Config sub;
    for (const auto& [k, v] : cfg.entries())
        if (runconfig::model_config_keys().count(k)) sub.set(k, v);
    return runconfig::to_model_config(sub);
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
    std::vector<int> out;
    size_t start = 0;
    while (start <= text.size()) {
        size_t pos = text.find(',', start);
        std::string tok =
            text.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
        while (!tok.empty() && tok.front() == ' ') tok.erase(tok.begin());
        while (!tok.empty() && tok.back() == ' ') tok.pop_back();
        if (!tok.empty()) {
            char* end = nullptr;
            long v = std::strtol(tok.c_str(), &end, 10);
            if (end != tok.c_str() + tok.size())
                throw UsageError("bad integer '" + tok + "' in " + what);
            out.push_back(static_cast<int>(v));
        }
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    if (out.empty()) throw UsageError("empty list for " + what);
    return out;
}

std::string hex64(uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void print_report_header() { std::cout << "label\tn\tacc@1\tacc@5\tacc@10\tacc@20\tmrr\n"; }

void print_report_row(const eval::EvalReport& r) {
    std::ostringstream oss;
    oss.precision(6);
    oss << std::fixed << r.label << "\t" << r.n_samples;
    for (int k : {1, 5, 10, 20}) oss << "\t" << r.acc_at.at(k);
    oss << "\t" << r.mrr;
    std::cout << oss.str() << "\n";
}

// Options shared by train, ablate, and sweep. Precedence: built-in defaults,
// then the --config file, then explicit flags.
struct TrainFlags {
    CLI::App* cmd = nullptr;
    bool has_variant_flag = false;  // ablate enumerates variants itself
    std::string config_file, variant, gravity;
    int hidden_dim = 0, gcn_layers = 0, projection_dim = 0;
    double learning_rate = 0, sigma_km = 0, delta_d_km = 0;
    double lw_poi = 0, lw_cat = 0, lw_time = 0, lw_cl = 0;
    uint64_t seed = 0;
    int epochs = 0, patience = 0, batch_size = 0, max_steps = 0, log_first_steps = 0;
    double grad_clip = 0;
    bool quiet = false;

    void attach(CLI::App* c, bool with_variant) {
        cmd = c;
        has_variant_flag = with_variant;
        c->add_option("--config", config_file, "key=value config file merged under explicit flags");
        if (with_variant) c->add_option("--variant", variant, "model variant (default full)");
        c->add_option("--hidden-dim", hidden_dim, "embedding width d");
        c->add_option("--gcn-layers", gcn_layers, "graph encoder depth");
        c->add_option("--projection-dim", projection_dim, "contrastive projection width");
        c->add_option("--lr", learning_rate, "Adam learning rate");
        c->add_option("--sigma-km", sigma_km, "distance-map kernel width (km)");
        c->add_option("--delta-d-km", delta_d_km, "distance-map cutoff (km)");
        c->add_option("--gravity", gravity, "gravity denominator: distance | distance_squared");
        c->add_option("--loss-weight-poi", lw_poi, "weight of the next-POI loss");
        c->add_option("--loss-weight-cat", lw_cat, "weight of the category loss");
        c->add_option("--loss-weight-time", lw_time, "weight of the time loss");
        c->add_option("--loss-weight-cl", lw_cl, "weight of the contrastive loss");
        c->add_option("--seed", seed, "rng seed");
        c->add_option("--epochs", epochs, "training epochs");
        c->add_option("--patience", patience, "early-stop patience in epochs");
        c->add_option("--batch-size", batch_size, "samples per optimizer step");
        c->add_option("--grad-clip", grad_clip, "global-norm gradient clip, 0 disables");
        c->add_option("--max-steps", max_steps, "stop after this many optimizer steps");
        c->add_option("--log-first-steps", log_first_steps, "record losses of the first N steps");
        c->add_flag("--quiet", quiet, "suppress per-epoch progress on stderr");
    }

    runconfig::Config merged() const {
        model::ModelConfig def;
        runconfig::Config cfg = runconfig::from_model_config(def, model::Variant::kFull);
        cfg.set_int("epochs", 30);
        cfg.set_int("patience", 5);
        cfg.set_int("batch_size", 64);
        cfg.set_real("grad_clip", 0.0);
        cfg.set_int("max_steps", -1);
        cfg.set_int("log_first_steps", 0);
        if (!config_file.empty()) {
            runconfig::Config file = runconfig::Config::load(config_file);
            file.check_keys(run_config_keys());
            for (const auto& [k, v] : file.entries()) cfg.set(k, v);
        }
        auto on = [&](const char* flag) { return cmd->count(flag) > 0; };
        if (has_variant_flag && on("--variant")) cfg.set("variant", variant);
        if (on("--hidden-dim")) cfg.set_int("hidden_dim", hidden_dim);
        if (on("--gcn-layers")) cfg.set_int("gcn_layers", gcn_layers);
        if (on("--projection-dim")) cfg.set_int("projection_dim", projection_dim);
        if (on("--lr")) cfg.set_real("learning_rate", learning_rate);
        if (on("--sigma-km")) cfg.set_real("sigma_km", sigma_km);
        if (on("--delta-d-km")) cfg.set_real("delta_d_km", delta_d_km);
        if (on("--gravity")) cfg.set("gravity_denominator", gravity);
        if (on("--loss-weight-poi")) cfg.set_real("loss_weight_poi", lw_poi);
        if (on("--loss-weight-cat")) cfg.set_real("loss_weight_cat", lw_cat);
        if (on("--loss-weight-time")) cfg.set_real("loss_weight_time", lw_time);
        if (on("--loss-weight-cl")) cfg.set_real("loss_weight_cl", lw_cl);
        if (on("--seed")) cfg.set_int("seed", static_cast<int64_t>(seed));
        if (on("--epochs")) cfg.set_int("epochs", epochs);
        if (on("--patience")) cfg.set_int("patience", patience);
        if (on("--batch-size")) cfg.set_int("batch_size", batch_size);
        if (on("--grad-clip")) cfg.set_real("grad_clip", grad_clip);
        if (on("--max-steps")) cfg.set_int("max_steps", max_steps);
        if (on("--log-first-steps")) cfg.set_int("log_first_steps", log_first_steps);
        return cfg;
    }

    training::FitOptions fit_options(const runconfig::Config& cfg) const {
        training::FitOptions fo;
        fo.epochs = static_cast<int>(cfg.get_int("epochs"));
        fo.patience = static_cast<int>(cfg.get_int("patience"));
        fo.batch_size = static_cast<int>(cfg.get_int("batch_size"));
        fo.grad_clip = cfg.get_real("grad_clip");
        fo.max_steps = static_cast<int>(cfg.get_int("max_steps"));
        fo.log_first_steps = static_cast<int>(cfg.get_int("log_first_steps"));
        fo.quiet = quiet;
        return fo;
    }
};

std::string resolve_path(const runconfig::Config& cfg, const std::string& key,
                         const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (cfg.has(key) && !cfg.get(key).empty()) return cfg.get(key);
    throw UsageError("missing --" + key + " (flag or config key '" + key + "')");
}

std::string spmat_shape(const SpMat& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"next-POI recommender: global graphs, disentangled encoders, weighted maps"};
    app.require_subcommand(1);

    // preprocess
    auto* cmd_pre = app.add_subcommand("preprocess", "parse raw check-ins into a dataset file");
    std::string pre_input, pre_output;
    cmd_pre->add_option("--input", pre_input, "raw 8-column tab-separated check-in file")
        ->required();
    cmd_pre->add_option("--output", pre_output, "dataset file to write")->required();

    // stats
    auto* cmd_stats = app.add_subcommand("stats", "print the statistics of a dataset file");
    std::string st_dataset;
    cmd_stats->add_option("--dataset", st_dataset, "dataset file")->required();

    // build-graphs
    auto* cmd_bg = app.add_subcommand("build-graphs", "construct the graph bundle from a dataset");
    std::string bg_dataset, bg_output, bg_gravity = "distance";
    double bg_sigma = 1.0, bg_delta = 5.0, bg_eps = 1.0;
    bool bg_reciprocal = false;
    cmd_bg->add_option("--dataset", bg_dataset, "dataset file")->required();
    cmd_bg->add_option("--output", bg_output, "bundle file to write")->required();
    cmd_bg->add_option("--gravity", bg_gravity, "distance | distance_squared");
    cmd_bg->add_option("--sigma-km", bg_sigma, "distance-map kernel width (km)");
    cmd_bg->add_option("--delta-d-km", bg_delta, "distance-map cutoff (km)");
    cmd_bg->add_option("--epsilon", bg_eps, "gravity denominator offset");
    cmd_bg->add_flag("--reciprocal-ug", bg_reciprocal,
                     "reciprocal-distance edge weights instead of gravity");

    // train
    auto* cmd_train = app.add_subcommand("train", "fit a model and write checkpoints");
    std::string tr_dataset, tr_graphs, tr_run_dir;
    TrainFlags tr_flags;
    cmd_train->add_option("--dataset", tr_dataset, "dataset file");
    cmd_train->add_option("--graphs", tr_graphs, "graph bundle file");
    cmd_train->add_option("--run-dir", tr_run_dir, "run directory (default under GDPW_OUT_ROOT)");
    tr_flags.attach(cmd_train, /*with_variant=*/true);

    // evaluate
    auto* cmd_eval = app.add_subcommand("evaluate", "score a checkpoint on a dataset split");
    std::string ev_ckpt, ev_dataset, ev_graphs, ev_split = "test", ev_ledger;
    bool ev_baseline = false;
    cmd_eval->add_option("--checkpoint", ev_ckpt, "checkpoint file")->required();
    cmd_eval->add_option("--dataset", ev_dataset, "dataset file")->required();
    cmd_eval->add_option("--graphs", ev_graphs, "graph bundle file")->required();
    cmd_eval->add_option("--split", ev_split, "train | val | test (default test)");
    cmd_eval->add_flag("--baseline", ev_baseline, "also report the popularity baseline");
    cmd_eval->add_option("--ledger", ev_ledger, "append a row to this results ledger");

    // ablate
    auto* cmd_ab = app.add_subcommand("ablate", "train and evaluate model variants");
    std::string ab_dataset, ab_variants = "all", ab_out;
    TrainFlags ab_flags;
    cmd_ab->add_option("--dataset", ab_dataset, "dataset file")->required();
    cmd_ab->add_option("--variants", ab_variants, "comma-separated variant names or 'all'");
    cmd_ab->add_option("--out-dir", ab_out, "output directory (default <root>/ablate)");
    ab_flags.attach(cmd_ab, /*with_variant=*/false);

    // sweep
    auto* cmd_sw = app.add_subcommand("sweep", "run the hidden-dim and encoder-depth grids");
    std::string sw_dataset, sw_graphs, sw_out, sw_axis = "both";
    std::string sw_hidden = "", sw_layers = "";
    TrainFlags sw_flags;
    cmd_sw->add_option("--dataset", sw_dataset, "dataset file")->required();
    cmd_sw->add_option("--graphs", sw_graphs, "graph bundle file")->required();
    cmd_sw->add_option("--axis", sw_axis, "hidden_dim | gcn_layers | both");
    cmd_sw->add_option("--hidden-dims", sw_hidden, "grid override, e.g. 32,64,128,256");
    cmd_sw->add_option("--gcn-layer-grid", sw_layers, "grid override, e.g. 1,2,3,4");
    cmd_sw->add_option("--out-dir", sw_out, "output directory (default <root>/sweep)");
    sw_flags.attach(cmd_sw, /*with_variant=*/true);

    // visualize
    auto* cmd_viz = app.add_subcommand("visualize", "export map heatmaps and histograms");
    std::string vz_what, vz_graphs, vz_ckpt, vz_raw, vz_category, vz_out;
    int vz_max_side = 1024, vz_row_begin = 0, vz_row_end = -1;
    cmd_viz->add_option("--what", vz_what, "tm | dm | histogram")->required();
    cmd_viz->add_option("--graphs", vz_graphs, "graph bundle file (tm, dm)");
    cmd_viz->add_option("--checkpoint", vz_ckpt, "checkpoint with learned map weights (tm)");
    cmd_viz->add_option("--raw", vz_raw, "raw check-in file (histogram)");
    cmd_viz->add_option("--category", vz_category, "category display name (histogram)");
    cmd_viz->add_option("--out", vz_out, "output path prefix");
    cmd_viz->add_option("--max-side", vz_max_side, "heatmap downsample limit in pixels");
    cmd_viz->add_option("--row-begin", vz_row_begin, "first POI row of a zoomed export");
    cmd_viz->add_option("--row-end", vz_row_end, "one past the last POI row (-1 = all)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*cmd_pre) {
            Dataset ds = ingest::run_pipeline(pre_input);
            ensure_parent_dir(pre_output);
            ds.save(pre_output);
            print_dataset_stats(ds);
            std::cout << "dataset " << pre_output << "\n";
        } else if (*cmd_stats) {
            print_dataset_stats(Dataset::load(st_dataset));
        } else if (*cmd_bg) {
            Dataset ds = Dataset::load(bg_dataset);
            graphs::BundleOptions opts;
            opts.gravity_denominator = graphs::gravity_denominator_from_string(bg_gravity);
            opts.gravity_epsilon = bg_eps;
            opts.sigma_km = bg_sigma;
            opts.delta_d_km = bg_delta;
            opts.reciprocal_ug = bg_reciprocal;
            graphs::GraphBundle bundle = graphs::build_bundle(ds, opts);
            ensure_parent_dir(bg_output);
            bundle.save(bg_output);
            std::cout << "category_adjacency " << spmat_shape(bundle.category.adjacency) << "\n"
                      << "category_time_original " << spmat_shape(bundle.category_time.original)
                      << "\n"
                      << "category_time_forward " << spmat_shape(bundle.category_time.forward)
                      << "\n"
                      << "category_time_backward " << spmat_shape(bundle.category_time.backward)
                      << "\n"
                      << "ug_adjacency " << spmat_shape(bundle.ug.adjacency) << "\n"
                      << "distance_map " << bundle.dm.size() << "x" << bundle.dm.size() << "\n"
                      << "category_laplacian " << spmat_shape(bundle.cat_laplacian) << "\n"
                      << "ug_laplacian " << spmat_shape(bundle.ug_laplacian) << "\n"
                      << "relation_operators " << bundle.relation_ops.size() << "\n"
                      << "bundle " << bg_output << "\n";
        } else if (*cmd_train) {
            runconfig::Config cfg = tr_flags.merged();
            const std::string ds_path = resolve_path(cfg, "dataset", tr_dataset);
            const std::string g_path = resolve_path(cfg, "graphs", tr_graphs);
            cfg.set("dataset", ds_path);
            cfg.set("graphs", g_path);
            std::string run_dir = tr_run_dir;
            if (run_dir.empty() && cfg.has("run_dir")) run_dir = cfg.get("run_dir");
            if (run_dir.empty())
                run_dir = out_root() + "/train-" + hex64(runconfig::fingerprint(cfg));
            cfg.set("run_dir", run_dir);

            Dataset ds = Dataset::load(ds_path);
            graphs::GraphBundle bundle = graphs::GraphBundle::load(g_path);
            model::ModelConfig mc = model_config_of(cfg);
            model::Variant variant = runconfig::variant_of(cfg);
            training::FitOptions fo = tr_flags.fit_options(cfg);
            fo.run_dir = run_dir;
            fs::create_directories(run_dir);
            cfg.save(run_dir + "/config.txt");

            training::FitResult fr = training::fit(ds.samples("train"), ds.samples("val"), bundle,
                                                   ds.vocab, mc, variant, fo);
            std::cout << "run_dir " << run_dir << "\n"
                      << "config " << run_dir << "/config.txt\n"
                      << "best_epoch " << fr.best.epoch << "\n"
                      << "best_val_acc1 " << fr.best.val_acc1 << "\n"
                      << "checkpoint " << run_dir << "/best.ckpt\n";
        } else if (*cmd_eval) {
            training::Checkpoint ckpt = training::Checkpoint::load(ev_ckpt);
            Dataset ds = Dataset::load(ev_dataset);
            graphs::GraphBundle bundle = graphs::GraphBundle::load(ev_graphs);
            std::vector<PredictionSample> samples = ds.samples(ev_split);
            eval::EvalReport report = eval::evaluate(ckpt, samples, bundle);
            report.validate();
            std::cout << report.to_text() << "\n";
            if (ev_baseline) {
                eval::EvalReport base =
                    eval::popularity_baseline(ds.train, samples, ds.vocab.n_pois());
                std::cout << base.to_text() << "\n";
            }
            if (!ev_ledger.empty()) {
                ensure_parent_dir(ev_ledger);
                eval::append_ledger_row(ev_ledger, report);
                std::cout << "ledger " << ev_ledger << "\n";
            }
        } else if (*cmd_ab) {
            runconfig::Config cfg = ab_flags.merged();
            Dataset ds = Dataset::load(ab_dataset);
            model::ModelConfig mc = model_config_of(cfg);
            training::FitOptions fo = ab_flags.fit_options(cfg);
            std::string out_dir = ab_out;
            if (out_dir.empty() && cfg.has("out_dir")) out_dir = cfg.get("out_dir");
            if (out_dir.empty()) out_dir = out_root() + "/ablate";
            fs::create_directories(out_dir);
            cfg.set("dataset", ab_dataset);
            cfg.set("out_dir", out_dir);
            cfg.save(out_dir + "/config.txt");

            std::vector<model::Variant> variants;
            if (ab_variants == "all") {
                variants.assign(model::kAllVariants.begin(), model::kAllVariants.end());
            } else {
                size_t start = 0;
                while (start <= ab_variants.size()) {
                    size_t pos = ab_variants.find(',', start);
                    std::string tok = ab_variants.substr(
                        start, pos == std::string::npos ? std::string::npos : pos - start);
                    if (!tok.empty()) variants.push_back(model::variant_from_string(tok));
                    if (pos == std::string::npos) break;
                    start = pos + 1;
                }
                if (variants.empty()) throw UsageError("no variants given");
            }

            const std::string ledger = out_dir + "/ablation.tsv";
            print_report_header();
            for (model::Variant v : variants) {
                training::FitOptions vopts = fo;
                vopts.run_dir = out_dir + "/" + model::to_string(v);
                fs::create_directories(vopts.run_dir);
                eval::AblationOutcome outcome = eval::run_ablation(v, ds, mc, vopts);
                print_report_row(outcome.report);
                eval::append_ledger_row(ledger, outcome.report);
            }
            std::cout << "ledger " << ledger << "\n";
        } else if (*cmd_sw) {
            runconfig::Config cfg = sw_flags.merged();
            Dataset ds = Dataset::load(sw_dataset);
            graphs::GraphBundle bundle = graphs::GraphBundle::load(sw_graphs);
            model::ModelConfig base = model_config_of(cfg);
            model::Variant variant = runconfig::variant_of(cfg);
            training::FitOptions fo = sw_flags.fit_options(cfg);
            std::string out_dir = sw_out;
            if (out_dir.empty() && cfg.has("out_dir")) out_dir = cfg.get("out_dir");
            if (out_dir.empty()) out_dir = out_root() + "/sweep";
            fs::create_directories(out_dir);
            cfg.set("dataset", sw_dataset);
            cfg.set("graphs", sw_graphs);
            cfg.set("out_dir", out_dir);
            cfg.save(out_dir + "/config.txt");

            std::string hidden_list = sw_hidden;
            if (hidden_list.empty())
                hidden_list = cfg.has("sweep_hidden_dims") ? cfg.get("sweep_hidden_dims")
                                                           : "32,64,128,256";
            std::string layer_list = sw_layers;
            if (layer_list.empty())
                layer_list = cfg.has("sweep_gcn_layers") ? cfg.get("sweep_gcn_layers") : "1,2,3,4";

            if (sw_axis != "hidden_dim" && sw_axis != "gcn_layers" && sw_axis != "both")
                throw UsageError("unknown --axis '" + sw_axis + "'");

            const std::string ledger = out_dir + "/sweep.tsv";
            const std::vector<PredictionSample> test = ds.samples("test");
            print_report_header();
            auto run_point = [&](const model::ModelConfig& mc, const std::string& label,
                                 const std::string& dir_name) {
                training::FitOptions popts = fo;
                popts.run_dir = out_dir + "/" + dir_name;
                fs::create_directories(popts.run_dir);
                training::FitResult fr = training::fit(ds.samples("train"), ds.samples("val"),
                                                       bundle, ds.vocab, mc, variant, popts);
                eval::EvalReport report = eval::evaluate(fr.best, test, bundle);
                report.label = label;
                report.validate();
                print_report_row(report);
                eval::append_ledger_row(ledger, report);
            };
            if (sw_axis == "hidden_dim" || sw_axis == "both") {
                for (int h : parse_int_list(hidden_list, "--hidden-dims")) {
                    model::ModelConfig mc = base;
                    mc.hidden_dim = h;
                    mc.projection_dim = h;
                    run_point(mc, "hidden_dim=" + std::to_string(h),
                              "hidden_dim_" + std::to_string(h));
                }
            }
            if (sw_axis == "gcn_layers" || sw_axis == "both") {
                for (int l : parse_int_list(layer_list, "--gcn-layer-grid")) {
                    model::ModelConfig mc = base;
                    mc.gcn_layers = l;
                    run_point(mc, "gcn_layers=" + std::to_string(l),
                              "gcn_layers_" + std::to_string(l));
                }
            }
            std::cout << "ledger " << ledger << "\n";
        } else if (*cmd_viz) {
            if (vz_what != "tm" && vz_what != "dm" && vz_what != "histogram")
                throw UsageError("unknown --what '" + vz_what + "' (expected tm, dm, histogram)");
            std::string out = vz_out.empty() ? out_root() + "/viz/" + vz_what : vz_out;
            ensure_parent_dir(out + ".csv");
            if (vz_what == "histogram") {
                if (vz_raw.empty()) throw UsageError("histogram needs --raw");
                if (vz_category.empty()) throw UsageError("histogram needs --category");
                ingest::ParseResult parsed = ingest::parse_checkins(vz_raw);
                std::vector<int64_t> bins =
                    eval::category_time_histogram(parsed.records, vz_category);
                viz::write_histogram_csv(bins, out + ".csv");
                viz::write_histogram_png(bins, out + ".png");
                std::cout << "csv " << out << ".csv\n"
                          << "png " << out << ".png\n";
            } else {
                if (vz_graphs.empty()) throw UsageError(vz_what + " needs --graphs");
                graphs::GraphBundle bundle = graphs::GraphBundle::load(vz_graphs);
                const int n = bundle.dm.size();
                int rb = vz_row_begin;
                int re = vz_row_end < 0 ? n : vz_row_end;
                if (rb < 0 || rb >= re || re > n)
                    throw UsageError("bad row range [" + std::to_string(rb) + ", " +
                                     std::to_string(re) + ") for " + std::to_string(n) + " rows");
                viz::RowFn row_fn;
                if (vz_what == "dm") {
                    row_fn = [&bundle, rb](int i) { return bundle.dm.row(rb + i); };
                } else {
                    if (vz_ckpt.empty()) throw UsageError("tm needs --checkpoint");
                    training::Checkpoint ckpt = training::Checkpoint::load(vz_ckpt);
                    if (!ckpt.params.has("tm.w1"))
                        throw UsageError("checkpoint was trained without the transition map");
                    const Mat& x = bundle.ug.features;
                    Vec phi1 = (x * ckpt.params.at("tm.w1")) * ckpt.params.at("tm.a1");
                    Vec phi2 = (x * ckpt.params.at("tm.w2")) * ckpt.params.at("tm.a2");
                    row_fn = [&bundle, rb, phi1, phi2](int i) {
                        const int r = rb + i;
                        Vec w = model::tm_weight_row(bundle.ug_laplacian, r);
                        return Vec(((phi1(r) + phi2.array()) * w.array()).matrix());
                    };
                }
                viz::write_csv_rows(re - rb, n, row_fn, out + ".csv");
                viz::write_heatmap_png(re - rb, n, row_fn, out + ".png", vz_max_side);
                std::cout << "csv " << out << ".csv\n"
                          << "png " << out << ".png\n";
            }
        }
        return 0;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const FatalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
