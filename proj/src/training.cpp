#include "gdpw/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gdpw/container.hpp"
#include "gdpw/eval.hpp"
#include "gdpw/runconfig.hpp"
#include "gdpw/tape.hpp"

namespace gdpw::training {

Batch Batch::from_samples(const std::vector<PredictionSample>& samples) {
    Batch b;
    for (const PredictionSample& s : samples) {
        require(s.prefix.size() >= 2, "batch sample with prefix shorter than 2");
        b.max_len = std::max(b.max_len, static_cast<int>(s.prefix.size()));
    }
    for (const PredictionSample& s : samples) {
        const int k = static_cast<int>(s.prefix.size());
        std::vector<int> poi(b.max_len, 0), cat(b.max_len, 0), slot(b.max_len, 0),
            dow(b.max_len, 0);
        for (int i = 0; i < k; ++i) {
            poi[i] = s.prefix[i].poi;
            cat[i] = s.prefix[i].cat;
            slot[i] = s.prefix[i].time_slot;
            dow[i] = s.prefix[i].day_of_week;
        }
        b.poi.push_back(std::move(poi));
        b.cat.push_back(std::move(cat));
        b.slot.push_back(std::move(slot));
        b.dow.push_back(std::move(dow));
        b.lengths.push_back(k);
        b.users.push_back(s.user);
        b.target_poi.push_back(s.target_poi);
        b.target_cat.push_back(s.target_cat);
        b.target_time.push_back(s.target_time_fraction);
    }
    return b;
}

std::vector<PredictionSample> Batch::to_samples() const {
    std::vector<PredictionSample> samples;
    samples.reserve(size());
    for (size_t i = 0; i < size(); ++i) {
        PredictionSample s;
        s.user = users[i];
        const int k = lengths[i];
        for (int j = 0; j < k; ++j) {
            SampleStep step;
            step.poi = poi[i][j];
            step.cat = cat[i][j];
            step.time_slot = slot[i][j];
            step.day_of_week = dow[i][j];
            s.prefix.push_back(step);
        }
        s.target_poi = target_poi[i];
        s.target_cat = target_cat[i];
        s.target_time_fraction = target_time[i];
        samples.push_back(std::move(s));
    }
    return samples;
}

std::vector<Batch> collate(const std::vector<PredictionSample>& samples, int batch_size,
                           std::mt19937_64& rng) {
    require(!samples.empty(), "collate on an empty sample list");
    require(batch_size > 0, "batch_size must be positive");
    std::vector<PredictionSample> shuffled = samples;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::vector<Batch> batches;
    for (size_t start = 0; start < shuffled.size(); start += static_cast<size_t>(batch_size)) {
        const size_t end = std::min(shuffled.size(), start + static_cast<size_t>(batch_size));
        std::vector<PredictionSample> chunk(shuffled.begin() + static_cast<long>(start),
                                            shuffled.begin() + static_cast<long>(end));
        batches.push_back(Batch::from_samples(chunk));
    }
    return batches;
}

Adam::Adam(const model::ParamStore& params, double lr) : lr_(lr) {
    for (const std::string& name : params.names()) {
        const Mat& p = params.at(name);
        m_[name] = Mat::Zero(p.rows(), p.cols());
        v_[name] = Mat::Zero(p.rows(), p.cols());
    }
}

void Adam::step(model::ParamStore& params, const std::map<std::string, Mat>& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (const std::string& name : params.names()) {
        auto git = grads.find(name);
        require(git != grads.end(), "missing gradient for parameter '" + name + "'");
        const Mat& g = git->second;
        Mat& m = m_.at(name);
        Mat& v = v_.at(name);
        m = beta1_ * m + (1.0 - beta1_) * g;
        v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
        const Mat m_hat = m / bc1;
        const Mat v_hat = v / bc2;
        params.at(name) -=
            lr_ * m_hat.cwiseQuotient(v_hat.cwiseSqrt() + Mat::Constant(v.rows(), v.cols(), eps_));
    }
}

namespace {

constexpr const char* kCheckpointSchema = "gdpw.checkpoint/v1";

}  // namespace

void Checkpoint::save(const std::string& path) const {
    container::Writer writer(kCheckpointSchema);
    const runconfig::Config cfg = runconfig::from_model_config(config, variant);
    writer.add_bytes("config", cfg.serialize());
    writer.add_i64("meta", {static_cast<int64_t>(vocab_hash), epoch, adam_t});
    writer.add_f64("val_acc1", {val_acc1});
    for (const std::string& name : params.names()) {
        writer.add_matrix("param." + name, params.at(name));
    }
    for (const auto& [name, m] : adam_m) {
        writer.add_matrix("adam.m." + name, m);
    }
    for (const auto& [name, v] : adam_v) {
        writer.add_matrix("adam.v." + name, v);
    }
    writer.save(path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    container::Reader reader = container::Reader::load(path);
    require(reader.schema() == kCheckpointSchema,
            "unexpected schema '" + reader.schema() + "' in " + path);
    Checkpoint ckpt;
    const runconfig::Config cfg = runconfig::Config::parse(reader.bytes("config"));
    ckpt.config = runconfig::to_model_config(cfg);
    ckpt.variant = runconfig::variant_of(cfg);
    const std::vector<int64_t> meta = reader.i64("meta");
    require(meta.size() == 3, "corrupt checkpoint meta section");
    ckpt.vocab_hash = static_cast<uint64_t>(meta[0]);
    ckpt.epoch = static_cast<int>(meta[1]);
    ckpt.adam_t = meta[2];
    const std::vector<double> acc = reader.f64("val_acc1");
    require(acc.size() == 1, "corrupt checkpoint val_acc1 section");
    ckpt.val_acc1 = acc[0];
    for (const std::string& name : reader.names()) {
        if (name.rfind("param.", 0) == 0) {
            ckpt.params.add(name.substr(6), reader.matrix(name));
        } else if (name.rfind("adam.m.", 0) == 0) {
            ckpt.adam_m[name.substr(7)] = reader.matrix(name);
        } else if (name.rfind("adam.v.", 0) == 0) {
            ckpt.adam_v[name.substr(7)] = reader.matrix(name);
        }
    }
    return ckpt;
}

namespace {

Checkpoint snapshot(const model::ModelConfig& config, model::Variant variant,
                    const model::ParamStore& params, uint64_t vocab_hash, double val_acc1,
                    int epoch, const Adam& adam) {
    Checkpoint ckpt;
    ckpt.config = config;
    ckpt.variant = variant;
    ckpt.params = params;
    ckpt.vocab_hash = vocab_hash;
    ckpt.val_acc1 = val_acc1;
    ckpt.epoch = epoch;
    ckpt.adam_t = adam.t_;
    ckpt.adam_m = adam.m_;
    ckpt.adam_v = adam.v_;
    return ckpt;
}

void clip_gradients(std::map<std::string, Mat>& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& [name, g] : grads) {
        sq += g.squaredNorm();
    }
    const double norm = std::sqrt(sq);
    if (norm <= max_norm || norm == 0.0) return;
    const double factor = max_norm / norm;
    for (auto& [name, g] : grads) {
        g *= factor;
    }
}

}  // namespace

FitResult fit(const std::vector<PredictionSample>& train_samples,
              const std::vector<PredictionSample>& val_samples,
              const graphs::GraphBundle& bundle, const Vocabulary& vocab,
              const model::ModelConfig& config, model::Variant variant, const FitOptions& opts) {
    require(!train_samples.empty(), "fit needs training samples");
    require(!val_samples.empty(), "fit needs validation samples");
    require(bundle.vocab_hash == vocab.hash(), "graph bundle was built from a different dataset");
    config.validate();

    const model::Sizes sizes = model::sizes_from(vocab);
    model::ParamStore params = model::init_params(config, sizes, variant);
    Adam adam(params, config.learning_rate);
    std::mt19937_64 shuffle_rng(config.seed);

    FitResult result;
    std::ofstream metrics;
    if (!opts.run_dir.empty()) {
        metrics.open(opts.run_dir + "/metrics.log", std::ios::app);
        require(static_cast<bool>(metrics), "cannot write " + opts.run_dir + "/metrics.log");
    }

    double best_acc1 = -1.0;
    int best_epoch = 0;
    int epochs_since_best = 0;
    int64_t step = 0;
    bool stopped = false;

    for (int epoch = 1; epoch <= opts.epochs && !stopped; ++epoch) {
        const auto epoch_start = std::chrono::steady_clock::now();
        std::vector<Batch> batches = collate(train_samples, opts.batch_size, shuffle_rng);
        model::BatchLossBreakdown epoch_acc;
        int64_t batches_done = 0;

        for (size_t bi = 0; bi < batches.size(); ++bi) {
            tape::Tape t;
            model::TapeParams tp = model::bind_params(t, params, true);
            model::SharedNodes shared = model::build_shared(t, tp, bundle, config, variant);
            model::BatchLossBreakdown bd;
            tape::Var loss;
            try {
                loss = model::batch_loss(t, tp, shared, bundle, config, variant,
                                         batches[bi].to_samples(), &bd);
            } catch (const FatalError& e) {
                throw FatalError(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(bi) + ")");
            }
            t.backward(loss);

            std::map<std::string, Mat> grads;
            for (const std::string& name : params.names()) {
                const Mat& g = t.node(tp.at(name).id).grad;
                if (g.size() == 0) {
                    const Mat& p = params.at(name);
                    grads[name] = Mat::Zero(p.rows(), p.cols());
                } else {
                    grads[name] = g;
                }
            }
            if (opts.grad_clip > 0.0) clip_gradients(grads, opts.grad_clip);
            adam.step(params, grads);
            if (!params.all_finite()) {
                throw FatalError("non-finite parameter after optimization step (epoch " +
                                 std::to_string(epoch) + ", batch " + std::to_string(bi) + ")");
            }

            epoch_acc.total += bd.total;
            epoch_acc.poi += bd.poi;
            epoch_acc.cat += bd.cat;
            epoch_acc.time += bd.time;
            epoch_acc.cl += bd.cl;
            ++batches_done;
            ++step;
            if (static_cast<int>(result.first_step_losses.size()) < opts.log_first_steps) {
                result.first_step_losses.push_back(bd.total);
            }
            if (opts.max_steps >= 0 && step >= opts.max_steps) {
                stopped = true;
                break;
            }
        }

        epoch_acc.total /= static_cast<double>(batches_done);
        epoch_acc.poi /= static_cast<double>(batches_done);
        epoch_acc.cat /= static_cast<double>(batches_done);
        epoch_acc.time /= static_cast<double>(batches_done);
        epoch_acc.cl /= static_cast<double>(batches_done);

        const eval::EvalReport val_report =
            eval::evaluate_params(params, config, variant, bundle, val_samples, "val");
        const double val_acc1 = val_report.acc_at.at(1);
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train = epoch_acc;
        rec.val_acc1 = val_acc1;
        rec.seconds = seconds;
        result.epochs.push_back(rec);

        std::ostringstream line;
        line << "epoch=" << epoch << " train_loss=" << epoch_acc.total
             << " poi=" << epoch_acc.poi << " cat=" << epoch_acc.cat << " time=" << epoch_acc.time
             << " cl=" << epoch_acc.cl << " val_acc1=" << val_acc1 << " seconds=" << seconds;
        if (metrics.is_open()) metrics << line.str() << "\n" << std::flush;
        if (!opts.quiet) std::cerr << line.str() << "\n";

        if (val_acc1 > best_acc1) {
            best_acc1 = val_acc1;
            best_epoch = epoch;
            epochs_since_best = 0;
            result.best = snapshot(config, variant, params, vocab.hash(), val_acc1, epoch, adam);
            if (!opts.run_dir.empty()) result.best.save(opts.run_dir + "/best.ckpt");
        } else {
            ++epochs_since_best;
            if (epochs_since_best >= opts.patience) stopped = true;
        }
        result.final_state =
            snapshot(config, variant, params, vocab.hash(), val_acc1, epoch, adam);
    }

    if (result.best.params.names().empty()) {
        // max_steps cut training before the first epoch finished; fall back
        // to the current parameters.
        const eval::EvalReport val_report =
            eval::evaluate_params(params, config, variant, bundle, val_samples, "val");
        result.best = snapshot(config, variant, params, vocab.hash(), val_report.acc_at.at(1), 0,
                               adam);
        result.final_state = result.best;
    }
    if (!opts.run_dir.empty()) {
        result.final_state.save(opts.run_dir + "/final.ckpt");
        result.best.save(opts.run_dir + "/best.ckpt");
    }
    (void)best_epoch;
    return result;
}

}  // namespace gdpw::training
