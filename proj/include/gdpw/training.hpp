#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "gdpw/checkin.hpp"
#include "gdpw/common.hpp"
#include "gdpw/graphs.hpp"
#include "gdpw/model.hpp"

namespace gdpw::training {

// Padded batch. The padded arrays are the storage format; the forward pass
// consumes reconstructed samples truncated to the true lengths, so padding
// positions cannot reach proxies, attention, or losses.
struct Batch {
    std::vector<std::vector<int>> poi, cat, slot, dow;  // each padded to max_len
    std::vector<int> lengths;
    std::vector<int> users, target_poi, target_cat;
    std::vector<double> target_time;
    int max_len = 0;

    size_t size() const { return lengths.size(); }
    static Batch from_samples(const std::vector<PredictionSample>& samples);
    std::vector<PredictionSample> to_samples() const;
};

std::vector<Batch> collate(const std::vector<PredictionSample>& samples, int batch_size,
                           std::mt19937_64& rng);

class Adam {
  public:
    Adam(const model::ParamStore& params, double lr);
    void step(model::ParamStore& params, const std::map<std::string, Mat>& grads);
    int64_t steps() const { return t_; }

    int64_t t_ = 0;
    std::map<std::string, Mat> m_, v_;
    double lr_ = 0.0;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
};

struct Checkpoint {
    model::ModelConfig config;
    model::Variant variant = model::Variant::kFull;
    model::ParamStore params;
    uint64_t vocab_hash = 0;
    double val_acc1 = 0.0;
    int epoch = 0;
    int64_t adam_t = 0;
    std::map<std::string, Mat> adam_m, adam_v;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
};

struct EpochRecord {
    int epoch = 0;
    model::BatchLossBreakdown train;
    double val_acc1 = 0.0;
    double seconds = 0.0;
};

struct FitOptions {
    int epochs = 30;
    int patience = 5;
    int batch_size = 64;
    double grad_clip = 0.0;  // 0 disables clipping
    int max_steps = -1;      // cap on optimization steps; -1 = unlimited
    int log_first_steps = 0;
    std::string run_dir;  // when set: metrics.log, best.ckpt, final.ckpt
    bool quiet = false;
};

struct FitResult {
    Checkpoint best;
    Checkpoint final_state;
    std::vector<double> first_step_losses;
    std::vector<EpochRecord> epochs;
};

FitResult fit(const std::vector<PredictionSample>& train_samples,
              const std::vector<PredictionSample>& val_samples,
              const graphs::GraphBundle& bundle, const Vocabulary& vocab,
              const model::ModelConfig& config, model::Variant variant, const FitOptions& opts);

}  // namespace gdpw::training
