#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gdpw/checkin.hpp"
#include "gdpw/common.hpp"
#include "gdpw/dataset.hpp"
#include "gdpw/graphs.hpp"
#include "gdpw/model.hpp"
#include "gdpw/training.hpp"

namespace gdpw::eval {

struct EvalReport {
    std::map<int, double> acc_at;  // k in {1, 5, 10, 20}
    double mrr = 0.0;
    int n_samples = 0;
    uint64_t config_fingerprint = 0;
    std::string label = "full";
    // Metrics average over every prefix-position sample of the split.
    std::string prediction_policy = "all_prefixes";

    void validate() const;
    std::string to_text() const;
    std::string ledger_row() const;
};

// rank is 1-based; ties are broken by ascending POI index.
int rank_of(const Vec& scores, int target);

double acc_at_k(const std::vector<int>& ranks, int k);
double mrr(const std::vector<int>& ranks);

EvalReport report_from_ranks(const std::vector<int>& ranks, const std::string& label,
                             uint64_t fingerprint);

std::vector<int> compute_ranks(const model::ParamStore& params, const model::ModelConfig& config,
                               model::Variant variant, const graphs::GraphBundle& bundle,
                               const std::vector<PredictionSample>& samples);

EvalReport evaluate_params(const model::ParamStore& params, const model::ModelConfig& config,
                           model::Variant variant, const graphs::GraphBundle& bundle,
                           const std::vector<PredictionSample>& samples,
                           const std::string& label);

EvalReport evaluate(const training::Checkpoint& checkpoint,
                    const std::vector<PredictionSample>& samples,
                    const graphs::GraphBundle& bundle);

// Global check-in counts over the training split; every sample is scored by
// the same popularity vector.
std::vector<double> popularity_scores(const std::vector<IndexedTrajectory>& train, int n_pois);
EvalReport popularity_baseline(const std::vector<IndexedTrajectory>& train,
                               const std::vector<PredictionSample>& samples, int n_pois);

struct AblationOutcome {
    model::Variant variant;
    EvalReport report;
};

// Builds the variant's graph bundle, trains, and evaluates on the test split.
AblationOutcome run_ablation(model::Variant variant, const Dataset& dataset,
                             const model::ModelConfig& config,
                             const training::FitOptions& opts);

// 48 per-slot check-in counts (24 weekday + 24 weekend) for one category
// display name; unknown names raise an error listing near matches.
std::vector<int64_t> category_time_histogram(const std::vector<CheckInRecord>& records,
                                             const std::string& category_name);

void append_ledger_row(const std::string& path, const EvalReport& report);

}  // namespace gdpw::eval
