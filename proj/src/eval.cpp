#include "gdpw/eval.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "gdpw/ingest.hpp"
#include "gdpw/runconfig.hpp"
#include "gdpw/tape.hpp"

namespace gdpw::eval {

namespace {

// Samples per tape during evaluation; bounds memory while amortizing the
// shared GCN forward.
constexpr size_t kEvalChunk = 256;

std::string lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

void EvalReport::validate() const {
    double prev = 0.0;
    for (const auto& [k, acc] : acc_at) {
        require(acc >= 0.0 && acc <= 1.0, "Acc@k outside [0,1]");
        require(acc + 1e-12 >= prev, "Acc@k must be nondecreasing in k");
        prev = acc;
    }
    require(mrr >= 0.0 && mrr <= 1.0, "MRR outside [0,1]");
}

std::string EvalReport::to_text() const {
    std::ostringstream oss;
    oss.precision(6);
    oss << std::fixed;
    oss << "label=" << label << " policy=" << prediction_policy << " n=" << n_samples;
    for (const auto& [k, acc] : acc_at) {
        oss << " acc@" << k << "=" << acc;
    }
    oss << " mrr=" << mrr;
    oss << " fingerprint=" << std::hex << config_fingerprint;
    return oss.str();
}

std::string EvalReport::ledger_row() const {
    std::ostringstream oss;
    oss.precision(6);
    oss << std::fixed;
    oss << std::hex << config_fingerprint << std::dec << "\t" << label << "\t" << n_samples;
    for (const auto& [k, acc] : acc_at) {
        oss << "\t" << acc;
    }
    oss << "\t" << mrr;
    return oss.str();
}

int rank_of(const Vec& scores, int target) {
    require(target >= 0 && target < scores.size(), "rank target out of range");
    const double st = scores(target);
    int rank = 1;
    for (int j = 0; j < scores.size(); ++j) {
        if (scores(j) > st || (scores(j) == st && j < target)) ++rank;
    }
    return rank;
}

double acc_at_k(const std::vector<int>& ranks, int k) {
    require(!ranks.empty(), "acc_at_k on an empty rank list");
    require(k >= 1, "k must be at least 1");
    int64_t hits = 0;
    for (int r : ranks) {
        require(r >= 1, "ranks are 1-based");
        if (r <= k) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double mrr(const std::vector<int>& ranks) {
    require(!ranks.empty(), "mrr on an empty rank list");
    double sum = 0.0;
    for (int r : ranks) {
        require(r >= 1, "ranks are 1-based");
        sum += 1.0 / static_cast<double>(r);
    }
    return sum / static_cast<double>(ranks.size());
}

EvalReport report_from_ranks(const std::vector<int>& ranks, const std::string& label,
                             uint64_t fingerprint) {
    EvalReport report;
    for (int k : {1, 5, 10, 20}) {
        report.acc_at[k] = acc_at_k(ranks, k);
    }
    report.mrr = mrr(ranks);
    report.n_samples = static_cast<int>(ranks.size());
    report.label = label;
    report.config_fingerprint = fingerprint;
    report.validate();
    return report;
}

std::vector<int> compute_ranks(const model::ParamStore& params, const model::ModelConfig& config,
                               model::Variant variant, const graphs::GraphBundle& bundle,
                               const std::vector<PredictionSample>& samples) {
    require(!samples.empty(), "compute_ranks on an empty sample list");
    std::vector<int> ranks;
    ranks.reserve(samples.size());
    for (size_t start = 0; start < samples.size(); start += kEvalChunk) {
        const size_t end = std::min(samples.size(), start + kEvalChunk);
        tape::Tape t;
        const model::TapeParams tp = model::bind_params(t, params, false);
        const model::SharedNodes shared = model::build_shared(t, tp, bundle, config, variant);
        for (size_t i = start; i < end; ++i) {
            const model::SampleForward sf =
                model::forward_sample(t, tp, shared, bundle, config, variant, samples[i]);
            ranks.push_back(rank_of(sf.poi_logits.row(0).transpose(), samples[i].target_poi));
        }
    }
    return ranks;
}

EvalReport evaluate_params(const model::ParamStore& params, const model::ModelConfig& config,
                           model::Variant variant, const graphs::GraphBundle& bundle,
                           const std::vector<PredictionSample>& samples,
                           const std::string& label) {
    const uint64_t fp = runconfig::fingerprint(runconfig::from_model_config(config, variant));
    return report_from_ranks(compute_ranks(params, config, variant, bundle, samples), label, fp);
}

EvalReport evaluate(const training::Checkpoint& checkpoint,
                    const std::vector<PredictionSample>& samples,
                    const graphs::GraphBundle& bundle) {
    require(checkpoint.vocab_hash == bundle.vocab_hash,
            "checkpoint vocabulary does not match the graph bundle");
    return evaluate_params(checkpoint.params, checkpoint.config, checkpoint.variant, bundle,
                           samples, model::to_string(checkpoint.variant));
}

std::vector<double> popularity_scores(const std::vector<IndexedTrajectory>& train, int n_pois) {
    std::vector<double> counts(static_cast<size_t>(n_pois), 0.0);
    for (const IndexedTrajectory& traj : train) {
        for (const IndexedCheckIn& step : traj.steps) {
            counts[static_cast<size_t>(step.poi)] += 1.0;
        }
    }
    return counts;
}

EvalReport popularity_baseline(const std::vector<IndexedTrajectory>& train,
                               const std::vector<PredictionSample>& samples, int n_pois) {
    require(!samples.empty(), "popularity baseline on an empty sample list");
    const std::vector<double> counts = popularity_scores(train, n_pois);
    Vec scores(n_pois);
    for (int p = 0; p < n_pois; ++p) scores(p) = counts[static_cast<size_t>(p)];
    std::vector<int> ranks;
    ranks.reserve(samples.size());
    for (const PredictionSample& s : samples) {
        ranks.push_back(rank_of(scores, s.target_poi));
    }
    return report_from_ranks(ranks, "popularity_baseline", 0);
}

AblationOutcome run_ablation(model::Variant variant, const Dataset& dataset,
                             const model::ModelConfig& config,
                             const training::FitOptions& opts) {
    graphs::BundleOptions bopts;
    bopts.gravity_denominator = config.gravity_denominator;
    bopts.sigma_km = config.sigma_km;
    bopts.delta_d_km = config.delta_d_km;
    bopts.reciprocal_ug = variant == model::Variant::kChangeUgGraph;
    const graphs::GraphBundle bundle = graphs::build_bundle(dataset, bopts);

    const training::FitResult fr = training::fit(dataset.samples("train"), dataset.samples("val"),
                                                 bundle, dataset.vocab, config, variant, opts);
    EvalReport report = evaluate(fr.best, dataset.samples("test"), bundle);
    report.label = model::to_string(variant);
    return {variant, report};
}

std::vector<int64_t> category_time_histogram(const std::vector<CheckInRecord>& records,
                                             const std::string& category_name) {
    bool known = false;
    for (const CheckInRecord& r : records) {
        if (r.category_name == category_name) {
            known = true;
            break;
        }
    }
    if (!known) {
        std::vector<std::string> near;
        const std::string needle = lower(category_name);
        for (const CheckInRecord& r : records) {
            if (lower(r.category_name).find(needle) != std::string::npos &&
                std::find(near.begin(), near.end(), r.category_name) == near.end()) {
                near.push_back(r.category_name);
                if (near.size() >= 5) break;
            }
        }
        std::string msg = "unknown category '" + category_name + "'";
        if (!near.empty()) {
            msg += "; near matches:";
            for (const std::string& n : near) msg += " '" + n + "'";
        }
        throw UsageError(msg);
    }
    std::vector<int64_t> bins(static_cast<size_t>(graphs::kTimeSlots), 0);
    for (const CheckInRecord& r : records) {
        if (r.category_name == category_name) {
            ++bins[static_cast<size_t>(ingest::encode_time_slot(r.local_time))];
        }
    }
    return bins;
}

void append_ledger_row(const std::string& path, const EvalReport& report) {
    std::ofstream out(path, std::ios::app);
    require(static_cast<bool>(out), "cannot append to results ledger " + path);
    out << report.ledger_row() << "\n";
    require(static_cast<bool>(out), "failed writing results ledger " + path);
}

}  // namespace gdpw::eval
