#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gdpw/checkin.hpp"
#include "gdpw/common.hpp"
#include "gdpw/graphs.hpp"
#include "gdpw/tape.hpp"

namespace gdpw::model {

struct ModelConfig {
    int hidden_dim = 64;
    int gcn_layers = 2;
    int projection_dim = 64;
    double learning_rate = 2e-4;
    double sigma_km = 1.0;
    double delta_d_km = 5.0;
    graphs::GravityDenominator gravity_denominator = graphs::GravityDenominator::Distance;
    // Loss weights are fixed at 1; kept explicit so the objective reads off the config.
    double loss_weight_poi = 1.0;
    double loss_weight_cat = 1.0;
    double loss_weight_time = 1.0;
    double loss_weight_cl = 1.0;
    uint64_t seed = 42;

    void validate() const;
};

enum class Variant {
    kFull,
    kNoCategoryGraph,
    kNoCategoryTimeGraph,
    kNoUgGraph,
    kNoContrastive,
    kNoDisentangleLayer,
    kNoTm,
    kNoDm,
    kChangeUgGraph,
    kNoCategoryPrediction,
    kNoTimePrediction,
};

constexpr std::array<Variant, 11> kAllVariants = {
    Variant::kFull,          Variant::kNoCategoryGraph,   Variant::kNoCategoryTimeGraph,
    Variant::kNoUgGraph,     Variant::kNoContrastive,     Variant::kNoDisentangleLayer,
    Variant::kNoTm,          Variant::kNoDm,              Variant::kChangeUgGraph,
    Variant::kNoCategoryPrediction, Variant::kNoTimePrediction};

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

// Which components a variant keeps. change_ug_graph only alters graph
// construction, so its flags match the full model.
struct VariantFlags {
    bool cat_graph_gcn = true;   // category GCN vs free embedding table
    bool ct_graph_gcn = true;    // category-time GCN vs free tables
    bool ug_graph_gcn = true;    // UG GCN vs free POI table
    bool cat_stream = true;      // category/time streams, proxies, aux heads
    bool contrastive = true;
    bool cat_head = true;
    bool time_head = true;
    bool tm = true;
    bool dm = true;
};

VariantFlags flags_for(Variant v);

struct Sizes {
    int n_users = 0;
    int n_pois = 0;
    int n_cats = 0;
    int ug_feature_dim = 0;  // 3 + |C|
};

Sizes sizes_from(const Vocabulary& vocab);

// Named dense parameters in a fixed insertion order. Order determines both
// the RNG consumption during init and the serialized layout.
class ParamStore {
  public:
    void add(const std::string& name, Mat value);
    bool has(const std::string& name) const;
    Mat& at(const std::string& name);
    const Mat& at(const std::string& name) const;
    const std::vector<std::string>& names() const { return names_; }
    bool all_finite() const;

  private:
    std::vector<std::string> names_;
    std::map<std::string, size_t> index_;
    std::vector<Mat> values_;
};

ParamStore init_params(const ModelConfig& config, const Sizes& sizes, Variant variant);

// Parameters copied onto a tape as gradient-carrying leaves.
struct TapeParams {
    std::map<std::string, tape::Var> vars;
    tape::Var at(const std::string& name) const;
    bool has(const std::string& name) const { return vars.count(name) != 0; }
};

TapeParams bind_params(tape::Tape& t, const ParamStore& params, bool requires_grad);

// One GCN stack: ELU(L H W + b) per layer.
tape::Var gcn_forward(tape::Tape& t, const SpMat& laplacian, tape::Var features,
                      const std::vector<std::pair<tape::Var, tape::Var>>& layers);

// Heterogeneous stack over the six relation operators; per-relation GCN
// messages are summed at the destination node type.
std::pair<tape::Var, tape::Var> hetero_gcn_forward(
    tape::Tape& t, const std::array<SpMat, 6>& relation_ops, tape::Var cat_features,
    tape::Var time_features, const TapeParams& tp, const std::string& prefix, int layers);

struct SequenceEncoding {
    std::vector<tape::Var> hiddens;  // k entries, each 1 x d
    tape::Var final_hidden;
};

SequenceEncoding encode_sequence(tape::Tape& t, const std::vector<tape::Var>& inputs,
                                 tape::Var weight, tape::Var bias);

tape::Var disentangle_loss(tape::Tape& t, tape::Var proxy_cat, tape::Var proxy_time,
                           tape::Var hidden_cat, tape::Var hidden_ct, tape::Var w1, tape::Var w2,
                           tape::Var w3, tape::Var w4);

// Per-batch nodes shared by every sample on the tape.
struct SharedNodes {
    tape::Var e_cat;      // |C| x d
    tape::Var e_ct_cat;   // |C| x d
    tape::Var e_ct_time;  // 48 x d
    tape::Var e_poi;      // |P| x d
    tape::Var phi1;       // |P| x 1
    tape::Var phi2;       // |P| x 1
    bool has_cat_stream = false;
    bool has_tm = false;
};

SharedNodes build_shared(tape::Tape& t, const TapeParams& tp, const graphs::GraphBundle& bundle,
                         const ModelConfig& config, Variant variant);

struct SampleForward {
    tape::Var loss;  // weighted sum of the components below
    double loss_poi = 0.0;
    double loss_cat = 0.0;
    double loss_time = 0.0;
    double loss_cl = 0.0;
    Mat poi_logits;  // 1 x |P|, map-weighted
};

SampleForward forward_sample(tape::Tape& t, const TapeParams& tp, const SharedNodes& shared,
                             const graphs::GraphBundle& bundle, const ModelConfig& config,
                             Variant variant, const PredictionSample& sample);

struct BatchLossBreakdown {
    double total = 0.0;
    double poi = 0.0;
    double cat = 0.0;
    double time = 0.0;
    double cl = 0.0;
};

// Mean sample loss for one batch; per-component means reported alongside.
tape::Var batch_loss(tape::Tape& t, const TapeParams& tp, const SharedNodes& shared,
                     const graphs::GraphBundle& bundle, const ModelConfig& config, Variant variant,
                     const std::vector<PredictionSample>& samples, BatchLossBreakdown* breakdown);

// Row p_k of the dense transition weights (laplacian row + 1), used by the
// affinity row op.
Vec tm_weight_row(const SpMat& laplacian, int p);

}  // namespace gdpw::model
