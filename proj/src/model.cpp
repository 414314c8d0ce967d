#include "gdpw/model.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace gdpw::model {

using tape::Var;

void ModelConfig::validate() const {
    require(hidden_dim > 0, "hidden_dim must be positive");
    require(gcn_layers >= 1, "gcn_layers must be at least 1");
    require(projection_dim > 0, "projection_dim must be positive");
    require(learning_rate > 0.0, "learning_rate must be positive");
    require(sigma_km > 0.0, "sigma_km must be positive");
    require(delta_d_km > 0.0, "delta_d_km must be positive");
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::kFull: return "full";
        case Variant::kNoCategoryGraph: return "no_category_graph";
        case Variant::kNoCategoryTimeGraph: return "no_category_time_graph";
        case Variant::kNoUgGraph: return "no_ug_graph";
        case Variant::kNoContrastive: return "no_contrastive";
        case Variant::kNoDisentangleLayer: return "no_disentangle_layer";
        case Variant::kNoTm: return "no_tm";
        case Variant::kNoDm: return "no_dm";
        case Variant::kChangeUgGraph: return "change_ug_graph";
        case Variant::kNoCategoryPrediction: return "no_category_prediction";
        case Variant::kNoTimePrediction: return "no_time_prediction";
    }
    throw FatalError("unhandled variant");
}

Variant variant_from_string(const std::string& s) {
    for (Variant v : kAllVariants) {
        if (to_string(v) == s) return v;
    }
    std::string known;
    for (Variant v : kAllVariants) {
        known += known.empty() ? to_string(v) : ", " + to_string(v);
    }
    throw FatalError("unknown variant '" + s + "' (known: " + known + ")");
}

VariantFlags flags_for(Variant v) {
    VariantFlags f;
    switch (v) {
        case Variant::kFull:
        case Variant::kChangeUgGraph:
            break;
        case Variant::kNoCategoryGraph: f.cat_graph_gcn = false; break;
        case Variant::kNoCategoryTimeGraph: f.ct_graph_gcn = false; break;
        case Variant::kNoUgGraph: f.ug_graph_gcn = false; break;
        case Variant::kNoContrastive: f.contrastive = false; break;
        case Variant::kNoDisentangleLayer:
            f.cat_stream = false;
            f.contrastive = false;
            f.cat_head = false;
            f.time_head = false;
            break;
        case Variant::kNoTm: f.tm = false; break;
        case Variant::kNoDm: f.dm = false; break;
        case Variant::kNoCategoryPrediction: f.cat_head = false; break;
        case Variant::kNoTimePrediction: f.time_head = false; break;
    }
    return f;
}

Sizes sizes_from(const Vocabulary& vocab) {
    Sizes s;
    s.n_users = vocab.n_users();
    s.n_pois = vocab.n_pois();
    s.n_cats = vocab.n_cats();
    s.ug_feature_dim = 3 + vocab.n_cats();
    return s;
}

void ParamStore::add(const std::string& name, Mat value) {
    require(index_.count(name) == 0, "duplicate parameter '" + name + "'");
    index_[name] = values_.size();
    names_.push_back(name);
    values_.push_back(std::move(value));
}

bool ParamStore::has(const std::string& name) const { return index_.count(name) != 0; }

Mat& ParamStore::at(const std::string& name) {
    auto it = index_.find(name);
    require(it != index_.end(), "unknown parameter '" + name + "'");
    return values_[it->second];
}

const Mat& ParamStore::at(const std::string& name) const {
    auto it = index_.find(name);
    require(it != index_.end(), "unknown parameter '" + name + "'");
    return values_[it->second];
}

bool ParamStore::all_finite() const {
    for (const Mat& m : values_) {
        if (!m.allFinite()) return false;
    }
    return true;
}

namespace {

Mat xavier(std::mt19937_64& rng, int rows, int cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> u(-limit, limit);
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            m(i, j) = u(rng);
        }
    }
    return m;
}

void add_gcn_stack(ParamStore& ps, std::mt19937_64& rng, const std::string& prefix, int in_dim,
                   int d, int layers) {
    for (int l = 0; l < layers; ++l) {
        const int in = l == 0 ? in_dim : d;
        ps.add(prefix + ".w" + std::to_string(l), xavier(rng, in, d));
        ps.add(prefix + ".b" + std::to_string(l), Mat::Zero(1, d));
    }
}

void add_lstm(ParamStore& ps, std::mt19937_64& rng, const std::string& prefix, int d) {
    ps.add(prefix + ".w", xavier(rng, 2 * d, 4 * d));
    ps.add(prefix + ".b", Mat::Zero(1, 4 * d));
}

// Source-type feature width of each relation at layer 0. Even relation
// indices propagate category features, odd ones time features.
int relation_src_width(int relation, int cat_width, int time_width) {
    return relation % 2 == 0 ? cat_width : time_width;
}

}  // namespace

ParamStore init_params(const ModelConfig& config, const Sizes& sizes, Variant variant) {
    config.validate();
    require(sizes.n_users > 0 && sizes.n_pois > 0 && sizes.n_cats > 0, "empty vocabulary");
    const VariantFlags flags = flags_for(variant);
    const int d = config.hidden_dim;
    const int proj = config.projection_dim;
    std::mt19937_64 rng(config.seed);
    ParamStore ps;

    if (flags.cat_stream) {
        if (flags.cat_graph_gcn) {
            add_gcn_stack(ps, rng, "cat_gcn", 2, d, config.gcn_layers);
        } else {
            ps.add("emb.cat_free", xavier(rng, sizes.n_cats, d));
        }
        if (flags.ct_graph_gcn) {
            for (int l = 0; l < config.gcn_layers; ++l) {
                for (int r = 0; r < 6; ++r) {
                    const int in =
                        l == 0 ? relation_src_width(r, 2, graphs::kTimeSlots) : d;
                    const std::string base =
                        std::string("ct_gcn.") + graphs::kRelationNames[r];
                    ps.add(base + ".w" + std::to_string(l), xavier(rng, in, d));
                    ps.add(base + ".b" + std::to_string(l), Mat::Zero(1, d));
                }
            }
        } else {
            ps.add("emb.ct_cat_free", xavier(rng, sizes.n_cats, d));
            ps.add("emb.ct_time_free", xavier(rng, graphs::kTimeSlots, d));
        }
        add_lstm(ps, rng, "lstm_c", d);
        add_lstm(ps, rng, "lstm_ct", d);
    }

    if (flags.ug_graph_gcn) {
        add_gcn_stack(ps, rng, "ug_gcn", sizes.ug_feature_dim, d, config.gcn_layers);
    } else {
        ps.add("emb.poi_free", xavier(rng, sizes.n_pois, d));
    }
    add_lstm(ps, rng, "lstm_p", d);

    if (flags.cat_stream && flags.contrastive) {
        ps.add("proj.w1", xavier(rng, d, proj));
        ps.add("proj.w2", xavier(rng, d, proj));
        ps.add("proj.w3", xavier(rng, d, proj));
        ps.add("proj.w4", xavier(rng, d, proj));
    }
    if (flags.cat_stream) {
        ps.add("fuse1.w", xavier(rng, 2 * d, d));
        ps.add("fuse1.b", Mat::Zero(1, d));
    }
    if (flags.cat_head) {
        ps.add("head_cat.w", xavier(rng, 2 * d, sizes.n_cats));
        ps.add("head_cat.b", Mat::Zero(1, sizes.n_cats));
    }
    if (flags.time_head) {
        ps.add("head_time.w", xavier(rng, 2 * d, 1));
        ps.add("head_time.b", Mat::Zero(1, 1));
        ps.add("emb.week", xavier(rng, 7, d));
    }
    ps.add("head_poi.w", xavier(rng, 2 * d, sizes.n_pois));
    ps.add("head_poi.b", Mat::Zero(1, sizes.n_pois));
    if (flags.tm) {
        ps.add("tm.w1", xavier(rng, sizes.ug_feature_dim, proj));
        ps.add("tm.w2", xavier(rng, sizes.ug_feature_dim, proj));
        ps.add("tm.a1", xavier(rng, proj, 1));
        ps.add("tm.a2", xavier(rng, proj, 1));
    }
    ps.add("emb.user", xavier(rng, sizes.n_users, d));
    return ps;
}

Var TapeParams::at(const std::string& name) const {
    auto it = vars.find(name);
    require(it != vars.end(), "parameter '" + name + "' not bound to tape");
    return it->second;
}

TapeParams bind_params(tape::Tape& t, const ParamStore& params, bool requires_grad) {
    TapeParams tp;
    for (const std::string& name : params.names()) {
        tp.vars.emplace(name, t.leaf(params.at(name), requires_grad));
    }
    return tp;
}

Var gcn_forward(tape::Tape& t, const SpMat& laplacian, Var features,
                const std::vector<std::pair<Var, Var>>& layers) {
    (void)t;
    require(!layers.empty(), "gcn_forward needs at least one layer");
    Var h = features;
    for (const auto& [w, b] : layers) {
        h = tape::elu(tape::add_rowvec(tape::matmul(tape::spmm(laplacian, h), w), b));
    }
    return h;
}

std::pair<Var, Var> hetero_gcn_forward(tape::Tape& t, const std::array<SpMat, 6>& relation_ops,
                                       Var cat_features, Var time_features, const TapeParams& tp,
                                       const std::string& prefix, int layers) {
    (void)t;
    Var h_cat = cat_features;
    Var h_time = time_features;
    for (int l = 0; l < layers; ++l) {
        std::vector<Var> time_msgs;
        std::vector<Var> cat_msgs;
        for (int r = 0; r < 6; ++r) {
            const std::string base = prefix + graphs::kRelationNames[r];
            const Var w = tp.at(base + ".w" + std::to_string(l));
            const Var b = tp.at(base + ".b" + std::to_string(l));
            const Var src = r % 2 == 0 ? h_cat : h_time;
            Var msg = tape::elu(
                tape::add_rowvec(tape::matmul(tape::spmm(relation_ops[r], src), w), b));
            (r % 2 == 0 ? time_msgs : cat_msgs).push_back(msg);
        }
        h_time = tape::add_n(time_msgs);
        h_cat = tape::add_n(cat_msgs);
    }
    return {h_cat, h_time};
}

SequenceEncoding encode_sequence(tape::Tape& t, const std::vector<Var>& inputs, Var weight,
                                 Var bias) {
    require(!inputs.empty(), "encode_sequence needs at least one step");
    const int d = inputs.front().cols();
    require(weight.rows() == 2 * d && weight.cols() == 4 * d, "sequence weight must be 2d x 4d");
    SequenceEncoding enc;
    Var h = t.constant(Mat::Zero(1, d));
    Var c = t.constant(Mat::Zero(1, d));
    for (const Var& x : inputs) {
        Var z = tape::add_rowvec(tape::matmul(tape::concat_cols(x, h), weight), bias);
        Var gate_i = tape::sigmoid(tape::slice_cols(z, 0, d));
        Var gate_f = tape::sigmoid(tape::slice_cols(z, d, d));
        Var gate_g = tape::tanh_op(tape::slice_cols(z, 2 * d, d));
        Var gate_o = tape::sigmoid(tape::slice_cols(z, 3 * d, d));
        c = tape::add(tape::cmul(gate_f, c), tape::cmul(gate_i, gate_g));
        h = tape::cmul(gate_o, tape::tanh_op(c));
        enc.hiddens.push_back(h);
    }
    enc.final_hidden = h;
    return enc;
}

Var disentangle_loss(tape::Tape& t, Var proxy_cat, Var proxy_time, Var hidden_cat, Var hidden_ct,
                     Var w1, Var w2, Var w3, Var w4) {
    (void)t;
    Var i_c = tape::matmul(hidden_cat, w1);
    Var i_ct = tape::matmul(hidden_ct, w2);
    Var a_cc = tape::matmul(proxy_cat, w3);
    Var a_tt = tape::matmul(proxy_time, w4);
    Var f1 = tape::softplus(tape::sub(tape::dot(a_cc, i_ct), tape::dot(a_cc, i_c)));
    Var f2 = tape::softplus(tape::sub(tape::dot(a_tt, i_c), tape::dot(a_tt, i_ct)));
    return tape::add(f1, f2);
}

SharedNodes build_shared(tape::Tape& t, const TapeParams& tp, const graphs::GraphBundle& bundle,
                         const ModelConfig& config, Variant variant) {
    const VariantFlags flags = flags_for(variant);
    SharedNodes shared;
    shared.has_cat_stream = flags.cat_stream;
    shared.has_tm = flags.tm;

    auto stack = [&](const std::string& prefix) {
        std::vector<std::pair<Var, Var>> layers;
        for (int l = 0; l < config.gcn_layers; ++l) {
            layers.emplace_back(tp.at(prefix + ".w" + std::to_string(l)),
                                tp.at(prefix + ".b" + std::to_string(l)));
        }
        return layers;
    };

    if (flags.cat_stream) {
        if (flags.cat_graph_gcn) {
            shared.e_cat = gcn_forward(t, bundle.cat_laplacian,
                                       t.constant(bundle.category.features), stack("cat_gcn"));
        } else {
            shared.e_cat = tp.at("emb.cat_free");
        }
        if (flags.ct_graph_gcn) {
            auto [e_ct_cat, e_ct_time] = hetero_gcn_forward(
                t, bundle.relation_ops, t.constant(bundle.category.features),
                t.constant(bundle.time_features), tp, "ct_gcn.", config.gcn_layers);
            shared.e_ct_cat = e_ct_cat;
            shared.e_ct_time = e_ct_time;
        } else {
            shared.e_ct_cat = tp.at("emb.ct_cat_free");
            shared.e_ct_time = tp.at("emb.ct_time_free");
        }
    }

    if (flags.ug_graph_gcn) {
        shared.e_poi = gcn_forward(t, bundle.ug_laplacian, t.constant(bundle.ug.features),
                                   stack("ug_gcn"));
    } else {
        shared.e_poi = tp.at("emb.poi_free");
    }

    if (flags.tm) {
        Var x_ug = t.constant(bundle.ug.features);
        shared.phi1 = tape::matmul(tape::matmul(x_ug, tp.at("tm.w1")), tp.at("tm.a1"));
        shared.phi2 = tape::matmul(tape::matmul(x_ug, tp.at("tm.w2")), tp.at("tm.a2"));
    }
    return shared;
}

Vec tm_weight_row(const SpMat& laplacian, int p) {
    require(p >= 0 && p < laplacian.rows(), "row index out of range");
    Vec w = Vec::Ones(laplacian.cols());
    for (SpMat::InnerIterator it(laplacian, p); it; ++it) {
        w(it.col()) += it.value();
    }
    return w;
}

namespace {

// Softmax outputs must stay on the probability simplex; a violation means
// the forward pass itself is broken.
void check_simplex(const Var& weights) {
    const Mat& v = weights.value();
    require(v.minCoeff() >= 0.0, "attention weight below zero");
    require(std::abs(v.sum() - 1.0) < 1e-9, "attention weights do not sum to 1");
}

}  // namespace

SampleForward forward_sample(tape::Tape& t, const TapeParams& tp, const SharedNodes& shared,
                             const graphs::GraphBundle& bundle, const ModelConfig& config,
                             Variant variant, const PredictionSample& sample) {
    const VariantFlags flags = flags_for(variant);
    const int k = static_cast<int>(sample.prefix.size());
    require(k >= 2, "prediction prefix must have at least 2 steps");

    std::vector<int> pois, cats, slots;
    pois.reserve(k);
    cats.reserve(k);
    slots.reserve(k);
    for (const SampleStep& step : sample.prefix) {
        pois.push_back(step.poi);
        cats.push_back(step.cat);
        slots.push_back(step.time_slot);
    }

    Var e_u = tape::rows(tp.at("emb.user"), {sample.user});

    Var ep_seq = tape::rows(shared.e_poi, pois);
    std::vector<Var> xs_p;
    for (int i = 0; i < k; ++i) xs_p.push_back(tape::row(ep_seq, i));
    SequenceEncoding enc_p = encode_sequence(t, xs_p, tp.at("lstm_p.w"), tp.at("lstm_p.b"));
    Var h_p_seq = tape::stack_rows(enc_p.hiddens);
    Var w_poi = tape::softmax_col(tape::row_means(h_p_seq));
    check_simplex(w_poi);
    Var r_poi = tape::matmul(tape::transpose(w_poi), h_p_seq);

    SampleForward out;
    std::vector<Var> loss_terms;
    Var e_poi_vec = r_poi;

    if (flags.cat_stream) {
        Var ec_seq = tape::rows(shared.e_cat, cats);
        Var ectc_seq = tape::rows(shared.e_ct_cat, cats);
        Var ectt_seq = tape::rows(shared.e_ct_time, slots);

        std::vector<Var> xs_c, xs_ct;
        for (int i = 0; i < k; ++i) {
            xs_c.push_back(tape::row(ec_seq, i));
            xs_ct.push_back(tape::row(ectc_seq, i));
        }
        SequenceEncoding enc_c = encode_sequence(t, xs_c, tp.at("lstm_c.w"), tp.at("lstm_c.b"));
        SequenceEncoding enc_ct =
            encode_sequence(t, xs_ct, tp.at("lstm_ct.w"), tp.at("lstm_ct.b"));

        std::vector<Var> ecat_rows;
        for (int i = 0; i < k; ++i) {
            ecat_rows.push_back(tape::add_rowvec(
                tape::matmul(tape::concat_cols(enc_c.hiddens[i], enc_ct.hiddens[i]),
                             tp.at("fuse1.w")),
                tp.at("fuse1.b")));
        }
        Var ecat_seq = tape::stack_rows(ecat_rows);
        Var w_cat = tape::softmax_col(tape::row_means(ecat_seq));
        check_simplex(w_cat);
        Var r_cat = tape::matmul(tape::transpose(w_cat), ecat_seq);
        e_poi_vec = tape::add(r_cat, r_poi);

        if (flags.contrastive) {
            Var proxy_cat = tape::mean_rows(ec_seq);
            Var proxy_time = tape::mean_rows(ectt_seq);
            Var l_cl = disentangle_loss(t, proxy_cat, proxy_time, enc_c.final_hidden,
                                        enc_ct.final_hidden, tp.at("proj.w1"), tp.at("proj.w2"),
                                        tp.at("proj.w3"), tp.at("proj.w4"));
            out.loss_cl = l_cl.scalar();
            loss_terms.push_back(tape::scale(l_cl, config.loss_weight_cl));
        }
        if (flags.cat_head) {
            Var y_cat = tape::add_rowvec(
                tape::matmul(tape::concat_cols(ecat_rows.back(), e_u), tp.at("head_cat.w")),
                tp.at("head_cat.b"));
            Var l_cat = tape::ce_softmax(y_cat, sample.target_cat);
            out.loss_cat = l_cat.scalar();
            loss_terms.push_back(tape::scale(l_cat, config.loss_weight_cat));
        }
        if (flags.time_head) {
            Var last_time = tape::row(ectt_seq, k - 1);
            Var week = tape::rows(tp.at("emb.week"), {sample.prefix.back().day_of_week});
            Var y_time = tape::add_rowvec(
                tape::matmul(tape::concat_cols(last_time, week), tp.at("head_time.w")),
                tp.at("head_time.b"));
            Var l_time = tape::mse_scalar(y_time, sample.target_time_fraction);
            out.loss_time = l_time.scalar();
            loss_terms.push_back(tape::scale(l_time, config.loss_weight_time));
        }
    }

    Var logits = tape::add_rowvec(
        tape::matmul(tape::concat_cols(e_poi_vec, e_u), tp.at("head_poi.w")),
        tp.at("head_poi.b"));
    const int p_k = pois.back();
    if (flags.tm) {
        logits = tape::add(logits, tape::affinity_row(shared.phi1, shared.phi2, p_k,
                                                      tm_weight_row(bundle.ug_laplacian, p_k)));
    }
    if (flags.dm) {
        logits = tape::add(logits, t.constant(bundle.dm.row(p_k).transpose()));
    }
    Var l_poi = tape::ce_softmax(logits, sample.target_poi);
    out.loss_poi = l_poi.scalar();
    loss_terms.push_back(tape::scale(l_poi, config.loss_weight_poi));

    out.loss = tape::add_n(loss_terms);
    out.poi_logits = logits.value();
    return out;
}

tape::Var batch_loss(tape::Tape& t, const TapeParams& tp, const SharedNodes& shared,
                     const graphs::GraphBundle& bundle, const ModelConfig& config, Variant variant,
                     const std::vector<PredictionSample>& samples, BatchLossBreakdown* breakdown) {
    require(!samples.empty(), "batch_loss on an empty batch");
    std::vector<Var> totals;
    BatchLossBreakdown acc;
    totals.reserve(samples.size());
    for (const PredictionSample& sample : samples) {
        SampleForward sf = forward_sample(t, tp, shared, bundle, config, variant, sample);
        totals.push_back(sf.loss);
        acc.poi += sf.loss_poi;
        acc.cat += sf.loss_cat;
        acc.time += sf.loss_time;
        acc.cl += sf.loss_cl;
    }
    const double n = static_cast<double>(samples.size());
    Var mean = tape::scale(tape::add_n(totals), 1.0 / n);
    acc.poi /= n;
    acc.cat /= n;
    acc.time /= n;
    acc.cl /= n;
    acc.total = mean.scalar();
    if (!std::isfinite(acc.total)) {
        std::ostringstream oss;
        oss << "non-finite batch loss: total=" << acc.total << " poi=" << acc.poi
            << " cat=" << acc.cat << " time=" << acc.time << " cl=" << acc.cl;
        throw FatalError(oss.str());
    }
    if (breakdown != nullptr) *breakdown = acc;
    return mean;
}

}  // namespace gdpw::model
