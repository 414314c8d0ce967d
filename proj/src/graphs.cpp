#include "gdpw/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "gdpw/container.hpp"
#include "gdpw/geo.hpp"

namespace gdpw::graphs {

namespace {

using Triplet = Eigen::Triplet<double>;

SpMat from_counts(const std::map<std::pair<int, int>, double>& counts, int rows, int cols) {
    std::vector<Triplet> triplets;
    triplets.reserve(counts.size());
    for (const auto& [key, value] : counts) {
        triplets.emplace_back(key.first, key.second, value);
    }
    SpMat m(rows, cols);
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    return m;
}

Vec row_sums(const SpMat& A) {
    Vec d = Vec::Zero(A.rows());
    for (int i = 0; i < A.outerSize(); ++i) {
        for (SpMat::InnerIterator it(A, i); it; ++it) {
            d(it.row()) += it.value();
        }
    }
    return d;
}

Vec col_sums(const SpMat& A) {
    Vec d = Vec::Zero(A.cols());
    for (int i = 0; i < A.outerSize(); ++i) {
        for (SpMat::InnerIterator it(A, i); it; ++it) {
            d(it.col()) += it.value();
        }
    }
    return d;
}

void zscore_column(Mat& m, int col) {
    const double n = static_cast<double>(m.rows());
    const double mean = m.col(col).mean();
    const double var = (m.col(col).array() - mean).square().sum() / n;
    const double sd = std::sqrt(var);
    if (sd > 0.0) {
        m.col(col) = (m.col(col).array() - mean) / sd;
    } else {
        m.col(col).setZero();
    }
}

// Gravity weights over undirected consecutive-pair counts. Both UG variants
// share the edge set; only the weight formula differs.
UGGraph build_ug_common(const std::vector<IndexedTrajectory>& all_trajectories,
                        const Vocabulary& vocab, bool gravity, GravityDenominator denom,
                        double epsilon) {
    const int n_pois = vocab.n_pois();
    std::vector<double> poi_count(n_pois, 0.0);
    std::map<std::pair<int, int>, double> pair_count;
    for (const auto& traj : all_trajectories) {
        for (size_t i = 0; i < traj.steps.size(); ++i) {
            poi_count[traj.steps[i].poi] += 1.0;
            if (i + 1 < traj.steps.size()) {
                int a = traj.steps[i].poi;
                int b = traj.steps[i + 1].poi;
                if (a == b) continue;
                if (a > b) std::swap(a, b);
                pair_count[{a, b}] += 1.0;
            }
        }
    }

    std::map<std::pair<int, int>, double> weights;
    for (const auto& [edge, g] : pair_count) {
        const auto [a, b] = edge;
        const double dist = geo::haversine_km(vocab.poi_coords[a][0], vocab.poi_coords[a][1],
                                              vocab.poi_coords[b][0], vocab.poi_coords[b][1]);
        double w;
        if (gravity) {
            const double d = denom == GravityDenominator::DistanceSquared ? dist * dist : dist;
            w = g * poi_count[a] * poi_count[b] / (d + epsilon);
        } else {
            w = 1.0 / (dist + epsilon);
        }
        weights[{a, b}] = w;
        weights[{b, a}] = w;
    }

    UGGraph graph;
    graph.adjacency = from_counts(weights, n_pois, n_pois);

    const int n_cats = vocab.n_cats();
    graph.features = Mat::Zero(n_pois, 3 + n_cats);
    for (int p = 0; p < n_pois; ++p) {
        graph.features(p, 0) = vocab.poi_coords[p][0];
        graph.features(p, 1) = vocab.poi_coords[p][1];
        graph.features(p, 2) = poi_count[p];
        graph.features(p, 3 + vocab.poi_category[p]) = 1.0;
    }
    zscore_column(graph.features, 0);
    zscore_column(graph.features, 1);
    zscore_column(graph.features, 2);
    return graph;
}

}  // namespace

GravityDenominator gravity_denominator_from_string(const std::string& s) {
    if (s == "distance") return GravityDenominator::Distance;
    if (s == "distance_squared") return GravityDenominator::DistanceSquared;
    throw UsageError("unknown gravity_denominator '" + s +
                     "' (expected distance or distance_squared)");
}

std::string to_string(GravityDenominator g) {
    return g == GravityDenominator::Distance ? "distance" : "distance_squared";
}

int prev_slot(int slot) {
    require(slot >= 0 && slot < kTimeSlots, "time slot out of range");
    return slot < 24 ? (slot + 23) % 24 : 24 + (slot - 24 + 23) % 24;
}

int next_slot(int slot) {
    require(slot >= 0 && slot < kTimeSlots, "time slot out of range");
    return slot < 24 ? (slot + 1) % 24 : 24 + (slot - 24 + 1) % 24;
}

double DistanceMap::entry(int i, int j) const {
    const double dist = geo::haversine_km(coords[i][0], coords[i][1], coords[j][0], coords[j][1]);
    if (dist <= 0.0 || dist >= delta_d_km) return 0.0;
    return std::exp(-dist * dist / (2.0 * sigma_km * sigma_km));
}

Vec DistanceMap::row(int i) const {
    Vec r(size());
    for (int j = 0; j < size(); ++j) {
        r(j) = entry(i, j);
    }
    return r;
}

SpMat DistanceMap::to_sparse() const {
    std::vector<Triplet> triplets;
    for (int i = 0; i < size(); ++i) {
        for (int j = 0; j < size(); ++j) {
            const double v = entry(i, j);
            if (v != 0.0) triplets.emplace_back(i, j, v);
        }
    }
    SpMat m(size(), size());
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    return m;
}

CategoryGraph build_category_graph(const std::vector<IndexedTrajectory>& train,
                                   const Vocabulary& vocab) {
    const int n_cats = vocab.n_cats();
    std::map<std::pair<int, int>, double> counts;
    Mat features = Mat::Zero(n_cats, 2);
    std::vector<std::vector<char>> seen_poi(n_cats, std::vector<char>(vocab.n_pois(), 0));
    for (const auto& traj : train) {
        for (size_t i = 0; i < traj.steps.size(); ++i) {
            const auto& step = traj.steps[i];
            features(step.cat, 0) += 1.0;
            if (!seen_poi[step.cat][step.poi]) {
                seen_poi[step.cat][step.poi] = 1;
                features(step.cat, 1) += 1.0;
            }
            if (i + 1 < traj.steps.size()) {
                counts[{step.cat, traj.steps[i + 1].cat}] += 1.0;
            }
        }
    }
    CategoryGraph graph;
    graph.adjacency = from_counts(counts, n_cats, n_cats);
    graph.features = features;
    return graph;
}

CategoryTimeGraph build_category_time_graph(const std::vector<IndexedTrajectory>& train,
                                            const Vocabulary& vocab) {
    const int n_cats = vocab.n_cats();
    std::map<std::pair<int, int>, double> original;
    std::map<std::pair<int, int>, double> forward;
    std::map<std::pair<int, int>, double> backward;
    for (const auto& traj : train) {
        for (const auto& step : traj.steps) {
            original[{step.cat, step.time_slot}] += 1.0;
            forward[{step.cat, prev_slot(step.time_slot)}] += 1.0;
            backward[{step.cat, next_slot(step.time_slot)}] += 1.0;
        }
    }
    CategoryTimeGraph graph;
    graph.original = from_counts(original, n_cats, kTimeSlots);
    graph.forward = from_counts(forward, n_cats, kTimeSlots);
    graph.backward = from_counts(backward, n_cats, kTimeSlots);
    return graph;
}

UGGraph build_ug_graph(const std::vector<IndexedTrajectory>& all_trajectories,
                       const Vocabulary& vocab, GravityDenominator denom, double epsilon) {
    return build_ug_common(all_trajectories, vocab, true, denom, epsilon);
}

UGGraph build_reciprocal_ug_graph(const std::vector<IndexedTrajectory>& all_trajectories,
                                  const Vocabulary& vocab, double epsilon) {
    return build_ug_common(all_trajectories, vocab, false, GravityDenominator::Distance, epsilon);
}

DistanceMap build_distance_map(const Vocabulary& vocab, double sigma_km, double delta_d_km) {
    DistanceMap dm;
    dm.coords = vocab.poi_coords;
    dm.sigma_km = sigma_km;
    dm.delta_d_km = delta_d_km;
    return dm;
}

SpMat random_walk_laplacian(const SpMat& A) {
    require(A.rows() == A.cols(), "random-walk laplacian requires a square matrix");
    const Vec d = row_sums(A);
    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<size_t>(A.nonZeros()) + static_cast<size_t>(A.rows()));
    for (int i = 0; i < A.outerSize(); ++i) {
        for (SpMat::InnerIterator it(A, i); it; ++it) {
            if (d(it.row()) > 0.0) {
                triplets.emplace_back(it.row(), it.col(), -it.value() / d(it.row()));
            }
        }
    }
    for (int i = 0; i < A.rows(); ++i) {
        triplets.emplace_back(i, i, 1.0);
    }
    SpMat L(A.rows(), A.cols());
    L.setFromTriplets(triplets.begin(), triplets.end());
    L.makeCompressed();
    return L;
}

SpMat symmetric_laplacian(const SpMat& A) {
    require(A.rows() == A.cols(), "symmetric laplacian requires a square matrix");
    SpMat diff = SpMat(A.transpose()) - A;
    for (int i = 0; i < diff.outerSize(); ++i) {
        for (SpMat::InnerIterator it(diff, i); it; ++it) {
            require(it.value() == 0.0, "symmetric laplacian requires a symmetric adjacency");
        }
    }
    const Vec d = row_sums(A);
    Vec dinv_sqrt = Vec::Zero(A.rows());
    for (int i = 0; i < A.rows(); ++i) {
        if (d(i) > 0.0) dinv_sqrt(i) = 1.0 / std::sqrt(d(i));
    }
    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<size_t>(A.nonZeros()) + static_cast<size_t>(A.rows()));
    for (int i = 0; i < A.outerSize(); ++i) {
        for (SpMat::InnerIterator it(A, i); it; ++it) {
            const double v = -it.value() * dinv_sqrt(it.row()) * dinv_sqrt(it.col());
            if (v != 0.0) triplets.emplace_back(it.row(), it.col(), v);
        }
    }
    for (int i = 0; i < A.rows(); ++i) {
        triplets.emplace_back(i, i, 1.0);
    }
    SpMat L(A.rows(), A.cols());
    L.setFromTriplets(triplets.begin(), triplets.end());
    L.makeCompressed();
    return L;
}

SpMat propagation_operator(const SpMat& A) {
    const Vec in_degree = col_sums(A);
    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<size_t>(A.nonZeros()));
    for (int i = 0; i < A.outerSize(); ++i) {
        for (SpMat::InnerIterator it(A, i); it; ++it) {
            if (in_degree(it.col()) > 0.0) {
                triplets.emplace_back(it.col(), it.row(), it.value() / in_degree(it.col()));
            }
        }
    }
    SpMat op(A.cols(), A.rows());
    op.setFromTriplets(triplets.begin(), triplets.end());
    op.makeCompressed();
    return op;
}

GraphBundle build_bundle(const Dataset& dataset, const BundleOptions& options) {
    GraphBundle bundle;
    bundle.category = build_category_graph(dataset.train, dataset.vocab);
    bundle.category_time = build_category_time_graph(dataset.train, dataset.vocab);

    std::vector<IndexedTrajectory> all_trajectories;
    all_trajectories.reserve(dataset.train.size() + dataset.val.size() + dataset.test.size());
    for (const auto* split : {&dataset.train, &dataset.val, &dataset.test}) {
        all_trajectories.insert(all_trajectories.end(), split->begin(), split->end());
    }
    bundle.ug = options.reciprocal_ug
                    ? build_reciprocal_ug_graph(all_trajectories, dataset.vocab,
                                                options.gravity_epsilon)
                    : build_ug_graph(all_trajectories, dataset.vocab, options.gravity_denominator,
                                     options.gravity_epsilon);

    bundle.dm = build_distance_map(dataset.vocab, options.sigma_km, options.delta_d_km);
    bundle.time_features = Mat::Identity(kTimeSlots, kTimeSlots);

    bundle.cat_laplacian = random_walk_laplacian(bundle.category.adjacency);
    bundle.ug_laplacian = symmetric_laplacian(bundle.ug.adjacency);

    const SpMat original_rev = SpMat(bundle.category_time.original.transpose());
    const SpMat forward_rev = SpMat(bundle.category_time.forward.transpose());
    const SpMat backward_rev = SpMat(bundle.category_time.backward.transpose());
    bundle.relation_ops[kCatToTimeOriginal] = propagation_operator(bundle.category_time.original);
    bundle.relation_ops[kTimeToCatOriginal] = propagation_operator(original_rev);
    bundle.relation_ops[kCatToTimeForward] = propagation_operator(bundle.category_time.forward);
    bundle.relation_ops[kTimeToCatForward] = propagation_operator(forward_rev);
    bundle.relation_ops[kCatToTimeBackward] = propagation_operator(bundle.category_time.backward);
    bundle.relation_ops[kTimeToCatBackward] = propagation_operator(backward_rev);

    bundle.train_checkins = 0;
    for (const auto& traj : dataset.train) {
        bundle.train_checkins += static_cast<int64_t>(traj.steps.size());
    }
    bundle.vocab_hash = dataset.vocab.hash();
    return bundle;
}

namespace {
constexpr const char* kBundleSchema = "gdpw.graphs/v1";
}

void GraphBundle::save(const std::string& path) const {
    container::Writer writer(kBundleSchema);
    writer.add_sparse("category_adjacency", category.adjacency);
    writer.add_matrix("category_features", category.features);
    writer.add_sparse("category_time_original", category_time.original);
    writer.add_sparse("category_time_forward", category_time.forward);
    writer.add_sparse("category_time_backward", category_time.backward);
    writer.add_sparse("ug_adjacency", ug.adjacency);
    writer.add_matrix("ug_features", ug.features);

    std::vector<double> lat(static_cast<size_t>(dm.size())), lon(static_cast<size_t>(dm.size()));
    for (int i = 0; i < dm.size(); ++i) {
        lat[static_cast<size_t>(i)] = dm.coords[i][0];
        lon[static_cast<size_t>(i)] = dm.coords[i][1];
    }
    writer.add_f64("dm_lat", lat);
    writer.add_f64("dm_lon", lon);
    writer.add_f64("dm_params", {dm.sigma_km, dm.delta_d_km});

    writer.add_matrix("time_features", time_features);
    writer.add_sparse("cat_laplacian", cat_laplacian);
    writer.add_sparse("ug_laplacian", ug_laplacian);
    for (int r = 0; r < 6; ++r) {
        writer.add_sparse(std::string("relation_op_") + kRelationNames[r], relation_ops[r]);
    }
    writer.add_i64("counters", {train_checkins, static_cast<int64_t>(vocab_hash)});
    writer.save(path);
}

GraphBundle GraphBundle::load(const std::string& path) {
    container::Reader reader = container::Reader::load(path);
    require(reader.schema() == kBundleSchema,
            "unexpected schema '" + reader.schema() + "' in " + path);
    GraphBundle bundle;
    bundle.category.adjacency = reader.sparse("category_adjacency");
    bundle.category.features = reader.matrix("category_features");
    bundle.category_time.original = reader.sparse("category_time_original");
    bundle.category_time.forward = reader.sparse("category_time_forward");
    bundle.category_time.backward = reader.sparse("category_time_backward");
    bundle.ug.adjacency = reader.sparse("ug_adjacency");
    bundle.ug.features = reader.matrix("ug_features");

    const std::vector<double> lat = reader.f64("dm_lat");
    const std::vector<double> lon = reader.f64("dm_lon");
    require(lat.size() == lon.size(), "mismatched coordinate sections");
    bundle.dm.coords.resize(lat.size());
    for (size_t i = 0; i < lat.size(); ++i) {
        bundle.dm.coords[i] = {lat[i], lon[i]};
    }
    const std::vector<double> dm_params = reader.f64("dm_params");
    require(dm_params.size() == 2, "corrupt dm_params section");
    bundle.dm.sigma_km = dm_params[0];
    bundle.dm.delta_d_km = dm_params[1];

    bundle.time_features = reader.matrix("time_features");
    bundle.cat_laplacian = reader.sparse("cat_laplacian");
    bundle.ug_laplacian = reader.sparse("ug_laplacian");
    for (int r = 0; r < 6; ++r) {
        bundle.relation_ops[r] = reader.sparse(std::string("relation_op_") + kRelationNames[r]);
    }
    const std::vector<int64_t> counters = reader.i64("counters");
    require(counters.size() == 2, "corrupt counters section");
    bundle.train_checkins = counters[0];
    bundle.vocab_hash = static_cast<uint64_t>(counters[1]);
    return bundle;
}

}  // namespace gdpw::graphs
