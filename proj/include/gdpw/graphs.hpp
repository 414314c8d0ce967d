#pragma once

#include <array>
#include <string>
#include <vector>

#include "gdpw/checkin.hpp"
#include "gdpw/common.hpp"
#include "gdpw/dataset.hpp"

namespace gdpw::graphs {

constexpr int kTimeSlots = 48;

// Directed category-transition graph over training trajectories.
struct CategoryGraph {
    SpMat adjacency;  // |C|x|C| consecutive-pair counts
    Mat features;     // |C|x2: check-in count, distinct-POI count
};

// Heterogeneous category-time graph. Three forward adjacencies are stored;
// the reverse relations are their transposes.
struct CategoryTimeGraph {
    SpMat original;  // |C|x48
    SpMat forward;   // |C|x48, edge to the previous slot
    SpMat backward;  // |C|x48, edge to the next slot
};

// Undirected POI graph with gravity edge weights.
struct UGGraph {
    SpMat adjacency;  // |P|x|P| symmetric, zero diagonal
    Mat features;     // |P|x(3+|C|): z-lat, z-lon, z-frequency, one-hot category
};

// Gaussian-kernel proximity, computed on demand from coordinates.
// Entries with distance 0 or >= delta_d are exactly 0.
struct DistanceMap {
    std::vector<std::array<double, 2>> coords;
    double sigma_km = 1.0;
    double delta_d_km = 5.0;

    int size() const { return static_cast<int>(coords.size()); }
    double entry(int i, int j) const;
    Vec row(int i) const;
    SpMat to_sparse() const;
};

enum class GravityDenominator { Distance, DistanceSquared };

GravityDenominator gravity_denominator_from_string(const std::string& s);
std::string to_string(GravityDenominator g);

// Slot neighbors wrap within the weekday (0..23) or weekend (24..47) block.
int prev_slot(int slot);
int next_slot(int slot);

CategoryGraph build_category_graph(const std::vector<IndexedTrajectory>& train,
                                   const Vocabulary& vocab);

CategoryTimeGraph build_category_time_graph(const std::vector<IndexedTrajectory>& train,
                                            const Vocabulary& vocab);

UGGraph build_ug_graph(const std::vector<IndexedTrajectory>& all_trajectories,
                       const Vocabulary& vocab,
                       GravityDenominator denom = GravityDenominator::Distance,
                       double epsilon = 1.0);

// Ablation variant: reciprocal-distance edge weights on the same edge set.
UGGraph build_reciprocal_ug_graph(const std::vector<IndexedTrajectory>& all_trajectories,
                                  const Vocabulary& vocab, double epsilon = 1.0);

DistanceMap build_distance_map(const Vocabulary& vocab, double sigma_km = 1.0,
                               double delta_d_km = 5.0);

// I - D^{-1} A with row-sum degrees; zero-degree rows become identity rows.
SpMat random_walk_laplacian(const SpMat& A);

// I - D^{-1/2} A D^{-1/2}; input must be symmetric.
SpMat symmetric_laplacian(const SpMat& A);

// Destination-side propagation D_in^{-1} A^T for a src x dst relation
// adjacency; zero in-degree rows are zero.
SpMat propagation_operator(const SpMat& A);

// Relation order for the six category-time propagation operators.
enum Relation : int {
    kCatToTimeOriginal = 0,
    kTimeToCatOriginal = 1,
    kCatToTimeForward = 2,
    kTimeToCatForward = 3,
    kCatToTimeBackward = 4,
    kTimeToCatBackward = 5,
};

constexpr std::array<const char*, 6> kRelationNames = {
    "original", "original_reverse", "forward", "forward_reverse", "backward", "backward_reverse"};

// Everything the model consumes, frozen after construction.
struct GraphBundle {
    CategoryGraph category;
    CategoryTimeGraph category_time;
    UGGraph ug;
    DistanceMap dm;
    Mat time_features;  // 48x48 one-hot slot features

    SpMat cat_laplacian;                // random-walk, |C|x|C|
    SpMat ug_laplacian;                 // symmetric, |P|x|P|
    std::array<SpMat, 6> relation_ops;  // indexed by Relation

    int64_t train_checkins = 0;
    uint64_t vocab_hash = 0;

    void save(const std::string& path) const;
    static GraphBundle load(const std::string& path);
};

struct BundleOptions {
    GravityDenominator gravity_denominator = GravityDenominator::Distance;
    double gravity_epsilon = 1.0;
    double sigma_km = 1.0;
    double delta_d_km = 5.0;
    bool reciprocal_ug = false;  // change_ug_graph ablation
};

GraphBundle build_bundle(const Dataset& dataset, const BundleOptions& options = {});

}  // namespace gdpw::graphs
