#pragma once

#include <string>
#include <vector>

#include "gdpw/checkin.hpp"

namespace gdpw {

struct DatasetStats {
    int64_t raw_rows = 0;
    int64_t malformed_rows = 0;
    int64_t filtered_checkins = 0;  // check-ins surviving the sparsity filter
    int64_t n_users = 0;
    int64_t n_pois = 0;
    int64_t n_cats = 0;
    int64_t n_trajectories = 0;     // across all splits
};

// Preprocessed dataset: vocabulary plus indexed trajectories per split.
struct Dataset {
    Vocabulary vocab;
    std::vector<IndexedTrajectory> train, val, test;
    DatasetStats stats;

    std::vector<PredictionSample> samples(const std::string& split) const;
    const std::vector<IndexedTrajectory>& split(const std::string& name) const;

    void save(const std::string& path) const;
    static Dataset load(const std::string& path);
};

namespace ingest {

// Full preprocessing pipeline: parse, filter, segment, split, index.
Dataset run_pipeline(const std::string& raw_file);

}  // namespace ingest
}  // namespace gdpw
