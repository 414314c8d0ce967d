#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "gdpw/common.hpp"

namespace gdpw {

// One user visit event as parsed from the raw log.
struct CheckInRecord {
    std::string user_id;
    std::string poi_id;
    std::string category_id;
    std::string category_name;
    double latitude = 0.0;
    double longitude = 0.0;
    int64_t utc_time = 0;          // epoch seconds
    int32_t tz_offset_minutes = 0;
    int64_t local_time = 0;        // utc_time + 60 * tz_offset_minutes
    int64_t record_id = 0;         // input row number, stable tie-break
};

// Maximal run of one user's check-ins with consecutive gaps <= 24h.
struct Trajectory {
    std::string user_id;
    std::vector<CheckInRecord> check_ins;  // ascending local_time
};

// Dense-index vocabularies over the filtered records.
struct Vocabulary {
    std::vector<std::string> users;  // index -> opaque id
    std::vector<std::string> pois;
    std::vector<std::string> cats;
    std::vector<std::string> cat_display;             // human-readable category names
    std::unordered_map<std::string, int32_t> user_index;
    std::unordered_map<std::string, int32_t> poi_index;
    std::unordered_map<std::string, int32_t> cat_index;
    std::vector<std::array<double, 2>> poi_coords;    // poi index -> (lat, lon)
    std::vector<int32_t> poi_category;                // poi index -> category index

    int32_t n_users() const { return static_cast<int32_t>(users.size()); }
    int32_t n_pois() const { return static_cast<int32_t>(pois.size()); }
    int32_t n_cats() const { return static_cast<int32_t>(cats.size()); }

    // Order-sensitive digest of all index assignments; checkpoints pin it.
    uint64_t hash() const;
};

// Trajectory projected onto dense indices plus derived time fields.
struct IndexedCheckIn {
    int32_t poi = 0;
    int32_t cat = 0;
    int32_t time_slot = 0;     // 0..47 (weekday hours, then weekend hours)
    int32_t day_of_week = 0;   // 0 = Monday .. 6 = Sunday
    int64_t local_time = 0;
    double time_fraction = 0;  // seconds since local midnight / 86400
};

struct IndexedTrajectory {
    int32_t user = 0;
    std::vector<IndexedCheckIn> steps;
};

struct SampleStep {
    int32_t poi = 0;
    int32_t cat = 0;
    int32_t time_slot = 0;
    int32_t day_of_week = 0;
};

// (prefix -> next check-in) supervision pair within one trajectory.
struct PredictionSample {
    int32_t user = 0;
    std::vector<SampleStep> prefix;  // length k >= 2
    int32_t target_poi = 0;
    int32_t target_cat = 0;
    double target_time_fraction = 0.0;
};

}  // namespace gdpw
