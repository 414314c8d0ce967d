#pragma once

#include <string>
#include <vector>

#include "gdpw/checkin.hpp"

namespace gdpw::ingest {

struct ParseResult {
    std::vector<CheckInRecord> records;
    int64_t total_rows = 0;
    std::vector<int64_t> malformed_rows;  // 1-based row numbers
};

// Foursquare TSV: user, venue, category id, category name, lat, lon,
// tz offset minutes, UTC time ("Tue Apr 03 18:00:09 +0000 2012").
ParseResult parse_checkins(const std::string& raw_file);

struct FilterStats {
    int64_t pois_dropped = 0;
    int64_t users_dropped = 0;
    int64_t checkins_dropped = 0;
};

// Drops check-ins at POIs with <10 records, then check-ins of users with
// <10 remaining records. One pass, not iterated to fixpoint.
std::vector<CheckInRecord> filter_sparse(const std::vector<CheckInRecord>& records,
                                         FilterStats* stats = nullptr,
                                         int min_poi_checkins = 10,
                                         int min_user_checkins = 10);

// Per user, sorted by local time; split at gaps > 24h; drop length < 3.
std::vector<Trajectory> segment_trajectories(const std::vector<CheckInRecord>& records);

struct Split {
    std::vector<Trajectory> train, val, test;
};

// Chronological 80/10/10 by trajectory count: boundaries floor(0.8 N), floor(0.9 N).
Split split_dataset(std::vector<Trajectory> trajectories);

// Weekday hour h -> h, weekend hour h -> 24 + h, in the check-in's local time.
int encode_time_slot(int64_t local_time);

// Vocabulary over all filtered records: indices by first appearance in record order.
Vocabulary build_vocabulary(const std::vector<CheckInRecord>& records);

IndexedTrajectory index_trajectory(const Trajectory& traj, const Vocabulary& vocab);

// One sample per prefix length k = 2 .. m-1, target s_{k+1}.
std::vector<PredictionSample> make_samples(const std::vector<IndexedTrajectory>& trajectories);

}  // namespace gdpw::ingest
