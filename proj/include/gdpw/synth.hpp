#pragma once

#include <cstdint>
#include <string>

namespace gdpw::synth {

// Parameters for the synthetic check-in corpus. Defaults give a corpus that
// survives the sparse-entity filter (every user and POI lands well above ten
// check-ins) and carries enough sequential structure that a trained model has
// something real to learn beyond raw popularity.
struct SynthSpec {
    int n_users = 60;
    int n_pois = 40;
    int n_cats = 8;
    int sessions_per_user = 10;
    int min_session_len = 4;
    int max_session_len = 8;
    double follow_prob = 0.8;  // chance a step moves to the preferred successor
    double lat0 = 40.75;       // Manhattan-ish anchor
    double lon0 = -73.98;
    int32_t tz_offset_minutes = -240;
    uint64_t seed = 7;
};

// The corpus walks a fixed successor map with occasional random jumps; these
// expose the map so tests can assert the data actually has that structure.
inline int preferred_successor(int poi, int n_pois) { return (7 * poi + 3) % n_pois; }
inline int poi_category(int poi, int n_cats) { return poi % n_cats; }

// Writes a tab-separated check-in file in the eight-column layout the parser
// reads (user, poi, category id, category name, lat, lon, tz offset minutes,
// UTC time string). Sessions are 1-3h steps separated by >24h gaps, so the
// trajectory segmenter recovers them exactly. Returns rows written.
// Deterministic for a fixed spec.
int64_t write_checkins(const std::string& path, const SynthSpec& spec);

}  // namespace gdpw::synth
