#include "gdpw/synth.hpp"

#include <cstdio>
#include <fstream>
#include <random>
#include <vector>

#include "gdpw/common.hpp"
#include "gdpw/timeutil.hpp"

namespace gdpw::synth {

namespace {

// Portable uniform draws: the raw mt19937_64 stream is pinned by the
// standard, std::uniform_* distributions are not.
double rand_u01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

int rand_int(std::mt19937_64& rng, int lo, int hi) {
    int v = lo + static_cast<int>(rand_u01(rng) * (hi - lo + 1));
    return v > hi ? hi : v;
}

std::string format_utc(int64_t t) {
    static const char* dows[] = {"Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"};
    static const char* mons[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                 "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
    const auto cd = timeutil::civil_from_days(timeutil::floor_div(t, 86400));
    const int64_t sod = timeutil::floor_mod(t, 86400);
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s %s %02u %02d:%02d:%02d +0000 %d",
                  dows[timeutil::day_of_week(t)], mons[cd.month - 1], cd.day,
                  static_cast<int>(sod / 3600), static_cast<int>(sod / 60 % 60),
                  static_cast<int>(sod % 60), cd.year);
    return buf;
}

// 24-hex-char identifiers in the style of the real dump.
std::string hex_id(const char* kind, int index) {
    const uint64_t a = fnv1a64(std::string(kind) + "#" + std::to_string(index));
    const uint64_t b = fnv1a64(std::to_string(index) + "@" + kind);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx%08llx", static_cast<unsigned long long>(a),
                  static_cast<unsigned long long>(b & 0xffffffffull));
    return buf;
}

std::string category_name(int c) {
    static const char* base[] = {"Coffee Shop", "Bar",           "Office",
                                 "Gym",         "Park",          "Train Station",
                                 "Food Shop",   "Home (private)"};
    std::string name = base[c % 8];
    if (c >= 8) name += " " + std::to_string(c / 8 + 1);
    return name;
}

}  // namespace

int64_t write_checkins(const std::string& path, const SynthSpec& spec) {
    require(spec.n_users > 0 && spec.n_pois > 1 && spec.n_cats > 0, "synth: bad sizes");
    require(spec.min_session_len >= 3 && spec.max_session_len >= spec.min_session_len,
            "synth: session length must keep trajectories above the length cutoff");
    require(spec.follow_prob >= 0.0 && spec.follow_prob <= 1.0, "synth: bad follow_prob");

    std::ofstream out(path, std::ios::binary);
    if (!out) throw FatalError("synth: cannot write " + path);

    std::mt19937_64 rng(spec.seed);

    // POI attributes first, in a fixed order, so user streams do not shift
    // them when the spec changes session counts.
    std::vector<double> lat(spec.n_pois), lon(spec.n_pois);
    for (int p = 0; p < spec.n_pois; ++p) {
        lat[p] = spec.lat0 + (rand_u01(rng) - 0.5) * 0.04;
        lon[p] = spec.lon0 + (rand_u01(rng) - 0.5) * 0.04;
    }
    std::vector<std::string> poi_ids(spec.n_pois), cat_ids(spec.n_cats), cat_names(spec.n_cats);
    for (int p = 0; p < spec.n_pois; ++p) poi_ids[p] = hex_id("poi", p);
    for (int c = 0; c < spec.n_cats; ++c) {
        cat_ids[c] = hex_id("cat", c);
        cat_names[c] = category_name(c);
    }

    const int64_t base = timeutil::epoch_seconds(2012, 4, 2, 8, 0, 0);
    int64_t rows = 0;
    char line[512];
    for (int u = 0; u < spec.n_users; ++u) {
        const std::string user_id = std::to_string(1000 + u);
        int64_t t = base + static_cast<int64_t>(u) * 13 * 3600;
        for (int s = 0; s < spec.sessions_per_user; ++s) {
            // Quadratic skew toward low indices gives the popularity baseline
            // a real signal without making it unbeatable.
            double r = rand_u01(rng);
            int poi = static_cast<int>(r * r * spec.n_pois);
            if (poi >= spec.n_pois) poi = spec.n_pois - 1;
            const int len = rand_int(rng, spec.min_session_len, spec.max_session_len);
            for (int k = 0; k < len; ++k) {
                const int cat = poi_category(poi, spec.n_cats);
                std::snprintf(line, sizeof line, "%s\t%s\t%s\t%s\t%.8f\t%.8f\t%d\t%s\n",
                              user_id.c_str(), poi_ids[poi].c_str(), cat_ids[cat].c_str(),
                              cat_names[cat].c_str(), lat[poi], lon[poi],
                              static_cast<int>(spec.tz_offset_minutes), format_utc(t).c_str());
                out << line;
                ++rows;
                t += 3600 + static_cast<int64_t>(rand_u01(rng) * 7200) + rand_int(rng, 0, 59);
                if (rand_u01(rng) < spec.follow_prob)
                    poi = preferred_successor(poi, spec.n_pois);
                else
                    poi = rand_int(rng, 0, spec.n_pois - 1);
            }
            t += 30 * 3600 + static_cast<int64_t>(rand_u01(rng) * 12 * 3600);
        }
    }
    if (!out) throw FatalError("synth: write failed for " + path);
    return rows;
}

}  // namespace gdpw::synth
