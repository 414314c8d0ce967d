#include "gdpw/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "gdpw/timeutil.hpp"

namespace gdpw::ingest {

namespace {

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

bool parse_int(const std::string& s, long& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtol(s.c_str(), &end, 10);
    return end == s.c_str() + s.size();
}

int month_from_name(const std::string& m) {
    static const char* names[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                  "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
    for (int i = 0; i < 12; ++i)
        if (m == names[i]) return i + 1;
    return 0;
}

// "Tue Apr 03 18:00:09 +0000 2012" -> epoch seconds. The embedded zone is
// always +0000 in the Foursquare dumps; the real offset is its own column.
bool parse_utc_time(const std::string& s, int64_t& out) {
    char dow[8], mon[8], zone[8];
    int day, h, mi, sec, year;
    if (std::sscanf(s.c_str(), "%3s %3s %d %d:%d:%d %7s %d", dow, mon, &day, &h, &mi, &sec, zone,
                    &year) != 8)
        return false;
    int m = month_from_name(mon);
    if (m == 0 || day < 1 || day > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 ||
        sec > 60)
        return false;
    out = timeutil::epoch_seconds(year, m, day, h, mi, sec);
    return true;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

}  // namespace

ParseResult parse_checkins(const std::string& raw_file) {
    std::ifstream in(raw_file, std::ios::binary);
    if (!in) throw UsageError("cannot open check-in file: " + raw_file);

    ParseResult result;
    std::string line;
    int64_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++result.total_rows;

        auto fields = split_tabs(line);
        CheckInRecord rec;
        long tz = 0;
        int64_t utc = 0;
        bool ok = fields.size() == 8;
        ok = ok && !fields[0].empty() && !fields[1].empty() && !fields[2].empty();
        ok = ok && parse_double(fields[4], rec.latitude) && parse_double(fields[5], rec.longitude);
        ok = ok && rec.latitude >= -90.0 && rec.latitude <= 90.0 && rec.longitude >= -180.0 &&
             rec.longitude <= 180.0;
        ok = ok && parse_int(fields[6], tz);
        ok = ok && parse_utc_time(fields[7], utc);
        if (!ok) {
            result.malformed_rows.push_back(row);
            continue;
        }
        rec.user_id = fields[0];
        rec.poi_id = fields[1];
        rec.category_id = fields[2];
        rec.category_name = fields[3];
        rec.tz_offset_minutes = static_cast<int32_t>(tz);
        rec.utc_time = utc;
        rec.local_time = utc + 60 * static_cast<int64_t>(tz);
        rec.record_id = row;
        result.records.push_back(std::move(rec));
    }

    if (result.total_rows > 0 &&
        100 * result.malformed_rows.size() > static_cast<size_t>(result.total_rows)) {
        std::string rows;
        for (size_t i = 0; i < result.malformed_rows.size() && i < 20; ++i)
            rows += (i ? ", " : "") + std::to_string(result.malformed_rows[i]);
        if (result.malformed_rows.size() > 20) rows += ", ...";
        throw FatalError("more than 1% malformed rows in " + raw_file + " (" +
                         std::to_string(result.malformed_rows.size()) + " of " +
                         std::to_string(result.total_rows) + "; rows " + rows + ")");
    }
    return result;
}

std::vector<CheckInRecord> filter_sparse(const std::vector<CheckInRecord>& records,
                                         FilterStats* stats, int min_poi_checkins,
                                         int min_user_checkins) {
    require(!records.empty(), "filter_sparse: no records");

    std::unordered_map<std::string, int> poi_count;
    for (const auto& r : records) ++poi_count[r.poi_id];

    std::unordered_map<std::string, int> user_count;
    int64_t after_poi = 0;
    for (const auto& r : records) {
        if (poi_count[r.poi_id] >= min_poi_checkins) {
            ++user_count[r.user_id];
            ++after_poi;
        }
    }

    std::vector<CheckInRecord> kept;
    kept.reserve(records.size());
    for (const auto& r : records) {
        if (poi_count[r.poi_id] < min_poi_checkins) continue;
        if (user_count[r.user_id] < min_user_checkins) continue;
        kept.push_back(r);
    }

    if (stats) {
        std::unordered_set<std::string> pois_before, pois_after, users_before, users_after;
        for (const auto& r : records) {
            pois_before.insert(r.poi_id);
            users_before.insert(r.user_id);
        }
        for (const auto& r : kept) {
            pois_after.insert(r.poi_id);
            users_after.insert(r.user_id);
        }
        stats->pois_dropped = static_cast<int64_t>(pois_before.size() - pois_after.size());
        stats->users_dropped = static_cast<int64_t>(users_before.size() - users_after.size());
        stats->checkins_dropped = static_cast<int64_t>(records.size() - kept.size());
    }

    require(!kept.empty(), "filter_sparse: all records filtered out");
    return kept;
}

std::vector<Trajectory> segment_trajectories(const std::vector<CheckInRecord>& records) {
    std::unordered_map<std::string, std::vector<CheckInRecord>> per_user;
    std::vector<std::string> user_order;
    for (const auto& r : records) {
        auto [it, inserted] = per_user.try_emplace(r.user_id);
        if (inserted) user_order.push_back(r.user_id);
        it->second.push_back(r);
    }

    constexpr int64_t kGapSeconds = 24 * 3600;
    std::vector<Trajectory> out;
    for (const auto& uid : user_order) {
        auto& recs = per_user[uid];
        std::sort(recs.begin(), recs.end(), [](const CheckInRecord& a, const CheckInRecord& b) {
            if (a.local_time != b.local_time) return a.local_time < b.local_time;
            return a.record_id < b.record_id;
        });
        size_t start = 0;
        for (size_t i = 1; i <= recs.size(); ++i) {
            bool boundary =
                i == recs.size() || recs[i].local_time - recs[i - 1].local_time > kGapSeconds;
            if (!boundary) continue;
            if (i - start >= 3) {
                Trajectory t;
                t.user_id = uid;
                t.check_ins.assign(recs.begin() + start, recs.begin() + i);
                out.push_back(std::move(t));
            }
            start = i;
        }
    }
    return out;
}

Split split_dataset(std::vector<Trajectory> trajectories) {
    const size_t n = trajectories.size();
    if (n < 10) throw FatalError("split_dataset: need at least 10 trajectories, got " +
                                 std::to_string(n));

    std::sort(trajectories.begin(), trajectories.end(), [](const Trajectory& a, const Trajectory& b) {
        int64_t ta = a.check_ins.front().local_time;
        int64_t tb = b.check_ins.front().local_time;
        if (ta != tb) return ta < tb;
        return a.check_ins.front().record_id < b.check_ins.front().record_id;
    });

    const size_t b1 = static_cast<size_t>(0.8 * static_cast<double>(n));
    const size_t b2 = static_cast<size_t>(0.9 * static_cast<double>(n));
    Split split;
    split.train.assign(trajectories.begin(), trajectories.begin() + b1);
    split.val.assign(trajectories.begin() + b1, trajectories.begin() + b2);
    split.test.assign(trajectories.begin() + b2, trajectories.end());
    return split;
}

int encode_time_slot(int64_t local_time) {
    int hour = timeutil::hour_of_day(local_time);
    return timeutil::is_weekend(local_time) ? 24 + hour : hour;
}

Vocabulary build_vocabulary(const std::vector<CheckInRecord>& records) {
    Vocabulary vocab;
    for (const auto& r : records) {
        if (vocab.user_index.try_emplace(r.user_id, vocab.n_users()).second)
            vocab.users.push_back(r.user_id);
        if (vocab.cat_index.try_emplace(r.category_id, vocab.n_cats()).second) {
            vocab.cats.push_back(r.category_id);
            vocab.cat_display.push_back(r.category_name);
        }
        if (vocab.poi_index.try_emplace(r.poi_id, vocab.n_pois()).second) {
            vocab.pois.push_back(r.poi_id);
            vocab.poi_coords.push_back({r.latitude, r.longitude});
            vocab.poi_category.push_back(vocab.cat_index.at(r.category_id));
        }
    }
    return vocab;
}

IndexedTrajectory index_trajectory(const Trajectory& traj, const Vocabulary& vocab) {
    IndexedTrajectory out;
    auto uit = vocab.user_index.find(traj.user_id);
    require(uit != vocab.user_index.end(), "index_trajectory: unknown user " + traj.user_id);
    out.user = uit->second;
    out.steps.reserve(traj.check_ins.size());
    for (const auto& r : traj.check_ins) {
        auto pit = vocab.poi_index.find(r.poi_id);
        auto cit = vocab.cat_index.find(r.category_id);
        require(pit != vocab.poi_index.end(), "index_trajectory: unknown POI " + r.poi_id);
        require(cit != vocab.cat_index.end(),
                "index_trajectory: unknown category " + r.category_id);
        IndexedCheckIn step;
        step.poi = pit->second;
        step.cat = cit->second;
        step.time_slot = encode_time_slot(r.local_time);
        step.day_of_week = timeutil::day_of_week(r.local_time);
        step.local_time = r.local_time;
        step.time_fraction =
            static_cast<double>(timeutil::seconds_of_day(r.local_time)) / 86400.0;
        out.steps.push_back(step);
    }
    return out;
}

std::vector<PredictionSample> make_samples(const std::vector<IndexedTrajectory>& trajectories) {
    std::vector<PredictionSample> samples;
    for (const auto& traj : trajectories) {
        const size_t m = traj.steps.size();
        if (m < 3) continue;
        for (size_t k = 2; k + 1 <= m; ++k) {
            PredictionSample s;
            s.user = traj.user;
            s.prefix.reserve(k);
            for (size_t i = 0; i < k; ++i) {
                const auto& st = traj.steps[i];
                s.prefix.push_back({st.poi, st.cat, st.time_slot, st.day_of_week});
            }
            const auto& target = traj.steps[k];
            s.target_poi = target.poi;
            s.target_cat = target.cat;
            s.target_time_fraction = target.time_fraction;
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

}  // namespace gdpw::ingest
