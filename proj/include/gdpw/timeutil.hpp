#pragma once

#include <cstdint>

// Calendar arithmetic on epoch seconds, independent of the host timezone.
// Local times are represented as epoch seconds already shifted by the
// check-in's own UTC offset, so all functions here use flat UTC-style math.

namespace gdpw::timeutil {

inline int64_t floor_div(int64_t a, int64_t b) {
    int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

inline int64_t floor_mod(int64_t a, int64_t b) { return a - floor_div(a, b) * b; }

// days_from_civil / civil_from_days after Howard Hinnant's algorithms.
inline int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

inline int64_t epoch_seconds(int y, unsigned mon, unsigned day, unsigned h, unsigned mi, unsigned s) {
    return days_from_civil(y, mon, day) * 86400 + h * 3600 + mi * 60 + s;
}

struct CivilDate {
    int year;
    unsigned month;
    unsigned day;
};

inline CivilDate civil_from_days(int64_t z) {
    z += 719468;
    const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int64_t y = static_cast<int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return {static_cast<int>(y + (m <= 2)), m, d};
}

// 0 = Monday ... 6 = Sunday (1970-01-01 was a Thursday).
inline int day_of_week(int64_t t) {
    return static_cast<int>(floor_mod(floor_div(t, 86400) + 3, 7));
}

inline int hour_of_day(int64_t t) {
    return static_cast<int>(floor_mod(t, 86400) / 3600);
}

inline int64_t seconds_of_day(int64_t t) { return floor_mod(t, 86400); }

inline bool is_weekend(int64_t t) {
    int dow = day_of_week(t);
    return dow == 5 || dow == 6;
}

}  // namespace gdpw::timeutil
