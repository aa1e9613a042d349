#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace rumourkit {

using Millis = std::chrono::milliseconds;
/// UTC instant at millisecond precision.
using Timestamp = std::chrono::sys_time<Millis>;
/// UTC calendar day.
using CivilDate = std::chrono::year_month_day;

inline Timestamp from_epoch_ms(std::int64_t ms) { return Timestamp{Millis{ms}}; }
inline std::int64_t to_epoch_ms(Timestamp t) { return t.time_since_epoch().count(); }

/// Accepts `YYYY-MM-DD[T ]HH:MM:SS[.fraction][Z|+HH:MM|-HH:MM|+HHMM]`.
/// A missing zone designator is read as UTC. Fractions beyond
/// milliseconds are truncated.
std::optional<Timestamp> parse_iso8601(std::string_view text);

/// Always `YYYY-MM-DDTHH:MM:SS.mmmZ`.
std::string format_iso8601(Timestamp t);

CivilDate utc_date(Timestamp t);
Timestamp start_of_day(CivilDate d);

std::optional<CivilDate> parse_date(std::string_view text);  // YYYY-MM-DD
std::string format_date(CivilDate d);                        // YYYY-MM-DD
std::string format_day_label(CivilDate d);                   // "9 Aug"

}  // namespace rumourkit
