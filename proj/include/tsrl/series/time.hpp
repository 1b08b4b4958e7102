#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace tsrl::series {

using Timestamp = std::chrono::sys_seconds;
using Duration = std::chrono::seconds;

/// Parses "YYYY-MM-DDTHH:MM:SS" followed by "Z" or a "+HH:MM"/"-HH:MM" offset.
/// Fractional seconds are rejected; the series grid is whole seconds.
std::optional<Timestamp> parse_rfc3339(std::string_view text);

/// Always emits the UTC "Z" form.
std::string format_rfc3339(Timestamp ts);

/// Accepts "<positive integer><unit>" with unit in {s, m, h, d, w}.
std::optional<Duration> parse_duration(std::string_view text);
std::string format_duration(Duration d);

// Subset of strftime conversions accepted for tick labels.
bool is_supported_time_pattern(std::string_view pattern);

/// Formats in UTC. Unsupported conversions are copied through verbatim.
std::string format_time(Timestamp ts, std::string_view pattern);

/// Years outside [0, 9999] cannot be written as RFC 3339.
bool is_representable(Timestamp ts);

} // namespace tsrl::series
