#include "tsrl/series/time.hpp"

#include <array>
#include <charconv>
#include <cstdint>

#include <fmt/format.h>

namespace tsrl::series {
namespace {

// Howard Hinnant's civil-from-days / days-from-civil.
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
    std::int64_t year;
    unsigned month;
    unsigned day;
    unsigned hour;
    unsigned minute;
    unsigned second;
    unsigned weekday; // 0 = Sunday
    unsigned yday;    // 0-based
};

Civil to_civil(Timestamp ts) {
    const std::int64_t secs = ts.time_since_epoch().count();
    std::int64_t days = secs / 86400;
    std::int64_t rem = secs % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    const std::int64_t z = days + 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400 + (m <= 2);

    Civil c{};
    c.year = y;
    c.month = m;
    c.day = d;
    c.hour = static_cast<unsigned>(rem / 3600);
    c.minute = static_cast<unsigned>((rem % 3600) / 60);
    c.second = static_cast<unsigned>(rem % 60);
    const std::int64_t wd = (days + 4) % 7; // 1970-01-01 was a Thursday
    c.weekday = static_cast<unsigned>(wd < 0 ? wd + 7 : wd);
    c.yday = static_cast<unsigned>(days - days_from_civil(y, 1, 1));
    return c;
}

bool is_leap(std::int64_t y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

unsigned days_in_month(std::int64_t y, unsigned m) {
    static constexpr std::array<unsigned, 12> kDays{31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return m == 2 && is_leap(y) ? 29 : kDays[m - 1];
}

bool read_fixed(std::string_view text, std::size_t pos, std::size_t width, unsigned& out) {
    if (pos + width > text.size()) return false;
    out = 0;
    for (std::size_t i = pos; i < pos + width; ++i) {
        const char ch = text[i];
        if (ch < '0' || ch > '9') return false;
        out = out * 10 + static_cast<unsigned>(ch - '0');
    }
    return true;
}

constexpr std::array<const char*, 12> kMonthAbbrev{"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                   "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
constexpr std::array<const char*, 7> kDayAbbrev{"Sun", "Mon", "Tue", "Wed", "Thu", "Fri", "Sat"};

constexpr std::string_view kSupportedConversions = "YymdeHMSjbaF%";

} // namespace

std::optional<Timestamp> parse_rfc3339(std::string_view text) {
    unsigned year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
    if (text.size() < 20) return std::nullopt;
    if (!read_fixed(text, 0, 4, year) || text[4] != '-' || !read_fixed(text, 5, 2, month) ||
        text[7] != '-' || !read_fixed(text, 8, 2, day) || (text[10] != 'T' && text[10] != 't') ||
        !read_fixed(text, 11, 2, hour) || text[13] != ':' || !read_fixed(text, 14, 2, minute) ||
        text[16] != ':' || !read_fixed(text, 17, 2, second)) {
        return std::nullopt;
    }
    if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month) || hour > 23 ||
        minute > 59 || second > 59) {
        return std::nullopt;
    }
    std::int64_t offset = 0;
    const std::string_view zone = text.substr(19);
    if (zone == "Z" || zone == "z") {
        offset = 0;
    } else if (zone.size() == 6 && (zone[0] == '+' || zone[0] == '-') && zone[3] == ':') {
        unsigned oh = 0, om = 0;
        if (!read_fixed(zone, 1, 2, oh) || !read_fixed(zone, 4, 2, om) || oh > 23 || om > 59) {
            return std::nullopt;
        }
        offset = (zone[0] == '+' ? 1 : -1) * static_cast<std::int64_t>(oh * 3600 + om * 60);
    } else {
        return std::nullopt;
    }
    const std::int64_t days = days_from_civil(year, month, day);
    const std::int64_t secs = days * 86400 + hour * 3600 + minute * 60 + second - offset;
    return Timestamp{Duration{secs}};
}

std::string format_rfc3339(Timestamp ts) {
    const Civil c = to_civil(ts);
    return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", c.year, c.month, c.day, c.hour,
                       c.minute, c.second);
}

bool is_representable(Timestamp ts) {
    const Civil c = to_civil(ts);
    return c.year >= 0 && c.year <= 9999;
}

std::optional<Duration> parse_duration(std::string_view text) {
    if (text.size() < 2) return std::nullopt;
    std::int64_t value = 0;
    const char* first = text.data();
    const char* last = text.data() + text.size() - 1;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || value <= 0) return std::nullopt;
    std::int64_t unit = 0;
    switch (text.back()) {
    case 's': unit = 1; break;
    case 'm': unit = 60; break;
    case 'h': unit = 3600; break;
    case 'd': unit = 86400; break;
    case 'w': unit = 604800; break;
    default: return std::nullopt;
    }
    return Duration{value * unit};
}

std::string format_duration(Duration d) {
    const std::int64_t s = d.count();
    if (s % 604800 == 0) return fmt::format("{}w", s / 604800);
    if (s % 86400 == 0) return fmt::format("{}d", s / 86400);
    if (s % 3600 == 0) return fmt::format("{}h", s / 3600);
    if (s % 60 == 0) return fmt::format("{}m", s / 60);
    return fmt::format("{}s", s);
}

bool is_supported_time_pattern(std::string_view pattern) {
    bool has_conversion = false;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        if (pattern[i] != '%') continue;
        if (i + 1 >= pattern.size()) return false;
        const char conv = pattern[++i];
        if (kSupportedConversions.find(conv) == std::string_view::npos) return false;
        if (conv != '%') has_conversion = true;
    }
    return has_conversion;
}

std::string format_time(Timestamp ts, std::string_view pattern) {
    const Civil c = to_civil(ts);
    std::string out;
    out.reserve(pattern.size() * 2);
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        if (pattern[i] != '%' || i + 1 >= pattern.size()) {
            out.push_back(pattern[i]);
            continue;
        }
        const char conv = pattern[++i];
        switch (conv) {
        case 'Y': out += fmt::format("{:04d}", c.year); break;
        case 'y': out += fmt::format("{:02d}", ((c.year % 100) + 100) % 100); break;
        case 'm': out += fmt::format("{:02d}", c.month); break;
        case 'd': out += fmt::format("{:02d}", c.day); break;
        case 'e': out += fmt::format("{:2d}", c.day); break;
        case 'H': out += fmt::format("{:02d}", c.hour); break;
        case 'M': out += fmt::format("{:02d}", c.minute); break;
        case 'S': out += fmt::format("{:02d}", c.second); break;
        case 'j': out += fmt::format("{:03d}", c.yday + 1); break;
        case 'b': out += kMonthAbbrev[c.month - 1]; break;
        case 'a': out += kDayAbbrev[c.weekday]; break;
        case 'F': out += fmt::format("{:04d}-{:02d}-{:02d}", c.year, c.month, c.day); break;
        case '%': out.push_back('%'); break;
        default:
            out.push_back('%');
            out.push_back(conv);
        }
    }
    return out;
}

} // namespace tsrl::series
