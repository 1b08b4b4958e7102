#pragma once

// Test-only reference implementations, deliberately independent of src/reward.

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tsrl/series/label.hpp"

namespace tsrl::oracle {

inline bool literal_at(std::string_view s, std::size_t i, const char* lit) {
    std::size_t k = 0;
    for (; lit[k] != '\0'; ++k) {
        if (i + k >= s.size() || s[i + k] != lit[k]) return false;
    }
    return true;
}

inline bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

/// Character-level state machine: an open tag arms a capture, another open tag
/// re-arms it, a close tag ends it. The last completed capture wins.
inline std::optional<std::string> scan_last_answer(std::string_view s) {
    std::optional<std::string> last;
    bool armed = false;
    std::string current;
    std::size_t i = 0;
    while (i < s.size()) {
        if (literal_at(s, i, "<answer>")) {
            armed = true;
            current.clear();
            i += 8;
            continue;
        }
        if (literal_at(s, i, "</answer>")) {
            if (armed) last = current;
            armed = false;
            i += 9;
            continue;
        }
        if (armed) current.push_back(s[i]);
        ++i;
    }
    if (!last) return last;
    std::size_t b = 0, e = last->size();
    while (b < e && is_ws((*last)[b])) ++b;
    while (e > b && is_ws((*last)[e - 1])) --e;
    return last->substr(b, e - b);
}

/// Brute-force point-wise F1: materialise every covered index.
inline double brute_force_f1(const std::vector<series::IndexInterval>& pred,
                             const std::vector<series::IndexInterval>& truth) {
    std::set<std::size_t> p, t;
    for (const auto& iv : pred)
        for (std::size_t i = iv.start; i < iv.end; ++i) p.insert(i);
    for (const auto& iv : truth)
        for (std::size_t i = iv.start; i < iv.end; ++i) t.insert(i);
    std::size_t tp = 0;
    for (std::size_t i : p) tp += t.count(i);
    const std::size_t fp = p.size() - tp;
    const std::size_t fn = t.size() - tp;
    if (tp == 0) return 0.0;
    return static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
}

} // namespace tsrl::oracle
