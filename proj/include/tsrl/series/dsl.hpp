#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsrl/series/spec.hpp"

// JSON schema for SeriesSpec documents ("series DSL"):
//
//   {
//     "start_time": "2024-01-01T00:00:00Z",   RFC 3339
//     "step": "1h",                          <n>{s,m,h,d,w}
//     "count": 96,
//     "base_level": 10.0,
//     "trend": {"slope": 0.05},              optional
//     "seasonality": {"period": 24, "amplitude": 5.0, "waveform": "sine"},   optional
//     "noise": {"sigma": 0.5},
//     "ood_segments": [{"start_index": 40, "length": 6, "kind": "spike", "magnitude": 12.0}],
//     "rng_seed": 7,
//     "plot": {"title": "...", "x_label": "...", "y_label": "...", "width_px": 800,
//              "height_px": 400, "x_tick_format": "%m-%d %H:%M", "max_ticks": 6}   optional
//   }

namespace tsrl::series {

struct DslIssue {
    std::string rule_id; // "schema", "time_format" or "invalid_spec"
    std::string message;
};

struct DslParseResult {
    std::optional<SeriesSpec> spec;
    std::vector<DslIssue> issues;

    bool ok() const { return spec.has_value() && issues.empty(); }
};

/// Collects every schema, time-format, and invariant issue instead of stopping at the first.
DslParseResult parse_series_spec(const nlohmann::json& doc);

class DslError : public std::runtime_error {
public:
    explicit DslError(std::vector<DslIssue> issues);
    const std::vector<DslIssue>& issues() const { return issues_; }

private:
    std::vector<DslIssue> issues_;
};

/// Throws DslError on any issue.
SeriesSpec series_spec_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const SeriesSpec& spec);

nlohmann::json to_json(const plot::PlotSpec& plot);

} // namespace tsrl::series
