#include "tsrl/series/dsl.hpp"

#include <cmath>

#include <fmt/format.h>

namespace tsrl::series {
namespace {

using nlohmann::json;

class Reader {
public:
    explicit Reader(std::vector<DslIssue>& issues) : issues_(issues) {}

    void schema(std::string msg) { issues_.push_back({"schema", std::move(msg)}); }
    void time(std::string msg) { issues_.push_back({"time_format", std::move(msg)}); }

    const json* field(const json& obj, const char* key, const std::string& path, bool required) {
        auto it = obj.find(key);
        if (it == obj.end() || it->is_null()) {
            if (required) schema(fmt::format("missing field {}{}", path, key));
            return nullptr;
        }
        return &*it;
    }

    std::optional<double> number(const json& obj, const char* key, const std::string& path, bool required) {
        const json* v = field(obj, key, path, required);
        if (!v) return std::nullopt;
        if (!v->is_number()) {
            schema(fmt::format("{}{} must be a number", path, key));
            return std::nullopt;
        }
        return v->get<double>();
    }

    std::optional<std::uint64_t> unsigned_int(const json& obj, const char* key, const std::string& path,
                                              bool required) {
        const json* v = field(obj, key, path, required);
        if (!v) return std::nullopt;
        if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<std::int64_t>() < 0)) {
            schema(fmt::format("{}{} must be a nonnegative integer", path, key));
            return std::nullopt;
        }
        return v->get<std::uint64_t>();
    }

    std::optional<std::string> string(const json& obj, const char* key, const std::string& path, bool required) {
        const json* v = field(obj, key, path, required);
        if (!v) return std::nullopt;
        if (!v->is_string()) {
            schema(fmt::format("{}{} must be a string", path, key));
            return std::nullopt;
        }
        return v->get<std::string>();
    }

private:
    std::vector<DslIssue>& issues_;
};

plot::PlotSpec read_plot(Reader& r, const json& doc) {
    plot::PlotSpec p;
    if (!doc.is_object()) {
        r.schema("plot must be an object");
        return p;
    }
    const std::string path = "plot.";
    if (auto s = r.string(doc, "title", path, false)) p.title = *s;
    if (auto s = r.string(doc, "x_label", path, false)) p.x_label = *s;
    if (auto s = r.string(doc, "y_label", path, false)) p.y_label = *s;
    if (auto v = r.unsigned_int(doc, "width_px", path, false)) p.width_px = static_cast<int>(*v);
    if (auto v = r.unsigned_int(doc, "height_px", path, false)) p.height_px = static_cast<int>(*v);
    if (auto v = r.unsigned_int(doc, "max_ticks", path, false)) p.max_ticks = static_cast<int>(*v);
    if (auto s = r.string(doc, "x_tick_format", path, false)) {
        if (!is_supported_time_pattern(*s)) {
            r.time(fmt::format("plot.x_tick_format \"{}\" is not a supported strftime pattern", *s));
        }
        p.x_tick_format = *s;
    }
    return p;
}

} // namespace

DslError::DslError(std::vector<DslIssue> issues)
    : std::runtime_error([&] {
          std::string msg = "series DSL rejected:";
          for (const auto& i : issues) msg += fmt::format("\n  - [{}] {}", i.rule_id, i.message);
          return msg;
      }()),
      issues_(std::move(issues)) {}

DslParseResult parse_series_spec(const nlohmann::json& doc) {
    DslParseResult result;
    auto& issues = result.issues;
    Reader r(issues);
    if (!doc.is_object()) {
        r.schema("series spec must be a JSON object");
        return result;
    }

    SeriesSpec spec;
    if (auto s = r.string(doc, "start_time", "", true)) {
        if (auto ts = parse_rfc3339(*s)) {
            spec.start_time = *ts;
        } else {
            r.time(fmt::format("start_time \"{}\" is not an RFC 3339 timestamp", *s));
        }
    }
    if (auto s = r.string(doc, "step", "", true)) {
        if (auto d = parse_duration(*s)) {
            spec.step = *d;
        } else {
            r.time(fmt::format("step \"{}\" is not a duration like 15m or 1h", *s));
        }
    }
    if (auto v = r.unsigned_int(doc, "count", "", true)) spec.count = static_cast<std::size_t>(*v);
    if (auto v = r.number(doc, "base_level", "", false)) spec.base_level = *v;
    if (auto v = r.unsigned_int(doc, "rng_seed", "", false)) spec.rng_seed = *v;

    if (const json* t = r.field(doc, "trend", "", false)) {
        if (!t->is_object()) {
            r.schema("trend must be an object");
        } else if (auto slope = r.number(*t, "slope", "trend.", true)) {
            spec.trend = Trend{*slope};
        }
    }
    if (const json* s = r.field(doc, "seasonality", "", false)) {
        if (!s->is_object()) {
            r.schema("seasonality must be an object");
        } else {
            Seasonality season;
            bool complete = true;
            if (auto p = r.unsigned_int(*s, "period", "seasonality.", true)) season.period = *p; else complete = false;
            if (auto a = r.number(*s, "amplitude", "seasonality.", true)) season.amplitude = *a; else complete = false;
            if (auto w = r.string(*s, "waveform", "seasonality.", false)) {
                if (auto wf = waveform_from_string(*w)) {
                    season.waveform = *wf;
                } else {
                    r.schema(fmt::format("seasonality.waveform \"{}\" not in {{sine, triangle, square}}", *w));
                    complete = false;
                }
            }
            if (complete) spec.seasonality = season;
        }
    }
    if (const json* n = r.field(doc, "noise", "", false)) {
        if (!n->is_object()) {
            r.schema("noise must be an object");
        } else if (auto sigma = r.number(*n, "sigma", "noise.", true)) {
            spec.noise.sigma = *sigma;
        }
    }
    if (const json* segs = r.field(doc, "ood_segments", "", false)) {
        if (!segs->is_array()) {
            r.schema("ood_segments must be an array");
        } else {
            for (std::size_t i = 0; i < segs->size(); ++i) {
                const json& item = (*segs)[i];
                const std::string path = fmt::format("ood_segments[{}].", i);
                if (!item.is_object()) {
                    r.schema(fmt::format("ood_segments[{}] must be an object", i));
                    continue;
                }
                OodSegment seg;
                bool complete = true;
                if (auto v = r.unsigned_int(item, "start_index", path, true)) seg.start_index = *v; else complete = false;
                if (auto v = r.unsigned_int(item, "length", path, true)) seg.length = *v; else complete = false;
                if (auto v = r.number(item, "magnitude", path, true)) seg.magnitude = *v; else complete = false;
                if (auto k = r.string(item, "kind", path, true)) {
                    if (auto kind = ood_kind_from_string(*k)) {
                        seg.kind = *kind;
                    } else {
                        r.schema(fmt::format("{}kind \"{}\" not in {{spike, level_shift, variance_burst}}", path, *k));
                        complete = false;
                    }
                } else {
                    complete = false;
                }
                if (complete) spec.ood_segments.push_back(seg);
            }
        }
    }
    if (const json* p = r.field(doc, "plot", "", false)) spec.plot = read_plot(r, *p);

    if (issues.empty()) {
        for (auto& v : validate(spec)) issues.push_back({"invalid_spec", std::move(v)});
    }
    if (issues.empty()) result.spec = std::move(spec);
    return result;
}

SeriesSpec series_spec_from_json(const nlohmann::json& doc) {
    auto parsed = parse_series_spec(doc);
    if (!parsed.ok()) throw DslError(std::move(parsed.issues));
    return std::move(*parsed.spec);
}

nlohmann::json to_json(const plot::PlotSpec& p) {
    return json{{"title", p.title},         {"x_label", p.x_label},
                {"y_label", p.y_label},     {"width_px", p.width_px},
                {"height_px", p.height_px}, {"x_tick_format", p.x_tick_format},
                {"max_ticks", p.max_ticks}};
}

nlohmann::json to_json(const SeriesSpec& spec) {
    json doc = json::object();
    doc["start_time"] = format_rfc3339(spec.start_time);
    doc["step"] = format_duration(spec.step);
    doc["count"] = spec.count;
    doc["base_level"] = spec.base_level;
    if (spec.trend) doc["trend"] = {{"slope", spec.trend->slope}};
    if (spec.seasonality) {
        doc["seasonality"] = {{"period", spec.seasonality->period},
                              {"amplitude", spec.seasonality->amplitude},
                              {"waveform", to_string(spec.seasonality->waveform)}};
    }
    doc["noise"] = {{"sigma", spec.noise.sigma}};
    json segs = json::array();
    for (const auto& s : spec.ood_segments) {
        segs.push_back({{"start_index", s.start_index},
                        {"length", s.length},
                        {"kind", to_string(s.kind)},
                        {"magnitude", s.magnitude}});
    }
    doc["ood_segments"] = std::move(segs);
    doc["rng_seed"] = spec.rng_seed;
    doc["plot"] = to_json(spec.plot);
    return doc;
}

} // namespace tsrl::series
