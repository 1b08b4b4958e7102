#include "tsrl/plot/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <fmt/format.h>
#include <png.h>

namespace tsrl::plot {
namespace {

constexpr double kMarginLeft = 72;
constexpr double kMarginRight = 24;
constexpr double kMarginTop = 40;
constexpr double kMarginBottom = 56;
constexpr int kYTicks = 5;

std::string xml_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

// Fixed two-decimal coordinates keep the SVG byte-stable.
std::string px(double v) { return fmt::format("{:.2f}", v); }

ChartLayout make_layout(std::span<const double> values, std::vector<Tick> ticks, const PlotSpec& plot) {
    ChartLayout l;
    l.plot = plot;
    l.left = kMarginLeft;
    l.right = plot.width_px - kMarginRight;
    l.top = kMarginTop;
    l.bottom = plot.height_px - kMarginBottom;
    l.y_range = y_axis_range(values);

    const std::size_t n = values.size();
    auto x_of = [&](std::size_t i) {
        if (n <= 1) return (l.left + l.right) / 2.0;
        return l.left + (l.right - l.left) * static_cast<double>(i) / static_cast<double>(n - 1);
    };
    auto y_of = [&](double v) {
        return l.bottom - (v - l.y_range.lo) / (l.y_range.hi - l.y_range.lo) * (l.bottom - l.top);
    };
    l.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) l.points.emplace_back(x_of(i), y_of(values[i]));
    for (auto& t : ticks) {
        const double x = x_of(t.index);
        l.x_ticks.emplace_back(x, std::move(t));
    }
    for (int k = 0; k < kYTicks; ++k) {
        const double v = l.y_range.lo + (l.y_range.hi - l.y_range.lo) * k / (kYTicks - 1);
        l.y_ticks.emplace_back(y_of(v), fmt::format("{:.4g}", v));
    }
    return l;
}

class Canvas {
public:
    Canvas(int w, int h) : w_(w), h_(h), pixels_(static_cast<std::size_t>(w) * h * 3, 0xff) {}

    void set(int x, int y, std::uint32_t rgb) {
        if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
        auto* p = &pixels_[(static_cast<std::size_t>(y) * w_ + x) * 3];
        p[0] = static_cast<std::uint8_t>(rgb >> 16);
        p[1] = static_cast<std::uint8_t>(rgb >> 8);
        p[2] = static_cast<std::uint8_t>(rgb);
    }

    void line(double x0d, double y0d, double x1d, double y1d, std::uint32_t rgb) {
        int x0 = static_cast<int>(std::lround(x0d)), y0 = static_cast<int>(std::lround(y0d));
        const int x1 = static_cast<int>(std::lround(x1d)), y1 = static_cast<int>(std::lround(y1d));
        const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
        const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
        int err = dx + dy;
        for (;;) {
            set(x0, y0, rgb);
            if (x0 == x1 && y0 == y1) break;
            const int e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                x0 += sx;
            }
            if (e2 <= dx) {
                err += dx;
                y0 += sy;
            }
        }
    }

    int width() const { return w_; }
    int height() const { return h_; }
    const std::vector<std::uint8_t>& pixels() const { return pixels_; }

private:
    int w_, h_;
    std::vector<std::uint8_t> pixels_;
};

void append_png(png_structp png, png_bytep data, png_size_t len) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + len);
}

} // namespace

RenderError::RenderError(ValidationReport report)
    : std::runtime_error([&] {
          std::string msg = "cannot render series:";
          for (const auto& v : report.violations) msg += fmt::format(" [{}] {};", v.rule_id, v.message);
          return msg;
      }()),
      report_(std::move(report)) {}

AxisRange y_axis_range(std::span<const double> values) {
    double lo = INFINITY, hi = -INFINITY;
    for (double v : values) {
        if (!std::isfinite(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!std::isfinite(lo)) return {-1.0, 1.0};
    if (hi == lo) {
        const double pad = lo == 0.0 ? 1.0 : 0.05 * std::abs(lo);
        return {lo - pad, hi + pad};
    }
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

ChartLayout layout_series(const series::LabeledSeries& series, const PlotSpec& plot) {
    std::vector<Tick> ticks;
    for (std::size_t i : choose_tick_indices(series.timestamps.size(), plot.max_ticks)) {
        ticks.push_back({i, series::format_time(series.timestamps[i], plot.x_tick_format)});
    }
    return make_layout(series.values, std::move(ticks), plot);
}

ChartLayout layout_values(std::span<const double> values, std::span<const std::string> x_labels,
                          const PlotSpec& plot) {
    std::vector<Tick> ticks;
    for (std::size_t i : choose_tick_indices(values.size(), plot.max_ticks)) {
        ticks.push_back({i, i < x_labels.size() ? x_labels[i] : fmt::format("{}", i)});
    }
    return make_layout(values, std::move(ticks), plot);
}

std::string to_svg(const ChartLayout& l) {
    const auto& p = l.plot;
    std::string s;
    s += fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{1}" viewBox="0 0 {0} {1}">)",
                     p.width_px, p.height_px);
    s += '\n';
    s += R"(<rect x="0" y="0" width="100%" height="100%" fill="#ffffff"/>)";
    s += '\n';
    s += fmt::format(R"(<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>)",
                     px(p.width_px / 2.0), xml_escape(p.title));
    s += '\n';
    s += R"(<g stroke="#dddddd" stroke-width="1">)";
    for (const auto& [y, label] : l.y_ticks) {
        s += fmt::format(R"(<line x1="{}" y1="{}" x2="{}" y2="{}"/>)", px(l.left), px(y), px(l.right), px(y));
    }
    s += "</g>\n";
    s += fmt::format(R"(<g stroke="#000000" stroke-width="1"><line x1="{0}" y1="{1}" x2="{2}" y2="{1}"/><line x1="{0}" y1="{3}" x2="{0}" y2="{1}"/>)",
                     px(l.left), px(l.bottom), px(l.right), px(l.top));
    for (const auto& [x, tick] : l.x_ticks) {
        s += fmt::format(R"(<line x1="{0}" y1="{1}" x2="{0}" y2="{2}"/>)", px(x), px(l.bottom), px(l.bottom + 5));
    }
    s += "</g>\n";
    s += R"(<g font-family="sans-serif" font-size="11" fill="#000000">)";
    s += '\n';
    for (const auto& [x, tick] : l.x_ticks) {
        s += fmt::format(R"(<text class="xtick" data-index="{}" x="{}" y="{}" text-anchor="middle">{}</text>)",
                         tick.index, px(x), px(l.bottom + 18), xml_escape(tick.label));
        s += '\n';
    }
    for (const auto& [y, label] : l.y_ticks) {
        s += fmt::format(R"(<text class="ytick" x="{}" y="{}" text-anchor="end">{}</text>)", px(l.left - 6),
                         px(y + 4), xml_escape(label));
        s += '\n';
    }
    s += "</g>\n";
    s += fmt::format(R"(<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>)",
                     px((l.left + l.right) / 2.0), px(p.height_px - 12.0), xml_escape(p.x_label));
    s += '\n';
    s += fmt::format(R"svg(<text x="16" y="{0}" transform="rotate(-90 16 {0})" text-anchor="middle" font-family="sans-serif" font-size="12">{1}</text>)svg",
                     px((l.top + l.bottom) / 2.0), xml_escape(p.y_label));
    s += '\n';
    s += R"(<polyline fill="none" stroke="#1f77b4" stroke-width="1.5" points=")";
    for (std::size_t i = 0; i < l.points.size(); ++i) {
        if (i) s += ' ';
        s += px(l.points[i].first);
        s += ',';
        s += px(l.points[i].second);
    }
    s += "\"/>\n</svg>\n";
    return s;
}

std::vector<std::uint8_t> to_png(const ChartLayout& l) {
    Canvas c(l.plot.width_px, l.plot.height_px);
    for (const auto& [y, label] : l.y_ticks) c.line(l.left, y, l.right, y, 0xdddddd);
    c.line(l.left, l.bottom, l.right, l.bottom, 0x000000);
    c.line(l.left, l.top, l.left, l.bottom, 0x000000);
    for (const auto& [x, tick] : l.x_ticks) c.line(x, l.bottom, x, l.bottom + 5, 0x000000);
    for (std::size_t i = 1; i < l.points.size(); ++i) {
        c.line(l.points[i - 1].first, l.points[i - 1].second, l.points[i].first, l.points[i].second, 0x1f77b4);
    }
    if (l.points.size() == 1) c.set(static_cast<int>(l.points[0].first), static_cast<int>(l.points[0].second), 0x1f77b4);

    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, info ? &info : nullptr);
        throw std::runtime_error("PNG encoding failed");
    }
    png_set_write_fn(png, &out, append_png, nullptr);
    png_set_IHDR(png, info, static_cast<png_uint_32>(c.width()), static_cast<png_uint_32>(c.height()), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const auto& px_data = c.pixels();
    for (int y = 0; y < c.height(); ++y) {
        png_write_row(png, const_cast<png_bytep>(&px_data[static_cast<std::size_t>(y) * c.width() * 3]));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

std::string render_svg(const series::LabeledSeries& series, const PlotSpec& plot) {
    auto report = validate_for_plot(series, plot);
    if (!report.passed) throw RenderError(std::move(report));
    return to_svg(layout_series(series, plot));
}

std::vector<std::uint8_t> render_png(const series::LabeledSeries& series, const PlotSpec& plot) {
    auto report = validate_for_plot(series, plot);
    if (!report.passed) throw RenderError(std::move(report));
    return to_png(layout_series(series, plot));
}

std::string render_trace_svg(std::span<const double> values, std::span<const long> steps, const PlotSpec& plot) {
    std::vector<std::string> labels;
    labels.reserve(steps.size());
    for (long s : steps) labels.push_back(fmt::format("{}", s));
    return to_svg(layout_values(values, labels, plot));
}

} // namespace tsrl::plot
