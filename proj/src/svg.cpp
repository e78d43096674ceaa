#include "fmlm/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace fmlm {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 420;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 30;
constexpr int kMarginTop = 50;
constexpr int kMarginBottom = 60;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
constexpr int kPaletteSize = 8;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo, hi;
    double scale(double v, double px_lo, double px_hi) const {
        if (hi == lo) return (px_lo + px_hi) / 2.0;
        return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
    }
};

Range pad(double lo, double hi) {
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    double margin = (hi - lo) * 0.05;
    return {lo - margin, hi + margin};
}

void open_svg(std::ostringstream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
        << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
        << kHeight << "\">\n";
    out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"28\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">"
        << xml_escape(title) << "</text>\n";
}

void axes(std::ostringstream& out, const Range& xr, const Range& yr,
          const std::string& x_label, const std::string& y_label) {
    const int x0 = kMarginLeft, x1 = kWidth - kMarginRight;
    const int y0 = kHeight - kMarginBottom, y1 = kMarginTop;
    out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1
        << "\" y2=\"" << y0 << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0
        << "\" y2=\"" << y1 << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        double fx = xr.lo + (xr.hi - xr.lo) * t / 4.0;
        double px = xr.scale(fx, x0, x1);
        out << "<text x=\"" << num(px) << "\" y=\"" << y0 + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"11\">"
            << num(fx) << "</text>\n";
        double fy = yr.lo + (yr.hi - yr.lo) * t / 4.0;
        double py = yr.scale(fy, y0, y1);
        out << "<text x=\"" << x0 - 8 << "\" y=\"" << num(py + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
               "font-size=\"11\">"
            << num(fy) << "</text>\n";
    }
    out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 15
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\">"
        << xml_escape(x_label) << "</text>\n";
    out << "<text x=\"20\" y=\"" << (y0 + y1) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\" transform=\"rotate(-90 20 "
        << (y0 + y1) / 2 << ")\">" << xml_escape(y_label) << "</text>\n";
}

}  // namespace

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label,
                           const std::vector<Series>& series) {
    if (series.empty()) throw std::invalid_argument("svg_line_chart: no series");
    double xlo = series[0].x.front(), xhi = xlo, ylo = series[0].y.front(), yhi = ylo;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size() || s.x.empty())
            throw std::invalid_argument("svg_line_chart: bad series " + s.label);
        for (double v : s.x) {
            xlo = std::min(xlo, v);
            xhi = std::max(xhi, v);
        }
        for (double v : s.y) {
            ylo = std::min(ylo, v);
            yhi = std::max(yhi, v);
        }
    }
    Range xr = pad(xlo, xhi), yr = pad(ylo, yhi);

    std::ostringstream out;
    open_svg(out, title);
    axes(out, xr, yr, x_label, y_label);
    const int x0 = kMarginLeft, x1 = kWidth - kMarginRight;
    const int y0 = kHeight - kMarginBottom, y1 = kMarginTop;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const char* color = kPalette[i % kPaletteSize];
        out << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t j = 0; j < s.x.size(); ++j)
            out << num(xr.scale(s.x[j], x0, x1)) << ','
                << num(yr.scale(s.y[j], y0, y1)) << ' ';
        out << "\"/>\n";
        out << "<text x=\"" << x1 - 5 << "\" y=\"" << y1 + 16 * (int)i + 12
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
               "font-size=\"11\" fill=\""
            << color << "\">" << xml_escape(s.label) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::string svg_slope_chart(const std::string& title, const std::string& left_label,
                            const std::string& right_label,
                            const std::vector<SlopePair>& pairs,
                            const std::string& annotation) {
    if (pairs.empty()) throw std::invalid_argument("svg_slope_chart: no pairs");
    double lo = pairs[0].left, hi = lo;
    for (const auto& p : pairs) {
        lo = std::min({lo, p.left, p.right});
        hi = std::max({hi, p.left, p.right});
    }
    Range yr = pad(lo, hi);
    const int y0 = kHeight - kMarginBottom, y1 = kMarginTop;
    const double xl = kWidth * 0.35, xrp = kWidth * 0.65;

    std::ostringstream out;
    open_svg(out, title);
    for (int t = 0; t <= 4; ++t) {
        double fy = yr.lo + (yr.hi - yr.lo) * t / 4.0;
        double py = yr.scale(fy, y0, y1);
        out << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << num(py + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
               "font-size=\"11\">"
            << num(fy) << "</text>\n";
    }
    for (const auto& p : pairs) {
        double yl = yr.scale(p.left, y0, y1);
        double yrv = yr.scale(p.right, y0, y1);
        out << "<line x1=\"" << num(xl) << "\" y1=\"" << num(yl) << "\" x2=\""
            << num(xrp) << "\" y2=\"" << num(yrv)
            << "\" stroke=\"#777777\" stroke-width=\"1\"/>\n";
        out << "<circle cx=\"" << num(xl) << "\" cy=\"" << num(yl)
            << "\" r=\"4\" fill=\"" << kPalette[0] << "\"/>\n";
        out << "<circle cx=\"" << num(xrp) << "\" cy=\"" << num(yrv)
            << "\" r=\"4\" fill=\"" << kPalette[1] << "\"/>\n";
    }
    out << "<text x=\"" << num(xl) << "\" y=\"" << y0 + 24
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\">"
        << xml_escape(left_label) << "</text>\n";
    out << "<text x=\"" << num(xrp) << "\" y=\"" << y0 + 24
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\">"
        << xml_escape(right_label) << "</text>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"" << y1 - 6
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"12\">"
        << xml_escape(annotation) << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

std::string svg_bar_chart(const std::string& title,
                          const std::vector<std::string>& series_labels,
                          const std::vector<BarGroup>& groups) {
    if (groups.empty()) throw std::invalid_argument("svg_bar_chart: no groups");
    const std::size_t n_series = series_labels.size();
    double lo = 0.0, hi = 0.0;
    for (const auto& g : groups) {
        if (g.values.size() != n_series)
            throw std::invalid_argument("svg_bar_chart: group size mismatch");
        for (double v : g.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    Range yr = pad(lo, hi);
    const int x0 = kMarginLeft, x1 = kWidth - kMarginRight;
    const int y0 = kHeight - kMarginBottom, y1 = kMarginTop;
    const double group_w =
        static_cast<double>(x1 - x0) / static_cast<double>(groups.size());
    const double bar_w = group_w / (static_cast<double>(n_series) + 1.0);

    std::ostringstream out;
    open_svg(out, title);
    double zero_y = yr.scale(0.0, y0, y1);
    out << "<line x1=\"" << x0 << "\" y1=\"" << num(zero_y) << "\" x2=\"" << x1
        << "\" y2=\"" << num(zero_y) << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        double fy = yr.lo + (yr.hi - yr.lo) * t / 4.0;
        double py = yr.scale(fy, y0, y1);
        out << "<text x=\"" << x0 - 8 << "\" y=\"" << num(py + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
               "font-size=\"11\">"
            << num(fy) << "</text>\n";
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
        double gx = x0 + group_w * static_cast<double>(g) + bar_w / 2.0;
        for (std::size_t s = 0; s < n_series; ++s) {
            double v = groups[g].values[s];
            double top = yr.scale(std::max(0.0, v), y0, y1);
            double bottom = yr.scale(std::min(0.0, v), y0, y1);
            out << "<rect x=\"" << num(gx + bar_w * static_cast<double>(s))
                << "\" y=\"" << num(top) << "\" width=\"" << num(bar_w * 0.9)
                << "\" height=\"" << num(std::max(0.5, bottom - top))
                << "\" fill=\"" << kPalette[s % kPaletteSize] << "\"/>\n";
        }
        out << "<text x=\"" << num(x0 + group_w * (static_cast<double>(g) + 0.5))
            << "\" y=\"" << y0 + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"11\">"
            << xml_escape(groups[g].label) << "</text>\n";
    }
    for (std::size_t s = 0; s < n_series; ++s) {
        out << "<rect x=\"" << x1 - 110 << "\" y=\"" << y1 + 16 * (int)s
            << "\" width=\"10\" height=\"10\" fill=\"" << kPalette[s % kPaletteSize]
            << "\"/>\n";
        out << "<text x=\"" << x1 - 95 << "\" y=\"" << y1 + 16 * (int)s + 9
            << "\" font-family=\"sans-serif\" font-size=\"11\">"
            << xml_escape(series_labels[s]) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace fmlm
