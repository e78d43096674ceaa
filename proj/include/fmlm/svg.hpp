#pragma once

#include <string>
#include <vector>

namespace fmlm {

// Standalone SVG figures, no display dependency.

struct Series {
    std::string label;
    std::vector<double> x, y;
};

// Retention-curve style line chart.
std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label,
                           const std::vector<Series>& series);

// Paired-run slope chart: one line per seed connecting the two
// conditions, annotated with the significance stars.
struct SlopePair {
    double left, right;  // per-seed metric under condition A / condition B
};
std::string svg_slope_chart(const std::string& title, const std::string& left_label,
                            const std::string& right_label,
                            const std::vector<SlopePair>& pairs,
                            const std::string& annotation);

// Grouped bars (e.g. per-quintile under/over SSE).
struct BarGroup {
    std::string label;
    std::vector<double> values;  // one per series
};
std::string svg_bar_chart(const std::string& title,
                          const std::vector<std::string>& series_labels,
                          const std::vector<BarGroup>& groups);

}  // namespace fmlm
