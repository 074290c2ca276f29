#pragma once

// CSV rows and minimal static SVG charts (polylines, axes, bars).

#include <ostream>
#include <string>
#include <vector>

namespace ppr {

/// Shortest text that reads back to the same double.
std::string format_double(double value);

void write_csv_row(std::ostream& out, const std::vector<std::string>& cells);

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    bool markers = false;
    /// Draw as a staircase holding y[i] on [x[i], x[i+1]).
    bool staircase = false;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    double width = 760.0;
    double height = 460.0;
};

std::string render_line_plot(const PlotSpec& spec, const std::vector<PlotSeries>& series);

struct Bar {
    std::string label;
    double value = 0.0;
    std::string color = "#1f77b4";
};

/// Bars on a log10 value axis when log_y is set.
std::string render_bar_chart(const std::string& title, const std::string& y_label,
                             const std::vector<Bar>& bars, bool log_y);

}  // namespace ppr
