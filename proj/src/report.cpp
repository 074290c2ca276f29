#include "ppr/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace ppr {

namespace {

constexpr double kMarginLeft = 80.0;
constexpr double kMarginRight = 180.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 60.0;

std::string escape_xml(const std::string& s) {
    std::string out;
    out.reserve(s.size());
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

std::string fixed(double v, int digits = 2) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

std::string tick_label(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    bool log = false;

    [[nodiscard]] double map(double v, double from, double to) const {
        const double a = log ? std::log10(lo) : lo;
        const double b = log ? std::log10(hi) : hi;
        const double x = log ? std::log10(v) : v;
        return from + (x - a) / (b - a) * (to - from);
    }
};

Axis fit_axis(const std::vector<double>& values, bool log) {
    Axis axis;
    axis.log = log;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double v : values) {
        if (!std::isfinite(v) || (log && v <= 0.0)) {
            continue;
        }
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!std::isfinite(lo)) {
        lo = log ? 1.0 : 0.0;
        hi = log ? 10.0 : 1.0;
    }
    if (log) {
        lo = std::pow(10.0, std::floor(std::log10(lo)));
        hi = std::pow(10.0, std::ceil(std::log10(hi)));
        if (hi <= lo) {
            hi = lo * 10.0;
        }
    } else {
        const double pad = (hi > lo) ? 0.05 * (hi - lo) : 0.5;
        lo -= pad;
        hi += pad;
    }
    axis.lo = lo;
    axis.hi = hi;
    return axis;
}

std::vector<double> ticks(const Axis& axis) {
    std::vector<double> out;
    if (axis.log) {
        for (double v = axis.lo; v <= axis.hi * 1.0000001; v *= 10.0) {
            out.push_back(v);
        }
        if (out.size() > 10) {
            std::vector<double> thinned;
            const std::size_t stride = (out.size() + 8) / 9;
            for (std::size_t i = 0; i < out.size(); i += stride) {
                thinned.push_back(out[i]);
            }
            out = std::move(thinned);
        }
        return out;
    }
    const double span = axis.hi - axis.lo;
    const double raw = span / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    }
    for (double v = std::ceil(axis.lo / step) * step; v <= axis.hi + 1e-12 * span; v += step) {
        out.push_back(std::abs(v) < 1e-12 * span ? 0.0 : v);
    }
    return out;
}

void open_svg(std::ostringstream& os, double w, double h, const std::string& title) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(w, 0) << "\" height=\""
       << fixed(h, 0) << "\" viewBox=\"0 0 " << fixed(w, 0) << ' ' << fixed(h, 0)
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << fixed(w / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
       << escape_xml(title) << "</text>\n";
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return (ec == std::errc()) ? std::string(buf, ptr) : std::string("nan");
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i != 0) {
            out << ',';
        }
        const auto& c = cells[i];
        if (c.find_first_of(",\"\n") != std::string::npos) {
            out << '"';
            for (char ch : c) {
                if (ch == '"') {
                    out << '"';
                }
                out << ch;
            }
            out << '"';
        } else {
            out << c;
        }
    }
    out << '\n';
}

std::string render_line_plot(const PlotSpec& spec, const std::vector<PlotSeries>& series) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& s : series) {
        xs.insert(xs.end(), s.x.begin(), s.x.end());
        ys.insert(ys.end(), s.y.begin(), s.y.end());
    }
    const Axis ax = fit_axis(xs, spec.log_x);
    const Axis ay = fit_axis(ys, false);

    const double left = kMarginLeft;
    const double right = spec.width - kMarginRight;
    const double top = kMarginTop;
    const double bottom = spec.height - kMarginBottom;
    const auto px = [&](double x) { return ax.map(x, left, right); };
    const auto py = [&](double y) { return ay.map(y, bottom, top); };

    std::ostringstream os;
    open_svg(os, spec.width, spec.height, spec.title);

    for (double t : ticks(ax)) {
        const double x = px(t);
        os << "<line x1=\"" << fixed(x) << "\" y1=\"" << fixed(top) << "\" x2=\"" << fixed(x)
           << "\" y2=\"" << fixed(bottom) << "\" stroke=\"#e0e0e0\"/>\n";
        os << "<text x=\"" << fixed(x) << "\" y=\"" << fixed(bottom + 18)
           << "\" text-anchor=\"middle\">" << tick_label(t) << "</text>\n";
    }
    for (double t : ticks(ay)) {
        const double y = py(t);
        os << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(y) << "\" x2=\"" << fixed(right)
           << "\" y2=\"" << fixed(y) << "\" stroke=\"#e0e0e0\"/>\n";
        os << "<text x=\"" << fixed(left - 6) << "\" y=\"" << fixed(y + 4)
           << "\" text-anchor=\"end\">" << tick_label(t) << "</text>\n";
    }
    os << "<rect x=\"" << fixed(left) << "\" y=\"" << fixed(top) << "\" width=\""
       << fixed(right - left) << "\" height=\"" << fixed(bottom - top)
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fixed((left + right) / 2) << "\" y=\"" << fixed(spec.height - 16)
       << "\" text-anchor=\"middle\">" << escape_xml(spec.x_label) << "</text>\n";
    os << "<text transform=\"translate(18," << fixed((top + bottom) / 2)
       << ") rotate(-90)\" text-anchor=\"middle\">" << escape_xml(spec.y_label) << "</text>\n";

    double legend_y = top + 10;
    for (const auto& s : series) {
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (spec.log_x && s.x[i] <= 0.0) {
                continue;
            }
            os << fixed(px(s.x[i])) << ',' << fixed(py(s.y[i])) << ' ';
            if (s.staircase && i + 1 < s.x.size()) {
                os << fixed(px(s.x[i + 1])) << ',' << fixed(py(s.y[i])) << ' ';
            }
        }
        os << "\"/>\n";
        if (s.markers) {
            for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
                os << "<circle cx=\"" << fixed(px(s.x[i])) << "\" cy=\"" << fixed(py(s.y[i]))
                   << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
            }
        }
        os << "<line x1=\"" << fixed(right + 12) << "\" y1=\"" << fixed(legend_y) << "\" x2=\""
           << fixed(right + 36) << "\" y2=\"" << fixed(legend_y) << "\" stroke=\"" << s.color
           << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << fixed(right + 42) << "\" y=\"" << fixed(legend_y + 4) << "\">"
           << escape_xml(s.label) << "</text>\n";
        legend_y += 20;
    }
    os << "</svg>\n";
    return os.str();
}

std::string render_bar_chart(const std::string& title, const std::string& y_label,
                             const std::vector<Bar>& bars, bool log_y) {
    const double width = 640.0;
    const double height = 440.0;
    const double left = kMarginLeft;
    const double right = width - 40.0;
    const double top = kMarginTop;
    const double bottom = height - kMarginBottom;

    std::vector<double> values;
    for (const auto& b : bars) {
        values.push_back(b.value);
    }
    if (!log_y) {
        values.push_back(0.0);
    }
    Axis ay = fit_axis(values, log_y);
    if (!log_y) {
        ay.lo = 0.0;
    }
    const auto py = [&](double y) { return ay.map(y, bottom, top); };

    std::ostringstream os;
    open_svg(os, width, height, title);
    for (double t : ticks(ay)) {
        const double y = py(t);
        os << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(y) << "\" x2=\"" << fixed(right)
           << "\" y2=\"" << fixed(y) << "\" stroke=\"#e0e0e0\"/>\n";
        os << "<text x=\"" << fixed(left - 6) << "\" y=\"" << fixed(y + 4)
           << "\" text-anchor=\"end\">" << tick_label(t) << "</text>\n";
    }
    const double slot = (right - left) / std::max<std::size_t>(1, bars.size());
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const auto& b = bars[i];
        const double x0 = left + slot * (static_cast<double>(i) + 0.2);
        const double y = py(std::max(b.value, log_y ? ay.lo : 0.0));
        os << "<rect x=\"" << fixed(x0) << "\" y=\"" << fixed(y) << "\" width=\""
           << fixed(slot * 0.6) << "\" height=\"" << fixed(bottom - y) << "\" fill=\"" << b.color
           << "\"/>\n";
        os << "<text x=\"" << fixed(x0 + slot * 0.3) << "\" y=\"" << fixed(y - 6)
           << "\" text-anchor=\"middle\">" << tick_label(b.value) << "</text>\n";
        os << "<text x=\"" << fixed(x0 + slot * 0.3) << "\" y=\"" << fixed(bottom + 18)
           << "\" text-anchor=\"middle\">" << escape_xml(b.label) << "</text>\n";
    }
    os << "<rect x=\"" << fixed(left) << "\" y=\"" << fixed(top) << "\" width=\""
       << fixed(right - left) << "\" height=\"" << fixed(bottom - top)
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text transform=\"translate(18," << fixed((top + bottom) / 2)
       << ") rotate(-90)\" text-anchor=\"middle\">" << escape_xml(y_label) << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace ppr
