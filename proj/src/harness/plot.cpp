#include "fpo/harness/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <vector>

namespace fpo::harness {

namespace {

constexpr int kWidth = 860;
constexpr int kHeight = 520;
constexpr int kMarginLeft = 80;
constexpr int kMarginRight = 180;  // legend gutter
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 60;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct Series {
    std::string label;
    std::vector<double> values;
};

/// Round limits outward to a tidy step and emit ~5 ticks.
std::vector<double> ticks(double lo, double hi) {
    if (hi <= lo) hi = lo + 1.0;
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (mag * m >= raw) {
            step = mag * m;
            break;
        }
    }
    std::vector<double> out;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) {
        out.push_back(t);
    }
    return out;
}

void line_chart(const std::filesystem::path& path, const std::vector<Series>& series,
                const std::string& title, const std::string& y_label,
                const std::vector<double>& reference_line = {}) {
    if (series.empty()) {
        throw std::invalid_argument("plot: nothing to draw");
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    std::size_t n = 0;
    for (const auto& s : series) {
        n = std::max(n, s.values.size());
        for (double v : s.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!reference_line.empty()) {
        lo = std::min(lo, reference_line.front());
        hi = std::max(hi, reference_line.front());
    }
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    const auto x_of = [&](double it) {
        return kMarginLeft + plot_w * (n > 1 ? it / static_cast<double>(n - 1) : 0.5);
    };
    const auto y_of = [&](double v) {
        return kMarginTop + plot_h * (1.0 - (v - lo) / (hi - lo));
    };

    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write chart: " + path.string());
    }
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" font-family=\"sans-serif\" font-size=\"13\">\n";
    out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << kMarginLeft << "\" y=\"24\" font-size=\"16\">" << title
        << "</text>\n";

    // Axes
    out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop + plot_h << "\" x2=\""
        << kMarginLeft + plot_w << "\" y2=\"" << kMarginTop + plot_h
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\"" << kMarginLeft
        << "\" y2=\"" << kMarginTop + plot_h << "\" stroke=\"black\"/>\n";

    for (double t : ticks(lo, hi)) {
        const double y = y_of(t);
        out << "<line x1=\"" << kMarginLeft - 4 << "\" y1=\"" << fmt(y) << "\" x2=\""
            << kMarginLeft + plot_w << "\" y2=\"" << fmt(y)
            << "\" stroke=\"#dddddd\"/>\n";
        out << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << fmt(y + 4)
            << "\" text-anchor=\"end\">" << fmt(t) << "</text>\n";
    }
    for (double t : ticks(0, static_cast<double>(n > 1 ? n - 1 : 1))) {
        const double x = x_of(t);
        out << "<line x1=\"" << fmt(x) << "\" y1=\"" << kMarginTop + plot_h << "\" x2=\""
            << fmt(x) << "\" y2=\"" << kMarginTop + plot_h + 4 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fmt(x) << "\" y=\"" << kMarginTop + plot_h + 20
            << "\" text-anchor=\"middle\">" << fmt(t) << "</text>\n";
    }
    out << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 16
        << "\" text-anchor=\"middle\">iteration</text>\n";
    out << "<text x=\"20\" y=\"" << kMarginTop + plot_h / 2
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
        << kMarginTop + plot_h / 2 << ")\">" << y_label << "</text>\n";

    if (!reference_line.empty()) {
        const double y = y_of(reference_line.front());
        out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << fmt(y) << "\" x2=\""
            << kMarginLeft + plot_w << "\" y2=\"" << fmt(y)
            << "\" stroke=\"black\" stroke-dasharray=\"6 4\"/>\n";
    }

    int color = 0;
    int legend_y = kMarginTop + 10;
    for (const auto& s : series) {
        const char* stroke = kPalette[color % (sizeof(kPalette) / sizeof(kPalette[0]))];
        out << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.6\" points=\"";
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            out << fmt(x_of(static_cast<double>(i))) << ',' << fmt(y_of(s.values[i])) << ' ';
        }
        out << "\"/>\n";
        out << "<line x1=\"" << kMarginLeft + plot_w + 12 << "\" y1=\"" << legend_y << "\" x2=\""
            << kMarginLeft + plot_w + 36 << "\" y2=\"" << legend_y << "\" stroke=\"" << stroke
            << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << kMarginLeft + plot_w + 42 << "\" y=\"" << legend_y + 4 << "\">"
            << s.label << "</text>\n";
        legend_y += 20;
        ++color;
    }
    if (!reference_line.empty()) {
        out << "<line x1=\"" << kMarginLeft + plot_w + 12 << "\" y1=\"" << legend_y << "\" x2=\""
            << kMarginLeft + plot_w + 36 << "\" y2=\"" << legend_y
            << "\" stroke=\"black\" stroke-dasharray=\"6 4\"/>\n";
        out << "<text x=\"" << kMarginLeft + plot_w + 42 << "\" y=\"" << legend_y + 4
            << "\">prior mean</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace

void write_learning_curve_svg(const Summary& summary, const std::filesystem::path& path) {
    std::vector<Series> series;
    for (const auto& [name, ms] : summary.methods) {
        series.push_back({name, ms.median_curve});
    }
    line_chart(path, series, "Median expected return (" + summary.environment + ")",
               "expected return J");
}

void write_psi_schedule_svg(const Summary& summary, const std::filesystem::path& path) {
    std::vector<Series> series;
    for (const auto& [name, ms] : summary.methods) {
        series.push_back({name, ms.median_mean_theta});
    }
    line_chart(path, series, "Mean of selected sampling distribution (" + summary.environment +
                                 ")",
               "mean of q_psi over theta", {summary.prior_mean_theta});
}

}  // namespace fpo::harness
