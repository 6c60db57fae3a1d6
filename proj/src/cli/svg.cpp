// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsloc/cli/svg.hpp"

#include <algorithm>
#include <cstdio>

namespace fsloc::cli {

namespace {

constexpr double kLeft = 120.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kPlotWidth = 720.0;
constexpr double kCurveHeight = 40.0;
constexpr double kStripHeight = 14.0;
constexpr double kBarHeight = 8.0;
constexpr double kTrackGap = 18.0;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
            case '&':
                out += "&amp;";
                break;
            case '<':
                out += "&lt;";
                break;
            case '>':
                out += "&gt;";
                break;
            case '"':
                out += "&quot;";
                break;
            default:
                out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_localization_svg(const LocalizationFigure& fig) {
    const std::size_t n = std::max<std::size_t>(fig.snippets, 1);
    const double cell = kPlotWidth / static_cast<double>(n);
    const double track_height =
        kCurveHeight + kStripHeight + kBarHeight + (fig.has_ground_truth ? kBarHeight + 2.0 : 0.0) + 6.0;
    const double height = kTop + static_cast<double>(fig.tracks.size()) * (track_height + kTrackGap) + 30.0;
    const double width = kLeft + kPlotWidth + kRight;

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
         "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\" font-family=\"monospace\" font-size=\"11\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"" + num(width) + "\" height=\"" + num(height) + "\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(kLeft) + "\" y=\"20\" font-size=\"13\">" + escape(fig.title) + "</text>\n";

    double y = kTop;
    for (const auto& t : fig.tracks) {
        double lo = t.attention.empty() ? 0.0 : *std::min_element(t.attention.begin(), t.attention.end());
        double hi = t.attention.empty() ? 1.0 : *std::max_element(t.attention.begin(), t.attention.end());
        lo = std::min(lo, t.threshold);
        hi = std::max(hi, t.threshold);
        const double span = hi > lo ? hi - lo : 1.0;
        auto curve_y = [&](double a) { return y + kCurveHeight - (a - lo) / span * kCurveHeight; };

        s += "<g class=\"track\">\n";
        s += "<text x=\"8\" y=\"" + num(y + kCurveHeight / 2.0) + "\">" + escape(t.label) + "</text>\n";
        s += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(y) + "\" width=\"" + num(kPlotWidth) + "\" height=\"" +
             num(kCurveHeight) + "\" fill=\"none\" stroke=\"#ccc\"/>\n";
        if (!t.attention.empty()) {
            s += "<polyline fill=\"none\" stroke=\"#333\" points=\"";
            for (std::size_t i = 0; i < t.attention.size(); ++i) {
                s += (i ? " " : "") + num(kLeft + (static_cast<double>(i) + 0.5) * cell) + "," +
                     num(curve_y(t.attention[i]));
            }
            s += "\"/>\n";
        }
        s += "<line class=\"threshold\" x1=\"" + num(kLeft) + "\" x2=\"" + num(kLeft + kPlotWidth) + "\" y1=\"" +
             num(curve_y(t.threshold)) + "\" y2=\"" + num(curve_y(t.threshold)) +
             "\" stroke=\"#d62728\" stroke-dasharray=\"4,3\"/>\n";

        const double strip_y = y + kCurveHeight + 2.0;
        for (std::size_t i = 0; i < t.attention.size(); ++i) {
            const int level = static_cast<int>(255.0 - 255.0 * (t.attention[i] - lo) / span);
            char color[16];
            std::snprintf(color, sizeof color, "#ff%02x%02x", level, level);
            s += "<rect x=\"" + num(kLeft + static_cast<double>(i) * cell) + "\" y=\"" + num(strip_y) +
                 "\" width=\"" + num(cell) + "\" height=\"" + num(kStripHeight) + "\" fill=\"" + color + "\"/>\n";
        }

        const double pred_y = strip_y + kStripHeight + 2.0;
        for (const auto& p : t.predictions) {
            s += "<rect class=\"prediction\" x=\"" + num(kLeft + p.start * cell) + "\" y=\"" + num(pred_y) +
                 "\" width=\"" + num((p.end - p.start) * cell) + "\" height=\"" + num(kBarHeight) +
                 "\" fill=\"#1f77b4\"/>\n";
        }
        if (fig.has_ground_truth) {
            const double gt_y = pred_y + kBarHeight + 2.0;
            for (const auto& g : t.ground_truth) {
                s += "<rect class=\"ground-truth\" x=\"" + num(kLeft + g.start * cell) + "\" y=\"" + num(gt_y) +
                     "\" width=\"" + num((g.end - g.start) * cell) + "\" height=\"" + num(kBarHeight) +
                     "\" fill=\"#2ca02c\"/>\n";
            }
        }
        s += "</g>\n";
        y += track_height + kTrackGap;
    }

    // Time axis.
    const std::size_t ticks = std::min<std::size_t>(n, 10);
    for (std::size_t k = 0; k <= ticks; ++k) {
        const double pos = static_cast<double>(n) * static_cast<double>(k) / static_cast<double>(ticks);
        const double label = fig.seconds_per_snippet ? pos * *fig.seconds_per_snippet : pos;
        s += "<text x=\"" + num(kLeft + pos * cell) + "\" y=\"" + num(y + 10.0) + "\" text-anchor=\"middle\">" +
             num(label) + "</text>\n";
    }
    s += "<text x=\"" + num(kLeft + kPlotWidth) + "\" y=\"" + num(y + 24.0) + "\" text-anchor=\"end\">" +
         (fig.seconds_per_snippet ? "seconds" : "snippets") + "</text>\n";
    s += "</svg>\n";
    return s;
}

}  // namespace fsloc::cli
