#include "choreo/plot.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <limits>
#include <sstream>

namespace choreo::plot {

namespace {

constexpr double kSize = 480.0;
constexpr double kPad = 30.0;
constexpr std::array<const char*, 5> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string f3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

struct Box {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;

    void add(double x, double y) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
    }
    double sx(double x) const { return kPad + (x - x0) / std::max(x1 - x0, 1e-9) * (kSize - 2 * kPad); }
    double sy(double y) const { return kSize - kPad - (y - y0) / std::max(y1 - y0, 1e-9) * (kSize - 2 * kPad); }
};

std::string header() {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + f3(kSize) + "\" height=\"" + f3(kSize) +
           "\" viewBox=\"0 0 " + f3(kSize) + " " + f3(kSize) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

}  // namespace

std::string trajectories_svg(const motion::GroupMotion& m, const std::vector<int>& seams) {
    Box box;
    for (int c = 0; c < m.dancers(); ++c)
        for (int l = 0; l < m.frames(); ++l) box.add(m.root(c, l).x(), m.root(c, l).z());
    std::ostringstream os;
    os << header();
    for (int c = 0; c < m.dancers(); ++c) {
        os << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << kColors[c % kColors.size()] << "\" points=\"";
        for (int l = 0; l < m.frames(); ++l) os << f3(box.sx(m.root(c, l).x())) << ',' << f3(box.sy(m.root(c, l).z())) << ' ';
        os << "\"/>\n";
        const Vec3 start = m.root(c, 0);
        os << "<circle r=\"4\" fill=\"" << kColors[c % kColors.size()] << "\" cx=\"" << f3(box.sx(start.x()))
           << "\" cy=\"" << f3(box.sy(start.z())) << "\"/>\n";
        for (int s : seams) {
            if (s < 0 || s >= m.frames()) continue;
            os << "<rect width=\"5\" height=\"5\" fill=\"black\" x=\"" << f3(box.sx(m.root(c, s).x()) - 2.5)
               << "\" y=\"" << f3(box.sy(m.root(c, s).z()) - 2.5) << "\"/>\n";
        }
    }
    os << "<text x=\"" << f3(kPad) << "\" y=\"18\" font-size=\"12\">root paths (x-z), dots = start, squares = seams</text>\n";
    os << "</svg>\n";
    return os.str();
}

std::string displacement_svg(const motion::GroupMotion& m, const std::vector<int>& seams) {
    std::vector<double> step(static_cast<std::size_t>(m.frames()), 0.0);
    for (int l = 1; l < m.frames(); ++l)
        for (int c = 0; c < m.dancers(); ++c) step[l] = std::max(step[l], (m.root(c, l) - m.root(c, l - 1)).norm());
    Box box;
    box.add(0.0, 0.0);
    for (int l = 0; l < m.frames(); ++l) box.add(l, step[l]);
    std::ostringstream os;
    os << header();
    for (int s : seams)
        os << "<line stroke=\"#999\" stroke-dasharray=\"4 3\" x1=\"" << f3(box.sx(s)) << "\" x2=\"" << f3(box.sx(s))
           << "\" y1=\"" << f3(kPad) << "\" y2=\"" << f3(kSize - kPad) << "\"/>\n";
    os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (int l = 0; l < m.frames(); ++l) os << f3(box.sx(l)) << ',' << f3(box.sy(step[l])) << ' ';
    os << "\"/>\n";
    os << "<text x=\"" << f3(kPad) << "\" y=\"18\" font-size=\"12\">max root displacement per frame (m), dashed = seams</text>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace choreo::plot
