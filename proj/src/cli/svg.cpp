#include "optimice/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "optimice/core.hpp"

namespace optimice {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string joined(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            s += ' ';
        s += format_double(v[i]);
    }
    return s;
}

std::string short_number(double v)
{
    std::ostringstream ss;
    ss.precision(4);
    ss << v;
    return ss.str();
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v)
    {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void finish()
    {
        if (!std::isfinite(lo)) {
            lo = 0.0;
            hi = 1.0;
        } else if (hi - lo < 1e-300) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
};

}  // namespace

std::string render_svg(const PlotSpec& spec, const std::vector<Series>& series)
{
    bool log_y = spec.log_y;
    Range xr, yr;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.y.size(); ++i) {
            double e = s.err.empty() ? 0.0 : s.err[i];
            xr.add(s.x[i]);
            yr.add(s.y[i] - e);
            yr.add(s.y[i] + e);
            if (log_y && std::isfinite(s.y[i]) && !(s.y[i] - e > 0.0))
                log_y = false;
        }
    auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
    if (log_y) {
        Range lr;
        for (const auto& s : series)
            for (std::size_t i = 0; i < s.y.size(); ++i) {
                double e = s.err.empty() ? 0.0 : s.err[i];
                lr.add(std::log10(s.y[i] - e));
                lr.add(std::log10(s.y[i] + e));
            }
        yr = lr;
    }
    xr.finish();
    yr.finish();

    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto px = [&](double v) { return kLeft + (v - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto py = [&](double v) { return kTop + (1.0 - (ty(v) - yr.lo) / (yr.hi - yr.lo)) * ph; };
    auto coord = [](double v) { return short_number(std::round(v * 100.0) / 100.0); };

    std::ostringstream o;
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(spec.title)
      << "</text>\n";

    o << "<g class=\"axes\" stroke=\"black\">\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw << "\" y2=\"" << kTop + ph
      << "\"/>\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + ph << "\"/>\n"
      << "</g>\n<g class=\"ticks\" font-size=\"10\">\n";
    for (int i = 0; i <= 4; ++i) {
        double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
        double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
        double sx = kLeft + pw * i / 4.0;
        double sy = kTop + ph * (1.0 - i / 4.0);
        o << "<text x=\"" << coord(sx) << "\" y=\"" << kTop + ph + 15 << "\" text-anchor=\"middle\">"
          << short_number(fx) << "</text>\n"
          << "<text x=\"" << kLeft - 6 << "\" y=\"" << coord(sy + 4) << "\" text-anchor=\"end\">"
          << (log_y ? "1e" + short_number(fy) : short_number(fy)) << "</text>\n";
    }
    o << "</g>\n"
      << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
      << escape(spec.xlabel) << "</text>\n"
      << "<text transform=\"translate(16 " << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(spec.ylabel) << (log_y ? " (log scale)" : "") << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const Series& s = series[k];
        const char* color = kColors[k % std::size(kColors)];
        o << "<g class=\"series\" data-name=\"" << escape(s.name) << "\">\n";
        auto ok = [&](std::size_t i) {
            double e = s.err.empty() ? 0.0 : s.err[i];
            return std::isfinite(s.x[i]) && std::isfinite(s.y[i]) && (!log_y || s.y[i] - e > 0.0);
        };
        if (!s.err.empty() && s.style == Series::Style::Line) {
            std::string pts;
            for (std::size_t i = 0; i < s.y.size(); ++i)
                if (ok(i))
                    pts += coord(px(s.x[i])) + "," + coord(py(s.y[i] + s.err[i])) + " ";
            for (std::size_t i = s.y.size(); i-- > 0;)
                if (ok(i))
                    pts += coord(px(s.x[i])) + "," + coord(py(s.y[i] - s.err[i])) + " ";
            o << "<polygon class=\"band\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\""
              << pts << "\"/>\n";
        }
        o << "<" << (s.style == Series::Style::Line ? "polyline" : "g") << " class=\"data\" data-x=\"" << joined(s.x)
          << "\" data-y=\"" << joined(s.y) << "\"";
        if (!s.err.empty())
            o << " data-err=\"" << joined(s.err) << "\"";
        if (s.style == Series::Style::Line) {
            std::string pts;
            for (std::size_t i = 0; i < s.y.size(); ++i)
                if (ok(i))
                    pts += coord(px(s.x[i])) + "," + coord(py(s.y[i])) + " ";
            o << " fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << pts << "\"/>\n";
        } else {
            o << " fill=\"" << color << "\">\n";
            for (std::size_t i = 0; i < s.y.size(); ++i) {
                if (!ok(i))
                    continue;
                if (!s.err.empty())
                    o << "<line stroke=\"" << color << "\" x1=\"" << coord(px(s.x[i])) << "\" x2=\""
                      << coord(px(s.x[i])) << "\" y1=\"" << coord(py(s.y[i] - s.err[i])) << "\" y2=\""
                      << coord(py(s.y[i] + s.err[i])) << "\"/>\n";
                o << "<circle r=\"3.5\" cx=\"" << coord(px(s.x[i])) << "\" cy=\"" << coord(py(s.y[i])) << "\"/>\n";
            }
            o << "</g>\n";
        }
        double ly = kTop + 10 + 18.0 * static_cast<double>(k);
        o << "<rect x=\"" << kLeft + pw + 12 << "\" y=\"" << ly - 9 << "\" width=\"12\" height=\"10\" fill=\"" << color
          << "\"/>\n<text x=\"" << kLeft + pw + 30 << "\" y=\"" << ly << "\">" << escape(s.name) << "</text>\n</g>\n";
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace optimice
