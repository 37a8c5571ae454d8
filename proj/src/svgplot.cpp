#include "cwmc/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cwmc {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt_tick(double v) {
  std::ostringstream os;
  if (v != 0.0 && (std::abs(v) >= 1e5 || std::abs(v) < 1e-3)) {
    os.precision(1);
    os << std::scientific << v;
  } else {
    os.precision(6);
    os << v;
  }
  return os.str();
}

}  // namespace

void write_svg_lines(const std::string& path, const std::vector<SvgSeries>& series,
                     const SvgPlotOptions& opts) {
  if (series.empty()) throw std::invalid_argument("write_svg_lines: no series");
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool first = true;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("write_svg_lines: x/y size mismatch");
    for (size_t i = 0; i < s.x.size(); ++i) {
      double xv = s.x[i], yv = s.y[i];
      if (opts.logx && !(xv > 0.0))
        throw std::invalid_argument("write_svg_lines: nonpositive x on log axis");
      if (opts.logy && !(yv > 0.0))
        throw std::invalid_argument("write_svg_lines: nonpositive y on log axis");
      if (opts.logx) xv = std::log10(xv);
      if (opts.logy) yv = std::log10(yv);
      if (first) {
        xmin = xmax = xv;
        ymin = ymax = yv;
        first = false;
      } else {
        xmin = std::min(xmin, xv);
        xmax = std::max(xmax, xv);
        ymin = std::min(ymin, yv);
        ymax = std::max(ymax, yv);
      }
    }
  }
  if (first) throw std::invalid_argument("write_svg_lines: all series empty");
  if (xmax - xmin < 1e-12) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  double padx = 0.04 * (xmax - xmin), pady = 0.07 * (ymax - ymin);
  xmin -= padx;
  xmax += padx;
  ymin -= pady;
  ymax += pady;

  const double ml = 80, mr = 20, mt = 40, mb = 55;
  double pw = opts.width - ml - mr, ph = opts.height - mt - mb;
  auto px = [&](double v) {
    if (opts.logx) v = std::log10(v);
    return ml + (v - xmin) / (xmax - xmin) * pw;
  };
  auto py = [&](double v) {
    if (opts.logy) v = std::log10(v);
    return mt + ph - (v - ymin) / (ymax - ymin) * ph;
  };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_svg_lines: cannot open " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opts.width << "\" height=\""
      << opts.height << "\" viewBox=\"0 0 " << opts.width << " " << opts.height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << opts.width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << opts.title << "</text>\n";

  // axes
  out << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
      << mt + ph << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
      << "\" stroke=\"black\"/>\n";

  auto ticks = [](double lo, double hi, bool is_log) {
    std::vector<double> t;
    if (is_log) {
      for (int e = static_cast<int>(std::floor(lo)); e <= static_cast<int>(std::ceil(hi)); ++e)
        if (e >= lo - 1e-9 && e <= hi + 1e-9) t.push_back(static_cast<double>(e));
      if (t.size() < 2)
        for (double v = lo; v <= hi + 1e-12; v += (hi - lo) / 4.0) t.push_back(v);
    } else {
      double span = hi - lo;
      double step = std::pow(10.0, std::floor(std::log10(span / 4.0)));
      if (span / step > 8.0) step *= 2.0;
      if (span / step > 8.0) step *= 2.5;
      for (double v = std::ceil(lo / step) * step; v <= hi + 1e-12 * span; v += step)
        t.push_back(v);
    }
    return t;
  };

  for (double t : ticks(xmin, xmax, opts.logx)) {
    double raw = opts.logx ? std::pow(10.0, t) : t;
    double X = ml + (t - xmin) / (xmax - xmin) * pw;
    out << "<line x1=\"" << X << "\" y1=\"" << mt + ph << "\" x2=\"" << X << "\" y2=\""
        << mt + ph + 5 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << X << "\" y=\"" << mt + ph + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt_tick(raw) << "</text>\n";
  }
  for (double t : ticks(ymin, ymax, opts.logy)) {
    double raw = opts.logy ? std::pow(10.0, t) : t;
    double Y = mt + ph - (t - ymin) / (ymax - ymin) * ph;
    out << "<line x1=\"" << ml - 5 << "\" y1=\"" << Y << "\" x2=\"" << ml << "\" y2=\"" << Y
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << Y + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt_tick(raw)
        << "</text>\n";
  }
  out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << opts.height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << opts.xlabel
      << "</text>\n";
  out << "<text x=\"18\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
      << "transform=\"rotate(-90 18 " << mt + ph / 2 << ")\">" << opts.ylabel << "</text>\n";

  for (size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (size_t i = 0; i < s.x.size(); ++i) out << px(s.x[i]) << "," << py(s.y[i]) << " ";
    out << "\"/>\n";
    for (size_t i = 0; i < s.x.size(); ++i)
      out << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\""
          << color << "\"/>\n";
    double ly = mt + 16 + 18 * static_cast<double>(si);
    out << "<line x1=\"" << ml + pw - 150 << "\" y1=\"" << ly - 4 << "\" x2=\"" << ml + pw - 120
        << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << ml + pw - 114 << "\" y=\"" << ly
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace cwmc
