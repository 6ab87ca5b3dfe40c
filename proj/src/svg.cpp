#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "relspar/diagram.hpp"

// Minimal hand-rolled selection-diagram renderer: per gamma one SVG with a
// panel per coefficient plus a value panel. Solid line = estimate, shaded
// band = +-1 theoretical SE, dotted lines = +-1 empirical SE, dashed rule =
// behavioral coefficient.

namespace relspar {

namespace {

constexpr double kPanelW = 320.0;
constexpr double kPanelH = 260.0;
constexpr double kMarL = 52.0, kMarR = 14.0, kMarT = 30.0, kMarB = 40.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string num_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

struct Series {
  std::vector<double> x;      // log10(lambda), plotting coordinates
  std::vector<double> mid;
  std::vector<double> lo_th, hi_th;    // theoretical band (may be empty)
  std::vector<double> lo_em, hi_em;    // empirical band (may be empty)
};

class Panel {
 public:
  Panel(double x0, double y0, double xmin, double xmax, double ymin,
        double ymax)
      : x0_(x0), y0_(y0), xmin_(xmin), xmax_(xmax), ymin_(ymin), ymax_(ymax) {}

  double px(double x) const {
    const double f = (x - xmin_) / (xmax_ - xmin_);
    return x0_ + kMarL + f * (kPanelW - kMarL - kMarR);
  }
  double py(double y) const {
    const double f = (y - ymin_) / (ymax_ - ymin_);
    return y0_ + kPanelH - kMarB - f * (kPanelH - kMarT - kMarB);
  }

  void frame(std::ostringstream& out, const std::string& title) const {
    out << "<rect x='" << num(x0_ + kMarL) << "' y='" << num(y0_ + kMarT)
        << "' width='" << num(kPanelW - kMarL - kMarR) << "' height='"
        << num(kPanelH - kMarT - kMarB)
        << "' fill='none' stroke='#444' stroke-width='1'/>\n";
    out << "<text x='" << num(x0_ + kPanelW / 2) << "' y='" << num(y0_ + 18)
        << "' font-size='13' text-anchor='middle' font-family='sans-serif'>"
        << title << "</text>\n";
    // axis labels: min / max lambda and y range
    out << "<text x='" << num(x0_ + kMarL) << "' y='"
        << num(y0_ + kPanelH - 22)
        << "' font-size='10' text-anchor='middle' font-family='sans-serif'>"
        << "1e" << num_g(xmin_) << "</text>\n";
    out << "<text x='" << num(x0_ + kPanelW - kMarR) << "' y='"
        << num(y0_ + kPanelH - 22)
        << "' font-size='10' text-anchor='middle' font-family='sans-serif'>"
        << "1e" << num_g(xmax_) << "</text>\n";
    out << "<text x='" << num(x0_ + kPanelW / 2) << "' y='"
        << num(y0_ + kPanelH - 8)
        << "' font-size='10' text-anchor='middle' font-family='sans-serif'>"
        << "log10(lambda)</text>\n";
    out << "<text x='" << num(x0_ + kMarL - 6) << "' y='"
        << num(py(ymin_) + 3)
        << "' font-size='10' text-anchor='end' font-family='sans-serif'>"
        << num_g(ymin_) << "</text>\n";
    out << "<text x='" << num(x0_ + kMarL - 6) << "' y='"
        << num(py(ymax_) + 3)
        << "' font-size='10' text-anchor='end' font-family='sans-serif'>"
        << num_g(ymax_) << "</text>\n";
  }

  void band(std::ostringstream& out, const Series& s,
            const std::vector<double>& lo, const std::vector<double>& hi,
            const std::string& fill) const {
    if (lo.empty()) return;
    out << "<polygon points='";
    for (std::size_t j = 0; j < s.x.size(); ++j)
      out << num(px(s.x[j])) << ',' << num(py(hi[j])) << ' ';
    for (std::size_t j = s.x.size(); j-- > 0;)
      out << num(px(s.x[j])) << ',' << num(py(lo[j])) << ' ';
    out << "' fill='" << fill << "' fill-opacity='0.35' stroke='none'/>\n";
  }

  void line(std::ostringstream& out, const Series& s,
            const std::vector<double>& y, const std::string& stroke,
            const std::string& dash) const {
    if (y.empty()) return;
    out << "<polyline points='";
    for (std::size_t j = 0; j < s.x.size(); ++j)
      out << num(px(s.x[j])) << ',' << num(py(y[j])) << ' ';
    out << "' fill='none' stroke='" << stroke << "' stroke-width='1.4'";
    if (!dash.empty()) out << " stroke-dasharray='" << dash << "'";
    out << "/>\n";
  }

  void hline(std::ostringstream& out, double y, const std::string& stroke) const {
    out << "<line x1='" << num(px(xmin_)) << "' y1='" << num(py(y))
        << "' x2='" << num(px(xmax_)) << "' y2='" << num(py(y))
        << "' stroke='" << stroke
        << "' stroke-width='1' stroke-dasharray='6,4'/>\n";
  }

 private:
  double x0_, y0_, xmin_, xmax_, ymin_, ymax_;
};

}  // namespace

std::string render_diagram_svg(const SweepResult& sw, const EmpiricalSd* emp,
                               std::size_t gi) {
  const std::size_t k_dim = sw.k_dim;
  const std::size_t n_l = sw.lambda_grid.size();

  // log-x positions; lambda = 0 sits half a decade left of the smallest
  // positive grid value
  double min_pos = std::numeric_limits<double>::infinity();
  for (double l : sw.lambda_grid)
    if (l > 0.0) min_pos = std::min(min_pos, l);
  if (!std::isfinite(min_pos)) min_pos = 1.0;
  std::vector<double> xs(n_l);
  for (std::size_t j = 0; j < n_l; ++j)
    xs[j] = std::log10(sw.lambda_grid[j] > 0.0 ? sw.lambda_grid[j]
                                               : min_pos / std::sqrt(10.0));
  const double xmin = *std::min_element(xs.begin(), xs.end());
  double xmax = *std::max_element(xs.begin(), xs.end());
  if (xmax <= xmin) xmax = xmin + 1.0;

  const std::size_t panels = k_dim + 1;
  std::ostringstream out;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='"
      << num(panels * kPanelW) << "' height='" << num(kPanelH + 24)
      << "' viewBox='0 0 " << num(panels * kPanelW) << ' '
      << num(kPanelH + 24) << "'>\n";
  out << "<text x='8' y='" << num(kPanelH + 16)
      << "' font-size='12' font-family='sans-serif'>gamma = "
      << num_g(sw.gamma_grid[gi])
      << "; shaded: theoretical +-1 SE; dotted: empirical +-1 SE; dashed: "
         "behavioral</text>\n";

  for (std::size_t panel = 0; panel < panels; ++panel) {
    const bool is_value = panel == k_dim;
    Series s;
    for (std::size_t j = 0; j < n_l; ++j) {
      const SweepPoint& pt = sw.points[gi][j];
      if (pt.failed) continue;
      s.x.push_back(xs[j]);
      if (is_value) {
        s.mid.push_back(pt.value);
        s.lo_th.push_back(pt.value - pt.value_se);
        s.hi_th.push_back(pt.value + pt.value_se);
        if (emp && std::isfinite(emp->value_sd[gi][j])) {
          s.lo_em.push_back(pt.value - emp->value_sd[gi][j]);
          s.hi_em.push_back(pt.value + emp->value_sd[gi][j]);
        }
      } else {
        const double b = pt.beta[panel];
        const double se = pt.se_theoretical.empty()
                              ? 0.0
                              : pt.se_theoretical[panel];
        s.mid.push_back(b);
        s.lo_th.push_back(b - se);
        s.hi_th.push_back(b + se);
        if (emp && std::isfinite(emp->coef_sd[gi][j][panel])) {
          s.lo_em.push_back(b - emp->coef_sd[gi][j][panel]);
          s.hi_em.push_back(b + emp->coef_sd[gi][j][panel]);
        }
      }
    }
    if (s.lo_em.size() != s.x.size()) {
      s.lo_em.clear();
      s.hi_em.clear();
    }

    double ymin = std::numeric_limits<double>::infinity();
    double ymax = -std::numeric_limits<double>::infinity();
    auto widen = [&](const std::vector<double>& v) {
      for (double y : v) {
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    };
    widen(s.lo_th);
    widen(s.hi_th);
    widen(s.lo_em);
    widen(s.hi_em);
    widen(s.mid);
    if (!is_value) {
      ymin = std::min(ymin, sw.b_n[panel]);
      ymax = std::max(ymax, sw.b_n[panel]);
    }
    if (!std::isfinite(ymin) || !std::isfinite(ymax)) {
      ymin = -1.0;
      ymax = 1.0;
    }
    const double pad = 0.05 * std::max(ymax - ymin, 1e-12);
    ymin -= pad;
    ymax += pad;

    Panel p(panel * kPanelW, 0.0, xmin, xmax, ymin, ymax);
    p.frame(out, is_value
                     ? std::string("value")
                     : "beta_" + std::to_string(panel + 1));
    p.band(out, s, s.lo_th, s.hi_th, is_value ? "#9ecae1" : "#a1d99b");
    p.line(out, s, s.lo_em, "#636363", "2,3");
    p.line(out, s, s.hi_em, "#636363", "2,3");
    p.line(out, s, s.mid, is_value ? "#08519c" : "#006d2c", "");
    if (!is_value) p.hline(out, sw.b_n[panel], "#e6550d");
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace relspar
