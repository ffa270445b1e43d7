#include "qrfx/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qrfx/error.hpp"

namespace qrfx::svg {
namespace {

constexpr double kWidth = 720.0, kHeight = 480.0;
constexpr double kMarginL = 70.0, kMarginR = 70.0, kMarginT = 40.0, kMarginB = 55.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

struct Range {
  double lo = 0.0, hi = 1.0;
  void expand(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  static Range of(const std::vector<double>& vs) {
    Range r{vs.front(), vs.front()};
    for (double v : vs) r.expand(v);
    return r;
  }
  void pad() {
    double span = hi - lo;
    if (span <= 0.0) span = std::fabs(hi) > 0.0 ? std::fabs(hi) : 1.0;
    lo -= 0.05 * span;
    hi += 0.05 * span;
  }
};

// Maps data coordinates into the fixed plot rectangle.
struct Frame {
  Range x, y;
  double px(double v) const {
    return kMarginL + (v - x.lo) / (x.hi - x.lo) * (kWidth - kMarginL - kMarginR);
  }
  double py(double v) const {
    return kHeight - kMarginB -
           (v - y.lo) / (y.hi - y.lo) * (kHeight - kMarginT - kMarginB);
  }
};

class Canvas {
 public:
  Canvas() {
    body_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << (int)kWidth
          << "\" height=\"" << (int)kHeight << "\" viewBox=\"0 0 " << (int)kWidth
          << " " << (int)kHeight << "\">\n"
          << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }

  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double width = 1.0, const std::string& dash = "") {
    body_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\""
          << num(x2) << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke
          << "\" stroke-width=\"" << num(width) << "\"";
    if (!dash.empty()) body_ << " stroke-dasharray=\"" << dash << "\"";
    body_ << "/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts,
                const std::string& stroke, double width = 1.5,
                double opacity = 1.0) {
    body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\""
          << num(width) << "\" stroke-opacity=\"" << num(opacity) << "\" points=\"";
    for (const auto& [x, y] : pts) body_ << num(x) << "," << num(y) << " ";
    body_ << "\"/>\n";
  }

  void circle(double cx, double cy, double r, const std::string& fill) {
    body_ << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\""
          << num(r) << "\" fill=\"" << fill << "\"/>\n";
  }

  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& stroke = "none") {
    body_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\""
          << num(w) << "\" height=\"" << num(h) << "\" fill=\"" << fill
          << "\" stroke=\"" << stroke << "\"/>\n";
  }

  void text(double x, double y, const std::string& s, double size = 12.0,
            const std::string& anchor = "start", const std::string& fill = "black",
            double rotate = 0.0) {
    body_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\""
          << num(size) << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor
          << "\" fill=\"" << fill << "\"";
    if (rotate != 0.0)
      body_ << " transform=\"rotate(" << num(rotate) << " " << num(x) << " "
            << num(y) << ")\"";
    body_ << ">" << escape(s) << "</text>\n";
  }

  void axes(const Frame& f, const std::string& xlabel, const std::string& ylabel,
            const std::string& title) {
    line(kMarginL, kHeight - kMarginB, kWidth - kMarginR, kHeight - kMarginB,
         "black");
    line(kMarginL, kMarginT, kMarginL, kHeight - kMarginB, "black");
    for (int t = 0; t <= 5; ++t) {
      double xv = f.x.lo + (f.x.hi - f.x.lo) * t / 5.0;
      double yv = f.y.lo + (f.y.hi - f.y.lo) * t / 5.0;
      line(f.px(xv), kHeight - kMarginB, f.px(xv), kHeight - kMarginB + 4, "black");
      text(f.px(xv), kHeight - kMarginB + 18, tick_label(xv), 10, "middle");
      line(kMarginL - 4, f.py(yv), kMarginL, f.py(yv), "black");
      text(kMarginL - 8, f.py(yv) + 4, tick_label(yv), 10, "end");
    }
    text(kWidth / 2, kHeight - 12, xlabel, 12, "middle");
    text(18, kHeight / 2, ylabel, 12, "middle", "black", -90);
    if (!title.empty()) text(kWidth / 2, kMarginT - 14, title, 14, "middle");
  }

  void save(const std::string& path) {
    body_ << "</svg>\n";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << body_.str();
  }

 private:
  static std::string escape(const std::string& s) {
    std::string r;
    for (char c : s) {
      if (c == '&')
        r += "&amp;";
      else if (c == '<')
        r += "&lt;";
      else if (c == '>')
        r += "&gt;";
      else
        r += c;
    }
    return r;
  }

  std::ostringstream body_;
};

std::string heat_color(double t) {
  // blue -> white -> red
  t = std::clamp(t, 0.0, 1.0);
  int r, g, b;
  if (t < 0.5) {
    double u = t * 2.0;
    r = static_cast<int>(59 + u * (255 - 59));
    g = static_cast<int>(76 + u * (255 - 76));
    b = static_cast<int>(192 + u * (255 - 192));
  } else {
    double u = (t - 0.5) * 2.0;
    r = static_cast<int>(255 - u * (255 - 180));
    g = static_cast<int>(255 - u * 251);
    b = static_cast<int>(255 - u * 217);
  }
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

void write_path_plot(const std::string& out, const SelectionResult& sel,
                     const std::string& loss_label) {
  if (sel.path.empty()) throw ValidationError("path plot: empty path");

  std::vector<double> s, loss, nz;
  for (const auto& pt : sel.path) {
    s.push_back(pt.s);
    loss.push_back(pt.mean_cv_loss);
    nz.push_back(static_cast<double>(pt.nonzero_count));
  }
  Frame f{Range::of(s), Range::of(loss)};
  f.x.pad();
  f.y.pad();
  Frame fr{f.x, Range::of(nz)};
  fr.y.pad();

  Canvas c;
  c.axes(f, "s = sum |beta|", loss_label, "Regularization path");

  std::vector<std::pair<double, double>> pl, pn;
  for (std::size_t i = 0; i < s.size(); ++i) {
    pl.emplace_back(f.px(s[i]), f.py(loss[i]));
    pn.emplace_back(fr.px(s[i]), fr.py(nz[i]));
  }
  c.polyline(pn, "#999999", 1.5);
  c.polyline(pl, "#1f77b4", 2.0);

  const auto& chosen = sel.path[sel.chosen_index];
  c.line(f.px(chosen.s), kMarginT, f.px(chosen.s), kHeight - kMarginB, "#d62728",
         1.0, "4 3");
  c.circle(f.px(chosen.s), f.py(chosen.mean_cv_loss), 4, "#d62728");

  // right axis for the nonzero count
  c.line(kWidth - kMarginR, kMarginT, kWidth - kMarginR, kHeight - kMarginB,
         "#999999");
  for (int t = 0; t <= 5; ++t) {
    double yv = fr.y.lo + (fr.y.hi - fr.y.lo) * t / 5.0;
    c.text(kWidth - kMarginR + 8, fr.py(yv) + 4, tick_label(yv), 10, "start",
           "#999999");
  }
  c.text(kWidth - 14, kHeight / 2, "nonzero coefficients", 12, "middle", "#999999",
         90);
  c.save(out);
}

void write_ice_plot(const std::string& out, const IceGrid& grid,
                    const std::string& feature_name) {
  if (grid.grid.empty() || grid.curves.rows == 0)
    throw ValidationError("ice plot: empty grid");

  Range xr = Range::of(grid.grid);
  Range yr{grid.curves.data.front(), grid.curves.data.front()};
  for (double v : grid.curves.data) yr.expand(v);
  for (double v : grid.sample_pred) yr.expand(v);
  xr.pad();
  yr.pad();
  Frame f{xr, yr};

  Canvas c;
  c.axes(f, feature_name, "prediction", "ICE / PDP: " + feature_name);
  for (std::size_t i = 0; i < grid.curves.rows; ++i) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t g = 0; g < grid.grid.size(); ++g)
      pts.emplace_back(f.px(grid.grid[g]), f.py(grid.curves(i, g)));
    c.polyline(pts, "#888888", 1.0, 0.45);
  }
  std::vector<std::pair<double, double>> pdp;
  for (std::size_t g = 0; g < grid.grid.size(); ++g)
    pdp.emplace_back(f.px(grid.grid[g]), f.py(grid.pdp[g]));
  c.polyline(pdp, "#1f77b4", 3.0);
  for (std::size_t i = 0; i < grid.sample_x.size(); ++i)
    c.circle(f.px(grid.sample_x[i]), f.py(grid.sample_pred[i]), 3, "#d62728");
  c.save(out);
}

void write_pdp2_plot(const std::string& out, const PdpSurface& surface,
                     const std::string& name_a, const std::string& name_b) {
  if (surface.grid_a.empty() || surface.grid_b.empty())
    throw ValidationError("pdp2 plot: empty grid");

  Range xr = Range::of(surface.grid_a), yr = Range::of(surface.grid_b);
  for (double v : surface.sample_a) xr.expand(v);
  for (double v : surface.sample_b) yr.expand(v);
  xr.pad();
  yr.pad();
  Frame f{xr, yr};

  Range vr{surface.surface.data.front(), surface.surface.data.front()};
  for (double v : surface.surface.data) vr.expand(v);
  double vspan = vr.hi - vr.lo > 0 ? vr.hi - vr.lo : 1.0;

  Canvas c;
  const std::size_t ga = surface.grid_a.size(), gb = surface.grid_b.size();
  auto cell_edge = [](const std::vector<double>& g, std::size_t i, bool hi) {
    if (g.size() == 1) return g[0] + (hi ? 0.5 : -0.5);
    if (!hi) return i == 0 ? g[0] - (g[1] - g[0]) / 2 : (g[i - 1] + g[i]) / 2;
    return i + 1 == g.size() ? g[i] + (g[i] - g[i - 1]) / 2 : (g[i] + g[i + 1]) / 2;
  };
  for (std::size_t i = 0; i < ga; ++i) {
    for (std::size_t j = 0; j < gb; ++j) {
      double x0 = f.px(cell_edge(surface.grid_a, i, false));
      double x1 = f.px(cell_edge(surface.grid_a, i, true));
      double y0 = f.py(cell_edge(surface.grid_b, j, true));
      double y1 = f.py(cell_edge(surface.grid_b, j, false));
      c.rect(x0, y0, x1 - x0, y1 - y0,
             heat_color((surface.surface(i, j) - vr.lo) / vspan));
    }
  }

  // iso-contours by marching squares over the grid-node lattice
  if (ga > 1 && gb > 1) {
    for (int level = 1; level <= 4; ++level) {
      double iso = vr.lo + vspan * level / 5.0;
      for (std::size_t i = 0; i + 1 < ga; ++i) {
        for (std::size_t j = 0; j + 1 < gb; ++j) {
          double v00 = surface.surface(i, j), v10 = surface.surface(i + 1, j);
          double v01 = surface.surface(i, j + 1),
                 v11 = surface.surface(i + 1, j + 1);
          auto lerp = [&](double a, double b, double va, double vb) {
            return a + (iso - va) / (vb - va) * (b - a);
          };
          std::vector<std::pair<double, double>> hits;
          double ax0 = surface.grid_a[i], ax1 = surface.grid_a[i + 1];
          double by0 = surface.grid_b[j], by1 = surface.grid_b[j + 1];
          if ((v00 < iso) != (v10 < iso))
            hits.emplace_back(lerp(ax0, ax1, v00, v10), by0);
          if ((v01 < iso) != (v11 < iso))
            hits.emplace_back(lerp(ax0, ax1, v01, v11), by1);
          if ((v00 < iso) != (v01 < iso))
            hits.emplace_back(ax0, lerp(by0, by1, v00, v01));
          if ((v10 < iso) != (v11 < iso))
            hits.emplace_back(ax1, lerp(by0, by1, v10, v11));
          if (hits.size() >= 2)
            c.line(f.px(hits[0].first), f.py(hits[0].second), f.px(hits[1].first),
                   f.py(hits[1].second), "#444444", 0.8);
        }
      }
    }
  }

  for (std::size_t i = 0; i < surface.sample_a.size(); ++i)
    c.circle(f.px(surface.sample_a[i]), f.py(surface.sample_b[i]), 3, "#d62728");
  c.axes(f, name_a, name_b, "2-D PDP: " + name_a + " x " + name_b);
  c.save(out);
}

void write_bar_plot(const std::string& out, const std::vector<std::string>& labels,
                    const std::vector<double>& values, const std::string& title) {
  if (labels.empty() || labels.size() != values.size())
    throw ValidationError("bar plot: empty or mismatched series");

  double vmax = *std::max_element(values.begin(), values.end());
  if (vmax <= 0.0) vmax = 1.0;
  const double left = 180.0;
  const double bar_area = kWidth - left - kMarginR;
  const double row_h = (kHeight - kMarginT - kMarginB) /
                       static_cast<double>(labels.size());

  Canvas c;
  c.text(kWidth / 2, kMarginT - 14, title, 14, "middle");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    double y = kMarginT + row_h * static_cast<double>(i);
    double w = bar_area * values[i] / vmax;
    c.rect(left, y + row_h * 0.15, w, row_h * 0.7, "#1f77b4");
    c.text(left - 8, y + row_h * 0.62, labels[i], 11, "end");
    c.text(left + w + 6, y + row_h * 0.62, tick_label(values[i]), 10, "start");
  }
  c.line(left, kMarginT, left, kHeight - kMarginB, "black");
  c.save(out);
}

void write_waterfall_plot(const std::string& out, const WaterfallRecord& rec,
                          const std::vector<std::string>& feature_names) {
  if (rec.entries.empty()) throw ValidationError("waterfall plot: empty record");

  // running totals from base to prediction, in the record's order
  std::vector<double> start(rec.entries.size()), stop(rec.entries.size());
  double run = rec.base;
  for (std::size_t i = 0; i < rec.entries.size(); ++i) {
    start[i] = run;
    run += rec.entries[i].phi;
    stop[i] = run;
  }
  Range xr{rec.base, rec.base};
  for (std::size_t i = 0; i < start.size(); ++i) {
    xr.expand(start[i]);
    xr.expand(stop[i]);
  }
  xr.pad();

  const double left = 180.0;
  const double span = kWidth - left - kMarginR;
  auto px = [&](double v) { return left + (v - xr.lo) / (xr.hi - xr.lo) * span; };
  const double row_h = (kHeight - kMarginT - kMarginB) /
                       static_cast<double>(rec.entries.size());

  Canvas c;
  c.text(kWidth / 2, kMarginT - 14,
         "base " + tick_label(rec.base) + "  ->  prediction " +
             tick_label(rec.prediction),
         14, "middle");
  c.line(px(rec.base), kMarginT, px(rec.base), kHeight - kMarginB, "#999999", 1.0,
         "4 3");
  for (std::size_t i = 0; i < rec.entries.size(); ++i) {
    const auto& e = rec.entries[i];
    double y = kMarginT + row_h * static_cast<double>(i);
    double x0 = px(std::min(start[i], stop[i]));
    double w = std::fabs(px(stop[i]) - px(start[i]));
    c.rect(x0, y + row_h * 0.15, std::max(w, 0.5), row_h * 0.7,
           e.phi >= 0 ? "#d62728" : "#1f77b4");
    std::string label = e.feature < feature_names.size()
                            ? feature_names[e.feature]
                            : "f" + std::to_string(e.feature);
    c.text(left - 8, y + row_h * 0.62, label + " = " + tick_label(e.value), 11,
           "end");
    c.text(px(std::max(start[i], stop[i])) + 5, y + row_h * 0.62,
           tick_label(e.phi), 10, "start");
  }
  c.save(out);
}

void write_hist_plot(const std::string& out, const std::vector<double>& values,
                     int bins, const std::vector<std::pair<double, double>>& quantiles,
                     const std::string& title) {
  if (values.empty()) throw ValidationError("hist plot: empty series");
  if (bins < 1) throw ValidationError("hist plot: bins >= 1");

  Range xr = Range::of(values);
  if (xr.hi <= xr.lo) xr.hi = xr.lo + 1.0;
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - xr.lo) / (xr.hi - xr.lo) *
                                      static_cast<double>(bins));
    counts[std::min(b, counts.size() - 1)] += 1.0;
  }
  Range yr{0.0, *std::max_element(counts.begin(), counts.end())};
  yr.hi *= 1.1;
  Range xpad = xr;
  xpad.pad();
  Frame f{xpad, yr};

  Canvas c;
  c.axes(f, "value", "count", title);
  double bw = (xr.hi - xr.lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b < counts.size(); ++b) {
    double x0 = f.px(xr.lo + bw * static_cast<double>(b));
    double x1 = f.px(xr.lo + bw * static_cast<double>(b + 1));
    double y = f.py(counts[b]);
    c.rect(x0, y, x1 - x0, kHeight - kMarginB - y, "#1f77b4", "white");
  }
  for (const auto& [tau, value] : quantiles) {
    c.line(f.px(value), kMarginT, f.px(value), kHeight - kMarginB, "#d62728", 1.5,
           "5 3");
    c.text(f.px(value) + 4, kMarginT + 12, "q" + tick_label(tau), 10, "start",
           "#d62728");
  }
  c.save(out);
}

}  // namespace qrfx::svg
