// Hand-written SVG figures: apparatus panes with trajectories, and the
// topology switch curve of a scan.
#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hardy/geometry.hpp"
#include "hardy/trajectories.hpp"

namespace hardy::svg {

struct Box {
  double x0 = std::numeric_limits<double>::infinity();
  double y0 = std::numeric_limits<double>::infinity();
  double x1 = -std::numeric_limits<double>::infinity();
  double y1 = -std::numeric_limits<double>::infinity();

  void add(double x, double y) {
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  bool empty() const { return !(x1 >= x0); }
  Box padded(double f) const {
    const double px = std::max((x1 - x0) * f, 1e-9);
    const double py = std::max((y1 - y0) * f, 1e-9);
    return {x0 - px, y0 - py, x1 + px, y1 + py};
  }
};

/// Maps a data box onto a pixel rectangle with equal or independent scales.
struct Frame {
  Box data;
  double left, top, width, height;
  bool equal_aspect = true;

  double sx() const { return width / (data.x1 - data.x0); }
  double sy() const { return height / (data.y1 - data.y0); }
  double scale_x() const { return equal_aspect ? std::min(sx(), sy()) : sx(); }
  double scale_y() const { return equal_aspect ? std::min(sx(), sy()) : sy(); }
  double px(double x) const { return left + (x - data.x0) * scale_x(); }
  double py(double y) const { return top + height - (y - data.y0) * scale_y(); }
};

inline std::string num(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << (std::abs(v) < 0.005 ? 0.0 : v);
  return os.str();
}

inline std::string escape(const std::string& s) {
  std::string out;
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

inline const char* channel_color(const std::optional<Classification>& c) {
  if (!c || c->ambiguous) return "#999999";
  const auto& m = c->modes;
  if (m == ModePair{Stage::out1, Stage::out1}) return "#1f77b4";
  if (m == ModePair{Stage::out1, Stage::out2}) return "#2ca02c";
  if (m == ModePair{Stage::out2, Stage::out1}) return "#ff7f0e";
  return "#d62728";
}

class Document {
 public:
  Document(double w, double h) : w_(w), h_(h) {}

  void text(double x, double y, const std::string& s, int size = 13, const char* anchor = "start") {
    body_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << size
          << "\" text-anchor=\"" << anchor << "\">" << escape(s) << "</text>\n";
  }
  void line(double x0, double y0, double x1, double y1, const char* stroke, double width = 1.0) {
    body_ << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x1)
          << "\" y2=\"" << num(y1) << "\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width)
          << "\"/>\n";
  }
  void rect(double x, double y, double w, double h, const char* stroke) {
    body_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
          << "\" height=\"" << num(h) << "\" fill=\"none\" stroke=\"" << stroke << "\"/>\n";
  }
  void circle(double x, double y, double r, const char* fill) {
    body_ << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"" << num(r)
          << "\" fill=\"" << fill << "\"/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const char* stroke,
                double width = 1.0, double opacity = 1.0) {
    if (pts.size() < 2) return;
    body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width)
          << "\" stroke-opacity=\"" << num(opacity) << "\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      body_ << (i ? " " : "") << num(pts[i].first) << ',' << num(pts[i].second);
    }
    body_ << "\"/>\n";
  }

  std::string str() const {
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w_) << "\" height=\""
       << num(h_) << "\" viewBox=\"0 0 " << num(w_) << ' ' << num(h_)
       << "\" font-family=\"sans-serif\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << body_.str() << "</svg>\n";
    return os.str();
  }

 private:
  double w_, h_;
  std::ostringstream body_;
};

namespace detail {

inline void draw_apparatus(Document& doc, const Frame& f, const Layout& lay, Side side) {
  for (Stage st : kAllStages) {
    const auto pl = lay.branch({side, st});
    std::vector<std::pair<double, double>> pts;
    for (const auto& v : pl.vertices()) pts.emplace_back(f.px(v.x), f.py(v.y));
    doc.polyline(pts, "#bbbbbb", 6.0);
    const auto& v = pl.vertices();
    const auto mid = pl.point_at(0.5 * pl.length());
    doc.text(f.px(mid.x) + 4, f.py(mid.y) - 6, ModeLabel{side, st}.name(), 11);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto k = pl.kinds()[i];
      if (k == VertexKind::splitter || k == VertexKind::mirror) {
        const Vec2 ax = Layout::element_axis(side);
        const double h = 1.5 * lay.ell();
        doc.line(f.px(v[i].x - h * ax.x), f.py(v[i].y - h * ax.y), f.px(v[i].x + h * ax.x),
                 f.py(v[i].y + h * ax.y), k == VertexKind::mirror ? "#333333" : "#6666cc", 2.0);
      }
    }
  }
}

inline Box apparatus_box(const Layout& lay, Side side) {
  Box b;
  for (Stage st : kAllStages) {
    const auto pl = lay.branch({side, st});
    for (const auto& v : pl.vertices()) b.add(v.x, v.y);
  }
  return b.padded(0.06);
}

}  // namespace detail

/// Three panes: particle A over interferometer A, particle B over
/// interferometer B, and the (y_A, y_B) projection of configuration space.
/// Trajectories are colored by output channel.
inline std::string trajectory_figure(const Layout& lay, const std::vector<BiTrajectory>& trajs,
                                     const std::string& title) {
  const double pane = 420.0, margin = 40.0, top = 60.0;
  Document doc(3 * pane + 4 * margin, pane + top + 90.0);
  doc.text(margin, 28, title, 15);

  const Frame fa{detail::apparatus_box(lay, Side::A), margin, top, pane, pane};
  const Frame fb{detail::apparatus_box(lay, Side::B), 2 * margin + pane, top, pane, pane};
  Box bc;
  for (const auto& tr : trajs) {
    for (const auto& s : tr.samples) bc.add(s.q[1], s.q[3]);
  }
  if (bc.empty()) {
    bc.add(-lay.ell(), -lay.ell());
    bc.add(lay.ell(), lay.ell());
  }
  const Frame fc{bc.padded(0.06), 3 * margin + 2 * pane, top, pane, pane};

  for (const Frame* f : {&fa, &fb, &fc}) doc.rect(f->left, f->top, f->width, f->height, "#444444");
  doc.text(fa.left, top - 8, "particle A, interferometer A");
  doc.text(fb.left, top - 8, "particle B, interferometer B");
  doc.text(fc.left, top - 8, "configuration space (y_A, y_B)");
  detail::draw_apparatus(doc, fa, lay, Side::A);
  detail::draw_apparatus(doc, fb, lay, Side::B);

  for (const auto& tr : trajs) {
    const char* color = tr.status == TrajectoryStatus::annihilated ? "#9467bd"
                        : tr.status == TrajectoryStatus::node_abort ? "#000000"
                                                                    : channel_color(tr.output_class);
    std::vector<std::pair<double, double>> pa, pb, pc;
    for (const auto& s : tr.samples) {
      pa.emplace_back(fa.px(s.q[0]), fa.py(s.q[1]));
      pb.emplace_back(fb.px(s.q[2]), fb.py(s.q[3]));
      pc.emplace_back(fc.px(s.q[1]), fc.py(s.q[3]));
    }
    doc.polyline(pa, color, 1.0, 0.7);
    doc.polyline(pb, color, 1.0, 0.7);
    doc.polyline(pc, color, 1.0, 0.7);
  }

  const std::vector<std::pair<const char*, const char*>> legend{
      {"#1f77b4", "A1,B1"}, {"#2ca02c", "A1,B2"}, {"#ff7f0e", "A2,B1"},
      {"#d62728", "A2,B2"}, {"#9467bd", "annihilated"}, {"#999999", "unclassified"}};
  double x = margin;
  const double y = top + pane + 40;
  for (const auto& [c, label] : legend) {
    doc.line(x, y - 4, x + 24, y - 4, c, 3.0);
    doc.text(x + 30, y, label, 12);
    x += 140;
  }
  return doc.str();
}

/// Fraction of (A2, B2) trajectories that came through (a1, b2), with
/// 3-sigma Wilson bars, against delta_L / l (or frame velocity).
inline std::string switch_curve(const ScanResult& scan, double ell, bool by_velocity,
                                const std::string& title) {
  const double W = 640, H = 440, left = 80, top = 50, pw = 520, ph = 310;
  Document doc(W, H);
  doc.text(left, 28, title, 15);
  Box b;
  for (const auto& p : scan.points) {
    b.add(by_velocity ? p.v : p.delta_L / ell, 0.0);
  }
  if (b.empty()) b.add(0, 0);
  if (b.x1 - b.x0 < 1e-12) {
    b.x0 -= 1;
    b.x1 += 1;
  }
  b.y0 = 0.0;
  b.y1 = 1.0;
  Box d = b;
  const double px = 0.05 * (b.x1 - b.x0);
  d.x0 -= px;
  d.x1 += px;
  d.y0 = -0.05;
  d.y1 = 1.05;
  const Frame f{d, left, top, pw, ph, false};
  doc.rect(left, top, pw, ph, "#444444");
  for (double yv : {0.0, 0.1, 0.5, 0.9, 1.0}) {
    doc.line(left, f.py(yv), left + pw, f.py(yv), "#dddddd");
    doc.text(left - 8, f.py(yv) + 4, num(yv), 11, "end");
  }
  for (int i = 0; i <= 4; ++i) {
    const double xv = b.x0 + (b.x1 - b.x0) * i / 4.0;
    doc.text(f.px(xv), top + ph + 18, num(xv), 11, "middle");
  }
  doc.text(left + pw / 2, top + ph + 40, by_velocity ? "frame velocity v / c" : "delta L / l", 13,
           "middle");
  doc.text(left, top + ph + 62, "fraction of A2,B2 trajectories through a1,b2 (3-sigma bars)", 12);

  std::vector<std::pair<double, double>> pts;
  for (const auto& p : scan.points) {
    if (!p.fraction_a1b2) continue;
    const double xv = by_velocity ? p.v : p.delta_L / ell;
    const double fr = *p.fraction_a1b2;
    const double lo = std::max(0.0, fr - p.half_width);
    const double hi = std::min(1.0, fr + p.half_width);
    doc.line(f.px(xv), f.py(lo), f.px(xv), f.py(hi), "#d62728", 1.5);
    pts.emplace_back(f.px(xv), f.py(fr));
  }
  doc.polyline(pts, "#d62728", 2.0);
  for (const auto& [x, y] : pts) doc.circle(x, y, 3.5, "#d62728");
  return doc.str();
}

}  // namespace hardy::svg
