#include "dipo/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dipo {

namespace {

constexpr double kW = 640, kH = 640, kPad = 50;

struct Frame {
  double xmin, xmax, ymin, ymax;
  double px(double x) const {
    return kPad + (x - xmin) / (xmax - xmin) * (kW - 2 * kPad);
  }
  double py(double y) const {
    return kH - kPad - (y - ymin) / (ymax - ymin) * (kH - 2 * kPad);
  }
};

std::string header() {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
    << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << " " << kH
    << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return s.str();
}

void axes(std::ostringstream& s, const Frame& f) {
  s << "<g stroke=\"#333\" stroke-width=\"1\" fill=\"none\">"
    << "<rect x=\"" << kPad << "\" y=\"" << kPad << "\" width=\""
    << kW - 2 * kPad << "\" height=\"" << kH - 2 * kPad << "\"/></g>\n";
  s << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">"
    << "<text x=\"" << kPad << "\" y=\"" << kH - kPad + 20 << "\">" << f.xmin
    << "</text><text x=\"" << kW - kPad - 20 << "\" y=\"" << kH - kPad + 20
    << "\">" << f.xmax << "</text><text x=\"" << 8 << "\" y=\"" << kH - kPad
    << "\">" << f.ymin << "</text><text x=\"" << 8 << "\" y=\"" << kPad + 6
    << "\">" << f.ymax << "</text></g>\n";
}

Frame data_frame(const Mat& pts, double margin) {
  Frame f{-1, 1, -1, 1};
  if (pts.rows() > 0) {
    f.xmin = pts.col(0).minCoeff() - margin;
    f.xmax = pts.col(0).maxCoeff() + margin;
    f.ymin = pts.col(1).minCoeff() - margin;
    f.ymax = pts.col(1).maxCoeff() + margin;
  }
  if (f.xmax - f.xmin < 1e-9) f.xmax = f.xmin + 1;
  if (f.ymax - f.ymin < 1e-9) f.ymax = f.ymin + 1;
  return f;
}

}  // namespace

std::string svg_quiver(const Mat& positions, const Mat& actions) {
  require(positions.cols() == 2 || positions.rows() == 0,
          "svg_quiver: positions must be n x 2");
  std::ostringstream s;
  s << header();
  Frame f = data_frame(positions, 1.0);
  axes(s, f);
  s << "<g stroke=\"red\" stroke-width=\"1.5\" fill=\"red\">\n";
  double unit = (kW - 2 * kPad) / (f.xmax - f.xmin);  // pixels per data unit
  for (Eigen::Index i = 0; i < positions.rows(); ++i) {
    double x0 = f.px(positions(i, 0)), y0 = f.py(positions(i, 1));
    double ax = actions(i, 0), ay = actions(i, 1);
    double norm = std::hypot(ax, ay);
    if (norm < 1e-12) {
      s << "<circle cx=\"" << x0 << "\" cy=\"" << y0 << "\" r=\"1.5\"/>\n";
      continue;
    }
    // length proportional to the action norm
    double x1 = x0 + ax * 0.5 * unit, y1 = y0 - ay * 0.5 * unit;
    double ux = (x1 - x0) / std::hypot(x1 - x0, y1 - y0);
    double uy = (y1 - y0) / std::hypot(x1 - x0, y1 - y0);
    double hx = -uy, hy = ux;  // head normal
    s << "<line class=\"arrow\" x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\""
      << x1 << "\" y2=\"" << y1 << "\"/>"
      << "<polygon points=\"" << x1 << "," << y1 << " "
      << x1 - 5 * ux + 2.5 * hx << "," << y1 - 5 * uy + 2.5 * hy << " "
      << x1 - 5 * ux - 2.5 * hx << "," << y1 - 5 * uy - 2.5 * hy << "\"/>\n";
  }
  s << "</g>\n</svg>\n";
  return s.str();
}

std::string svg_scatter(const Mat& points, const VectorXd& color) {
  require(points.cols() == 2 || points.rows() == 0,
          "svg_scatter: points must be n x 2");
  std::ostringstream s;
  s << header();
  Frame f = data_frame(points, 0.5);
  axes(s, f);
  double cmin = 0, cmax = 1;
  if (color.size() > 0) {
    cmin = color.minCoeff();
    cmax = color.maxCoeff();
    if (cmax - cmin < 1e-12) cmax = cmin + 1;
  }
  s << "<g>\n";
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    double t = (color(i) - cmin) / (cmax - cmin);
    int hue = static_cast<int>(240.0 * (1.0 - t));  // blue (early) -> red (late)
    s << "<circle cx=\"" << f.px(points(i, 0)) << "\" cy=\""
      << f.py(points(i, 1)) << "\" r=\"2\" fill=\"hsl(" << hue
      << ",80%,50%)\" fill-opacity=\"0.6\"/>\n";
  }
  s << "</g>\n</svg>\n";
  return s.str();
}

std::string svg_curve(const VectorXd& x, const VectorXd& y,
                      const std::string& ylabel) {
  std::ostringstream s;
  s << header();
  Mat pts(x.size(), 2);
  if (x.size() > 0) {
    pts.col(0) = x;
    pts.col(1) = y;
  }
  Frame f = data_frame(pts, x.size() > 0 ? 1e-9 : 0.5);
  // breathing room on y
  double yr = f.ymax - f.ymin;
  f.ymin -= 0.05 * yr;
  f.ymax += 0.05 * yr;
  axes(s, f);
  if (!ylabel.empty())
    s << "<text x=\"" << kW / 2 << "\" y=\"" << kPad - 10
      << "\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#333\" "
         "text-anchor=\"middle\">"
      << ylabel << "</text>\n";
  if (x.size() > 0) {
    s << "<polyline fill=\"none\" stroke=\"#0066cc\" stroke-width=\"2\" "
         "points=\"";
    for (Eigen::Index i = 0; i < x.size(); ++i)
      s << f.px(x(i)) << "," << f.py(y(i)) << " ";
    s << "\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write file: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace dipo
