#pragma once
#include <string>
#include <vector>

#include "dipo/types.hpp"

namespace dipo {

// Standalone SVG plots; no raster dependencies.

// Arrows at the given 2D positions; arrow length proportional to the
// action norm. positions and actions are n x 2.
std::string svg_quiver(const Mat& positions, const Mat& actions);

// 2D points colored by a per-point scalar (e.g. training round).
std::string svg_scatter(const Mat& points, const VectorXd& color);

// Polyline of y against x with axes.
std::string svg_curve(const VectorXd& x, const VectorXd& y,
                      const std::string& ylabel = "");

void write_text_file(const std::string& path, const std::string& content);

}  // namespace dipo
