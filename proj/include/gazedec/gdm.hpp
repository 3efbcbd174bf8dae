// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "gazedec/geometry.hpp"

namespace gazedec {

enum class GdmVariant { RAW, NORMALIZED, AVERAGED };

/// Dense 2-D gaze density map. Cells map to pixels: cell (r, c) is centered
/// at pixel coordinates (c + 0.5, r + 0.5) when the grid is built at source
/// resolution; downsampled grids keep the coarser cell geometry implicitly.
struct GdmGrid {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;
  GdmVariant variant = GdmVariant::RAW;
  double sigma = 0.0;

  double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
  double max_value() const;
  std::pair<int, int> argmax_cell() const;
};

/// Ordered gaze points of one frame window.
using GazeWindow = std::vector<Point>;

/// Unnormalized Gaussian bump centered at g, evaluated at every cell center.
/// Out-of-frame points are allowed; the tail is still evaluated.
GdmGrid gdm_point(const Point& g, double sigma, int rows, int cols);

/// Cellwise sum of per-point maps scaled so the grid maximum is 1.
/// Throws DomainError on an empty window.
GdmGrid gdm_normalized(std::span<const Point> window, double sigma, int rows,
                       int cols);

/// Cellwise arithmetic mean of per-point maps.
GdmGrid gdm_averaged(std::span<const Point> window, double sigma, int rows,
                     int cols);

/// Area-average pooling onto a coarser grid (target dims must not exceed the
/// source). NORMALIZED maps are rescaled so the pooled maximum is 1 again;
/// other variants keep their values. Throws DomainError on upsampling.
GdmGrid downsample(const GdmGrid& grid, int rows, int cols);

/// Window map already pooled to (rows, cols) from a (src_rows, src_cols)
/// evaluation grid. Exploits the separability of the Gaussian, producing the
/// same values as build-at-source-resolution + downsample without ever
/// materializing the fine grid.
GdmGrid gdm_window_pooled(std::span<const Point> window, double sigma,
                          int src_rows, int src_cols, int rows, int cols,
                          GdmVariant variant);

/// Serialize/inspect helpers: CSV grid (row per line) for debugging.
void write_grid_csv(std::ostream& out, const GdmGrid& grid);
GdmGrid read_grid_csv(std::istream& in);

}  // namespace gazedec
