// SPDX-License-Identifier: Apache-2.0
#include "gazedec/gdm.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "gazedec/detail/text.hpp"
#include "gazedec/errors.hpp"

namespace gazedec {

namespace {

void check_dims(int rows, int cols) {
  if (rows <= 0 || cols <= 0) throw DomainError("grid dimensions must be positive");
}

void check_sigma(double sigma) {
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
}

/// exp(-(i + 0.5 - center)^2 / (2 sigma^2)) for i in [0, n)
std::vector<double> axis_profile(double center, double sigma, int n) {
  std::vector<double> v(n);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int i = 0; i < n; ++i) {
    const double d = i + 0.5 - center;
    v[i] = std::exp(-d * d * inv);
  }
  return v;
}

/// Mean over the adaptive block partition used by downsample().
std::vector<double> pool_axis(const std::vector<double>& v, int out_n) {
  const int n = static_cast<int>(v.size());
  std::vector<double> out(out_n);
  for (int i = 0; i < out_n; ++i) {
    const int lo = static_cast<int>(static_cast<long long>(i) * n / out_n);
    const int hi = static_cast<int>(static_cast<long long>(i + 1) * n / out_n);
    double sum = 0.0;
    for (int k = lo; k < hi; ++k) sum += v[k];
    out[i] = sum / (hi - lo);
  }
  return out;
}

void accumulate_outer(GdmGrid& g, const std::vector<double>& row_profile,
                      const std::vector<double>& col_profile) {
  for (int r = 0; r < g.rows; ++r) {
    const double ry = row_profile[r];
    double* dst = &g.at(r, 0);
    for (int c = 0; c < g.cols; ++c) dst[c] += ry * col_profile[c];
  }
}

GdmGrid window_sum(std::span<const Point> window, double sigma, int rows,
                   int cols) {
  if (window.empty()) throw DomainError("gaze window is empty");
  check_dims(rows, cols);
  check_sigma(sigma);
  GdmGrid g{rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols, 0.0),
            GdmVariant::RAW, sigma};
  for (const Point& p : window)
    accumulate_outer(g, axis_profile(p.y, sigma, rows), axis_profile(p.x, sigma, cols));
  return g;
}

void scale(GdmGrid& g, double factor) {
  for (double& v : g.values) v *= factor;
}

}  // namespace

double GdmGrid::max_value() const {
  return *std::max_element(values.begin(), values.end());
}

std::pair<int, int> GdmGrid::argmax_cell() const {
  const auto it = std::max_element(values.begin(), values.end());
  const auto idx = static_cast<int>(it - values.begin());
  return {idx / cols, idx % cols};
}

GdmGrid gdm_point(const Point& g, double sigma, int rows, int cols) {
  check_dims(rows, cols);
  check_sigma(sigma);
  GdmGrid out{rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols, 0.0),
              GdmVariant::RAW, sigma};
  accumulate_outer(out, axis_profile(g.y, sigma, rows), axis_profile(g.x, sigma, cols));
  return out;
}

GdmGrid gdm_normalized(std::span<const Point> window, double sigma, int rows,
                       int cols) {
  GdmGrid g = window_sum(window, sigma, rows, cols);
  const double m = g.max_value();
  if (!(m > 0.0)) throw DomainError("gaze density vanished on the grid");
  scale(g, 1.0 / m);
  g.variant = GdmVariant::NORMALIZED;
  return g;
}

GdmGrid gdm_averaged(std::span<const Point> window, double sigma, int rows,
                     int cols) {
  GdmGrid g = window_sum(window, sigma, rows, cols);
  scale(g, 1.0 / static_cast<double>(window.size()));
  g.variant = GdmVariant::AVERAGED;
  return g;
}

GdmGrid downsample(const GdmGrid& grid, int rows, int cols) {
  check_dims(rows, cols);
  if (rows > grid.rows || cols > grid.cols)
    throw DomainError("downsample target exceeds source dimensions");
  GdmGrid out{rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols, 0.0),
              grid.variant, grid.sigma};
  for (int r = 0; r < rows; ++r) {
    const int rlo = static_cast<int>(static_cast<long long>(r) * grid.rows / rows);
    const int rhi = static_cast<int>(static_cast<long long>(r + 1) * grid.rows / rows);
    for (int c = 0; c < cols; ++c) {
      const int clo = static_cast<int>(static_cast<long long>(c) * grid.cols / cols);
      const int chi = static_cast<int>(static_cast<long long>(c + 1) * grid.cols / cols);
      double sum = 0.0;
      for (int rr = rlo; rr < rhi; ++rr)
        for (int cc = clo; cc < chi; ++cc) sum += grid.at(rr, cc);
      out.at(r, c) = sum / ((rhi - rlo) * (chi - clo));
    }
  }
  if (out.variant == GdmVariant::NORMALIZED) {
    const double m = out.max_value();
    if (m > 0.0) scale(out, 1.0 / m);
  }
  return out;
}

GdmGrid gdm_window_pooled(std::span<const Point> window, double sigma,
                          int src_rows, int src_cols, int rows, int cols,
                          GdmVariant variant) {
  if (window.empty()) throw DomainError("gaze window is empty");
  check_dims(src_rows, src_cols);
  check_dims(rows, cols);
  check_sigma(sigma);
  if (rows > src_rows || cols > src_cols)
    throw DomainError("pooled target exceeds source dimensions");

  GdmGrid g{rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols, 0.0),
            variant, sigma};
  for (const Point& p : window)
    accumulate_outer(g, pool_axis(axis_profile(p.y, sigma, src_rows), rows),
                     pool_axis(axis_profile(p.x, sigma, src_cols), cols));

  if (variant == GdmVariant::NORMALIZED) {
    const double m = g.max_value();
    if (!(m > 0.0)) throw DomainError("gaze density vanished on the grid");
    scale(g, 1.0 / m);
  } else if (variant == GdmVariant::AVERAGED) {
    scale(g, 1.0 / static_cast<double>(window.size()));
  }
  return g;
}

void write_grid_csv(std::ostream& out, const GdmGrid& grid) {
  out << grid.rows << ',' << grid.cols << ','
      << static_cast<int>(grid.variant) << ',' << detail::fmt_double(grid.sigma)
      << '\n';
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      if (c) out << ',';
      out << detail::fmt_double(grid.at(r, c));
    }
    out << '\n';
  }
}

GdmGrid read_grid_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("grid csv: missing header");
  const auto head = detail::split_csv(detail::strip_cr(line));
  if (head.size() != 4) throw FormatError("grid csv: bad header");
  GdmGrid g;
  int variant = 0;
  if (!detail::parse_int(head[0], g.rows) || !detail::parse_int(head[1], g.cols) ||
      !detail::parse_int(head[2], variant) || !detail::parse_double(head[3], g.sigma))
    throw FormatError("grid csv: bad header fields");
  g.variant = static_cast<GdmVariant>(variant);
  g.values.reserve(static_cast<std::size_t>(g.rows) * g.cols);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = detail::split_csv(detail::strip_cr(line));
    for (const auto f : fields) {
      double v = 0.0;
      if (!detail::parse_double(f, v))
        throw FormatError::at("<grid>", line_no, "bad cell value");
      g.values.push_back(v);
    }
  }
  if (g.values.size() != static_cast<std::size_t>(g.rows) * g.cols)
    throw FormatError("grid csv: cell count mismatch");
  return g;
}

}  // namespace gazedec
