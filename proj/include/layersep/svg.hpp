#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "layersep/sweep.hpp"

namespace layersep {

namespace detail {

inline std::string rate_color(double rate) {
  // Red (0) to green (1) through yellow.
  const int r = static_cast<int>(220.0 * (1.0 - rate) + 30.0 * rate);
  const int g = static_cast<int>(40.0 * (1.0 - rate) + 170.0 * rate);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x30", r, g);
  return buf;
}

}  // namespace detail

/// Rectangle-grid heatmap of an outcome grid: one block per (edge distance,
/// roller) slice, penetration rows by velocity columns, cell fill by success
/// rate.
inline std::string grid_to_svg(const OutcomeGrid& grid) {
  const auto& a = grid.axes;
  constexpr int cell = 34, pad = 6, left = 70, top = 34, block_gap = 26;
  const int block_w = left + static_cast<int>(a.velocities_rpm.size()) * cell + pad;
  const int block_h = top + static_cast<int>(a.penetrations.size()) * cell + pad;
  const int blocks = static_cast<int>(a.edge_distances.size() * a.roller_types.size());
  const int width = block_w + pad;
  const int height = blocks * (block_h + block_gap);

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" font-family=\"monospace\" font-size=\"11\">\n";
  int block = 0;
  for (std::size_t ie = 0; ie < a.edge_distances.size(); ++ie)
    for (std::size_t ir = 0; ir < a.roller_types.size(); ++ir, ++block) {
      const int oy = block * (block_h + block_gap);
      out << "<text x=\"4\" y=\"" << oy + 14 << "\">roller=" << to_string(a.roller_types[ir])
          << " edge_m=" << detail::format_double(a.edge_distances[ie]) << "</text>\n";
      for (std::size_t iv = 0; iv < a.velocities_rpm.size(); ++iv)
        out << "<text x=\"" << left + static_cast<int>(iv) * cell + 4 << "\" y=\"" << oy + top - 6
            << "\">" << detail::format_double(a.velocities_rpm[iv]) << "</text>\n";
      for (std::size_t ip = 0; ip < a.penetrations.size(); ++ip) {
        const int y = oy + top + static_cast<int>(ip) * cell;
        out << "<text x=\"4\" y=\"" << y + cell / 2 + 4 << "\">"
            << detail::format_double(a.penetrations[ip]) << "</text>\n";
        for (std::size_t iv = 0; iv < a.velocities_rpm.size(); ++iv) {
          const auto& c = grid.at(ip, iv, ie, ir);
          const double rate =
              c.repetitions == 0 ? 0.0 : static_cast<double>(c.success_count) / c.repetitions;
          const int x = left + static_cast<int>(iv) * cell;
          out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell - 2
              << "\" height=\"" << cell - 2 << "\" fill=\"" << detail::rate_color(rate)
              << "\"/>\n";
          out << "<text x=\"" << x + 4 << "\" y=\"" << y + cell / 2 + 4 << "\" fill=\"#fff\">"
              << c.success_count << "/" << c.repetitions << "</text>\n";
        }
      }
    }
  out << "</svg>\n";
  return out.str();
}

inline void write_grid_svg(const OutcomeGrid& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open for writing: " + path);
  out << grid_to_svg(grid);
  if (!out) throw ParseError("write failed: " + path);
}

}  // namespace layersep
