#pragma once

// Report artifacts: aligned text tables, projection CSV, and a small SVG
// scatter for human inspection (real = red, fake = blue).

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dfd/tensor.hpp"

namespace dfd {

inline std::string format_table(const std::vector<std::string>& headers,
                                const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths(headers.size());
  for (std::size_t c = 0; c < headers.size(); ++c) widths[c] = headers[c].size();
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size() && c < widths.size(); ++c)
      widths[c] = std::max(widths[c], row[c].size());
  std::ostringstream os;
  auto emit_row = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      os << row[c];
      if (c + 1 < row.size()) os << std::string(widths[c] - row[c].size() + 2, ' ');
    }
    os << "\n";
  };
  emit_row(headers);
  std::size_t total = 0;
  for (std::size_t c = 0; c < widths.size(); ++c) total += widths[c] + (c + 1 < widths.size() ? 2 : 0);
  os << std::string(total, '-') << "\n";
  for (const auto& row : rows) emit_row(row);
  return os.str();
}

inline std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline void write_projection_csv(const std::string& path, const std::vector<std::string>& ids,
                                 const Tensor<float>& proj, const std::vector<int>& labels) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write projection: " + path);
  os << "id,x,y,label\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    char buf[80];
    std::snprintf(buf, sizeof buf, "%.6g,%.6g", static_cast<double>(proj.data[i * 2]),
                  static_cast<double>(proj.data[i * 2 + 1]));
    os << ids[i] << "," << buf << "," << labels[i] << "\n";
  }
}

inline void write_svg_scatter(const std::string& path, const Tensor<float>& proj,
                              const std::vector<int>& labels, const std::string& title) {
  const std::size_t n = proj.shape[0];
  float min_x = 0, max_x = 0, min_y = 0, max_y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    min_x = std::min(min_x, proj.data[i * 2]);
    max_x = std::max(max_x, proj.data[i * 2]);
    min_y = std::min(min_y, proj.data[i * 2 + 1]);
    max_y = std::max(max_y, proj.data[i * 2 + 1]);
  }
  const double W = 480, H = 480, margin = 24;
  auto sx = [&](double x) {
    double span = std::max(1e-9, static_cast<double>(max_x - min_x));
    return margin + (x - min_x) / span * (W - 2 * margin);
  };
  auto sy = [&](double y) {
    double span = std::max(1e-9, static_cast<double>(max_y - min_y));
    return H - margin - (y - min_y) / span * (H - 2 * margin);
  };
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write svg: " + path);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << margin << "\" y=\"16\" font-family=\"monospace\" font-size=\"12\">"
     << title << "</text>\n";
  for (std::size_t i = 0; i < n; ++i) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"2\" fill=\"%s\" fill-opacity=\"0.55\"/>\n",
                  sx(proj.data[i * 2]), sy(proj.data[i * 2 + 1]),
                  labels[i] == 1 ? "#d62728" : "#1f77b4");
    os << buf;
  }
  os << "</svg>\n";
}

}  // namespace dfd
