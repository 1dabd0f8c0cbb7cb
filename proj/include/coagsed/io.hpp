#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "coagsed/config.hpp"
#include "coagsed/grid.hpp"

namespace coagsed {

using nlohmann::json;

// 17 significant decimal digits: enough to make the decimal round-trip exact
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline json grid_to_json(const Grid2D& g) {
  return json{{"y_min", g.y.front()}, {"y_max", g.y.back()},
              {"ny", g.ny()},         {"v_min", g.v.front()},
              {"v_max", g.v.back()},  {"q", g.q}};
}

inline json config_to_json(const Config& cfg) {
  json j = json::object();
  for (const auto& [k, v] : cfg.items()) j[k] = v;
  return j;
}

// Every output file starts with a single-line JSON header.
inline void write_header(std::ofstream& out, json header) {
  out << header.dump() << "\n";
}

inline void write_field_csv(const std::string& path, const Field2D& f,
                            const json& extra_header = json::object()) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  json hdr = extra_header;
  hdr["format"] = "field2d";
  hdr["time"] = f.time;
  hdr["grid"] = grid_to_json(*f.grid);
  write_header(out, hdr);
  out << "y,v,H\n";
  const auto& g = *f.grid;
  for (std::size_t i = 0; i < g.ny(); ++i)
    for (std::size_t j = 0; j < g.nv(); ++j)
      out << fmt17(g.y[i]) << ',' << fmt17(g.v[j]) << ',' << fmt17(f.at(i, j))
          << "\n";
}

struct LoadedField {
  Field2D field;
  json header;
};

inline LoadedField read_field_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  json hdr = json::parse(line);
  if (hdr.value("format", "") != "field2d")
    throw std::runtime_error(path + ": not a field2d snapshot");
  auto gj = hdr.at("grid");
  GridPtr grid = Grid2D::make(gj.at("y_min").get<double>(), gj.at("y_max").get<double>(),
                              gj.at("ny").get<int>(), gj.at("v_min").get<double>(),
                              gj.at("v_max").get<double>(), gj.at("q").get<int>());
  Field2D f(grid, hdr.value("time", 0.0));
  if (!std::getline(in, line) || line.rfind("y,v,H", 0) != 0)
    throw std::runtime_error(path + ": missing column header");
  std::size_t idx = 0, total = grid->ny() * grid->nv();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (idx >= total) throw std::runtime_error(path + ": too many rows");
    auto c1 = line.find(',');
    auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw std::runtime_error(path + ": malformed row");
    f.h[idx++] = std::stod(line.substr(c2 + 1));
  }
  if (idx != total) throw std::runtime_error(path + ": truncated snapshot");
  return {std::move(f), std::move(hdr)};
}

// generic series writer: header line, column names, rows of doubles
inline void write_series_csv(const std::string& path,
                             const std::vector<std::string>& columns,
                             const std::vector<std::vector<double>>& rows,
                             const json& extra_header = json::object()) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  json hdr = extra_header;
  if (!hdr.contains("format")) hdr["format"] = "series";
  write_header(out, hdr);
  for (std::size_t c = 0; c < columns.size(); ++c)
    out << columns[c] << (c + 1 < columns.size() ? ',' : '\n');
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c)
      out << fmt17(r[c]) << (c + 1 < r.size() ? ',' : '\n');
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace coagsed
