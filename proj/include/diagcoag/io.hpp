#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "diagcoag/core.hpp"
#include "diagcoag/dynamics.hpp"
#include "diagcoag/errors.hpp"
#include "diagcoag/local_expansion.hpp"
#include "diagcoag/profile.hpp"
#include "json.hpp"

namespace diagcoag {

/// Input/output failure (unreadable file, malformed table).
class IoError : public Error {
 public:
  using Error::Error;
};

namespace io {

/// Shortest text that round-trips a double (17 significant digits).
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_row(std::ostream& os, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) os << ',';
    os << fmt(v);
    first = false;
  }
  os << '\n';
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  return os;
}

/// Metadata file that accompanies a table: "name.csv" -> "name.meta.json".
inline std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".meta.json");
  return p;
}

// Profiles. Columns x, h, g, dhdx, then dev = h - A and p = x^(1/beta) h,
// which carry the resolved small-x deviation and tail through a round trip.

inline void write_profile_csv(std::ostream& os, const Profile& pr) {
  os << "x,h,g,dhdx,dev,p\n";
  const double g1 = 1.0 + pr.params.gamma();
  for (std::size_t k = 0; k < pr.size(); ++k) {
    const double p = k < pr.p.size() ? pr.p[k] : std::pow(pr.x[k], 1.0 / pr.params.beta) * pr.h[k];
    write_row(os, {pr.x[k], pr.h[k], std::pow(pr.x[k], -g1) * pr.h[k], pr.dh[k], pr.dev[k], p});
  }
}

inline nlohmann::json profile_metadata(const Profile& pr) {
  return {{"gamma", pr.params.gamma()},
          {"beta", pr.params.beta},
          {"mu", pr.params.mu},
          {"c", pr.c},
          {"z", pr.z},
          {"m", pr.m},
          {"x_min", pr.x_min()},
          {"x_max", pr.x_max()},
          {"normalized", pr.normalized},
          {"tau0", pr.tau0},
          {"dtau", pr.dtau},
          {"scale", pr.scale}};
}

inline void write_profile(const std::filesystem::path& csv, const Profile& pr) {
  auto os = open_out(csv);
  write_profile_csv(os, pr);
  auto meta = open_out(sidecar_path(csv));
  meta << profile_metadata(pr).dump(2) << '\n';
}

/// Parses a numeric CSV with one header row into columns keyed by name.
inline std::vector<std::vector<double>> read_table(std::istream& is,
                                                   std::vector<std::string>& header) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty table");
  header.clear();
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  std::vector<std::vector<double>> cols(header.size());
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c >= cols.size()) throw IoError("too many columns in row " + std::to_string(row));
      try {
        std::size_t used = 0;
        cols[c].push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw IoError("non-numeric cell in row " + std::to_string(row));
      }
      ++c;
    }
    if (c != cols.size()) throw IoError("too few columns in row " + std::to_string(row));
  }
  return cols;
}

inline Profile read_profile(const std::filesystem::path& csv,
                            std::filesystem::path meta_path = {}) {
  if (meta_path.empty()) meta_path = sidecar_path(csv);
  std::ifstream ms(meta_path);
  if (!ms) throw IoError("cannot read " + meta_path.string());
  nlohmann::json meta;
  try {
    ms >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed metadata: " + std::string(e.what()));
  }
  std::ifstream is(csv);
  if (!is) throw IoError("cannot read " + csv.string());
  std::vector<std::string> header;
  auto cols = read_table(is, header);
  auto col = [&](const std::string& name) -> std::vector<double>* {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return &cols[i];
    }
    return nullptr;
  };
  auto* x = col("x");
  auto* h = col("h");
  auto* dh = col("dhdx");
  if (!x || !h || !dh) throw IoError("profile table needs columns x, h, dhdx");
  if (x->size() < 2) throw IoError("profile table has fewer than two rows");

  Profile pr;
  try {
    pr.params = make_params(meta.at("gamma").get<double>(), meta.at("beta").get<double>());
    pr.c = meta.at("c").get<double>();
    pr.z = meta.at("z").get<double>();
    pr.m = meta.at("m").get<int>();
    pr.normalized = meta.at("normalized").get<bool>();
    pr.scale = meta.value("scale", 1.0);
    pr.dtau = meta.value("dtau", M_LN2 / pr.m);
    pr.tau0 = meta.value("tau0", std::log(x->front()));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("metadata: " + std::string(e.what()));
  }
  pr.x = *x;
  pr.h = *h;
  pr.dh = *dh;
  if (auto* d = col("dev")) pr.dev = *d;
  if (auto* p = col("p")) pr.p = *p;
  pr.complete_derived();
  return pr;
}

// Local expansion: x, j, h = A + x^mu (j - c), |j| / x^eps.

inline void write_expansion_csv(std::ostream& os, const ExpansionGrid& grid,
                                const SimilarityParams& params) {
  os << "x,j,h,weighted_j\n";
  const double A = params.stationary_value();
  for (std::size_t k = 0; k < grid.nodes.size(); ++k) {
    const double x = grid.nodes[k];
    const double j = grid.j_values[k];
    write_row(os, {x, j, A + std::pow(x, params.mu) * (j - grid.c),
                   std::abs(j) / std::pow(x, grid.epsilon)});
  }
}

// Dynamics snapshots: xi, f, x = xi / t^beta, t^(1+(1+gamma)beta) f.

inline void write_snapshot_csv(std::ostream& os, const NumberDensityField& field, double beta) {
  os << "xi,f,x,rescaled_f\n";
  const double tb = std::pow(field.t, beta);
  const double amp = std::pow(field.t, 1.0 + (1.0 + field.kernel.gamma) * beta);
  for (std::size_t k = 0; k < field.size(); ++k) {
    write_row(os, {field.xi[k], field.f[k], field.xi[k] / tb, amp * field.f[k]});
  }
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto os = open_out(path);
  os << j.dump(2) << '\n';
}

}  // namespace io
}  // namespace diagcoag
