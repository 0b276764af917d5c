#include "mmtrace/io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace mmtrace {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::IoError, "cannot write '" + path + "'");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::IoError, "cannot read '" + path + "'");
  return in;
}

// "mmspace v1; n=3; dim=1; h=0.1" -> tag and key/value fields.
std::map<std::string, std::string> parse_header(const std::string& line, std::string& tag) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(line);
  std::string field;
  bool first = true;
  while (std::getline(ss, field, ';')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    if (b == std::string::npos) continue;
    field = field.substr(b, e - b + 1);
    if (first) {
      tag = field;
      first = false;
      continue;
    }
    const auto eq = field.find('=');
    require(eq != std::string::npos, ErrorKind::IoError, "malformed header field '" + field + "'");
    kv[field.substr(0, eq)] = field.substr(eq + 1);
  }
  return kv;
}

double header_real(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  require(it != kv.end(), ErrorKind::IoError, "header lacks '" + key + "'");
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    fail(ErrorKind::IoError, "bad header value for '" + key + "'");
  }
}

std::size_t header_count(const std::map<std::string, std::string>& kv, const std::string& key) {
  const double v = header_real(kv, key);
  require(v >= 0 && v == static_cast<double>(static_cast<std::size_t>(v)), ErrorKind::IoError,
          "header field '" + key + "' must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

template <typename T>
T read_token(std::istream& in, const std::string& path) {
  T v{};
  in >> v;
  require(!in.fail(), ErrorKind::IoError, "truncated or malformed data in '" + path + "'");
  return v;
}

}  // namespace

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_space(const Space& space, const std::string& path) {
  auto out = open_out(path);
  const std::size_t n = space.size();
  if (space.has_coords()) {
    out << "mmspace v1; n=" << n << "; dim=" << space.dim() << "; h=" << format_real(space.resolution());
    if (space.c_res() != 1.0) out << "; c_res=" << format_real(space.c_res());
    out << '\n';
    for (PointId i = 0; i < n; ++i) {
      out << i;
      for (double x : space.coords(i)) out << ' ' << format_real(x);
      out << ' ' << format_real(space.weight(i)) << '\n';
    }
  } else {
    out << "mmspace-matrix v1; n=" << n << "; h=" << format_real(space.resolution());
    if (space.c_res() != 1.0) out << "; c_res=" << format_real(space.c_res());
    out << '\n';
    for (PointId i = 0; i < n; ++i) out << (i ? " " : "") << format_real(space.weight(i));
    out << '\n';
    for (PointId i = 1; i < n; ++i) {
      for (PointId j = 0; j < i; ++j) out << (j ? " " : "") << format_real(space.distance(i, j));
      out << '\n';
    }
  }
  require(out.good(), ErrorKind::IoError, "write failed for '" + path + "'");
}

Space read_space(const std::string& path) {
  auto in = open_in(path);
  std::string line, tag;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::IoError, "empty file '" + path + "'");
  const auto kv = parse_header(line, tag);
  const std::size_t n = header_count(kv, "n");
  const double h = header_real(kv, "h");
  const double c_res = kv.count("c_res") ? header_real(kv, "c_res") : 1.0;
  if (tag == "mmspace v1") {
    const std::size_t dim = header_count(kv, "dim");
    std::vector<double> coords(n * dim), weights(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto id = read_token<std::size_t>(in, path);
      require(id == i, ErrorKind::IoError, "point ids must run 0..n-1 in order");
      for (std::size_t a = 0; a < dim; ++a) coords[i * dim + a] = read_token<double>(in, path);
      weights[i] = read_token<double>(in, path);
    }
    return Space::from_coords(dim, std::move(coords), std::move(weights), h, c_res);
  }
  require(tag == "mmspace-matrix v1", ErrorKind::IoError, "unknown format tag '" + tag + "'");
  std::vector<double> weights(n), packed(n ? n * (n - 1) / 2 : 0);
  for (auto& w : weights) w = read_token<double>(in, path);
  for (auto& d : packed) d = read_token<double>(in, path);
  return Space::from_matrix(n, std::move(packed), std::move(weights), h, c_res);
}

void write_pieces(const PiecewiseSet& s, const std::string& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& p : s.pieces()) j.push_back({{"name", p.name}, {"theta", p.theta}, {"ids", p.ids}, {"weights", p.weights}});
  auto out = open_out(path);
  out << j.dump(1) << '\n';
  require(out.good(), ErrorKind::IoError, "write failed for '" + path + "'");
}

PiecewiseSet read_pieces(const Space& space, const std::string& path) {
  auto in = open_in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::IoError, "bad pieces file '" + path + "': " + e.what());
  }
  std::vector<SubsetPiece> pieces;
  try {
    for (const auto& e : j)
      pieces.push_back(make_piece(space, e.at("name").get<std::string>(), e.at("ids").get<std::vector<PointId>>(),
                                  e.at("theta").get<double>(), e.at("weights").get<std::vector<double>>()));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::IoError, "bad pieces file '" + path + "': " + e.what());
  }
  return compose_piecewise(space, std::move(pieces));
}

void write_function(const PiecewiseSet& s, const std::vector<double>& values, const std::string& path) {
  const auto& ids = s.union_ids();
  require(values.size() == ids.size(), ErrorKind::InvalidParameter, "function must have one value per point of S");
  auto out = open_out(path);
  out << "mmfunction v1; n=" << ids.size() << '\n';
  for (std::size_t u = 0; u < ids.size(); ++u) out << ids[u] << ' ' << format_real(values[u]) << '\n';
  require(out.good(), ErrorKind::IoError, "write failed for '" + path + "'");
}

std::vector<double> read_function(const PiecewiseSet& s, const std::string& path) {
  auto in = open_in(path);
  std::string line, tag;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::IoError, "empty file '" + path + "'");
  const auto kv = parse_header(line, tag);
  require(tag == "mmfunction v1", ErrorKind::IoError, "unknown format tag '" + tag + "'");
  const std::size_t n = header_count(kv, "n");
  const auto& idx = s.union_index();
  std::vector<double> values(idx.size(), 0.0);
  std::vector<char> seen(idx.size(), 0);
  for (std::size_t a = 0; a < n; ++a) {
    const auto id = read_token<std::size_t>(in, path);
    const double v = read_token<double>(in, path);
    require(id < s.space().size(), ErrorKind::IoError, "function file names an unknown point");
    const auto u = idx.local_of(id);
    require(u.has_value(), ErrorKind::IoError, "function file names a point outside S");
    values[*u] = v;
    seen[*u] = 1;
  }
  for (char c : seen) require(c != 0, ErrorKind::IoError, "function file misses points of S");
  return values;
}

}  // namespace mmtrace
