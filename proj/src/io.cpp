#include "stsc/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "stsc/error.hpp"

namespace stsc {

nlohmann::json complex_to_json(const SimplicialComplex& c) {
  nlohmann::json j;
  j["vertices"] = c.vertices();
  j["edges"] = c.edges();
  j["triangles"] = c.triangles();
  return j;
}

SimplicialComplex complex_from_json(const nlohmann::json& j) {
  std::vector<VertexId> vertices;
  std::vector<Edge> edges;
  std::vector<Triangle> triangles;
  try {
    require(j.is_object(), ErrorCode::invalid_input, "complex JSON must be an object");
    vertices = j.value("vertices", std::vector<VertexId>{});
    edges = j.value("edges", std::vector<Edge>{});
    triangles = j.value("triangles", std::vector<Triangle>{});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_input, std::string("malformed complex JSON: ") + e.what());
  }
  for (auto& e : edges) std::sort(e.begin(), e.end());
  for (auto& t : triangles) std::sort(t.begin(), t.end());
  std::sort(vertices.begin(), vertices.end());
  std::sort(edges.begin(), edges.end());
  std::sort(triangles.begin(), triangles.end());
  auto c = SimplicialComplex::from_lists(std::move(vertices), std::move(edges), std::move(triangles));
  const auto problems = validate(c);
  require(problems.empty(), ErrorCode::invalid_input,
          problems.empty() ? "" : "invalid complex: " + problems.front().message);
  return c;
}

void save_complex(const std::filesystem::path& path, const SimplicialComplex& c) {
  write_json(path, complex_to_json(c));
}

SimplicialComplex load_complex(const std::filesystem::path& path) {
  return complex_from_json(read_json(path));
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename N>
bool parse_number(std::string_view s, N& out) {
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::vector<Edge> parse_edge_list(std::istream& is) {
  std::vector<Edge> edges;
  std::string line;
  for (std::size_t lineno = 1; std::getline(is, line); ++lineno) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string a, b, extra;
    if (!(ls >> a)) continue;
    Edge e{};
    const auto where = "line " + std::to_string(lineno) + ": ";
    require(bool(ls >> b), ErrorCode::invalid_input, where + "expected two vertex ids");
    require(!(ls >> extra), ErrorCode::invalid_input, where + "unexpected token '" + extra + "'");
    require(parse_number(a, e[0]) && parse_number(b, e[1]), ErrorCode::invalid_input,
            where + "vertex ids must be integers");
    require(e[0] >= 0 && e[1] >= 0, ErrorCode::invalid_input, where + "negative vertex id");
    require(e[0] != e[1], ErrorCode::invalid_input, where + "self-loop " + a + " " + b);
    edges.push_back(e);
  }
  return edges;
}

std::vector<Edge> read_edge_list(const std::filesystem::path& path) {
  std::ifstream is(path);
  require(bool(is), ErrorCode::io_error, "cannot open " + path.string());
  return parse_edge_list(is);
}

std::pair<std::vector<VertexId>, std::vector<Point2>> parse_points_csv(std::istream& is) {
  std::vector<VertexId> ids;
  std::vector<Point2> pts;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    const auto where = "line " + std::to_string(lineno) + ": ";
    if (!header) {
      require(cells == std::vector<std::string>{"id", "x", "y"}, ErrorCode::invalid_input,
              where + "expected header id,x,y");
      header = true;
      continue;
    }
    require(cells.size() == 3, ErrorCode::invalid_input, where + "expected 3 fields");
    VertexId id{};
    Point2 p{};
    require(parse_number(cells[0], id), ErrorCode::invalid_input, where + "bad id '" + cells[0] + "'");
    require(parse_number(cells[1], p.x) && parse_number(cells[2], p.y), ErrorCode::invalid_input,
            where + "bad coordinate");
    ids.push_back(id);
    pts.push_back(p);
  }
  return {std::move(ids), std::move(pts)};
}

std::pair<std::vector<VertexId>, std::vector<Point2>> read_points_csv(
    const std::filesystem::path& path) {
  std::ifstream is(path);
  require(bool(is), ErrorCode::io_error, "cannot open " + path.string());
  return parse_points_csv(is);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(bool(is), ErrorCode::io_error, "cannot open " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  require(bool(os), ErrorCode::io_error, "cannot open " + path.string() + " for writing");
  os << text;
  require(bool(os), ErrorCode::io_error, "failed writing " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::invalid_input, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

}  // namespace stsc
