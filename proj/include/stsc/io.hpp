#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "stsc/complex.hpp"
#include "stsc/delaunay.hpp"

namespace stsc {

/// {"vertices": [...], "edges": [[i, j], ...], "triangles": [[i, j, k], ...]}
nlohmann::json complex_to_json(const SimplicialComplex& c);
/// Throws InvalidInput on malformed documents; the lists are canonicalised
/// through SimplicialComplex::from_lists and must satisfy closure.
SimplicialComplex complex_from_json(const nlohmann::json& j);

void save_complex(const std::filesystem::path& path, const SimplicialComplex& c);
SimplicialComplex load_complex(const std::filesystem::path& path);

/// One "i j" pair per line; blank lines and '#' comments are skipped.
/// Errors name the offending line.
std::vector<Edge> parse_edge_list(std::istream& is);
std::vector<Edge> read_edge_list(const std::filesystem::path& path);

/// CSV with header "id,x,y".
std::pair<std::vector<VertexId>, std::vector<Point2>> parse_points_csv(std::istream& is);
std::pair<std::vector<VertexId>, std::vector<Point2>> read_points_csv(
    const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace stsc
