#include <fstream>
#include <sstream>

#include "polydd/errors.hpp"
#include "polydd/mesh_io.hpp"

#include <json.hpp>

namespace polydd {

using nlohmann::json;

std::string mesh_to_json(const PolyMesh& mesh, const BoxPartition& part) {
  json j;
  j["vertices"] = json::array();
  for (const Point2& p : mesh.vertices()) j["vertices"].push_back({p.x, p.y});
  j["cells"] = mesh.cells();
  j["cell_subdomain"] = json::array();
  for (int c = 0; c < mesh.n_cells(); ++c)
    j["cell_subdomain"].push_back(mesh.cell_subdomain(c));
  j["partition"] = {{"N", part.n}};
  return j.dump(1) + "\n";
}

std::pair<PolyMesh, BoxPartition> mesh_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw parameter_error(std::string("mesh_from_json: ") + e.what());
  }
  for (const char* key : {"vertices", "cells", "cell_subdomain", "partition"})
    if (!j.contains(key))
      throw parameter_error(std::string("mesh json: missing field '") + key + "'");
  std::vector<Point2> verts;
  for (const auto& v : j["vertices"]) {
    if (!v.is_array() || v.size() != 2)
      throw parameter_error("mesh json: vertex entries must be [x, y]");
    verts.push_back({v[0].get<double>(), v[1].get<double>()});
  }
  std::vector<std::vector<int>> cells;
  std::vector<int> sub;
  try {
    cells = j["cells"].get<std::vector<std::vector<int>>>();
    sub = j["cell_subdomain"].get<std::vector<int>>();
  } catch (const json::type_error& e) {
    throw parameter_error(std::string("mesh json: ") + e.what());
  }
  if (!j["partition"].contains("N"))
    throw parameter_error("mesh json: partition needs field 'N'");
  int n = j["partition"]["N"].get<int>();
  return {PolyMesh(std::move(verts), std::move(cells), std::move(sub)),
          BoxPartition::regular(n)};
}

void write_mesh_json(const PolyMesh& mesh, const BoxPartition& part,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw parameter_error("write_mesh_json: cannot open " + path);
  out << mesh_to_json(mesh, part);
}

std::pair<PolyMesh, BoxPartition> read_mesh_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parameter_error("read_mesh_json: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return mesh_from_json(ss.str());
}

}  // namespace polydd
