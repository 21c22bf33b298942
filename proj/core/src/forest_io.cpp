#include <stdexcept>

#include "ealab/approximant.hpp"
#include "json.hpp"

namespace ealab {

std::string forest_to_json(const StoppingForest& forest) {
  using json = nlohmann::ordered_json;
  const auto& o = forest.options();
  json doc;
  doc["epsilon"] = o.epsilon;
  doc["k_blue"] = o.k_blue;
  doc["max_depth"] = o.max_depth;
  doc["grid_depth"] = o.grid_depth;
  json origin = json::array();
  for (int a = 0; a < forest.root().origin.size(); ++a) origin.push_back(forest.root().origin[a]);
  doc["root"] = {{"origin", origin}, {"side", forest.root().side}};
  json nodes = json::array();
  for (const auto& nd : forest.nodes()) {
    json j = json::array();
    for (int a = 0; a < forest.dim(); ++a) j.push_back(nd.j[static_cast<std::size_t>(a)]);
    const char* color = nd.color == Color::red ? "red" : nd.color == Color::blue ? "blue" : "unset";
    nodes.push_back(json::array({nd.m, j, nd.generation, nd.selected, color, nd.center_value}));
  }
  doc["nodes"] = std::move(nodes);
  return doc.dump();
}

GridData approximant_grid(const ApproximantField& approx) {
  const AdaptedGrid& g = approx.grid;
  if (g.n != 1) throw std::invalid_argument("approximant_grid: only n = 1 is supported");
  GridData out;
  out.nx = static_cast<std::size_t>(g.count[0]);
  out.ny = static_cast<std::size_t>(g.count[1]);
  out.dx = g.spacing[0];
  out.dy = g.spacing[1];
  out.x0 = g.origin[0] + 0.5 * out.dx;
  out.y0 = 0.5 * out.dy;
  out.coordinates = "adapted";
  out.values.resize(out.nx * out.ny);
  // Grid cells are h-fastest; GridData rows are x-fastest.
  for (std::size_t ix = 0; ix < out.nx; ++ix) {
    for (std::size_t iy = 0; iy < out.ny; ++iy) out.values[iy * out.nx + ix] = approx.values[ix * out.ny + iy];
  }
  return out;
}

}  // namespace ealab
