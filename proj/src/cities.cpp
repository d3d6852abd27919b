#include "mfn/cities.hpp"

#include <utility>

#include "mfn/errors.hpp"

namespace mfn {

namespace {

using EdgeList = std::vector<std::pair<std::size_t, std::size_t>>;

// 0 Home, 1 Office, 2 School, 3 Hospital, 4 Retail, 5 Restaurant, 6 Government
const EdgeList kHelsinki = {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {1, 5}, {1, 6}, {4, 5}};
const EdgeList kHongKong = {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}, {1, 4}, {1, 5}, {1, 6}, {2, 4}, {3, 6}, {4, 5}};
const EdgeList kNewYork = {{0, 1}, {0, 2}, {0, 4}, {1, 5}, {1, 6}, {2, 3}, {3, 6}, {4, 5}, {5, 6}};

}  // namespace

const std::vector<std::string>& facility_roles() {
  static const std::vector<std::string> roles = {"Home",   "Office",     "School",    "Hospital",
                                                 "Retail", "Restaurant", "Government"};
  return roles;
}

const std::vector<std::string>& city_names() {
  static const std::vector<std::string> names = {"helsinki", "hong_kong", "new_york"};
  return names;
}

TopologyConfig city_topology(const std::string& name) {
  const EdgeList* edges = nullptr;
  if (name == "helsinki") edges = &kHelsinki;
  if (name == "hong_kong") edges = &kHongKong;
  if (name == "new_york") edges = &kNewYork;
  if (!edges) throw Error(ErrorCode::ValidationError, "unknown city '" + name + "'");
  return {name, facility_roles(), build_topology(facility_roles().size(), *edges)};
}

}  // namespace mfn
