#pragma once

#include <string>
#include <vector>

#include "mfn/topology.hpp"

namespace mfn {

// Facility roles of the seven-node city graphs, indexed by node id.
const std::vector<std::string>& facility_roles();

// Names accepted by city_topology().
const std::vector<std::string>& city_names();

// Built-in facility contact graphs (helsinki, hong_kong, new_york). These are
// reconstructions; configs/topologies/ carries identical JSON copies.
TopologyConfig city_topology(const std::string& name);

}  // namespace mfn
