#pragma once

#include <string>
#include <utility>

#include "polydd/geometry.hpp"

namespace polydd {

/// JSON mesh exchange format:
///   {"vertices": [[x,y],...], "cells": [[i0,i1,...],...],
///    "cell_subdomain": [...], "partition": {"N": n}}
/// Coordinates round-trip exactly (shortest-round-trip doubles), index
/// structure round-trips bit-exactly.
std::string mesh_to_json(const PolyMesh& mesh, const BoxPartition& part);
std::pair<PolyMesh, BoxPartition> mesh_from_json(const std::string& text);

void write_mesh_json(const PolyMesh& mesh, const BoxPartition& part,
                     const std::string& path);
std::pair<PolyMesh, BoxPartition> read_mesh_json(const std::string& path);

}  // namespace polydd
