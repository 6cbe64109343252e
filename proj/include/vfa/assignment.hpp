#pragma once

#include <span>
#include <vector>

namespace vfa {

// Minimum-cost assignment (Hungarian method with potentials, O(n^2 m)).
// `cost` is row-major rows x cols. Returns, for each row, its column or -1
// when rows > cols leaves it unassigned.
std::vector<int> solve_assignment(std::span<const double> cost, int rows, int cols);

}  // namespace vfa
