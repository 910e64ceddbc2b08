#pragma once

#include "cdmtt/types.hpp"

#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

namespace cdmtt::assignment {

/// Cost of a forbidden pairing.
inline constexpr double kForbidden = std::numeric_limits<double>::infinity();

/// One row-to-column matching of a rows x cols cost matrix (rows <= cols).
struct Assignment {
    std::vector<int> row_to_col;
    double cost = 0.0;
};

/// Minimum-cost assignment of every row to a distinct column, or nullopt when
/// the forbidden entries leave no feasible matching.
std::optional<Assignment> try_solve(const Matrix& cost);

/// As try_solve, throwing InvalidInput when infeasible or when rows > cols.
Assignment solve_optimal(const Matrix& cost);

/// The k cheapest assignments in nondecreasing cost order (Murty's partitioning).
/// Equal costs are ordered lexicographically by row_to_col. Returns fewer than k
/// when fewer feasible assignments exist, and none if the matrix is infeasible.
std::vector<Assignment> murty_kbest(const Matrix& cost, std::size_t k);

}  // namespace cdmtt::assignment
