#include "cdmtt/assignment.hpp"

#include <cmath>
#include <queue>

namespace cdmtt::assignment {

namespace {

void check_costs(const Matrix& cost) {
    require(cost.rows() <= cost.cols(), "assignment: more rows than columns");
    for (Eigen::Index i = 0; i < cost.size(); ++i) {
        const double c = cost.data()[i];
        require(!std::isnan(c) && c != -kForbidden, "assignment: costs must be finite or +inf");
    }
}

// Shortest augmenting path with row/column potentials (Jonker-Volgenant style,
// one Dijkstra pass per row). Forbidden entries are never relaxed.
std::optional<Assignment> shortest_augmenting_path(const Matrix& cost) {
    const auto rows = static_cast<int>(cost.rows());
    const auto cols = static_cast<int>(cost.cols());
    Assignment out;
    out.row_to_col.assign(static_cast<std::size_t>(rows), -1);
    if (rows == 0) return out;

    // 1-based with column 0 as the virtual source
    std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
    std::vector<int> col_owner(cols + 1, 0), way(cols + 1, 0);
    std::vector<double> min_reduced(cols + 1);
    std::vector<char> used(cols + 1);

    for (int row = 1; row <= rows; ++row) {
        col_owner[0] = row;
        int j0 = 0;
        std::fill(min_reduced.begin(), min_reduced.end(), kForbidden);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = col_owner[j0];
            double delta = kForbidden;
            int j1 = -1;
            for (int j = 1; j <= cols; ++j) {
                if (used[j]) continue;
                const double c = cost(i0 - 1, j - 1);
                if (c != kForbidden) {
                    const double reduced = c - u[i0] - v[j];
                    if (reduced < min_reduced[j]) {
                        min_reduced[j] = reduced;
                        way[j] = j0;
                    }
                }
                if (min_reduced[j] < delta) {
                    delta = min_reduced[j];
                    j1 = j;
                }
            }
            if (j1 < 0) return std::nullopt;
            for (int j = 0; j <= cols; ++j) {
                if (used[j]) {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_reduced[j] -= delta;
                }
            }
            j0 = j1;
        } while (col_owner[j0] != 0);
        do {
            const int j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    for (int j = 1; j <= cols; ++j)
        if (col_owner[j] != 0) out.row_to_col[col_owner[j] - 1] = j - 1;
    for (int i = 0; i < rows; ++i) out.cost += cost(i, out.row_to_col[i]);
    return out;
}

struct Node {
    Matrix cost;        // with this subproblem's constraints applied
    Assignment best;
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.best.cost != b.best.cost) return a.best.cost > b.best.cost;
        return a.best.row_to_col > b.best.row_to_col;
    }
};

}  // namespace

std::optional<Assignment> try_solve(const Matrix& cost) {
    check_costs(cost);
    return shortest_augmenting_path(cost);
}

Assignment solve_optimal(const Matrix& cost) {
    auto sol = try_solve(cost);
    if (!sol) throw InvalidInput("solve_optimal: no feasible assignment");
    return *std::move(sol);
}

std::vector<Assignment> murty_kbest(const Matrix& cost, std::size_t k) {
    require(k >= 1, "murty_kbest: k must be at least 1");
    check_costs(cost);
    std::vector<Assignment> out;
    auto first = shortest_augmenting_path(cost);
    if (!first) return out;

    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    open.push({cost, *std::move(first)});
    const auto rows = cost.rows();

    while (!open.empty() && out.size() < k) {
        Node node = open.top();
        open.pop();
        const auto& sol = node.best.row_to_col;

        // Child i keeps rows < i fixed to the parent's columns and bans (i, sol[i]).
        Matrix constrained = node.cost;
        for (Eigen::Index i = 0; i < rows; ++i) {
            Matrix child = constrained;
            child(i, sol[i]) = kForbidden;
            if (auto s = shortest_augmenting_path(child)) {
                s->cost = 0.0;
                for (Eigen::Index r = 0; r < rows; ++r) s->cost += cost(r, s->row_to_col[r]);
                open.push({std::move(child), *std::move(s)});
            }
            // fix row i to sol[i] for the later children
            const double keep = constrained(i, sol[i]);
            constrained.row(i).setConstant(kForbidden);
            constrained.col(sol[i]).setConstant(kForbidden);
            constrained(i, sol[i]) = keep;
        }
        out.push_back(std::move(node.best));
    }
    return out;
}

}  // namespace cdmtt::assignment
