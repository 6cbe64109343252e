#include "vfa/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vfa/error.hpp"

namespace vfa {

namespace {

// Requires n <= m. Returns column for each row.
std::vector<int> hungarian(std::span<const double> a, int n, int m) {
    const double inf = std::numeric_limits<double>::infinity();
    // 1-based potentials; p[j] = row matched to column j.
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    std::vector<char> used(m + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = a[static_cast<std::size_t>(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= m; ++j)
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

}  // namespace

std::vector<int> solve_assignment(std::span<const double> cost, int rows, int cols) {
    if (rows < 0 || cols < 0 || cost.size() != static_cast<std::size_t>(rows) * cols)
        throw ShapeMismatch("assignment: cost matrix size does not match rows x cols");
    if (rows == 0) return {};
    if (cols == 0) return std::vector<int>(rows, -1);
    for (double c : cost)
        if (!std::isfinite(c)) throw InvalidArgument("assignment: non-finite cost");
    if (rows <= cols) return hungarian(cost, rows, cols);

    std::vector<double> transposed(cost.size());
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            transposed[static_cast<std::size_t>(c) * rows + r] =
                cost[static_cast<std::size_t>(r) * cols + c];
    const std::vector<int> col_to_row = hungarian(transposed, cols, rows);
    std::vector<int> row_to_col(rows, -1);
    for (int c = 0; c < cols; ++c) row_to_col[col_to_row[c]] = c;
    return row_to_col;
}

}  // namespace vfa
