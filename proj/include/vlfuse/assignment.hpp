#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace vlfuse {

/// Scores in [0,1] are quantized to integers at this scale so the
/// assignment search and its tie-breaking run in exact arithmetic.
inline constexpr double kAssignmentScale = 1099511627776.0;  // 2^40

namespace detail {

// Kuhn-Munkres with potentials on a square cost matrix, minimizing.
// Deterministic: scans columns in ascending order, strict improvement only.
struct MinAssignment {
    std::vector<int> row_to_col;
    std::vector<std::int64_t> u, v;  // optimal dual potentials
};

inline MinAssignment solve_min_assignment(const std::vector<std::vector<std::int64_t>>& a) {
    const int n = static_cast<int>(a.size());
    constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
    std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<std::int64_t> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            std::int64_t delta = kInf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const std::int64_t cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
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
        } while (j0 != 0);
    }
    MinAssignment out;
    out.row_to_col.assign(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] != 0) out.row_to_col[p[j] - 1] = j - 1;
    out.u = std::move(u);
    out.v = std::move(v);
    return out;
}

// Augmenting-path feasibility: can every row in `rows` be matched to a
// distinct allowed column of the admissible graph?
struct MatchingProbe {
    const std::vector<std::vector<char>>& adm;
    const std::vector<char>& col_blocked;
    std::vector<int> col_match;
    std::vector<char> visited;

    bool augment(int row) {
        const int n = static_cast<int>(adm.size());
        for (int j = 0; j < n; ++j) {
            if (col_blocked[j] || visited[j] || !adm[row][j]) continue;
            visited[j] = 1;
            if (col_match[j] == -1 || augment(col_match[j])) {
                col_match[j] = row;
                return true;
            }
        }
        return false;
    }
};

inline bool perfect_matching_exists(const std::vector<std::vector<char>>& adm,
                                    const std::vector<int>& rows,
                                    const std::vector<char>& col_blocked) {
    const int n = static_cast<int>(adm.size());
    MatchingProbe probe{adm, col_blocked, std::vector<int>(n, -1), std::vector<char>(n, 0)};
    for (int r : rows) {
        std::fill(probe.visited.begin(), probe.visited.end(), 0);
        if (!probe.augment(r)) return false;
    }
    return true;
}

}  // namespace detail

struct AssignmentResult {
    std::vector<int> row_to_col;  // -1 when the row is unassigned
    double total = 0.0;           // sum of scores over assigned pairs
};

/// Optimal one-to-one assignment maximizing the total score over a
/// (possibly rectangular) score matrix with entries in [0,1].
///
/// Among assignments of equal total, returns the one whose matched
/// (row, col) pairs are lexicographically smallest; unassigned rows are
/// treated as matching past the last column. Exact tie handling comes
/// from quantizing scores at kAssignmentScale and doing the search and
/// the tie-break in integer arithmetic.
inline AssignmentResult assign_max_score(const std::vector<std::vector<double>>& scores) {
    const int rows = static_cast<int>(scores.size());
    const int cols = rows > 0 ? static_cast<int>(scores[0].size()) : 0;
    AssignmentResult out;
    out.row_to_col.assign(rows, -1);
    if (rows == 0 || cols == 0) return out;

    const int n = std::max(rows, cols);
    std::vector<std::vector<std::int64_t>> cost(n, std::vector<std::int64_t>(n, 0));
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            cost[i][j] = -static_cast<std::int64_t>(std::llround(scores[i][j] * kAssignmentScale));

    const auto solved = detail::solve_min_assignment(cost);

    // Admissible graph: zero reduced cost w.r.t. the optimal potentials.
    // Every perfect matching inside it attains the optimum, so the
    // lexicographically smallest one can be grown row by row.
    std::vector<std::vector<char>> adm(n, std::vector<char>(n, 0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            adm[i][j] = (cost[i][j] - solved.u[i + 1] - solved.v[j + 1]) == 0;

    std::vector<char> col_blocked(n, 0);
    std::vector<int> fixed(n, -1);
    for (int i = 0; i < n; ++i) {
        std::vector<int> remaining;
        for (int r = i + 1; r < n; ++r) remaining.push_back(r);
        for (int j = 0; j < n; ++j) {
            if (col_blocked[j] || !adm[i][j]) continue;
            col_blocked[j] = 1;
            if (detail::perfect_matching_exists(adm, remaining, col_blocked)) {
                fixed[i] = j;
                break;
            }
            col_blocked[j] = 0;
        }
    }

    for (int i = 0; i < rows; ++i) {
        const int j = fixed[i];
        if (j >= 0 && j < cols) {
            out.row_to_col[i] = j;
            out.total += scores[i][j];
        }
    }
    return out;
}

}  // namespace vlfuse
