#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "vlfuse/assignment.hpp"

using namespace vlfuse;

namespace {

// Exhaustive oracle: best total over all permutations of the padded
// square problem (equivalently, over all partial matchings since
// scores are non-negative).
double brute_force_best(const std::vector<std::vector<double>>& scores) {
    const int rows = static_cast<int>(scores.size());
    const int cols = rows > 0 ? static_cast<int>(scores[0].size()) : 0;
    const int n = std::max(rows, cols);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 0.0;
    do {
        double total = 0.0;
        for (int i = 0; i < rows; ++i)
            if (perm[i] < cols) total += scores[i][perm[i]];
        best = std::max(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// Random scores on a 1/1024 grid: sums of up to ~60 entries stay exact
// in double arithmetic, so optimal totals compare with ==.
std::vector<std::vector<double>> random_scores(std::mt19937_64& rng, int rows, int cols) {
    std::uniform_int_distribution<int> q(0, 1023);
    std::vector<std::vector<double>> s(rows, std::vector<double>(cols));
    for (auto& row : s)
        for (auto& v : row) v = q(rng) / 1024.0;
    return s;
}

double total_of(const std::vector<std::vector<double>>& scores, const AssignmentResult& r) {
    double total = 0.0;
    for (std::size_t i = 0; i < r.row_to_col.size(); ++i)
        if (r.row_to_col[i] >= 0) total += scores[i][r.row_to_col[i]];
    return total;
}

}  // namespace

TEST(Assignment, EmptyInputs) {
    EXPECT_TRUE(assign_max_score({}).row_to_col.empty());
    const auto r = assign_max_score({{}, {}});
    EXPECT_EQ(r.row_to_col, (std::vector<int>{-1, -1}));
}

TEST(Assignment, TwoByTwoExample) {
    const auto r = assign_max_score({{0.9, 0.1}, {0.2, 0.8}});
    EXPECT_EQ(r.row_to_col, (std::vector<int>{0, 1}));
    EXPECT_DOUBLE_EQ(r.total, 1.7);
}

TEST(Assignment, PicksCrossPairingWhenBetter) {
    const auto r = assign_max_score({{0.5, 0.9}, {0.9, 0.6}});
    EXPECT_EQ(r.row_to_col, (std::vector<int>{1, 0}));
}

TEST(Assignment, RectangularMoreDetections) {
    const auto r = assign_max_score({{0.1, 0.9, 0.3}});
    EXPECT_EQ(r.row_to_col, (std::vector<int>{1}));
}

TEST(Assignment, RectangularMoreTracks) {
    const auto r = assign_max_score({{0.9}, {0.95}});
    EXPECT_EQ(r.row_to_col, (std::vector<int>{-1, 0}));
}

TEST(Assignment, LexicographicTieBreak) {
    // Both diagonals are optimal; row 0 must take column 0.
    const auto r = assign_max_score({{0.5, 0.5}, {0.5, 0.5}});
    EXPECT_EQ(r.row_to_col, (std::vector<int>{0, 1}));

    // All zero: matching to column order, still lexicographic.
    const auto z = assign_max_score({{0.0, 0.0}, {0.0, 0.0}});
    EXPECT_EQ(z.row_to_col, (std::vector<int>{0, 1}));
}

TEST(Assignment, MatchesBruteForceOnRandomMatrices) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> dim(1, 5);
    for (int trial = 0; trial < 300; ++trial) {
        const auto scores = random_scores(rng, dim(rng), dim(rng));
        const auto r = assign_max_score(scores);
        EXPECT_EQ(total_of(scores, r), brute_force_best(scores)) << "trial " << trial;
        // one-to-one: no column used twice
        std::vector<int> used;
        for (int j : r.row_to_col)
            if (j >= 0) used.push_back(j);
        std::sort(used.begin(), used.end());
        EXPECT_TRUE(std::adjacent_find(used.begin(), used.end()) == used.end());
    }
}

TEST(Assignment, DeterministicAcrossRuns) {
    std::mt19937_64 rng(99);
    const auto scores = random_scores(rng, 6, 6);
    const auto a = assign_max_score(scores);
    const auto b = assign_max_score(scores);
    EXPECT_EQ(a.row_to_col, b.row_to_col);
}
