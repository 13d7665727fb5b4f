#include "secest/security.hpp"

#include <algorithm>
#include <cstdint>
#include <set>
#include <vector>

namespace secest {

namespace {

using IntMat = std::vector<std::vector<int>>;

IntMat to_rows(const Eigen::MatrixXi& M) {
    IntMat rows(M.rows(), std::vector<int>(M.cols()));
    for (int i = 0; i < M.rows(); ++i) {
        for (int j = 0; j < M.cols(); ++j) rows[i][j] = M(i, j);
    }
    return rows;
}

IntMat transpose(const IntMat& M) {
    if (M.empty()) return {};
    IntMat T(M[0].size(), std::vector<int>(M.size()));
    for (std::size_t i = 0; i < M.size(); ++i) {
        for (std::size_t j = 0; j < M[i].size(); ++j) T[j][i] = M[i][j];
    }
    return T;
}

// Drop duplicate and all-zero rows; neither affects total unimodularity.
IntMat dedupe(const IntMat& M) {
    std::set<std::vector<int>> seen;
    IntMat out;
    for (const auto& r : M) {
        if (std::all_of(r.begin(), r.end(), [](int v) { return v == 0; })) continue;
        if (seen.insert(r).second) out.push_back(r);
    }
    return out;
}

bool consecutive_ones_rows(const IntMat& M) {
    for (const auto& r : M) {
        int first = -1, last = -1;
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (r[j] == 1) {
                if (first < 0) first = static_cast<int>(j);
                last = static_cast<int>(j);
            } else if (r[j] != 0) {
                return false;
            }
        }
        if (first < 0) continue;
        for (int j = first; j <= last; ++j) {
            if (r[j] != 1) return false;
        }
    }
    return true;
}

// Heller-Tompkins: a 0/+-1 matrix with at most two nonzeros per column is
// totally unimodular iff its rows admit a two-class split where equal-sign
// column pairs land in different classes and opposite-sign pairs together.
// Returns tu / not_tu when applicable, unknown when some column has more
// than two nonzeros.
TuResult two_per_column(const IntMat& M) {
    if (M.empty()) return TuResult::tu;
    const std::size_t rows = M.size(), cols = M[0].size();
    struct Edge {
        int a, b;
        bool same_class;
    };
    std::vector<Edge> edges;
    for (std::size_t j = 0; j < cols; ++j) {
        std::vector<int> nz;
        for (std::size_t i = 0; i < rows; ++i) {
            if (M[i][j] != 0) nz.push_back(static_cast<int>(i));
        }
        if (nz.size() > 2) return TuResult::unknown;
        if (nz.size() == 2) {
            const bool same_sign = M[nz[0]][j] == M[nz[1]][j];
            edges.push_back({nz[0], nz[1], !same_sign});
        }
    }
    // Two-coloring with same/different constraints.
    std::vector<int> color(rows, -1);
    std::vector<std::vector<std::pair<int, bool>>> adj(rows);
    for (const auto& e : edges) {
        adj[e.a].push_back({e.b, e.same_class});
        adj[e.b].push_back({e.a, e.same_class});
    }
    for (std::size_t s = 0; s < rows; ++s) {
        if (color[s] >= 0) continue;
        color[s] = 0;
        std::vector<int> stack{static_cast<int>(s)};
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (auto [v, same] : adj[u]) {
                const int want = same ? color[u] : 1 - color[u];
                if (color[v] < 0) {
                    color[v] = want;
                    stack.push_back(v);
                } else if (color[v] != want) {
                    return TuResult::not_tu;
                }
            }
        }
    }
    return TuResult::tu;
}

// Exact integer determinant via fraction-free (Bareiss) elimination.
std::int64_t det_exact(std::vector<std::vector<std::int64_t>> a) {
    const int k = static_cast<int>(a.size());
    std::int64_t sign = 1, prev = 1;
    for (int col = 0; col < k; ++col) {
        int pivot = -1;
        for (int r = col; r < k; ++r) {
            if (a[r][col] != 0) {
                pivot = r;
                break;
            }
        }
        if (pivot < 0) return 0;
        if (pivot != col) {
            std::swap(a[pivot], a[col]);
            sign = -sign;
        }
        for (int r = col + 1; r < k; ++r) {
            for (int c = col + 1; c < k; ++c) {
                a[r][c] = (a[r][c] * a[col][col] - a[r][col] * a[col][c]) / prev;
            }
            a[r][col] = 0;
        }
        prev = a[col][col];
    }
    return sign * a[k - 1][k - 1];
}

std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) {
        r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
        if (r > (1ULL << 62)) return 1ULL << 62;
    }
    return r;
}

// Iterates k-subsets in lexicographic order.
bool next_combination(std::vector<int>& idx, int n) {
    const int k = static_cast<int>(idx.size());
    for (int i = k - 1; i >= 0; --i) {
        if (idx[i] < n - k + i) {
            ++idx[i];
            for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
            return true;
        }
    }
    return false;
}

TuResult exhaustive(const IntMat& M, std::uint64_t work_cap) {
    const int rows = static_cast<int>(M.size());
    const int cols = rows > 0 ? static_cast<int>(M[0].size()) : 0;
    const int kmax = std::min(rows, cols);

    std::uint64_t work = 0;
    for (int k = 2; k <= kmax; ++k) {
        const std::uint64_t br = binomial(rows, k), bc = binomial(cols, k);
        if (br != 0 && bc > work_cap / br) return TuResult::unknown;
        const std::uint64_t count = br * bc;
        if (work + count > work_cap) return TuResult::unknown;
        work += count;
    }

    for (int k = 2; k <= kmax; ++k) {
        std::vector<int> ri(k);
        for (int i = 0; i < k; ++i) ri[i] = i;
        do {
            std::vector<int> ci(k);
            for (int i = 0; i < k; ++i) ci[i] = i;
            do {
                std::vector<std::vector<std::int64_t>> sub(k, std::vector<std::int64_t>(k));
                for (int a = 0; a < k; ++a) {
                    for (int b = 0; b < k; ++b) sub[a][b] = M[ri[a]][ci[b]];
                }
                const std::int64_t d = det_exact(std::move(sub));
                if (d < -1 || d > 1) return TuResult::not_tu;
            } while (next_combination(ci, cols));
        } while (next_combination(ri, rows));
    }
    return TuResult::tu;
}

} // namespace

TuResult is_totally_unimodular(const Eigen::MatrixXi& M, const TuOptions& opts) {
    for (int i = 0; i < M.rows(); ++i) {
        for (int j = 0; j < M.cols(); ++j) {
            if (M(i, j) < -1 || M(i, j) > 1) return TuResult::not_tu;
        }
    }
    IntMat rows = dedupe(to_rows(M));
    if (rows.empty()) return TuResult::tu;
    IntMat cols = dedupe(transpose(rows));
    rows = dedupe(transpose(cols));

    if (consecutive_ones_rows(rows) || consecutive_ones_rows(cols)) return TuResult::tu;
    if (TuResult r = two_per_column(rows); r != TuResult::unknown) return r;
    if (TuResult r = two_per_column(cols); r != TuResult::unknown) return r;

    if (static_cast<int>(M.cols()) > opts.exhaustive_col_cap) return TuResult::unknown;
    return exhaustive(rows, opts.max_subdeterminants);
}

} // namespace secest
