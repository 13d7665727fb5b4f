#pragma once

// Shared corpus generators and brute-force oracles. Everything here is
// intentionally independent of the library's own planning/index paths so it
// can serve as a second route for the equivalence checks.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "secest/model.hpp"
#include "secest/security.hpp"

namespace testsupport {

using secest::CommGraph;
using secest::CostModel;
using secest::MultiAgentSystem;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double unif(std::mt19937_64& gen, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen);
}

inline int randint(std::mt19937_64& gen, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(gen);
}

/// Random connected adjacency matrix on N nodes: a random spanning tree plus
/// extra edges.
inline Eigen::MatrixXd random_connected_adjacency(std::mt19937_64& gen, int N,
                                                  double extra_edge_prob = 0.3) {
    Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(N, N);
    for (int i = 1; i < N; ++i) {
        const int j = randint(gen, 0, i - 1);
        adj(i, j) = adj(j, i) = 1.0;
    }
    for (int i = 0; i < N; ++i) {
        for (int j = i + 1; j < N; ++j) {
            if (adj(i, j) == 0.0 && unif(gen, 0.0, 1.0) < extra_edge_prob) {
                adj(i, j) = adj(j, i) = 1.0;
            }
        }
    }
    return adj;
}

/// Random dense matrix rescaled to the requested spectral radius.
inline Eigen::MatrixXd random_state_matrix(std::mt19937_64& gen, int n, double spectral_radius) {
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) A(i, j) = unif(gen, -1.0, 1.0);
    }
    const double rho = A.eigenvalues().cwiseAbs().maxCoeff();
    if (rho > 1e-9) A *= spectral_radius / rho;
    return A;
}

/// Builds a system whose mode visibility equals a given 0/1 pattern: agent r
/// observes the full n-block of agent i exactly when pattern(i, r) = 1. The
/// incidence matrix is then pattern rows repeated n times.
inline MultiAgentSystem system_from_pattern(const Eigen::MatrixXi& pattern,
                                            const Eigen::MatrixXd& A,
                                            const Eigen::MatrixXd& B) {
    const int N = static_cast<int>(pattern.cols());
    const int n = static_cast<int>(A.rows());
    std::vector<Eigen::MatrixXd> C;
    for (int r = 0; r < N; ++r) {
        std::vector<int> sees;
        for (int i = 0; i < N; ++i) {
            if (pattern(i, r) != 0) sees.push_back(i);
        }
        Eigen::MatrixXd Cr = Eigen::MatrixXd::Zero(static_cast<int>(sees.size()) * n, n * N);
        for (std::size_t s = 0; s < sees.size(); ++s) {
            Cr.block(static_cast<int>(s) * n, sees[s] * n, n, n).setIdentity();
        }
        C.push_back(std::move(Cr));
    }
    Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(N, N);
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) {
            if (i != j) adj(i, j) = 1.0; // complete graph keeps it connected
        }
    }
    return secest::lift_system(secest::make_lti(A, B), CommGraph::from_adjacency(adj), C);
}

/// Random block-visibility pattern with no zero rows (every block visible to
/// someone).
inline Eigen::MatrixXi random_pattern(std::mt19937_64& gen, int N, double density = 0.45) {
    Eigen::MatrixXi P = Eigen::MatrixXi::Zero(N, N);
    for (int i = 0; i < N; ++i) {
        for (int r = 0; r < N; ++r) P(i, r) = unif(gen, 0.0, 1.0) < density ? 1 : 0;
        bool any = false;
        for (int r = 0; r < N; ++r) any |= P(i, r) != 0;
        if (!any) P(i, randint(gen, 0, N - 1)) = 1;
    }
    return P;
}

/// Exhaustive determinant-based total unimodularity oracle.
inline bool tu_oracle(const Eigen::MatrixXi& M) {
    const int rows = static_cast<int>(M.rows());
    const int cols = static_cast<int>(M.cols());
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            if (M(i, j) < -1 || M(i, j) > 1) return false;
        }
    }
    const int kmax = std::min(rows, cols);
    std::vector<int> ri, ci;
    std::function<bool(int)> scan_cols;
    for (int k = 2; k <= kmax; ++k) {
        std::vector<int> rsel(k), csel(k);
        std::function<bool(int, int)> rec_rows = [&](int pos, int start) {
            if (pos == k) {
                std::function<bool(int, int)> rec_cols = [&](int cpos, int cstart) {
                    if (cpos == k) {
                        Eigen::MatrixXd sub(k, k);
                        for (int a = 0; a < k; ++a) {
                            for (int b = 0; b < k; ++b) sub(a, b) = M(rsel[a], csel[b]);
                        }
                        const double d = std::round(sub.determinant());
                        return d >= -1.0 && d <= 1.0;
                    }
                    for (int c = cstart; c < cols; ++c) {
                        csel[cpos] = c;
                        if (!rec_cols(cpos + 1, c + 1)) return false;
                    }
                    return true;
                };
                return rec_cols(0, 0);
            }
            for (int r = start; r < rows; ++r) {
                rsel[pos] = r;
                if (!rec_rows(pos + 1, r + 1)) return false;
            }
            return true;
        };
        if (!rec_rows(0, 0)) return false;
    }
    return true;
}

/// Independent planner oracle: exhaustive scan over all measures using only
/// the visibility pattern (pattern(i, r) = block i visible to agent r).
struct OraclePlan {
    std::vector<int> secure; // sorted
    bool infinite = false;
    int index = 0;
    double cost = 0.0;
};

inline bool oracle_covers(const Eigen::MatrixXi& P, const std::vector<int>& secure) {
    for (int i = 0; i < P.rows(); ++i) {
        bool seen = false;
        for (int r : secure) seen |= P(i, r) != 0;
        if (!seen) return false;
    }
    return true;
}

inline int oracle_index(const Eigen::MatrixXi& P, const std::vector<bool>& is_secure) {
    const int N = static_cast<int>(P.cols());
    int normal_count = 0;
    for (int r = 0; r < N; ++r) normal_count += is_secure[r] ? 0 : 1;
    int best = std::numeric_limits<int>::max();
    for (int i = 0; i < P.rows(); ++i) {
        bool covered = false;
        for (int r = 0; r < N; ++r) covered |= is_secure[r] && P(i, r) != 0;
        int cnt;
        if (covered) {
            cnt = normal_count;
        } else {
            cnt = 0;
            for (int r = 0; r < N; ++r) cnt += (!is_secure[r] && P(i, r) != 0) ? 1 : 0;
        }
        best = std::min(best, cnt);
    }
    return best;
}

inline OraclePlan oracle_plan(const Eigen::MatrixXi& P, const CostModel& costs) {
    const int N = static_cast<int>(P.cols());
    OraclePlan best;
    bool have_cover = false;
    for (std::uint64_t mask = 0; mask < (1ULL << N); ++mask) {
        std::vector<int> secure;
        std::vector<bool> is_secure(N, false);
        double cost = 0.0;
        for (int r = 0; r < N; ++r) {
            if (mask >> r & 1) {
                secure.push_back(r);
                is_secure[r] = true;
                cost += costs.c_secure[r];
            } else {
                cost += costs.c_normal[r];
            }
        }
        if (cost > costs.budget + 1e-9) continue;
        if (oracle_covers(P, secure)) {
            if (!have_cover || cost < best.cost - 1e-12) {
                best.secure = secure;
                best.infinite = true;
                best.cost = cost;
                have_cover = true;
            }
        }
    }
    if (have_cover) return best;

    bool have = false;
    for (std::uint64_t mask = 0; mask + 1 < (1ULL << N); ++mask) { // strict subsets
        std::vector<int> secure;
        std::vector<bool> is_secure(N, false);
        double cost = 0.0;
        for (int r = 0; r < N; ++r) {
            if (mask >> r & 1) {
                secure.push_back(r);
                is_secure[r] = true;
                cost += costs.c_secure[r];
            } else {
                cost += costs.c_normal[r];
            }
        }
        if (cost > costs.budget + 1e-9) continue;
        const int idx = oracle_index(P, is_secure);
        if (!have || idx > best.index || (idx == best.index && cost < best.cost - 1e-12)) {
            best.secure = secure;
            best.infinite = false;
            best.index = idx;
            best.cost = cost;
            have = true;
        }
    }
    return best;
}

/// Graph diameter by breadth-first search (oracle for the fusion rounds).
inline int bfs_diameter(const Eigen::MatrixXd& adj) {
    const int N = static_cast<int>(adj.rows());
    int best = 0;
    for (int s = 0; s < N; ++s) {
        std::vector<int> dist(N, -1);
        std::vector<int> queue{s};
        dist[s] = 0;
        for (std::size_t qi = 0; qi < queue.size(); ++qi) {
            const int u = queue[qi];
            for (int v = 0; v < N; ++v) {
                if (adj(u, v) != 0.0 && dist[v] < 0) {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        for (int v = 0; v < N; ++v) best = std::max(best, dist[v]);
    }
    return best;
}

} // namespace testsupport
