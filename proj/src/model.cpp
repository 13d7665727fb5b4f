#include "secest/model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "secest/security.hpp"

namespace secest {

namespace {

bool all_finite(const Eigen::MatrixXd& M) { return M.allFinite(); }

/// Orthonormal basis of the (numerical) nullspace of a complex matrix.
std::vector<Eigen::VectorXcd> nullspace(const Eigen::MatrixXcd& M) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double thresh = sv.size() > 0 ? kRankTol * std::max(1.0, sv[0]) : 0.0;
    std::vector<Eigen::VectorXcd> basis;
    for (int j = 0; j < sv.size(); ++j) {
        if (sv[j] <= thresh) basis.push_back(svd.matrixV().col(j));
    }
    // Rows beyond the singular-value count are also null directions.
    for (int j = static_cast<int>(sv.size()); j < svd.matrixV().cols(); ++j) {
        basis.push_back(svd.matrixV().col(j));
    }
    return basis;
}

/// Rotate the phase so the largest-magnitude entry is real and positive.
/// Keeps real problems real and makes the basis deterministic.
void normalize_phase(Eigen::VectorXcd& v) {
    int imax = 0;
    double best = 0.0;
    for (int i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > best) {
            best = std::abs(v[i]);
            imax = i;
        }
    }
    if (best <= 0.0) return;
    const std::complex<double> phase = v[imax] / best;
    v /= phase;
    v.normalize();
}

} // namespace

LtiModel make_lti(Eigen::MatrixXd A, Eigen::MatrixXd B) {
    if (A.rows() != A.cols() || A.rows() == 0) {
        throw DimensionMismatch("state matrix must be square and nonempty");
    }
    if (B.rows() != A.rows()) {
        throw DimensionMismatch("input matrix row count must match state dimension");
    }
    if (!all_finite(A) || !all_finite(B)) {
        throw ValidationError("model matrices must be finite");
    }
    return LtiModel{std::move(A), std::move(B)};
}

CommGraph CommGraph::from_adjacency(Eigen::MatrixXd adjacency) {
    const int N = static_cast<int>(adjacency.rows());
    if (adjacency.cols() != N || N == 0) {
        throw DimensionMismatch("adjacency must be square and nonempty");
    }
    for (int i = 0; i < N; ++i) {
        if (adjacency(i, i) != 0.0) throw ValidationError("adjacency diagonal must be zero");
        for (int j = 0; j < N; ++j) {
            const double a = adjacency(i, j);
            if (a != 0.0 && a != 1.0) throw ValidationError("adjacency entries must be 0 or 1");
            if (a != adjacency(j, i)) throw ValidationError("adjacency must be symmetric");
        }
    }

    CommGraph g;
    g.adjacency_ = std::move(adjacency);
    Eigen::VectorXd degrees = g.adjacency_.rowwise().sum();
    g.laplacian_ = Eigen::MatrixXd(degrees.asDiagonal()) - g.adjacency_;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.laplacian_);
    if (es.info() != Eigen::Success) throw EigenFailure("Laplacian eigendecomposition failed");
    g.eigenvalues_ = es.eigenvalues(); // ascending

    const double scale = std::max(1.0, g.laplacian_.norm());
    if (N > 1 && g.eigenvalues_[1] <= kNonzeroTol * scale) {
        throw DisconnectedGraph("graph is not connected (lambda_2 ~ 0)");
    }

    g.neighbors_.resize(N);
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) {
            if (g.adjacency_(i, j) != 0.0) g.neighbors_[i].push_back(j);
        }
    }

    // Diameter by BFS from every node.
    int diam = 0;
    for (int s = 0; s < N; ++s) {
        std::vector<int> dist(N, -1);
        std::deque<int> queue{s};
        dist[s] = 0;
        while (!queue.empty()) {
            const int u = queue.front();
            queue.pop_front();
            for (int v : g.neighbors_[u]) {
                if (dist[v] < 0) {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        diam = std::max(diam, *std::max_element(dist.begin(), dist.end()));
    }
    g.diameter_ = diam;
    return g;
}

std::pair<double, double> laplacian_spectrum(const CommGraph& graph) {
    if (graph.N() < 2) throw DisconnectedGraph("spectrum requires at least two agents");
    return {graph.lambda2(), graph.lambda_max()};
}

EigenmodeBasis eigenmode_basis(const LtiModel& model, int N, BasisKind kind) {
    if (N < 1) throw DimensionMismatch("agent count must be positive");
    const int n = model.n();
    const Eigen::MatrixXcd A = model.A.cast<std::complex<double>>();

    Eigen::EigenSolver<Eigen::MatrixXd> es(model.A);
    if (es.info() != Eigen::Success) throw EigenFailure("eigendecomposition of A did not converge");
    Eigen::VectorXcd eigs = es.eigenvalues();

    // Cluster eigenvalues so repeated roots are handled as one eigenspace.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (eigs[a].real() != eigs[b].real()) return eigs[a].real() < eigs[b].real();
        return eigs[a].imag() < eigs[b].imag();
    });
    const double cluster_tol = 1e-8 * std::max(1.0, eigs.cwiseAbs().maxCoeff());

    struct Cluster {
        std::complex<double> value;
        int multiplicity = 0;
    };
    std::vector<Cluster> clusters;
    for (int idx : order) {
        if (!clusters.empty() && std::abs(eigs[idx] - clusters.back().value) <= cluster_tol) {
            auto& c = clusters.back();
            c.value = (c.value * static_cast<double>(c.multiplicity) + eigs[idx]) /
                      static_cast<double>(c.multiplicity + 1);
            c.multiplicity += 1;
        } else {
            clusters.push_back({eigs[idx], 1});
        }
    }

    // Per-cluster flag basis: true eigenvectors first, then successively
    // deeper generalized directions orthogonal to the previous layer.
    struct BlockVector {
        std::complex<double> eigenvalue;
        Eigen::VectorXcd v;
        int depth;
    };
    std::vector<BlockVector> block;
    for (const auto& c : clusters) {
        const Eigen::MatrixXcd shifted = A - c.value * Eigen::MatrixXcd::Identity(n, n);
        std::vector<Eigen::VectorXcd> collected;
        Eigen::MatrixXcd power = Eigen::MatrixXcd::Identity(n, n);
        for (int depth = 1; depth <= n; ++depth) {
            power = power * shifted;
            auto null_basis = nullspace(power);
            for (auto& v : null_basis) {
                // Remove components along already-collected directions.
                Eigen::VectorXcd r = v;
                for (const auto& u : collected) r -= (u.adjoint() * r)(0) * u;
                if (r.norm() > 1e-7) {
                    r.normalize();
                    normalize_phase(r);
                    collected.push_back(r);
                    block.push_back({c.value, r, depth});
                }
                if (static_cast<int>(collected.size()) == c.multiplicity) break;
            }
            if (static_cast<int>(collected.size()) == c.multiplicity) break;
            if (kind == BasisKind::eigen) break; // only ker(A - lambda I)
        }
        if (kind == BasisKind::jordan &&
            static_cast<int>(collected.size()) != c.multiplicity) {
            throw EigenFailure("generalized eigenspace basis is rank deficient");
        }
    }

    EigenmodeBasis basis;
    basis.kind = kind;
    basis.agent_count = N;
    basis.block_dim = n;
    basis.modes.reserve(static_cast<std::size_t>(N) * block.size());
    for (int i = 0; i < N; ++i) {
        for (const auto& bv : block) {
            basis.modes.push_back(Eigenmode{i, bv.eigenvalue, bv.v, bv.depth});
        }
    }
    return basis;
}

Eigen::MatrixXd MultiAgentSystem::stacked_measurement(const std::vector<int>& agents) const {
    int rows = 0;
    for (int a : agents) rows += p(a);
    Eigen::MatrixXd out(rows, n() * N());
    int r = 0;
    for (int a : agents) {
        out.middleRows(r, p(a)) = C_[a];
        r += p(a);
    }
    return out;
}

Eigen::MatrixXd MultiAgentSystem::stacked_measurement() const {
    std::vector<int> all(N());
    std::iota(all.begin(), all.end(), 0);
    return stacked_measurement(all);
}

MultiAgentSystem lift_system(LtiModel model, CommGraph graph,
                             std::vector<Eigen::MatrixXd> C) {
    const int N = graph.N();
    const int n = model.n();
    if (static_cast<int>(C.size()) != N) {
        throw DimensionMismatch("one measurement matrix per agent is required");
    }
    for (const auto& Ci : C) {
        if (Ci.cols() != static_cast<Eigen::Index>(n) * N) {
            throw DimensionMismatch("each C_i must have n*N columns");
        }
        if (!Ci.allFinite()) throw ValidationError("measurement matrices must be finite");
    }

    MultiAgentSystem sys;
    sys.model_ = std::move(model);
    sys.graph_ = std::move(graph);
    sys.C_ = std::move(C);
    sys.lifted_A_ = block_diagonal_repeat(sys.model_.A, N);
    sys.lifted_B_ = block_diagonal_repeat(sys.model_.B, N);
    sys.p_offsets_.resize(N);
    int off = 0;
    for (int i = 0; i < N; ++i) {
        sys.p_offsets_[i] = off;
        off += sys.p(i);
    }
    sys.p_total_ = off;
    if (off == 0) throw DimensionMismatch("system has no measurements");

    std::vector<int> everyone(N);
    std::iota(everyone.begin(), everyone.end(), 0);
    const EigenmodeBasis basis = eigenmode_basis(sys.model_, N, BasisKind::jordan);
    if (!is_detectable(sys, everyone, basis, ModeFilter::all)) {
        throw UndetectablePair("lifted pair is not detectable from the stacked measurements");
    }
    return sys;
}

Eigen::MatrixXd block_diagonal_repeat(const Eigen::MatrixXd& M, int blocks) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(M.rows() * blocks, M.cols() * blocks);
    for (int i = 0; i < blocks; ++i) {
        out.block(i * M.rows(), i * M.cols(), M.rows(), M.cols()) = M;
    }
    return out;
}

Eigen::MatrixXd kron_with_identity(const Eigen::MatrixXd& L, int dim) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(L.rows() * dim, L.cols() * dim);
    for (int i = 0; i < L.rows(); ++i) {
        for (int j = 0; j < L.cols(); ++j) {
            if (L(i, j) != 0.0) {
                out.block(i * dim, j * dim, dim, dim) =
                    L(i, j) * Eigen::MatrixXd::Identity(dim, dim);
            }
        }
    }
    return out;
}

double operator_norm(const Eigen::MatrixXd& M) {
    if (M.size() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    return svd.singularValues()[0];
}

} // namespace secest
