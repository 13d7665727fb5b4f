#pragma once

#include <complex>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "secest/errors.hpp"

namespace secest {

/// Default relative tolerance used to decide whether a vector or entry is
/// numerically nonzero.
inline constexpr double kNonzeroTol = 1e-9;

/// Relative singular-value threshold for rank / kernel decisions.
inline constexpr double kRankTol = 1e-9;

/// Discrete-time LTI agent dynamics x(k+1) = A x(k) + B u(k).
/// All agents in a system share the same A and B.
struct LtiModel {
    Eigen::MatrixXd A; // n x n
    Eigen::MatrixXd B; // n x m

    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }
};

/// Validates dimensions and finiteness.
LtiModel make_lti(Eigen::MatrixXd A, Eigen::MatrixXd B);

/// Undirected connected communication graph with cached Laplacian spectrum.
class CommGraph {
public:
    static CommGraph from_adjacency(Eigen::MatrixXd adjacency);

    int N() const { return static_cast<int>(adjacency_.rows()); }
    const Eigen::MatrixXd& adjacency() const { return adjacency_; }
    const Eigen::MatrixXd& laplacian() const { return laplacian_; }
    /// Laplacian eigenvalues, ascending; eigenvalues_[0] ~ 0.
    const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
    double lambda2() const { return eigenvalues_[1]; }
    double lambda_max() const { return eigenvalues_[N() - 1]; }
    const std::vector<int>& neighbors(int i) const { return neighbors_[i]; }
    int diameter() const { return diameter_; }

private:
    CommGraph() = default;
    Eigen::MatrixXd adjacency_;
    Eigen::MatrixXd laplacian_;
    Eigen::VectorXd eigenvalues_;
    std::vector<std::vector<int>> neighbors_;
    int diameter_ = 0;
};

/// Second-smallest and largest Laplacian eigenvalues of a connected graph.
std::pair<double, double> laplacian_spectrum(const CommGraph& graph);

enum class BasisKind { jordan, eigen };

/// One basis direction e_i (x) v of the lifted state map, where v belongs to
/// a (generalized) eigenspace of A. chain_depth 1 marks a true eigenvector,
/// larger values mark generalized directions.
struct Eigenmode {
    int agent = 0; // 0-based
    std::complex<double> eigenvalue;
    Eigen::VectorXcd vector; // length n, unit norm
    int chain_depth = 1;
};

struct EigenmodeBasis {
    BasisKind kind = BasisKind::jordan;
    int agent_count = 0;
    int block_dim = 0; // n
    std::vector<Eigenmode> modes; // agent-major ordering
};

/// Builds the mode set for the lifted dynamics of N identical agents.
/// Under `jordan` every agent contributes exactly n directions (a full
/// generalized-eigenspace basis of A); under `eigen` only true eigenvectors.
EigenmodeBasis eigenmode_basis(const LtiModel& model, int N, BasisKind kind);

/// Lifted multi-agent system: N copies of one LTI model coupled through a
/// communication graph, each agent observing the full stacked state through
/// its own measurement map C_i (p_i x nN).
class MultiAgentSystem {
public:
    const LtiModel& model() const { return model_; }
    const CommGraph& graph() const { return graph_; }
    const std::vector<Eigen::MatrixXd>& C() const { return C_; }
    const Eigen::MatrixXd& C(int i) const { return C_[i]; }

    int N() const { return graph_.N(); }
    int n() const { return model_.n(); }
    int m() const { return model_.m(); }
    int p(int i) const { return static_cast<int>(C_[i].rows()); }
    int p_total() const { return p_total_; }
    int p_offset(int i) const { return p_offsets_[i]; }

    const Eigen::MatrixXd& lifted_state_matrix() const { return lifted_A_; } // I_N (x) A
    const Eigen::MatrixXd& lifted_input_matrix() const { return lifted_B_; } // I_N (x) B

    /// Stacked measurement map of the given (sorted, 0-based) agent subset.
    Eigen::MatrixXd stacked_measurement(const std::vector<int>& agents) const;
    Eigen::MatrixXd stacked_measurement() const; // all agents

private:
    friend MultiAgentSystem lift_system(LtiModel model, CommGraph graph,
                                        std::vector<Eigen::MatrixXd> C);
    LtiModel model_;
    CommGraph graph_ = CommGraph::from_adjacency(Eigen::MatrixXd::Zero(1, 1));
    std::vector<Eigen::MatrixXd> C_;
    Eigen::MatrixXd lifted_A_, lifted_B_;
    std::vector<int> p_offsets_;
    int p_total_ = 0;
};

/// Assembles the lifted system and verifies that the full pair
/// (I_N (x) A, stacked C) is detectable in the eigenmode sense.
MultiAgentSystem lift_system(LtiModel model, CommGraph graph,
                             std::vector<Eigen::MatrixXd> C);

/// kron(I_blocks, M)
Eigen::MatrixXd block_diagonal_repeat(const Eigen::MatrixXd& M, int blocks);
/// kron(L, I_dim)
Eigen::MatrixXd kron_with_identity(const Eigen::MatrixXd& L, int dim);

/// Largest singular value (induced 2-norm).
double operator_norm(const Eigen::MatrixXd& M);

} // namespace secest
