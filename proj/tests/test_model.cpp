#include <doctest.h>

#include <complex>

#include "secest/model.hpp"
#include "secest/security.hpp"
#include "support.hpp"

using namespace secest;

namespace {

CommGraph path3() {
    Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(3, 3);
    adj(0, 1) = adj(1, 0) = 1;
    adj(1, 2) = adj(2, 1) = 1;
    return CommGraph::from_adjacency(adj);
}

CommGraph complete(int N) {
    Eigen::MatrixXd adj = Eigen::MatrixXd::Ones(N, N);
    adj.diagonal().setZero();
    return CommGraph::from_adjacency(adj);
}

CommGraph five_vehicle_graph() {
    Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(5, 5);
    auto link = [&](int i, int j) { adj(i, j) = adj(j, i) = 1; };
    link(0, 1);
    link(0, 2);
    link(1, 2);
    link(1, 3);
    link(2, 3);
    link(2, 4);
    link(3, 4);
    return CommGraph::from_adjacency(adj);
}

Eigen::MatrixXd platoon_A(double T = 0.01) {
    Eigen::MatrixXd A(2, 2);
    A << 1, T, 0, 1;
    return A;
}

Eigen::MatrixXd platoon_B(double T = 0.01) {
    Eigen::MatrixXd B(2, 1);
    B << 0, T;
    return B;
}

} // namespace

TEST_CASE("lti validation") {
    CHECK_THROWS_AS(make_lti(Eigen::MatrixXd::Zero(2, 3), Eigen::MatrixXd::Zero(2, 1)),
                    DimensionMismatch);
    CHECK_THROWS_AS(make_lti(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(3, 1)),
                    DimensionMismatch);
    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(make_lti(bad, Eigen::MatrixXd::Zero(2, 1)), ValidationError);
}

TEST_CASE("graph validation and spectrum") {
    // K2 Laplacian has eigenvalues {0, 2}.
    Eigen::MatrixXd k2(2, 2);
    k2 << 0, 1, 1, 0;
    const CommGraph g2 = CommGraph::from_adjacency(k2);
    const auto [l2, lmax] = laplacian_spectrum(g2);
    CHECK(l2 == doctest::Approx(2.0));
    CHECK(lmax == doctest::Approx(2.0));

    // Path on three nodes: det(L - t I) = -t(t-1)(t-3), so {0, 1, 3}.
    const auto [p2, pmax] = laplacian_spectrum(path3());
    CHECK(p2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pmax == doctest::Approx(3.0).epsilon(1e-12));

    // Disconnected graph rejected.
    Eigen::MatrixXd disc = Eigen::MatrixXd::Zero(4, 4);
    disc(0, 1) = disc(1, 0) = 1;
    disc(2, 3) = disc(3, 2) = 1;
    CHECK_THROWS_AS(CommGraph::from_adjacency(disc), DisconnectedGraph);

    CHECK_THROWS_AS(CommGraph::from_adjacency(Eigen::MatrixXd::Identity(3, 3)), ValidationError);
}

TEST_CASE("five-vehicle graph spectrum") {
    // Exact eigenvalues {0, 3-sqrt(2), 3, 3+sqrt(2), 5}.
    const CommGraph g = five_vehicle_graph();
    const auto [l2, lmax] = laplacian_spectrum(g);
    CHECK(l2 == doctest::Approx(3.0 - std::sqrt(2.0)).epsilon(1e-12));
    CHECK(lmax == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(2.0 / (l2 + lmax) == doctest::Approx(0.3036843).epsilon(1e-6));
    CHECK(g.diameter() == testsupport::bfs_diameter(g.adjacency()));
    CHECK(g.diameter() == 2);
}

TEST_CASE("laplacian eigenvalue thresholds on a random corpus") {
    auto gen = testsupport::rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        const int N = testsupport::randint(gen, 2, 8);
        const CommGraph g =
            CommGraph::from_adjacency(testsupport::random_connected_adjacency(gen, N));
        const double scale = g.laplacian().norm();
        CHECK(std::abs(g.eigenvalues()[0]) <= 1e-9 * scale);
        CHECK(g.eigenvalues()[1] > 1e-9 * scale);
    }
}

TEST_CASE("eigenmode basis: defective platoon dynamics") {
    const LtiModel model = make_lti(platoon_A(), platoon_B());
    const EigenmodeBasis basis = eigenmode_basis(model, 5, BasisKind::jordan);
    CHECK(basis.modes.size() == 10);
    for (int agent = 0; agent < 5; ++agent) {
        int count = 0;
        for (const auto& m : basis.modes) {
            if (m.agent == agent) ++count;
        }
        CHECK(count == 2);
    }
    // Jordan-chain membership: (A - lambda I)^n v = 0.
    for (const auto& m : basis.modes) {
        Eigen::MatrixXcd shifted =
            model.A.cast<std::complex<double>>() -
            m.eigenvalue * Eigen::MatrixXcd::Identity(2, 2);
        CHECK((shifted * shifted * m.vector).norm() <= 1e-8);
        CHECK(m.vector.norm() == doctest::Approx(1.0));
    }

    // Strictly-eigenvector variant keeps only ker(A - I): one mode per agent.
    const EigenmodeBasis eig = eigenmode_basis(model, 5, BasisKind::eigen);
    CHECK(eig.modes.size() == 5);
    for (const auto& m : eig.modes) CHECK(m.chain_depth == 1);
}

TEST_CASE("eigenmode basis: diagonal and rotation dynamics") {
    Eigen::MatrixXd D(2, 2);
    D << 1, 0, 0, 2;
    const EigenmodeBasis diag =
        eigenmode_basis(make_lti(D, Eigen::MatrixXd::Zero(2, 1)), 1, BasisKind::eigen);
    REQUIRE(diag.modes.size() == 2);
    for (const auto& m : diag.modes) {
        CHECK(m.agent == 0);
        const Eigen::VectorXcd v = m.vector;
        const bool e1 = std::abs(v[0]) > 0.999 && std::abs(v[1]) < 1e-9;
        const bool e2 = std::abs(v[1]) > 0.999 && std::abs(v[0]) < 1e-9;
        CHECK((e1 || e2));
    }

    Eigen::MatrixXd R(2, 2);
    R << 0, -1, 1, 0; // quarter turn, eigenvalues +-i
    const EigenmodeBasis rot =
        eigenmode_basis(make_lti(R, Eigen::MatrixXd::Zero(2, 1)), 1, BasisKind::jordan);
    REQUIRE(rot.modes.size() == 2);
    CHECK(rot.modes[0].eigenvalue == std::conj(rot.modes[1].eigenvalue));
    CHECK(std::abs(rot.modes[0].eigenvalue.imag()) == doctest::Approx(1.0));
}

TEST_CASE("lift: scalar identity, platoon dimensions, undetectable rejection") {
    // N = 1 scalar system.
    Eigen::MatrixXd A1(1, 1), B1(1, 1), C1(1, 1);
    A1 << 2;
    B1 << 1;
    C1 << 1;
    const MultiAgentSystem sys1 =
        lift_system(make_lti(A1, B1), CommGraph::from_adjacency(Eigen::MatrixXd::Zero(1, 1)),
                    {C1});
    CHECK(sys1.lifted_state_matrix()(0, 0) == 2.0);
    CHECK(sys1.p_total() == 1);

    // Five-vehicle platoon: 10 states, 2 + 4*4 = 18 measurements.
    std::vector<Eigen::MatrixXd> C;
    for (int i = 0; i < 5; ++i) {
        if (i == 0) {
            Eigen::MatrixXd Ci = Eigen::MatrixXd::Zero(2, 10);
            Ci.block(0, 0, 2, 2).setIdentity();
            C.push_back(Ci);
        } else {
            Eigen::MatrixXd Ci = Eigen::MatrixXd::Zero(4, 10);
            Ci.block(0, 2 * i, 2, 2).setIdentity();
            Ci.block(2, 2 * i, 2, 2).setIdentity();
            Ci.block(2, 2 * (i - 1), 2, 2) = -Eigen::MatrixXd::Identity(2, 2);
            C.push_back(Ci);
        }
    }
    const MultiAgentSystem platoon =
        lift_system(make_lti(platoon_A(), platoon_B()), five_vehicle_graph(), C);
    CHECK(platoon.lifted_state_matrix().rows() == 10);
    CHECK(platoon.p_total() == 18);

    // Unstable scalar pair with zero outputs must be rejected.
    Eigen::MatrixXd A2(1, 1), B2(1, 1);
    A2 << 2;
    B2 << 1;
    Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(1, 2);
    Eigen::MatrixXd k2(2, 2);
    k2 << 0, 1, 1, 0;
    CHECK_THROWS_AS(lift_system(make_lti(A2, B2), CommGraph::from_adjacency(k2), {zero, zero}),
                    UndetectablePair);
}

TEST_CASE("kronecker lift matches per-agent dynamics blockwise") {
    auto gen = testsupport::rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = testsupport::randint(gen, 1, 3);
        const int N = testsupport::randint(gen, 2, 5);
        const Eigen::MatrixXd A = testsupport::random_state_matrix(gen, n, 0.9);
        const Eigen::MatrixXd Ab = block_diagonal_repeat(A, N);
        Eigen::VectorXd x(n * N);
        for (int i = 0; i < x.size(); ++i) x[i] = testsupport::unif(gen, -1, 1);
        const Eigen::VectorXd lifted = Ab * x;
        for (int i = 0; i < N; ++i) {
            const Eigen::VectorXd per_agent = A * x.segment(i * n, n);
            CHECK((lifted.segment(i * n, n) - per_agent).norm() <=
                  1e-12 * std::max(1.0, per_agent.norm()));
        }
    }
}
