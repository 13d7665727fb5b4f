#include <doctest.h>

#include "secest/security.hpp"
#include "secest/sim.hpp"
#include "secest/simplex.hpp"
#include "support.hpp"

using namespace secest;

namespace {

Eigen::MatrixXi platoon_H(int N, int n = 2) {
    Eigen::MatrixXi H = Eigen::MatrixXi::Zero(n * N, N);
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < n; ++j) {
            H(i * n + j, i) = 1;
            if (i + 1 < N) H(i * n + j, i + 1) = 1;
        }
    }
    return H;
}

IncidenceMatrix wrap(const Eigen::MatrixXi& H) {
    IncidenceMatrix out;
    out.H = H;
    out.mode_rows.resize(H.rows());
    for (int i = 0; i < H.rows(); ++i) out.mode_rows[i] = i;
    return out;
}

} // namespace

TEST_CASE("standard-form simplex basics") {
    // min -x1 - x2 s.t. x1 + x2 + s = 1 -> optimum at a unit vertex.
    StandardFormLp lp;
    lp.A = Eigen::MatrixXd::Ones(1, 3);
    lp.b = Eigen::VectorXd::Ones(1);
    lp.cost = Eigen::VectorXd::Zero(3);
    lp.cost[0] = -1;
    lp.cost[1] = -1;
    const SimplexSolution sol = solve_standard_form(lp);
    CHECK(sol.objective == doctest::Approx(-1.0));
    CHECK(sol.x.sum() == doctest::Approx(1.0));

    // Infeasible: x1 = -1 with x >= 0.
    StandardFormLp bad;
    bad.A = Eigen::MatrixXd::Ones(1, 1);
    bad.b = -Eigen::VectorXd::Ones(1);
    bad.cost = Eigen::VectorXd::Ones(1);
    CHECK_THROWS_AS(solve_standard_form(bad), LpInfeasible);

    // Tie objective picks among the optimal face.
    StandardFormLp tie;
    tie.A = Eigen::MatrixXd::Ones(1, 2);
    tie.b = Eigen::VectorXd::Ones(1);
    tie.cost = Eigen::VectorXd::Zero(2); // every feasible point optimal
    Eigen::VectorXd t(2);
    t << 0.0, -1.0; // prefer the second coordinate
    tie.tie = t;
    const SimplexSolution tied = solve_standard_form(tie);
    CHECK(tied.x[1] == doctest::Approx(1.0));
}

TEST_CASE("cover relaxation: identity and single-column patterns") {
    // Identity pattern: every mode covered only by its own agent.
    const LpVertex own =
        solve_relaxed_security_lp(wrap(Eigen::MatrixXi::Identity(4, 4).eval()),
                                  CostModel::common(4, 1.0, 10.0, 100.0));
    CHECK(own.rounded == std::vector<int>{1, 1, 1, 1});

    // All-ones column with that agent cheapest: single secure agent.
    Eigen::MatrixXi H = Eigen::MatrixXi::Identity(4, 4);
    H.col(2).setOnes();
    CostModel costs = CostModel::common(4, 1.0, 10.0, 100.0);
    costs.c_secure[2] = 2.0;
    const LpVertex single = solve_relaxed_security_lp(wrap(H), costs);
    CHECK(single.rounded == std::vector<int>{0, 0, 1, 0});

    // Zero row: no cover exists.
    Eigen::MatrixXi Hz = Eigen::MatrixXi::Identity(3, 3);
    Hz.row(1).setZero();
    CHECK_THROWS_AS(solve_relaxed_security_lp(wrap(Hz), CostModel::common(3, 1, 2, 10)),
                    LpInfeasible);
}

TEST_CASE("cover relaxation: platoon vertex and tie-break") {
    const LpVertex v =
        solve_relaxed_security_lp(wrap(platoon_H(5)), CostModel::common(5, 1.0, 30.0, 150.0));
    CHECK(v.rounded == std::vector<int>{1, 0, 1, 0, 1});
    CHECK(v.cost == doctest::Approx(92.0));

    // Exhaustive cover oracle: 92 really is the cheapest binary cover.
    const Eigen::MatrixXi H = platoon_H(5);
    const CostModel costs = CostModel::common(5, 1.0, 30.0, 150.0);
    double best = 1e300;
    for (int mask = 0; mask < 32; ++mask) {
        std::vector<int> b(5);
        for (int i = 0; i < 5; ++i) b[i] = mask >> i & 1;
        bool ok = true;
        for (int r = 0; r < H.rows(); ++r) {
            int cover = 0;
            for (int c = 0; c < 5; ++c) cover += H(r, c) * b[c];
            ok &= cover >= 1;
        }
        if (ok) best = std::min(best, indicator_cost(b, costs));
    }
    CHECK(best == doctest::Approx(92.0));
}

TEST_CASE("fractional vertex raises on a non-unimodular cover") {
    // Odd-cycle cover: the relaxation optimum is the all-half point.
    Eigen::MatrixXi H(3, 3);
    H << 1, 1, 0, 0, 1, 1, 1, 0, 1;
    CHECK(is_totally_unimodular(H) == TuResult::not_tu);
    CHECK_THROWS_AS(solve_relaxed_security_lp(wrap(H), CostModel::common(3, 1.0, 3.0, 10.0)),
                    NonIntegralVertex);
}

TEST_CASE("total unimodularity: knowns") {
    CHECK(is_totally_unimodular(platoon_H(5)) == TuResult::tu);
    CHECK(is_totally_unimodular(platoon_H(9)) == TuResult::tu);
    CHECK(is_totally_unimodular(Eigen::MatrixXi::Identity(6, 6).eval()) == TuResult::tu);

    Eigen::MatrixXi bad(2, 2);
    bad << 1, 1, 1, -1;
    CHECK(is_totally_unimodular(bad) == TuResult::not_tu);

    Eigen::MatrixXi two(1, 1);
    two << 2;
    CHECK(is_totally_unimodular(two) == TuResult::not_tu);

    // Beyond the exhaustive cap with no structure: unknown.
    auto gen = testsupport::rng(3);
    Eigen::MatrixXi big(20, 20);
    for (int i = 0; i < 20; ++i) {
        for (int j = 0; j < 20; ++j) big(i, j) = testsupport::unif(gen, 0, 1) < 0.5 ? 1 : 0;
    }
    TuOptions opts;
    opts.exhaustive_col_cap = 18;
    const TuResult r = is_totally_unimodular(big, opts);
    CHECK((r == TuResult::unknown || r == TuResult::not_tu)); // structural test may refute it
}

TEST_CASE("total unimodularity agrees with the determinant oracle") {
    auto gen = testsupport::rng(29);
    int checked = 0;
    for (int trial = 0; trial < 120 && checked < 60; ++trial) {
        const int rows = testsupport::randint(gen, 2, 5);
        const int cols = testsupport::randint(gen, 2, 5);
        Eigen::MatrixXi M(rows, cols);
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols; ++j) {
                M(i, j) = testsupport::unif(gen, 0, 1) < 0.5 ? 1 : 0;
            }
        }
        const TuResult got = is_totally_unimodular(M);
        if (got == TuResult::unknown) continue;
        ++checked;
        CHECK((got == TuResult::tu) == testsupport::tu_oracle(M));
    }
    CHECK(checked >= 40);
}

TEST_CASE("relaxation integrality on random unimodular patterns") {
    auto gen = testsupport::rng(31);
    int used = 0;
    while (used < 30) {
        const int N = testsupport::randint(gen, 2, 6);
        const Eigen::MatrixXi P = testsupport::random_pattern(gen, N);
        if (is_totally_unimodular(P) != TuResult::tu) continue;
        ++used;
        Eigen::MatrixXi H(P.rows() * 2, N);
        H << P, P; // duplicated rows, as mode blocks produce
        const double cn = testsupport::unif(gen, 0.5, 2.0);
        const CostModel costs =
            CostModel::common(N, cn, cn + testsupport::unif(gen, 1.0, 20.0), 1e6);
        const LpVertex v = solve_relaxed_security_lp(wrap(H), costs);
        for (int i = 0; i < v.raw.size(); ++i) {
            CHECK(std::min(std::abs(v.raw[i]), std::abs(1.0 - v.raw[i])) <= 1e-6);
        }
    }
}
