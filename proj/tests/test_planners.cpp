#include <doctest.h>

#include "secest/security.hpp"
#include "secest/sim.hpp"
#include "support.hpp"

using namespace secest;

namespace {

ScenarioConfig platoon(int N, double budget) {
    return build_platoon(N, 0.01, 0.1, 0.1, CostModel::common(N, 1.0, 30.0, budget));
}

} // namespace

TEST_CASE("budget-feasible enumeration") {
    // N=3, bound (5 - 3)/1 = 2: empty set, three singletons, three pairs.
    const auto small = enumerate_budget_feasible(3, CostModel::common(3, 1.0, 2.0, 5.0));
    REQUIRE(small.size() == 7);
    CHECK(small[0] == std::vector<int>{0, 0, 0});
    CHECK(small[1] == std::vector<int>{1, 0, 0});
    CHECK(small[3] == std::vector<int>{0, 0, 1});
    CHECK(small[4] == std::vector<int>{1, 1, 0});
    CHECK(small.back() == std::vector<int>{0, 1, 1});

    // Budget below the all-normal floor: nothing.
    CHECK(enumerate_budget_feasible(3, CostModel::common(3, 1.0, 2.0, 2.0)).empty());

    // Platoon bound (150 - 5)/29 = 5: all 32 indicators.
    CHECK(enumerate_budget_feasible(5, CostModel::common(5, 1.0, 30.0, 150.0)).size() == 32);

    Eigen::VectorXd cn(2), cs(2);
    cn << 1, 2;
    cs << 3, 4;
    CostModel uneven{cn, cs, 10.0};
    CHECK_THROWS_AS(enumerate_budget_feasible(2, uneven), RequiresCommonCosts);
}

TEST_CASE("max-min fallback over feasible indicators") {
    const ScenarioConfig cfg = platoon(5, 150.0);
    const EigenmodeBasis basis = eigenmode_basis(cfg.system.model(), 5, BasisKind::jordan);
    const IncidenceMatrix H = incidence_matrix(cfg.system, basis);

    // Only the all-normal indicator: alpha is the smallest row sum (the last
    // vehicle's lone viewer).
    const MaxMinResult only_zero = maxmin_phi(H, {{0, 0, 0, 0, 0}});
    CHECK_FALSE(only_zero.alpha.is_infinite);
    CHECK(only_zero.alpha.value == 1);

    // Budget 25 admits only the empty secure set.
    const auto feas = enumerate_budget_feasible(5, CostModel::common(5, 1.0, 30.0, 25.0));
    REQUIRE(feas.size() == 1);
    const MaxMinResult mm = maxmin_phi(H, feas);
    CHECK(mm.alpha.value == 1);
    CHECK(mm.b == std::vector<int>{0, 0, 0, 0, 0});

    CHECK_THROWS_AS(maxmin_phi(H, {}), EmptyFeasibleSet);
}

TEST_CASE("max-min equals the exhaustive index search") {
    auto gen = testsupport::rng(37);
    for (int trial = 0; trial < 20; ++trial) {
        const int N = 4;
        const Eigen::MatrixXi P = testsupport::random_pattern(gen, N);
        const MultiAgentSystem sys = testsupport::system_from_pattern(
            P, testsupport::random_state_matrix(gen, 2, 1.0), Eigen::MatrixXd::Zero(2, 1));
        const EigenmodeBasis basis = eigenmode_basis(sys.model(), N, BasisKind::jordan);
        const IncidenceMatrix H = incidence_matrix(sys, basis);

        const double budget = N * 1.0 + testsupport::unif(gen, 0.0, 2.9); // up to two secured
        const CostModel costs = CostModel::common(N, 1.0, 2.0, budget);
        const auto feasible = enumerate_budget_feasible(N, costs);
        bool any_cover = false;
        for (const auto& b : feasible) any_cover |= check_max_resilience(H, b);
        if (any_cover) continue; // fallback precondition not met

        const MaxMinResult mm = maxmin_phi(H, feasible);

        int best = -1;
        for (const auto& b : feasible) {
            std::vector<bool> is_secure(N);
            for (int i = 0; i < N; ++i) is_secure[i] = b[i] == 1;
            best = std::max(best, testsupport::oracle_index(P, is_secure));
        }
        REQUIRE_FALSE(mm.alpha.is_infinite);
        CHECK(mm.alpha.value == best);
    }
}

TEST_CASE("platoon plans: ample, single-secure, and starved budgets") {
    const EigenmodeBasis basis =
        eigenmode_basis(platoon(5, 150).system.model(), 5, BasisKind::jordan);

    // Budget 150: alternate pattern, no undetectable attacks.
    {
        const ScenarioConfig cfg = platoon(5, 150.0);
        const SecurityPlan brute = brute_force_plan(cfg.system, cfg.costs, basis);
        const SecurityPlan fast = efficient_plan(cfg.system, cfg.costs, basis);
        CHECK(brute.measure.to_string() == "SNSNS");
        CHECK(fast.measure.to_string() == "SNSNS");
        CHECK(brute.index.is_infinite);
        CHECK(fast.index.is_infinite);
        CHECK(brute.cost == doctest::Approx(92.0));
        CHECK(fast.cost == doctest::Approx(92.0));
    }

    // Budget 34 = one secure + four normal: best is the last vehicle.
    {
        const ScenarioConfig cfg = platoon(5, 34.0);
        const SecurityPlan brute = brute_force_plan(cfg.system, cfg.costs, basis);
        const SecurityPlan fast = efficient_plan(cfg.system, cfg.costs, basis);
        CHECK(brute.measure.secure_set() == std::vector<int>{4});
        CHECK(fast.measure.secure_set() == std::vector<int>{4});
        CHECK(brute.index.value == 2);
        CHECK(fast.index.value == 2);
    }

    // Budget 25: nothing is securable.
    {
        const ScenarioConfig cfg = platoon(5, 25.0);
        const SecurityPlan brute = brute_force_plan(cfg.system, cfg.costs, basis);
        const SecurityPlan fast = efficient_plan(cfg.system, cfg.costs, basis);
        CHECK(brute.measure.secure_set().empty());
        CHECK(fast.measure.secure_set().empty());
        CHECK(brute.index.value == 1);
        CHECK(fast.index.value == 1);
    }

    // Budget below the all-normal floor is rejected up front.
    {
        CostModel costs = CostModel::common(5, 1.0, 30.0, 4.0);
        const ScenarioConfig cfg = platoon(5, 150.0);
        CHECK_THROWS_AS(brute_force_plan(cfg.system, costs, basis), InfeasibleBudget);
        CHECK_THROWS_AS(efficient_plan(cfg.system, costs, basis), InfeasibleBudget);
    }
}

TEST_CASE("planners agree with the oracle on a randomized unimodular corpus") {
    auto gen = testsupport::rng(43);
    int used = 0;
    int mismatches = 0;
    while (used < 40) {
        const int N = testsupport::randint(gen, 2, 6);
        const int n = testsupport::randint(gen, 1, 3);
        const Eigen::MatrixXi P = testsupport::random_pattern(gen, N);
        if (is_totally_unimodular(P) != TuResult::tu) continue;
        ++used;

        const MultiAgentSystem sys = testsupport::system_from_pattern(
            P, testsupport::random_state_matrix(gen, n, 1.0), Eigen::MatrixXd::Zero(n, 1));
        const EigenmodeBasis basis = eigenmode_basis(sys.model(), N, BasisKind::jordan);

        const double cn = testsupport::unif(gen, 0.5, 2.0);
        const double cs = cn + testsupport::unif(gen, 1.0, 20.0);
        const double budget = testsupport::unif(gen, N * cn, N * cs);
        const CostModel costs = CostModel::common(N, cn, cs, budget);

        const SecurityPlan brute = brute_force_plan(sys, costs, basis);
        const SecurityPlan fast = efficient_plan(sys, costs, basis);
        const testsupport::OraclePlan oracle = testsupport::oracle_plan(P, costs);

        const bool index_ok = brute.index == fast.index &&
                              brute.index.is_infinite == oracle.infinite &&
                              (oracle.infinite || brute.index.value == oracle.index);
        const bool cost_ok = std::abs(brute.cost - fast.cost) <= 1e-9 &&
                             std::abs(brute.cost - oracle.cost) <= 1e-9;
        if (!index_ok || !cost_ok) ++mismatches;
    }
    CHECK(mismatches == 0);
}

TEST_CASE("heterogeneous costs: brute force runs, fast path demands common costs") {
    auto gen = testsupport::rng(47);
    const int N = 4;
    const Eigen::MatrixXi P = testsupport::random_pattern(gen, N);
    const MultiAgentSystem sys = testsupport::system_from_pattern(
        P, testsupport::random_state_matrix(gen, 2, 0.9), Eigen::MatrixXd::Zero(2, 1));
    const EigenmodeBasis basis = eigenmode_basis(sys.model(), N, BasisKind::jordan);

    Eigen::VectorXd cn(N), cs(N);
    cn << 1, 2, 1.5, 1;
    cs << 4, 9, 5, 7;
    // Starve the budget so step 2 is required.
    const CostModel costs{cn, cs, cn.sum() + 2.0};
    const SecurityPlan brute = brute_force_plan(sys, costs, basis);
    CHECK(total_cost(brute.measure, costs) <= costs.budget + 1e-9);
    const LpVertex vertex =
        solve_relaxed_security_lp(incidence_matrix(sys, basis), costs);
    if (vertex.cost > costs.budget) {
        CHECK_THROWS_AS(efficient_plan(sys, costs, basis), RequiresCommonCosts);
    }
}
