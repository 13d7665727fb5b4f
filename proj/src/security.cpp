#include "secest/security.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include <Eigen/SVD>

#include "secest/simplex.hpp"

namespace secest {

namespace {

bool within_budget(double cost, double budget) {
    return cost <= budget + 1e-9 * std::max(1.0, std::abs(budget));
}

bool mode_passes_filter(const Eigenmode& mode, ModeFilter filter) {
    if (filter == ModeFilter::all) return true;
    return std::abs(mode.eigenvalue) >= 1.0 - 1e-9;
}

/// ||C_r (e_i (x) v)|| against the relative nonzero threshold.
bool agent_sees_mode(const MultiAgentSystem& system, int agent_r, const Eigenmode& mode,
                     double nonzero_tol) {
    const int n = system.n();
    const auto block = system.C(agent_r).middleCols(mode.agent * n, n);
    const double block_norm = block.norm();
    if (block_norm == 0.0) return false;
    // Real block against a complex mode direction: split into parts.
    const double real_part = (block * mode.vector.real()).norm();
    const double imag_part = (block * mode.vector.imag()).norm();
    const double val = std::hypot(real_part, imag_part);
    return val > nonzero_tol * block_norm;
}

std::vector<int> filtered_mode_indices(const EigenmodeBasis& basis, ModeFilter filter) {
    std::vector<int> out;
    for (int m = 0; m < static_cast<int>(basis.modes.size()); ++m) {
        if (mode_passes_filter(basis.modes[m], filter)) out.push_back(m);
    }
    return out;
}

/// Proposition-style index over the filtered modes, assuming an undetectable
/// attack exists: for each mode, the number of normal agents whose output an
/// attacker must corrupt, taking |normal| for modes covered by a secure agent.
SecurityIndexResult index_over_modes(const MultiAgentSystem& system,
                                     const SecurityMeasure& measure,
                                     const EigenmodeBasis& basis, ModeFilter filter,
                                     double nonzero_tol) {
    const std::vector<int> normal = measure.normal_set();
    const std::vector<int> secure = measure.secure_set();

    SecurityIndexResult result;
    result.index = SecurityIndex::infinite();
    for (int m = 0; m < static_cast<int>(basis.modes.size()); ++m) {
        const Eigenmode& mode = basis.modes[m];
        if (!mode_passes_filter(mode, filter)) continue;
        bool covered = false;
        for (int r : secure) {
            if (agent_sees_mode(system, r, mode, nonzero_tol)) {
                covered = true;
                break;
            }
        }
        int count;
        if (covered) {
            count = static_cast<int>(normal.size());
        } else {
            count = 0;
            for (int r : normal) {
                if (agent_sees_mode(system, r, mode, nonzero_tol)) ++count;
            }
        }
        const SecurityIndex candidate = SecurityIndex::finite(count);
        if (candidate < result.index) {
            result.index = candidate;
            result.certificate_mode = m;
        }
    }
    return result;
}

bool lex_less_set(const std::vector<int>& a, const std::vector<int>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

/// Visits subsets of {0..N-1} in (cardinality, lexicographic) order until the
/// visitor returns false.
void for_each_subset(int N, int max_card,
                     const std::function<bool(const std::vector<int>&)>& visit) {
    std::vector<int> subset;
    if (!visit(subset)) return;
    for (int card = 1; card <= max_card; ++card) {
        subset.resize(card);
        for (int i = 0; i < card; ++i) subset[i] = i;
        while (true) {
            if (!visit(subset)) return;
            int i = card - 1;
            while (i >= 0 && subset[i] == N - card + i) --i;
            if (i < 0) break;
            ++subset[i];
            for (int j = i + 1; j < card; ++j) subset[j] = subset[j - 1] + 1;
        }
    }
}

} // namespace

SecurityMeasure SecurityMeasure::all_normal(int N) {
    return SecurityMeasure(std::vector<AgentType>(N, AgentType::normal));
}

SecurityMeasure SecurityMeasure::from_secure_set(int N, const std::vector<int>& secure) {
    std::vector<AgentType> phi(N, AgentType::normal);
    for (int i : secure) {
        if (i < 0 || i >= N) throw DimensionMismatch("secure set index out of range");
        phi[i] = AgentType::secure;
    }
    return SecurityMeasure(std::move(phi));
}

SecurityMeasure SecurityMeasure::from_indicator(const std::vector<int>& b) {
    std::vector<AgentType> phi(b.size(), AgentType::normal);
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (b[i] != 0 && b[i] != 1) throw ValidationError("indicator entries must be 0 or 1");
        if (b[i] == 1) phi[i] = AgentType::secure;
    }
    return SecurityMeasure(std::move(phi));
}

SecurityMeasure SecurityMeasure::from_string(const std::string& s) {
    std::vector<AgentType> phi;
    phi.reserve(s.size());
    for (char c : s) {
        const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (u == 'S') {
            phi.push_back(AgentType::secure);
        } else if (u == 'N') {
            phi.push_back(AgentType::normal);
        } else {
            throw ConfigError("security measure string may contain only S and N");
        }
    }
    if (phi.empty()) throw ConfigError("security measure string is empty");
    return SecurityMeasure(std::move(phi));
}

std::vector<int> SecurityMeasure::secure_set() const {
    std::vector<int> out;
    for (int i = 0; i < N(); ++i) {
        if (is_secure(i)) out.push_back(i);
    }
    return out;
}

std::vector<int> SecurityMeasure::normal_set() const {
    std::vector<int> out;
    for (int i = 0; i < N(); ++i) {
        if (!is_secure(i)) out.push_back(i);
    }
    return out;
}

std::vector<int> SecurityMeasure::indicator() const {
    std::vector<int> b(N());
    for (int i = 0; i < N(); ++i) b[i] = is_secure(i) ? 1 : 0;
    return b;
}

std::string SecurityMeasure::to_string() const {
    std::string s;
    for (int i = 0; i < N(); ++i) s += is_secure(i) ? 'S' : 'N';
    return s;
}

CostModel CostModel::common(int N, double c_normal, double c_secure, double budget) {
    CostModel c;
    c.c_normal = Eigen::VectorXd::Constant(N, c_normal);
    c.c_secure = Eigen::VectorXd::Constant(N, c_secure);
    c.budget = budget;
    c.validate(N);
    return c;
}

void CostModel::validate(int N) const {
    if (c_normal.size() != N || c_secure.size() != N) {
        throw DimensionMismatch("cost vectors must have one entry per agent");
    }
    for (int i = 0; i < N; ++i) {
        if (!(c_normal[i] > 0.0) || !(c_secure[i] > 0.0)) {
            throw ValidationError("costs must be positive");
        }
        if (!(c_normal[i] < c_secure[i])) {
            throw ValidationError("normal cost must be strictly below secure cost");
        }
    }
    if (!(budget > 0.0)) throw ValidationError("budget must be positive");
}

bool CostModel::has_common_costs(double tol) const {
    for (int i = 1; i < c_normal.size(); ++i) {
        if (std::abs(c_normal[i] - c_normal[0]) > tol) return false;
        if (std::abs(c_secure[i] - c_secure[0]) > tol) return false;
    }
    return true;
}

double total_cost(const SecurityMeasure& measure, const CostModel& costs) {
    costs.validate(measure.N());
    double total = 0.0;
    for (int i = 0; i < measure.N(); ++i) {
        total += measure.is_secure(i) ? costs.c_secure[i] : costs.c_normal[i];
    }
    return total;
}

double indicator_cost(const std::vector<int>& b, const CostModel& costs) {
    const int N = static_cast<int>(b.size());
    costs.validate(N);
    double total = 0.0;
    for (int i = 0; i < N; ++i) {
        total += (costs.c_secure[i] - costs.c_normal[i]) * b[i] + costs.c_normal[i];
    }
    return total;
}

IncidenceMatrix incidence_matrix(const MultiAgentSystem& system, const EigenmodeBasis& basis,
                                 ModeFilter filter, double nonzero_tol) {
    if (basis.agent_count != system.N() || basis.block_dim != system.n()) {
        throw DimensionMismatch("eigenmode basis does not match the system");
    }
    IncidenceMatrix out;
    out.basis = basis;
    out.mode_rows = filtered_mode_indices(basis, filter);
    out.H = Eigen::MatrixXi::Zero(static_cast<int>(out.mode_rows.size()), system.N());
    for (int row = 0; row < out.H.rows(); ++row) {
        const Eigenmode& mode = basis.modes[out.mode_rows[row]];
        for (int r = 0; r < system.N(); ++r) {
            out.H(row, r) = agent_sees_mode(system, r, mode, nonzero_tol) ? 1 : 0;
        }
    }
    return out;
}

bool is_detectable(const MultiAgentSystem& system, const std::vector<int>& secure_set,
                   const EigenmodeBasis& basis, ModeFilter filter, double nonzero_tol) {
    for (const Eigenmode& mode : basis.modes) {
        if (!mode_passes_filter(mode, filter)) continue;
        bool seen = false;
        for (int r : secure_set) {
            if (agent_sees_mode(system, r, mode, nonzero_tol)) {
                seen = true;
                break;
            }
        }
        if (!seen) return false;
    }
    return true;
}

bool is_detectable(const MultiAgentSystem& system, const std::vector<int>& secure_set) {
    const EigenmodeBasis basis = eigenmode_basis(system.model(), system.N(), BasisKind::jordan);
    return is_detectable(system, secure_set, basis, ModeFilter::all);
}

std::string SecurityIndex::to_string() const {
    return is_infinite ? "inf" : std::to_string(value);
}

SecurityIndexResult security_index(const MultiAgentSystem& system, const SecurityMeasure& measure,
                                   const EigenmodeBasis& basis, ModeFilter filter,
                                   double nonzero_tol) {
    if (measure.N() != system.N()) throw DimensionMismatch("measure length must equal agent count");
    if (is_detectable(system, measure.secure_set(), basis, filter, nonzero_tol)) {
        return SecurityIndexResult{SecurityIndex::infinite(), std::nullopt};
    }
    return index_over_modes(system, measure, basis, filter, nonzero_tol);
}

AttackSynthesis synthesize_undetectable_attack(const MultiAgentSystem& system,
                                               const SecurityMeasure& measure, int horizon) {
    if (horizon < 1) throw DimensionMismatch("attack horizon must be positive");
    const int d = system.n() * system.N();
    const std::vector<int> secure = measure.secure_set();

    Eigen::VectorXd x1;
    const Eigen::MatrixXd Cs = system.stacked_measurement(secure);
    if (Cs.rows() == 0) {
        // Empty secure stack observes nothing; any initial state works.
        x1 = Eigen::VectorXd::Zero(d);
        x1[0] = 1.0;
    } else {
        Eigen::MatrixXd obs(Cs.rows() * d, d);
        Eigen::MatrixXd block = Cs;
        for (int k = 0; k < d; ++k) {
            obs.middleRows(k * Cs.rows(), Cs.rows()) = block;
            block = block * system.lifted_state_matrix();
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(obs, Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        const double smax = sv[0];
        if (sv[sv.size() - 1] > kRankTol * std::max(smax, 1e-300)) {
            throw NoUndetectableAttack(
                "secure measurements make the pair detectable; no undetectable attack exists");
        }
        x1 = svd.matrixV().col(sv.size() - 1);
        // Deterministic sign: largest-magnitude entry positive.
        int imax = 0;
        for (int i = 1; i < x1.size(); ++i) {
            if (std::abs(x1[i]) > std::abs(x1[imax])) imax = i;
        }
        if (x1[imax] < 0.0) x1 = -x1;
    }

    AttackSynthesis out;
    out.x1_0 = x1;
    out.x2_0 = Eigen::VectorXd::Zero(d);
    const Eigen::MatrixXd Call = system.stacked_measurement();
    Eigen::VectorXd z = x1;
    out.attack.reserve(horizon);
    for (int k = 0; k < horizon; ++k) {
        out.attack.push_back(-Call * z);
        z = system.lifted_state_matrix() * z;
    }
    return out;
}

bool check_max_resilience(const IncidenceMatrix& H, const std::vector<int>& b) {
    if (static_cast<int>(b.size()) != H.H.cols()) {
        throw DimensionMismatch("indicator length must equal agent count");
    }
    for (int row = 0; row < H.H.rows(); ++row) {
        int covered = 0;
        for (int r = 0; r < H.H.cols(); ++r) covered += H.H(row, r) * b[r];
        if (covered < 1) return false;
    }
    return true;
}

LpVertex solve_relaxed_security_lp(const IncidenceMatrix& H, const CostModel& costs) {
    const int N = static_cast<int>(H.H.cols());
    costs.validate(N);
    for (int row = 0; row < H.H.rows(); ++row) {
        if (H.H.row(row).sum() == 0) {
            throw LpInfeasible("a mode is visible to no agent; no cover exists");
        }
    }

    // Deduplicate rows; duplicates are common (one per mode of an agent
    // block) and only inflate the tableau.
    std::vector<Eigen::RowVectorXi> rows;
    for (int r = 0; r < H.H.rows(); ++r) {
        bool dup = false;
        for (const auto& seen : rows) {
            if (seen == H.H.row(r)) {
                dup = true;
                break;
            }
        }
        if (!dup) rows.push_back(H.H.row(r));
    }
    const int R = static_cast<int>(rows.size());

    // Variables: b (N), surplus s (R) for H b - s = 1, slack t (N) for
    // b + t = 1.
    const int nv = N + R + N;
    StandardFormLp lp;
    lp.A = Eigen::MatrixXd::Zero(R + N, nv);
    lp.b = Eigen::VectorXd::Ones(R + N);
    lp.cost = Eigen::VectorXd::Zero(nv);
    Eigen::VectorXd tie = Eigen::VectorXd::Zero(nv);
    for (int r = 0; r < R; ++r) {
        for (int j = 0; j < N; ++j) lp.A(r, j) = rows[r][j];
        lp.A(r, N + r) = -1.0;
    }
    for (int j = 0; j < N; ++j) {
        lp.A(R + j, j) = 1.0;
        lp.A(R + j, N + R + j) = 1.0;
        lp.cost[j] = costs.c_secure[j] - costs.c_normal[j];
        // Prefer securing lower agent indices among equal-cost vertices.
        tie[j] = -std::pow(2.0, -j);
    }
    lp.tie = tie;

    const SimplexSolution sol = solve_standard_form(lp);

    LpVertex out;
    out.raw = sol.x.head(N);
    out.rounded.resize(N);
    double worst = 0.0;
    for (int j = 0; j < N; ++j) {
        const double v = out.raw[j];
        worst = std::max(worst, std::min(std::abs(v), std::abs(1.0 - v)));
        out.rounded[j] = v >= 0.5 ? 1 : 0;
    }
    if (worst > 1e-6) {
        throw NonIntegralVertex("relaxation vertex is fractional (distance " +
                                std::to_string(worst) + " from binary); fall back to brute force");
    }
    if (!check_max_resilience(H, out.rounded)) {
        throw SimplexFailure("rounded vertex violates the cover constraints");
    }
    out.cost = indicator_cost(out.rounded, costs);
    return out;
}

void enumerate_budget_feasible(int N, const CostModel& costs,
                               const std::function<void(const std::vector<int>&)>& sink) {
    costs.validate(N);
    if (!costs.has_common_costs(1e-12)) {
        throw RequiresCommonCosts("budget enumeration needs common costs across agents");
    }
    const double cn = costs.c_normal[0];
    const double cs = costs.c_secure[0];
    const double bound = (costs.budget - N * cn) / (cs - cn);
    if (bound < -1e-9) return;
    const int max_card = std::min(N, static_cast<int>(std::floor(bound + 1e-9)));
    for_each_subset(N, max_card, [&](const std::vector<int>& subset) {
        std::vector<int> b(N, 0);
        for (int i : subset) b[i] = 1;
        sink(b);
        return true;
    });
}

std::vector<std::vector<int>> enumerate_budget_feasible(int N, const CostModel& costs) {
    std::vector<std::vector<int>> out;
    enumerate_budget_feasible(N, costs, [&](const std::vector<int>& b) { out.push_back(b); });
    return out;
}

MaxMinResult maxmin_phi(const IncidenceMatrix& H, const std::vector<std::vector<int>>& feasible) {
    if (feasible.empty()) throw EmptyFeasibleSet("no budget-feasible indicator to evaluate");
    const int N = static_cast<int>(H.H.cols());
    const int R = static_cast<int>(H.H.rows());

    MaxMinResult best;
    bool have_best = false;
    int best_card = 0;
    for (const auto& b : feasible) {
        if (static_cast<int>(b.size()) != N) {
            throw DimensionMismatch("indicator length must equal agent count");
        }
        SecurityIndex alpha = SecurityIndex::infinite();
        std::optional<int> cert;
        for (int l = 0; l < R; ++l) {
            int psi = 0;
            for (int r = 0; r < N; ++r) psi += H.H(l, r) * b[r];
            if (psi != 0) continue; // row covered by a secure agent
            int phi_lj = 0;
            for (int r = 0; r < N; ++r) phi_lj += H.H(l, r) * (1 - b[r]);
            const SecurityIndex candidate = SecurityIndex::finite(phi_lj);
            if (candidate < alpha) {
                alpha = candidate;
                cert = l;
            }
        }
        const int card = static_cast<int>(std::count(b.begin(), b.end(), 1));
        // Maximize alpha; ties prefer fewer secured agents (lower cost under
        // common costs) then the lexicographically smaller secure set.
        bool better = false;
        if (!have_best || best.alpha < alpha) {
            better = true;
        } else if (alpha == best.alpha) {
            if (card < best_card) {
                better = true;
            } else if (card == best_card &&
                       std::lexicographical_compare(best.b.begin(), best.b.end(), b.begin(),
                                                    b.end())) {
                better = true; // larger indicator = lower secured indices
            }
        }
        if (better) {
            best.b = b;
            best.alpha = alpha;
            best.certificate_row = cert;
            best_card = card;
            have_best = true;
        }
    }
    return best;
}

SecurityPlan brute_force_plan(const MultiAgentSystem& system, const CostModel& costs,
                              const EigenmodeBasis& basis, ModeFilter filter) {
    const int N = system.N();
    costs.validate(N);
    const double floor_cost = total_cost(SecurityMeasure::all_normal(N), costs);
    if (!within_budget(floor_cost, costs.budget)) {
        throw InfeasibleBudget("budget cannot pay the base cost of all-normal agents");
    }

    const double cost_eps = 1e-9 * std::max(1.0, std::abs(costs.budget));

    // Step 1: cheapest subset whose secure pair is detectable.
    std::optional<std::vector<int>> best_set;
    double best_cost = 0.0;
    for_each_subset(N, N, [&](const std::vector<int>& subset) {
        const SecurityMeasure measure = SecurityMeasure::from_secure_set(N, subset);
        const double cost = total_cost(measure, costs);
        if (!within_budget(cost, costs.budget)) return true;
        if (!is_detectable(system, subset, basis, filter)) return true;
        if (!best_set || cost < best_cost - cost_eps ||
            (std::abs(cost - best_cost) <= cost_eps && lex_less_set(subset, *best_set))) {
            best_set = subset;
            best_cost = cost;
        }
        return true;
    });
    if (best_set) {
        SecurityPlan plan;
        plan.measure = SecurityMeasure::from_secure_set(N, *best_set);
        plan.index = SecurityIndex::infinite();
        plan.cost = best_cost;
        plan.algorithm = PlanAlgorithm::bruteforce;
        return plan;
    }

    // Step 2: feasible strict subset maximizing the index.
    SecurityPlan plan;
    plan.algorithm = PlanAlgorithm::bruteforce;
    bool have = false;
    for_each_subset(N, N - 1, [&](const std::vector<int>& subset) {
        const SecurityMeasure measure = SecurityMeasure::from_secure_set(N, subset);
        const double cost = total_cost(measure, costs);
        if (!within_budget(cost, costs.budget)) return true;
        const SecurityIndexResult r = index_over_modes(system, measure, basis, filter, kNonzeroTol);
        bool better = false;
        if (!have || plan.index < r.index) {
            better = true;
        } else if (r.index == plan.index) {
            if (cost < plan.cost - cost_eps) {
                better = true;
            } else if (std::abs(cost - plan.cost) <= cost_eps &&
                       lex_less_set(subset, plan.measure.secure_set())) {
                better = true;
            }
        }
        if (better) {
            plan.measure = measure;
            plan.index = r.index;
            plan.cost = cost;
            plan.certificate_mode = r.certificate_mode;
            have = true;
        }
        return true;
    });
    if (!have) throw InfeasibleBudget("no feasible security measure under the budget");
    return plan;
}

SecurityPlan efficient_plan(const MultiAgentSystem& system, const CostModel& costs,
                            const EigenmodeBasis& basis, ModeFilter filter) {
    const int N = system.N();
    costs.validate(N);
    const double floor_cost = total_cost(SecurityMeasure::all_normal(N), costs);
    if (!within_budget(floor_cost, costs.budget)) {
        throw InfeasibleBudget("budget cannot pay the base cost of all-normal agents");
    }

    const IncidenceMatrix H = incidence_matrix(system, basis, filter);

    const LpVertex vertex = solve_relaxed_security_lp(H, costs);
    if (within_budget(vertex.cost, costs.budget)) {
        SecurityPlan plan;
        plan.measure = SecurityMeasure::from_indicator(vertex.rounded);
        plan.index = SecurityIndex::infinite();
        plan.cost = vertex.cost;
        plan.algorithm = PlanAlgorithm::efficient;
        return plan;
    }

    const auto feasible = enumerate_budget_feasible(N, costs);
    const MaxMinResult mm = maxmin_phi(H, feasible);

    SecurityPlan plan;
    plan.measure = SecurityMeasure::from_indicator(mm.b);
    plan.index = mm.alpha;
    plan.cost = indicator_cost(mm.b, costs);
    plan.algorithm = PlanAlgorithm::efficient;
    if (mm.certificate_row) plan.certificate_mode = H.mode_rows[*mm.certificate_row];
    return plan;
}

} // namespace secest
