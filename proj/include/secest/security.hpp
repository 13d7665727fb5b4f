#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "secest/model.hpp"

namespace secest {

enum class AgentType : std::uint8_t { normal, secure };

/// Per-agent choice between attackable (normal) and attack-proof (secure)
/// sensors.
class SecurityMeasure {
public:
    explicit SecurityMeasure(std::vector<AgentType> phi) : phi_(std::move(phi)) {}
    static SecurityMeasure all_normal(int N);
    static SecurityMeasure from_secure_set(int N, const std::vector<int>& secure);
    static SecurityMeasure from_indicator(const std::vector<int>& b);
    /// Parses strings like "SNSNS" (case-insensitive).
    static SecurityMeasure from_string(const std::string& s);

    int N() const { return static_cast<int>(phi_.size()); }
    AgentType type(int i) const { return phi_[i]; }
    bool is_secure(int i) const { return phi_[i] == AgentType::secure; }
    std::vector<int> secure_set() const;
    std::vector<int> normal_set() const;
    std::vector<int> indicator() const; // b_i = 1 iff secure
    std::string to_string() const;      // "SNSNS"

    bool operator==(const SecurityMeasure& other) const { return phi_ == other.phi_; }

private:
    std::vector<AgentType> phi_;
};

/// Per-agent security costs with a total budget. Normal must be strictly
/// cheaper than secure for every agent.
struct CostModel {
    Eigen::VectorXd c_normal;
    Eigen::VectorXd c_secure;
    double budget = 0.0;

    static CostModel common(int N, double c_normal, double c_secure, double budget);
    void validate(int N) const;
    bool has_common_costs(double tol = 1e-12) const;
};

double total_cost(const SecurityMeasure& measure, const CostModel& costs);
/// Cost as a function of the binary indicator b: sum over agents of
/// (c_secure - c_normal) * b_i + c_normal.
double indicator_cost(const std::vector<int>& b, const CostModel& costs);

enum class ModeFilter { all, unstable };

/// 0/1 matrix linking eigenmodes (rows) to agents that can see them
/// (columns). Rows follow basis.modes after filtering.
struct IncidenceMatrix {
    Eigen::MatrixXi H;
    std::vector<int> mode_rows; // row -> index into basis.modes
    EigenmodeBasis basis;
};

IncidenceMatrix incidence_matrix(const MultiAgentSystem& system,
                                 const EigenmodeBasis& basis,
                                 ModeFilter filter = ModeFilter::all,
                                 double nonzero_tol = kNonzeroTol);

/// Eigenmode detectability test: true iff every (filtered) mode is visible
/// to at least one agent in the secure set.
bool is_detectable(const MultiAgentSystem& system, const std::vector<int>& secure_set,
                   const EigenmodeBasis& basis, ModeFilter filter = ModeFilter::all,
                   double nonzero_tol = kNonzeroTol);
/// Convenience overload that builds the default (jordan) basis.
bool is_detectable(const MultiAgentSystem& system, const std::vector<int>& secure_set);

/// Number of agent output blocks an attacker must compromise for an
/// undetectable attack; +infinity when none exists.
struct SecurityIndex {
    static SecurityIndex infinite() { return SecurityIndex{true, 0}; }
    static SecurityIndex finite(int v) { return SecurityIndex{false, v}; }

    bool is_infinite = true;
    int value = 0; // meaningful only when finite

    bool operator==(const SecurityIndex& o) const {
        return is_infinite == o.is_infinite && (is_infinite || value == o.value);
    }
    /// Total order with +infinity greatest.
    bool operator<(const SecurityIndex& o) const {
        if (is_infinite) return false;
        if (o.is_infinite) return true;
        return value < o.value;
    }
    std::string to_string() const;
};

struct SecurityIndexResult {
    SecurityIndex index;
    /// Index into basis.modes of the minimizing mode (finite case only).
    std::optional<int> certificate_mode;
};

SecurityIndexResult security_index(const MultiAgentSystem& system,
                                   const SecurityMeasure& measure,
                                   const EigenmodeBasis& basis,
                                   ModeFilter filter = ModeFilter::all,
                                   double nonzero_tol = kNonzeroTol);

/// Appendix-style undetectable attack witness: outputs under
/// (x1_0, attack) coincide with the attack-free outputs from (x2_0 = 0).
struct AttackSynthesis {
    Eigen::VectorXd x1_0; // in the kernel of the secure observability map
    Eigen::VectorXd x2_0; // zero
    std::vector<Eigen::VectorXd> attack; // a(k), k = 0..K-1, stacked over agents
};

AttackSynthesis synthesize_undetectable_attack(const MultiAgentSystem& system,
                                               const SecurityMeasure& measure,
                                               int horizon);

/// True iff H b >= 1 rowwise, i.e. every mode is covered by a secure agent.
bool check_max_resilience(const IncidenceMatrix& H, const std::vector<int>& b);

enum class TuResult { tu, not_tu, unknown };

struct TuOptions {
    /// Exhaustive subdeterminant testing is attempted only up to this many
    /// columns; beyond it (with no structural condition firing) the result
    /// is `unknown`.
    int exhaustive_col_cap = 18;
    /// Secondary guard on the number of subdeterminants actually evaluated.
    std::uint64_t max_subdeterminants = 40'000'000;
};

/// Total unimodularity test: structural sufficient conditions first
/// (consecutive ones, two-nonzero column bipartition), then bounded
/// exhaustive subdeterminant enumeration on deduplicated rows.
TuResult is_totally_unimodular(const Eigen::MatrixXi& M, const TuOptions& opts = {});

struct LpVertex {
    Eigen::VectorXd raw;      // vertex of the relaxation, entries in [0,1]
    std::vector<int> rounded; // verified binary cover
    double cost = 0.0;        // indicator cost of `rounded`
};

/// Minimizes the indicator cost over b in [0,1]^N subject to H b >= 1,
/// returning a vertex. Ties between equal-cost vertices are broken toward
/// lexicographically smaller secure sets. Throws NonIntegralVertex when the
/// vertex is further than 1e-6 from binary, LpInfeasible on zero rows.
LpVertex solve_relaxed_security_lp(const IncidenceMatrix& H, const CostModel& costs);

/// Streams every indicator whose cost fits the budget, in order of
/// increasing cardinality then lexicographic. Requires common costs.
void enumerate_budget_feasible(int N, const CostModel& costs,
                               const std::function<void(const std::vector<int>&)>& sink);
std::vector<std::vector<int>> enumerate_budget_feasible(int N, const CostModel& costs);

struct MaxMinResult {
    std::vector<int> b;
    SecurityIndex alpha;
    std::optional<int> certificate_row; // row of H realizing the min
};

/// Budget-exhausted fallback: over the feasible indicators, maximizes the
/// minimum count of normal agents seeing an uncovered mode.
MaxMinResult maxmin_phi(const IncidenceMatrix& H,
                        const std::vector<std::vector<int>>& feasible);

enum class PlanAlgorithm { bruteforce, efficient };

struct SecurityPlan {
    SecurityMeasure measure = SecurityMeasure::all_normal(1);
    SecurityIndex index;
    double cost = 0.0;
    PlanAlgorithm algorithm = PlanAlgorithm::bruteforce;
    std::optional<int> certificate_mode; // index into the basis used
};

/// Exhaustive two-step search: cheapest subset making the secure pair
/// detectable, otherwise the feasible subset maximizing the security index
/// (ties: lower cost, then lexicographic subset).
SecurityPlan brute_force_plan(const MultiAgentSystem& system, const CostModel& costs,
                              const EigenmodeBasis& basis,
                              ModeFilter filter = ModeFilter::all);

/// LP-relaxation fast path with the enumeration fallback. Equals the brute
/// force plan in index and cost whenever H is totally unimodular and costs
/// are common.
SecurityPlan efficient_plan(const MultiAgentSystem& system, const CostModel& costs,
                            const EigenmodeBasis& basis,
                            ModeFilter filter = ModeFilter::all);

} // namespace secest
