#include "secest/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

namespace secest {

namespace {

std::uint64_t splitmix(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double uniform01(std::uint64_t& state) {
    return static_cast<double>(splitmix(state) >> 11) * 0x1.0p-53;
}

bool attack_is_blocked(const SecurityMeasure& measure, const AttackSpec& spec) {
    return measure.is_secure(spec.target);
}

} // namespace

Eigen::VectorXd inject_attack(const AttackSpec& spec, const Eigen::VectorXd& x,
                              const MultiAgentSystem& system, int k) {
    if (spec.target < 0 || spec.target >= system.N()) {
        throw DimensionMismatch("attack target out of range");
    }
    const int pi = system.p(spec.target);
    if (!spec.active(k)) return Eigen::VectorXd::Zero(pi);
    switch (spec.kind) {
        case AttackSpec::Kind::zeroing:
            return -(system.C(spec.target) * x);
        case AttackSpec::Kind::bias:
            if (spec.bias.size() != pi) {
                throw DimensionMismatch("bias attack dimension mismatch");
            }
            return spec.bias;
        case AttackSpec::Kind::custom: {
            const int idx = k - spec.k_start;
            if (idx < 0 || idx >= static_cast<int>(spec.sequence.size())) {
                return Eigen::VectorXd::Zero(pi);
            }
            if (spec.sequence[idx].size() != pi) {
                throw DimensionMismatch("custom attack dimension mismatch");
            }
            return spec.sequence[idx];
        }
    }
    return Eigen::VectorXd::Zero(pi);
}

void ScenarioConfig::validate() const {
    if (horizon < 1) throw ConfigError("horizon must be at least 1");
    if (delta_w < 0.0 || delta_v < 0.0) throw ConfigError("noise bounds must be nonnegative");
    costs.validate(system.N());
    if (phi && phi->N() != system.N()) {
        throw ConfigError("security measure length must equal agent count");
    }
    if (Kp.rows() != system.m() || Kp.cols() != system.n()) {
        throw ConfigError("feedback gain must be m x n");
    }
    if (x0.rows() != system.n() || x0.cols() != system.N()) {
        throw ConfigError("initial states must be n x N");
    }
    if (xi_hat0.size() != 0 &&
        (xi_hat0.rows() != static_cast<Eigen::Index>(system.n()) * system.N() ||
         xi_hat0.cols() != system.N())) {
        throw ConfigError("initial estimates must be nN x N");
    }
    for (const auto& a : attacks) {
        if (a.target < 0 || a.target >= system.N()) {
            throw ConfigError("attack target out of range");
        }
        if (a.k_end < a.k_start) throw ConfigError("attack window is empty");
    }
    if (desired.mode == DesiredStateSpec::Mode::autonomous &&
        (desired.x_star0.rows() != system.n() || desired.x_star0.cols() != system.N())) {
        throw ConfigError("desired initial states must be n x N");
    }
    if (L && *L < 1) throw ConfigError("consensus round count must be at least 1");
    if (omega && !(*omega > 0.0)) throw ConfigError("consensus gain must be positive");
}

ScenarioConfig build_platoon(int N, double T, double delta_w, double delta_v, CostModel costs) {
    if (N < 2) throw ConfigError("a platoon needs at least two vehicles");
    const int n = 2;

    Eigen::MatrixXd A(2, 2);
    A << 1.0, T, 0.0, 1.0;
    Eigen::MatrixXd B(2, 1);
    B << 0.0, T;

    Eigen::MatrixXd adjacency = Eigen::MatrixXd::Zero(N, N);
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) {
            const int d = std::abs(i - j);
            if (d > 0 && d <= 2) adjacency(i, j) = 1.0;
        }
    }

    std::vector<Eigen::MatrixXd> C;
    for (int i = 0; i < N; ++i) {
        if (i == 0) {
            Eigen::MatrixXd Ci = Eigen::MatrixXd::Zero(2, n * N);
            Ci.block(0, 0, 2, 2).setIdentity();
            C.push_back(std::move(Ci));
        } else {
            Eigen::MatrixXd Ci = Eigen::MatrixXd::Zero(4, n * N);
            Ci.block(0, i * n, 2, 2).setIdentity();
            Ci.block(2, i * n, 2, 2).setIdentity();
            Ci.block(2, (i - 1) * n, 2, 2) = -Eigen::MatrixXd::Identity(2, 2);
            C.push_back(std::move(Ci));
        }
    }

    ScenarioConfig config;
    config.system = lift_system(make_lti(A, B), CommGraph::from_adjacency(adjacency), C);
    config.costs = std::move(costs);
    config.sample_time = T;
    config.delta_w = delta_w;
    config.delta_v = delta_v;
    config.Kp = Eigen::MatrixXd(1, 2);
    config.Kp << 29.1604, 15.2590;
    config.L = 5; // the round-count certificate is infeasible for this C structure
    config.desired.mode = DesiredStateSpec::Mode::platoon;

    config.x0 = Eigen::MatrixXd::Zero(n, N);
    const double pos0[5] = {200.0, 100.0, 50.0, 20.0, 0.0};
    const double vel0[5] = {10.0, 8.0, 6.0, 4.0, 2.0};
    for (int i = 0; i < N; ++i) {
        if (i < 5) {
            config.x0(0, i) = pos0[i];
            config.x0(1, i) = vel0[i];
        } else {
            config.x0(0, i) = -20.0 * (i - 4);
            config.x0(1, i) = 2.0;
        }
    }
    config.xi_hat0 = Eigen::MatrixXd::Zero(n * N, N);
    return config;
}

Eigen::VectorXd gen_noise(std::uint64_t seed, NoiseStream stream, int agent, int k, double bound,
                          int dim) {
    if (bound < 0.0) throw ConfigError("noise bound must be nonnegative");
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
    if (bound == 0.0 || dim == 0) return v;

    std::uint64_t state = seed;
    (void)splitmix(state);
    state ^= static_cast<std::uint64_t>(stream) * 0xd6e8feb86659fd93ULL;
    (void)splitmix(state);
    state ^= (static_cast<std::uint64_t>(agent) + 1) * 0xa0761d6478bd642fULL;
    (void)splitmix(state);
    state ^= (static_cast<std::uint64_t>(k) + 1) * 0xe7037ed1a0b428dbULL;
    (void)splitmix(state);

    // Gaussian direction via Box-Muller, then a uniform radius.
    for (int i = 0; i < dim; i += 2) {
        const double u1 = 1.0 - uniform01(state);
        const double u2 = uniform01(state);
        const double r = std::sqrt(-2.0 * std::log(u1));
        v[i] = r * std::cos(2.0 * M_PI * u2);
        if (i + 1 < dim) v[i + 1] = r * std::sin(2.0 * M_PI * u2);
    }
    double norm = v.norm();
    if (norm < 1e-300) {
        v.setZero();
        v[0] = 1.0;
        norm = 1.0;
    }
    const double radius = uniform01(state) * bound;
    v *= radius / norm;
    if (v.norm() > bound) v *= bound / v.norm();
    return v;
}

SecurityPlan plan_security(const MultiAgentSystem& system, const CostModel& costs,
                           const EigenmodeBasis& basis, ModeFilter filter,
                           PlanAlgorithm algorithm) {
    if (algorithm == PlanAlgorithm::bruteforce) {
        return brute_force_plan(system, costs, basis, filter);
    }
    try {
        return efficient_plan(system, costs, basis, filter);
    } catch (const NonIntegralVertex&) {
        return brute_force_plan(system, costs, basis, filter);
    }
}

TailMetrics compute_metrics(const std::vector<TraceRecord>& trace, int agent_count) {
    if (trace.empty()) throw EmptyTrace("cannot summarize an empty trace");
    if (agent_count < 1 || trace.size() % static_cast<std::size_t>(agent_count) != 0) {
        throw DimensionMismatch("trace length is not a multiple of the agent count");
    }
    const int steps = static_cast<int>(trace.size()) / agent_count;
    int tail = std::max(static_cast<int>(std::ceil(0.2 * steps)), std::min(200, steps));
    tail = std::min(tail, steps);

    TailMetrics out;
    out.tail_start = steps - tail;
    bool first = true;
    for (int s = out.tail_start; s < steps; ++s) {
        double eq7 = 0.0;
        for (int a = 0; a < agent_count; ++a) {
            const TraceRecord& rec = trace[static_cast<std::size_t>(s) * agent_count + a];
            eq7 = rec.metric; // same value on every agent row of the step
            out.max_est_err = std::max(out.max_est_err, rec.err_est);
            out.max_ctrl_err = std::max(out.max_ctrl_err, rec.err_ctrl);
        }
        out.eq7_mean += eq7;
        out.eq7_max = first ? eq7 : std::max(out.eq7_max, eq7);
        first = false;
    }
    out.eq7_mean /= static_cast<double>(tail);
    return out;
}

RunResult run_scenario(const ScenarioConfig& config) {
    config.validate();
    const MultiAgentSystem& sys = config.system;
    const int N = sys.N();
    const int n = sys.n();
    const int m = sys.m();
    const int d = n * N;

    const EigenmodeBasis basis = eigenmode_basis(sys.model(), N, config.basis);

    RunResult result;
    RunSummary& summary = result.summary;

    if (config.phi) {
        const double cost = total_cost(*config.phi, config.costs);
        if (cost > config.costs.budget + 1e-9 * std::max(1.0, std::abs(config.costs.budget))) {
            throw PlanInfeasible("explicit security measure exceeds the budget");
        }
        SecurityPlan plan;
        plan.measure = *config.phi;
        plan.cost = cost;
        plan.algorithm = config.algorithm;
        const SecurityIndexResult idx = security_index(sys, plan.measure, basis, config.filter);
        plan.index = idx.index;
        plan.certificate_mode = idx.certificate_mode;
        summary.plan = plan;
    } else {
        summary.plan = plan_security(sys, config.costs, basis, config.filter, config.algorithm);
    }
    const SecurityMeasure& measure = summary.plan.measure;
    const std::vector<int> secure = measure.secure_set();

    EstimatorParams params;
    params.omega = config.omega ? *config.omega : design_omega(sys.graph());
    params.Kp = config.Kp;
    params.gamma_perp = (sys.graph().lambda_max() - sys.graph().lambda2()) /
                        (sys.graph().lambda_max() + sys.graph().lambda2());
    if (secure.empty()) {
        params.theta0 = 1.0;
        params.nu0 = 0.0;
    } else {
        params.theta0 = secure_update_norm(sys, secure);
        params.nu0 = secure_output_norm(sys, secure);
    }
    ConsensusRounds rounds;
    if (secure.empty()) {
        rounds.kind = ConsensusRounds::Kind::infeasible;
    } else {
        rounds = min_consensus_rounds(sys, secure);
    }
    if (config.L) {
        params.L = *config.L;
    } else if (rounds.kind == ConsensusRounds::Kind::infeasible) {
        throw HypothesisViolated("no certified round count; set L explicitly in the scenario");
    } else {
        params.L = rounds.L;
    }
    summary.params = params;

    summary.theta_hypothesis = params.theta0 * operator_norm(sys.model().A) < 1.0;
    summary.rounds_hypothesis =
        rounds.kind == ConsensusRounds::Kind::any_l ||
        (rounds.kind == ConsensusRounds::Kind::finite && params.L > rounds.bound - 1e-9);
    summary.gain_hypothesis = check_gain(sys.model(), params.Kp).contractive;

    const ExtendedErrorSystem ext = build_extended_error_system(sys, measure, params);
    summary.sharp_norm = ext.sharp_norm;
    summary.perp_norm = ext.perp_norm;
    summary.projected_stable = ext.stable;

    if (!secure.empty()) {
        try {
            summary.est_bound =
                estimation_error_bound(sys, secure, params, config.delta_w, config.delta_v);
            summary.ctrl_bound =
                control_error_bound(sys.model(), params.Kp, *summary.est_bound, config.delta_w);
        } catch (const InfeasibleError&) {
            // hypotheses already reported in the summary
        }
    }

    // Blocked-attack log: attacks aimed at secure agents never reach the
    // measurement.
    std::map<int, int> blocked;
    for (const auto& spec : config.attacks) {
        if (!attack_is_blocked(measure, spec)) continue;
        const int last = std::min(spec.k_end, config.horizon);
        const int first = std::max(spec.k_start, 1);
        if (last >= first) blocked[spec.target] += last - first + 1;
    }
    for (const auto& [agent, steps] : blocked) {
        summary.blocked_attacks.push_back({agent, steps});
    }

    // State assembly.
    Eigen::VectorXd x(d);
    for (int i = 0; i < N; ++i) x.segment(i * n, n) = config.x0.col(i);
    Eigen::MatrixXd xi0 = config.xi_hat0.size() == 0 ? Eigen::MatrixXd::Zero(d, N).eval()
                                                     : config.xi_hat0;
    std::vector<AgentEstimatorState> states = initial_states(sys, xi0);

    Eigen::MatrixXd x_star(n, N);
    auto desired_states = [&](int k) {
        Eigen::MatrixXd xs(n, N);
        if (config.desired.mode == DesiredStateSpec::Mode::platoon) {
            xs(0, 0) = config.desired.leader_position +
                       config.desired.leader_speed * config.sample_time * k;
            xs(1, 0) = config.desired.leader_speed;
            for (int i = 1; i < N; ++i) {
                const Eigen::VectorXd front = own_estimate(states[i - 1], i - 1, n);
                xs(0, i) = front[0] - config.desired.gap;
                xs(1, i) = front[1];
            }
        } else {
            if (k == 0) {
                xs = config.desired.x_star0;
            } else {
                xs = sys.model().A * x_star;
            }
        }
        return xs;
    };

    auto record_step = [&](int k, const Eigen::MatrixXd& u_cols,
                           const std::vector<bool>& attacked) {
        double eq7 = 0.0;
        std::vector<TraceRecord> recs(N);
        for (int i = 0; i < N; ++i) {
            TraceRecord rec;
            rec.k = k;
            rec.agent = i;
            rec.x = x.segment(i * n, n);
            rec.x_hat = own_estimate(states[i], i, n);
            rec.x_star = x_star.col(i);
            rec.u = u_cols.col(i);
            rec.err_est = (rec.x_hat - rec.x).norm();
            rec.err_ctrl = (rec.x - rec.x_star).norm();
            rec.attack_active = attacked[i];
            eq7 += rec.err_est + rec.err_ctrl;
            recs[i] = std::move(rec);
        }
        eq7 /= static_cast<double>(N);
        for (auto& rec : recs) {
            rec.metric = eq7;
            result.trace.push_back(std::move(rec));
        }
    };

    x_star = desired_states(0);
    Eigen::MatrixXd u_cols(m, N);
    std::vector<Eigen::VectorXd> local_inputs(N);
    for (int i = 0; i < N; ++i) {
        u_cols.col(i) = control_input(own_estimate(states[i], i, n), x_star.col(i), params.Kp);
        local_inputs[i] = u_cols.col(i);
    }
    record_step(0, u_cols, std::vector<bool>(N, false));

    for (int k = 1; k <= config.horizon; ++k) {
        const Eigen::VectorXd fused = input_fusion(local_inputs, sys.graph());

        Eigen::VectorXd w(d);
        for (int i = 0; i < N; ++i) {
            w.segment(i * n, n) =
                gen_noise(config.seed, NoiseStream::process, i, k - 1, config.delta_w, n);
        }
        x = sys.lifted_state_matrix() * x + sys.lifted_input_matrix() * fused + w;

        std::vector<bool> attacked(N, false);
        std::vector<Eigen::VectorXd> y(N);
        for (int i = 0; i < N; ++i) {
            y[i] = sys.C(i) * x +
                   gen_noise(config.seed, NoiseStream::measurement, i, k, config.delta_v,
                             sys.p(i));
        }
        for (const auto& spec : config.attacks) {
            if (!spec.active(k) || attack_is_blocked(measure, spec)) continue;
            const Eigen::VectorXd a = inject_attack(spec, x, sys, k);
            if (a.size() == sys.p(spec.target)) {
                y[spec.target] += a;
                attacked[spec.target] = true;
            }
        }
        if (config.record_outputs) {
            Eigen::VectorXd stacked(sys.p_total());
            for (int i = 0; i < N; ++i) stacked.segment(sys.p_offset(i), sys.p(i)) = y[i];
            result.outputs.push_back(std::move(stacked));
        }

        states = step_estimator(states, sys, measure, params, fused, y);
        x_star = desired_states(k);
        for (int i = 0; i < N; ++i) {
            u_cols.col(i) = control_input(own_estimate(states[i], i, n), x_star.col(i), params.Kp);
            local_inputs[i] = u_cols.col(i);
        }
        record_step(k, u_cols, attacked);
    }

    const TailMetrics tail = compute_metrics(result.trace, N);
    summary.eq7_tail_mean = tail.eq7_mean;
    summary.eq7_tail_max = tail.eq7_max;
    summary.max_est_err_tail = tail.max_est_err;
    summary.max_ctrl_err_tail = tail.max_ctrl_err;
    summary.tail_start = tail.tail_start;
    if (summary.est_bound) {
        summary.est_bound_violated = tail.max_est_err > *summary.est_bound + 1e-6;
    }
    if (summary.ctrl_bound) {
        summary.ctrl_bound_violated = tail.max_ctrl_err > *summary.ctrl_bound + 1e-6;
    }
    return result;
}

void write_trace_csv(const std::string& path, const RunResult& result,
                     const ScenarioConfig& config) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open trace file for writing: " + path);
    const int n = config.system.n();
    const int m = config.system.m();

    out << "k,agent";
    for (int j = 1; j <= n; ++j) out << ",x" << j;
    for (int j = 1; j <= n; ++j) out << ",xhat" << j;
    for (int j = 1; j <= n; ++j) out << ",xstar" << j;
    for (int j = 1; j <= m; ++j) out << ",u" << j;
    out << ",err_est,err_ctrl,attack_active,metric\n";

    char buf[32];
    auto emit = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << ',' << buf;
    };
    for (const auto& rec : result.trace) {
        out << rec.k << ',' << (rec.agent + 1);
        for (int j = 0; j < n; ++j) emit(rec.x[j]);
        for (int j = 0; j < n; ++j) emit(rec.x_hat[j]);
        for (int j = 0; j < n; ++j) emit(rec.x_star[j]);
        for (int j = 0; j < m; ++j) emit(rec.u[j]);
        emit(rec.err_est);
        emit(rec.err_ctrl);
        out << ',' << (rec.attack_active ? 1 : 0);
        emit(rec.metric);
        out << '\n';
    }
}

} // namespace secest
