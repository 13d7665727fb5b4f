#include "secest/config.hpp"

#include <fstream>
#include <limits>

namespace secest {

using nlohmann::json;

namespace {

const json& require(const json& doc, const std::string& key) {
    if (!doc.contains(key)) throw ConfigError("missing required field: " + key);
    return doc.at(key);
}

Eigen::VectorXd vector_from_json(const json& arr, const std::string& what) {
    if (!arr.is_array()) throw ConfigError(what + " must be an array");
    Eigen::VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number()) throw ConfigError(what + " must contain numbers");
        v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    }
    return v;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

CostModel costs_from_json(const json& doc, int N) {
    CostModel costs;
    const json& c = require(doc, "costs");
    auto read_cost = [&](const char* key) {
        const json& entry = require(c, key);
        if (entry.is_number()) {
            return Eigen::VectorXd::Constant(N, entry.get<double>()).eval();
        }
        Eigen::VectorXd v = vector_from_json(entry, key);
        if (v.size() != N) throw ConfigError(std::string(key) + " must have one entry per agent");
        return v;
    };
    costs.c_normal = read_cost("c_normal");
    costs.c_secure = read_cost("c_secure");
    costs.budget = require(c, "budget").get<double>();
    costs.validate(N);
    return costs;
}

AttackSpec attack_from_json(const json& a, const MultiAgentSystem& system) {
    AttackSpec spec;
    spec.target = require(a, "target").get<int>() - 1; // 1-based in documents
    if (spec.target < 0 || spec.target >= system.N()) {
        throw ConfigError("attack target out of range");
    }
    const std::string kind = a.value("kind", "zeroing");
    if (a.contains("window")) {
        const json& w = a.at("window");
        if (!w.is_array() || w.size() != 2) throw ConfigError("attack window must be [start, end]");
        spec.k_start = w[0].get<int>();
        spec.k_end = w[1].get<int>();
    }
    if (kind == "zeroing") {
        spec.kind = AttackSpec::Kind::zeroing;
    } else if (kind == "bias") {
        spec.kind = AttackSpec::Kind::bias;
        spec.bias = vector_from_json(require(a, "bias"), "bias");
        if (spec.bias.size() != system.p(spec.target)) {
            throw ConfigError("bias dimension must match the target's measurement count");
        }
    } else if (kind == "custom") {
        spec.kind = AttackSpec::Kind::custom;
        if (a.contains("file")) {
            std::ifstream in(a.at("file").get<std::string>());
            if (!in) throw ConfigError("cannot open attack file");
            json doc;
            in >> doc;
            const auto specs = attack_specs_from_json(doc, system);
            bool found = false;
            for (const auto& s : specs) {
                if (s.target == spec.target) {
                    spec.sequence = s.sequence;
                    spec.k_start = s.k_start;
                    spec.k_end = s.k_end;
                    found = true;
                    break;
                }
            }
            if (!found) throw ConfigError("attack file holds no sequence for the target agent");
        } else {
            const json& seq = require(a, "a");
            if (!seq.is_array()) throw ConfigError("custom attack sequence must be an array");
            for (const auto& row : seq) {
                spec.sequence.push_back(vector_from_json(row, "attack sample"));
            }
            spec.k_end = spec.k_start + static_cast<int>(spec.sequence.size()) - 1;
        }
    } else {
        throw ConfigError("unknown attack kind: " + kind);
    }
    return spec;
}

} // namespace

Eigen::MatrixXd matrix_from_json(const json& rows, const std::string& what) {
    if (!rows.is_array() || rows.empty()) throw ConfigError(what + " must be a nonempty array");
    const std::size_t cols = rows[0].is_array() ? rows[0].size() : 0;
    if (cols == 0) throw ConfigError(what + " must be an array of rows");
    Eigen::MatrixXd M(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!rows[i].is_array() || rows[i].size() != cols) {
            throw ConfigError(what + " rows must have equal length");
        }
        for (std::size_t j = 0; j < cols; ++j) {
            if (!rows[i][j].is_number()) throw ConfigError(what + " must contain numbers");
            M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rows[i][j].get<double>();
        }
    }
    return M;
}

json matrix_to_json(const Eigen::MatrixXd& M) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

ScenarioConfig load_scenario(const json& doc) {
    ScenarioConfig config;
    double default_dw = 0.0, default_dv = 0.0;
    if (doc.contains("noise")) {
        default_dw = doc.at("noise").value("delta_w", 0.0);
        default_dv = doc.at("noise").value("delta_v", 0.0);
    }

    if (doc.contains("platoon")) {
        const json& p = doc.at("platoon");
        const int N = require(p, "N").get<int>();
        const double T = p.value("T", 0.01);
        CostModel costs = CostModel::common(N, 1.0, 30.0, 30.0 * N);
        if (doc.contains("costs")) costs = costs_from_json(doc, N);
        config = build_platoon(N, T, default_dw, default_dv, costs);
        if (doc.contains("x0")) {
            config.x0 = matrix_from_json(doc.at("x0"), "x0").transpose();
        }
    } else {
        const Eigen::MatrixXd A = matrix_from_json(require(doc, "A"), "A");
        const Eigen::MatrixXd B = matrix_from_json(require(doc, "B"), "B");
        const int N = require(doc, "N").get<int>();
        const Eigen::MatrixXd adjacency =
            matrix_from_json(require(doc, "adjacency"), "adjacency");
        if (adjacency.rows() != N) throw ConfigError("adjacency size must match N");
        const json& Cs = require(doc, "C");
        if (!Cs.is_array() || static_cast<int>(Cs.size()) != N) {
            throw ConfigError("C must list one measurement matrix per agent");
        }
        std::vector<Eigen::MatrixXd> C;
        for (const auto& Ci : Cs) C.push_back(matrix_from_json(Ci, "C_i"));
        config.system = lift_system(make_lti(A, B), CommGraph::from_adjacency(adjacency), C);
        config.costs = costs_from_json(doc, N);
        config.delta_w = default_dw;
        config.delta_v = default_dv;
        config.Kp = Eigen::MatrixXd::Zero(config.system.m(), config.system.n());
        if (doc.contains("x0")) {
            config.x0 = matrix_from_json(doc.at("x0"), "x0").transpose();
        } else {
            config.x0 = Eigen::MatrixXd::Zero(config.system.n(), N);
        }
        config.desired.x_star0 = Eigen::MatrixXd::Zero(config.system.n(), N);
    }

    const int N = config.system.N();
    if (doc.contains("noise")) {
        config.delta_w = default_dw;
        config.delta_v = default_dv;
    }
    if (doc.contains("phi")) {
        SecurityMeasure phi = SecurityMeasure::from_string(doc.at("phi").get<std::string>());
        if (phi.N() != N) throw ConfigError("phi length must equal agent count");
        config.phi = phi;
    }
    if (doc.contains("algorithm")) {
        const std::string a = doc.at("algorithm").get<std::string>();
        if (a == "bruteforce") {
            config.algorithm = PlanAlgorithm::bruteforce;
        } else if (a == "efficient") {
            config.algorithm = PlanAlgorithm::efficient;
        } else {
            throw ConfigError("algorithm must be bruteforce or efficient");
        }
    }
    if (doc.contains("estimator")) {
        const json& e = doc.at("estimator");
        if (e.contains("omega") && !(e.at("omega").is_string())) {
            config.omega = e.at("omega").get<double>();
        }
        if (e.contains("L") && !(e.at("L").is_string())) config.L = e.at("L").get<int>();
        if (e.contains("L") && e.at("L").is_string() && e.at("L").get<std::string>() == "auto") {
            config.L.reset();
        }
        if (e.contains("Kp")) config.Kp = matrix_from_json(e.at("Kp"), "Kp");
    }
    if (doc.contains("horizon")) config.horizon = doc.at("horizon").get<int>();
    if (doc.contains("seed")) config.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("attacks")) {
        for (const auto& a : doc.at("attacks")) {
            config.attacks.push_back(attack_from_json(a, config.system));
        }
    }
    if (doc.contains("desired")) {
        const json& ds = doc.at("desired");
        const std::string mode = ds.value("mode", "autonomous");
        if (mode == "platoon") {
            config.desired.mode = DesiredStateSpec::Mode::platoon;
            config.desired.leader_position = ds.value("leader_position", 200.0);
            config.desired.leader_speed = ds.value("leader_speed", 15.0);
            config.desired.gap = ds.value("gap", 20.0);
        } else if (mode == "autonomous") {
            config.desired.mode = DesiredStateSpec::Mode::autonomous;
            if (ds.contains("x_star0")) {
                config.desired.x_star0 =
                    matrix_from_json(ds.at("x_star0"), "x_star0").transpose();
            } else if (config.desired.x_star0.size() == 0) {
                config.desired.x_star0 = Eigen::MatrixXd::Zero(config.system.n(), N);
            }
        } else {
            throw ConfigError("desired mode must be platoon or autonomous");
        }
    }
    if (doc.contains("xi_hat0")) {
        config.xi_hat0 = matrix_from_json(doc.at("xi_hat0"), "xi_hat0").transpose();
    }
    if (doc.contains("mode_filter")) {
        const std::string f = doc.at("mode_filter").get<std::string>();
        if (f == "all") {
            config.filter = ModeFilter::all;
        } else if (f == "unstable") {
            config.filter = ModeFilter::unstable;
        } else {
            throw ConfigError("mode_filter must be all or unstable");
        }
    }
    if (doc.contains("basis")) {
        const std::string b = doc.at("basis").get<std::string>();
        if (b == "jordan") {
            config.basis = BasisKind::jordan;
        } else if (b == "eigen") {
            config.basis = BasisKind::eigen;
        } else {
            throw ConfigError("basis must be jordan or eigen");
        }
    }
    config.validate();
    return config;
}

ScenarioConfig load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return load_scenario(doc);
}

json plan_to_json(const SecurityPlan& plan, const EigenmodeBasis& basis) {
    json out;
    json phi = json::array();
    for (int i = 0; i < plan.measure.N(); ++i) {
        phi.push_back(plan.measure.is_secure(i) ? "S" : "N");
    }
    out["phi"] = std::move(phi);
    if (plan.index.is_infinite) {
        out["index"] = "inf";
    } else {
        out["index"] = plan.index.value;
    }
    out["cost"] = plan.cost;
    out["algorithm"] = plan.algorithm == PlanAlgorithm::bruteforce ? "bruteforce" : "efficient";
    if (plan.certificate_mode && *plan.certificate_mode < static_cast<int>(basis.modes.size())) {
        const Eigenmode& mode = basis.modes[*plan.certificate_mode];
        json cert;
        cert["agent"] = mode.agent + 1;
        cert["eigenvalue"] = {mode.eigenvalue.real(), mode.eigenvalue.imag()};
        json vec = json::array();
        for (Eigen::Index i = 0; i < mode.vector.size(); ++i) {
            vec.push_back({mode.vector[i].real(), mode.vector[i].imag()});
        }
        cert["vector"] = std::move(vec);
        out["certificate_mode"] = std::move(cert);
    } else {
        out["certificate_mode"] = nullptr;
    }
    return out;
}

DesignReport design_report(const ScenarioConfig& config, const SecurityMeasure& measure) {
    DesignReport report;
    const MultiAgentSystem& sys = config.system;
    const std::vector<int> secure = measure.secure_set();

    report.omega = design_omega(sys.graph());
    report.params.omega = config.omega ? *config.omega : report.omega;
    report.params.Kp = config.Kp;
    report.params.gamma_perp = (sys.graph().lambda_max() - sys.graph().lambda2()) /
                               (sys.graph().lambda_max() + sys.graph().lambda2());
    if (secure.empty()) {
        report.params.theta0 = 1.0;
        report.params.nu0 = 0.0;
        report.rounds.kind = ConsensusRounds::Kind::infeasible;
    } else {
        report.params.theta0 = secure_update_norm(sys, secure);
        report.params.nu0 = secure_output_norm(sys, secure);
        report.rounds = min_consensus_rounds(sys, secure);
    }
    if (config.L) {
        report.params.L = *config.L;
    } else if (report.rounds.kind != ConsensusRounds::Kind::infeasible) {
        report.params.L = report.rounds.L;
    }
    report.theta_norm_product = report.params.theta0 * operator_norm(sys.model().A);
    report.gain = check_gain(sys.model(), config.Kp);

    if (!secure.empty()) {
        try {
            report.est_bound = estimation_error_bound(sys, secure, report.params, config.delta_w,
                                                      config.delta_v);
            report.ctrl_bound = control_error_bound(sys.model(), config.Kp, *report.est_bound,
                                                    config.delta_w);
        } catch (const InfeasibleError&) {
        }
    }

    const ExtendedErrorSystem ext = build_extended_error_system(sys, measure, report.params);
    report.sharp_norm = ext.sharp_norm;
    report.perp_norm = ext.perp_norm;
    report.projected_stable = ext.stable;
    return report;
}

json design_report_to_json(const DesignReport& report) {
    json out;
    out["omega"] = report.omega;
    switch (report.rounds.kind) {
        case ConsensusRounds::Kind::any_l:
            out["L_min"] = "any";
            break;
        case ConsensusRounds::Kind::finite:
            out["L_min"] = report.rounds.L;
            break;
        case ConsensusRounds::Kind::infeasible:
            out["L_min"] = "infeasible";
            break;
    }
    out["L"] = report.params.L;
    out["theta0"] = report.params.theta0;
    out["nu0"] = report.params.nu0;
    out["gamma_perp"] = report.params.gamma_perp;
    out["theta0_normA"] = report.theta_norm_product;
    out["bounds"] = {{"estimation", report.est_bound ? json(*report.est_bound) : json(nullptr)},
                     {"control", report.ctrl_bound ? json(*report.ctrl_bound) : json(nullptr)}};
    out["hypotheses"] = {{"theta0_normA_lt_1", report.theta_norm_product < 1.0},
                         {"gain_lt_1", report.gain.contractive},
                         {"gain_norm", report.gain.norm},
                         {"projected_sharp_norm", report.sharp_norm},
                         {"projected_perp_norm", report.perp_norm},
                         {"projected_stable", report.projected_stable}};
    return out;
}

json summary_to_json(const RunSummary& summary, const EigenmodeBasis& basis) {
    json out;
    out["eq7_tail"] = summary.eq7_tail_mean;
    out["eq7_tail_max"] = summary.eq7_tail_max;
    out["max_est_err_tail"] = summary.max_est_err_tail;
    out["max_ctrl_err_tail"] = summary.max_ctrl_err_tail;
    out["tail_start"] = summary.tail_start;
    out["bounds"] = {
        {"estimation", summary.est_bound ? json(*summary.est_bound) : json(nullptr)},
        {"control", summary.ctrl_bound ? json(*summary.ctrl_bound) : json(nullptr)},
        {"estimation_violated", summary.est_bound_violated},
        {"control_violated", summary.ctrl_bound_violated}};
    out["hypotheses"] = {{"theta0_normA_lt_1", summary.theta_hypothesis},
                         {"rounds_certified", summary.rounds_hypothesis},
                         {"gain_lt_1", summary.gain_hypothesis},
                         {"projected_sharp_norm", summary.sharp_norm},
                         {"projected_perp_norm", summary.perp_norm},
                         {"projected_stable", summary.projected_stable}};
    out["plan"] = plan_to_json(summary.plan, basis);
    out["estimator"] = {{"omega", summary.params.omega},
                        {"L", summary.params.L},
                        {"theta0", summary.params.theta0},
                        {"nu0", summary.params.nu0},
                        {"gamma_perp", summary.params.gamma_perp}};
    json blocked = json::array();
    for (const auto& b : summary.blocked_attacks) {
        blocked.push_back({{"agent", b.agent + 1}, {"steps", b.steps}});
    }
    out["blocked_attacks"] = std::move(blocked);
    return out;
}

json attack_synthesis_to_json(const AttackSynthesis& synth, const MultiAgentSystem& system,
                              const SecurityMeasure& measure, int horizon) {
    json out;
    out["x1_0"] = vector_to_json(synth.x1_0);
    out["x2_0"] = vector_to_json(synth.x2_0);
    out["horizon"] = horizon;
    json agents = json::object();
    for (int i = 0; i < system.N(); ++i) {
        if (measure.is_secure(i)) continue;
        json seq = json::array();
        bool nonzero = false;
        for (const auto& a : synth.attack) {
            const Eigen::VectorXd block = a.segment(system.p_offset(i), system.p(i));
            if (block.norm() > 1e-12) nonzero = true;
            seq.push_back(vector_to_json(block));
        }
        if (nonzero) agents[std::to_string(i + 1)] = std::move(seq);
    }
    out["agents"] = std::move(agents);
    return out;
}

std::vector<AttackSpec> attack_specs_from_json(const json& doc, const MultiAgentSystem& system) {
    std::vector<AttackSpec> specs;
    const json& agents = require(doc, "agents");
    for (auto it = agents.begin(); it != agents.end(); ++it) {
        AttackSpec spec;
        spec.target = std::stoi(it.key()) - 1;
        if (spec.target < 0 || spec.target >= system.N()) {
            throw ConfigError("attack file target out of range");
        }
        spec.kind = AttackSpec::Kind::custom;
        spec.k_start = 0;
        for (const auto& row : it.value()) {
            spec.sequence.push_back(vector_from_json(row, "attack sample"));
        }
        spec.k_end = spec.k_start + static_cast<int>(spec.sequence.size()) - 1;
        specs.push_back(std::move(spec));
    }
    return specs;
}

} // namespace secest
