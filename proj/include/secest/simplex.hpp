#pragma once

#include <optional>

#include <Eigen/Dense>

#include "secest/errors.hpp"

namespace secest {

/// Standard-form linear program: minimize cost'x subject to A x = b, x >= 0.
/// An optional secondary objective breaks ties between optimal vertices:
/// among cost-minimal solutions the one minimizing tie'x is preferred.
struct StandardFormLp {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::VectorXd cost;
    std::optional<Eigen::VectorXd> tie;
};

struct SimplexSolution {
    Eigen::VectorXd x; // basic feasible solution (a vertex)
    double objective = 0.0;
};

/// Two-phase primal simplex with Bland's rule. Throws LpInfeasible when no
/// feasible point exists and SimplexFailure on unbounded or non-terminating
/// problems.
SimplexSolution solve_standard_form(const StandardFormLp& lp);

} // namespace secest
