#include "secest/simplex.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace secest {

namespace {

struct Tableau {
    Eigen::MatrixXd T;       // rows x (cols + 1), last column is the rhs
    std::vector<int> basis;  // basic variable per row
    int cols = 0;

    double rhs(int i) const { return T(i, cols); }

    void pivot(int row, int col) {
        T.row(row) /= T(row, col);
        for (int i = 0; i < T.rows(); ++i) {
            if (i == row) continue;
            const double f = T(i, col);
            if (f != 0.0) T.row(i) -= f * T.row(row);
        }
        basis[row] = col;
    }
};

// Reduced cost of column j for objective c: c_j - sum_i c_basis(i) * T(i, j).
double reduced_cost(const Tableau& tab, const Eigen::VectorXd& c, int j) {
    double z = c[j];
    for (int i = 0; i < tab.T.rows(); ++i) {
        const double cb = c[tab.basis[i]];
        if (cb != 0.0) z -= cb * tab.T(i, j);
    }
    return z;
}

// Bland's rule: entering = smallest-index improving column, leaving =
// min-ratio row with ties broken by smallest basic variable index.
void run_simplex(Tableau& tab, const Eigen::VectorXd& primary,
                 const Eigen::VectorXd* tie, int enter_limit, double eps) {
    const long max_iters = 2000L * (tab.T.rows() + tab.cols + 1);
    for (long iter = 0; iter < max_iters; ++iter) {
        int entering = -1;
        for (int j = 0; j < enter_limit; ++j) {
            bool basic = false;
            for (int bi : tab.basis) {
                if (bi == j) {
                    basic = true;
                    break;
                }
            }
            if (basic) continue;
            const double zp = reduced_cost(tab, primary, j);
            if (zp < -eps) {
                entering = j;
                break;
            }
            if (tie != nullptr && zp <= eps && reduced_cost(tab, *tie, j) < -eps) {
                entering = j;
                break;
            }
        }
        if (entering < 0) return; // optimal

        int leaving = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int i = 0; i < tab.T.rows(); ++i) {
            const double a = tab.T(i, entering);
            if (a <= eps) continue;
            const double ratio = tab.rhs(i) / a;
            if (ratio < best_ratio - eps ||
                (ratio < best_ratio + eps &&
                 (leaving < 0 || tab.basis[i] < tab.basis[leaving]))) {
                best_ratio = ratio;
                leaving = i;
            }
        }
        if (leaving < 0) throw SimplexFailure("linear program is unbounded");
        tab.pivot(leaving, entering);
    }
    throw SimplexFailure("simplex did not terminate");
}

} // namespace

SimplexSolution solve_standard_form(const StandardFormLp& lp) {
    const int m = static_cast<int>(lp.A.rows());
    const int n = static_cast<int>(lp.A.cols());
    if (lp.b.size() != m || lp.cost.size() != n) {
        throw DimensionMismatch("inconsistent linear program dimensions");
    }
    if (lp.tie && lp.tie->size() != n) {
        throw DimensionMismatch("tie objective dimension mismatch");
    }

    const double scale = std::max({1.0, lp.A.cwiseAbs().maxCoeff(), lp.b.cwiseAbs().maxCoeff()});
    const double eps = 1e-9 * scale;

    // Phase 1: artificial variable per row, rows oriented so the rhs is
    // nonnegative.
    const int total = n + m;
    Tableau tab;
    tab.cols = total;
    tab.T = Eigen::MatrixXd::Zero(m, total + 1);
    tab.basis.resize(m);
    for (int i = 0; i < m; ++i) {
        const double sign = lp.b[i] < 0.0 ? -1.0 : 1.0;
        tab.T.block(i, 0, 1, n) = sign * lp.A.row(i);
        tab.T(i, n + i) = 1.0;
        tab.T(i, total) = sign * lp.b[i];
        tab.basis[i] = n + i;
    }

    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(total);
    phase1.tail(m).setOnes();
    run_simplex(tab, phase1, nullptr, total, eps);

    double infeasibility = 0.0;
    for (int i = 0; i < m; ++i) {
        if (tab.basis[i] >= n) infeasibility += tab.rhs(i);
    }
    if (infeasibility > 1e-7 * scale) {
        throw LpInfeasible("linear program has no feasible point");
    }

    // Drive leftover zero-valued artificials out of the basis; rows that
    // cannot pivot are redundant constraints.
    std::vector<int> keep;
    for (int i = 0; i < m; ++i) {
        if (tab.basis[i] < n) {
            keep.push_back(i);
            continue;
        }
        int col = -1;
        for (int j = 0; j < n; ++j) {
            if (std::abs(tab.T(i, j)) > eps) {
                col = j;
                break;
            }
        }
        if (col >= 0) {
            tab.pivot(i, col);
            keep.push_back(i);
        }
    }
    if (static_cast<int>(keep.size()) < m) {
        Eigen::MatrixXd reduced(keep.size(), total + 1);
        std::vector<int> basis;
        for (std::size_t r = 0; r < keep.size(); ++r) {
            reduced.row(static_cast<int>(r)) = tab.T.row(keep[r]);
            basis.push_back(tab.basis[keep[r]]);
        }
        tab.T = std::move(reduced);
        tab.basis = std::move(basis);
    }

    // Phase 2: original objective (plus tie-break), artificials locked out.
    Eigen::VectorXd primary = Eigen::VectorXd::Zero(total);
    primary.head(n) = lp.cost;
    Eigen::VectorXd tie_full;
    const Eigen::VectorXd* tie = nullptr;
    if (lp.tie) {
        tie_full = Eigen::VectorXd::Zero(total);
        tie_full.head(n) = *lp.tie;
        tie = &tie_full;
    }
    run_simplex(tab, primary, tie, n, eps);

    SimplexSolution sol;
    sol.x = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < tab.T.rows(); ++i) {
        if (tab.basis[i] < n) sol.x[tab.basis[i]] = tab.rhs(i);
    }
    sol.objective = lp.cost.dot(sol.x);
    return sol;
}

} // namespace secest
