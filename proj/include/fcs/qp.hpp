#pragma once

// Small dense convex QP solver (primal active set) and an exhaustive on/off
// enumerator for semi-continuous variables.
//
//   minimize    1/2 x^T Q x + c^T x
//   subject to  lb <= x <= ub,  A_ineq x <= b_ineq,  A_eq x = b_eq
//
// Q must be symmetric positive semidefinite. Infinite bounds are allowed.

#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace fcs::qp {

/// Every numerical threshold used by the solver and its callers.
struct Tolerances {
  double feasibility = 1e-9;  // absolute, on every constraint
  double kkt = 1e-8;          // scaled KKT residual of an optimal point
  double symmetry = 1e-12;    // relative to max |Q_ij|
  double psd = 1e-9;          // min eigenvalue >= -psd * max(1, max |Q_ij|)
  double objective_tie = 1e-12; // relative, between enumerated patterns
};

inline constexpr Tolerances kTolerances{};

struct Problem {
  Eigen::MatrixXd Q;
  Eigen::VectorXd c;
  Eigen::VectorXd lb, ub;
  Eigen::MatrixXd a_ineq;
  Eigen::VectorXd b_ineq;
  Eigen::MatrixXd a_eq;
  Eigen::VectorXd b_eq;

  /// n variables, no constraints, infinite bounds.
  static Problem unconstrained(Eigen::Index n);

  Eigen::Index size() const { return c.size(); }
  double objective(const Eigen::VectorXd &x) const;
  /// Largest absolute constraint violation at x.
  double max_violation(const Eigen::VectorXd &x) const;
  void add_inequality(const Eigen::RowVectorXd &a, double b);
  void add_equality(const Eigen::RowVectorXd &a, double b);
};

enum class Status { Optimal, Infeasible, Unbounded };

const char *to_string(Status s);

struct Solution {
  Status status = Status::Infeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
  double kkt_residual = 0.0;
  // Lagrange multipliers; ineq/bound multipliers are >= 0 at optimality.
  Eigen::VectorXd mu_ineq, nu_eq, mu_lb, mu_ub;
  int iterations = 0;

  bool optimal() const { return status == Status::Optimal; }
};

/// Thrown for malformed input: inconsistent dimensions, lb > ub, asymmetric
/// or indefinite Q.
class InvalidProblem : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when the enumeration bound is exceeded.
class CapacityError : public std::length_error {
public:
  using std::length_error::length_error;
};

void validate(const Problem &p);

Solution solve_qp(const Problem &p);

/// Scaled KKT residual of (x, multipliers) for p: absolute primal violation,
/// stationarity and dual feasibility relative to the gradient magnitude,
/// complementarity relative to the objective scale.
double kkt_residual(const Problem &p, const Solution &s);

struct OnInterval {
  double lo;
  double hi;
};

/// Per-variable semi-continuity: x_i in {0} u [lo, hi] when set.
struct SemiContinuousSpec {
  std::vector<std::optional<OnInterval>> vars;

  std::size_t count() const;
};

inline constexpr std::size_t kMaxSemiContinuous = 12;

/// Global minimizer over all 2^k on/off patterns. Among patterns with equal
/// objective the one with more variables on wins, then the lexicographically
/// smallest pattern (variable order, off < on).
struct PatternResult {
  Solution solution;
  std::vector<bool> on; // per semi-continuous variable, in variable order
};

PatternResult solve_semicontinuous(const Problem &p, const SemiContinuousSpec &spec);

/// The problem with one on/off pattern applied, or nullopt when the pattern
/// empties some variable's bounds.
std::optional<Problem> apply_pattern(const Problem &p, const SemiContinuousSpec &spec,
                                     const std::vector<bool> &on);

} // namespace fcs::qp
