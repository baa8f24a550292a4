#include "fcs/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fcs::qp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowKind { Eq, FixedVar, Ineq, Lower, Upper };

// Every constraint as a row a^T x (<= | =) b.
struct Row {
  Eigen::VectorXd a;
  double b;
  RowKind kind;
  Eigen::Index ref; // row of a_ineq / a_eq, or variable index for bounds

  bool equality() const { return kind == RowKind::Eq || kind == RowKind::FixedVar; }
};

std::vector<Row> build_rows(const Problem &p) {
  const Eigen::Index n = p.size();
  std::vector<Row> rows;
  for (Eigen::Index j = 0; j < p.a_eq.rows(); ++j)
    rows.push_back({p.a_eq.row(j).transpose(), p.b_eq(j), RowKind::Eq, j});
  for (Eigen::Index i = 0; i < n; ++i) {
    if (p.lb(i) == p.ub(i))
      rows.push_back({Eigen::VectorXd::Unit(n, i), p.lb(i), RowKind::FixedVar, i});
  }
  for (Eigen::Index j = 0; j < p.a_ineq.rows(); ++j)
    rows.push_back({p.a_ineq.row(j).transpose(), p.b_ineq(j), RowKind::Ineq, j});
  for (Eigen::Index i = 0; i < n; ++i) {
    if (p.lb(i) == p.ub(i))
      continue;
    if (std::isfinite(p.lb(i)))
      rows.push_back({-Eigen::VectorXd::Unit(n, i), -p.lb(i), RowKind::Lower, i});
    if (std::isfinite(p.ub(i)))
      rows.push_back({Eigen::VectorXd::Unit(n, i), p.ub(i), RowKind::Upper, i});
  }
  return rows;
}

double inf_norm(const Eigen::VectorXd &v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

// Greedy linearly independent subset of the equality rows.
std::vector<int> independent_equalities(const std::vector<Row> &rows, Eigen::Index n) {
  std::vector<int> chosen;
  Eigen::MatrixXd basis(n, 0);
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
    if (!rows[i].equality())
      continue;
    Eigen::MatrixXd trial(n, basis.cols() + 1);
    trial << basis, rows[i].a;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(trial);
    if (qr.rank() == trial.cols()) {
      basis = std::move(trial);
      chosen.push_back(i);
    }
  }
  return chosen;
}

struct ActiveSetOutcome {
  Status status = Status::Optimal;
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers; // one per row
  std::vector<int> working;
  int iterations = 0;
};

// Primal active-set iterations from a feasible x with working set W (rows
// active at x, linearly independent). Zero-curvature descent directions are
// followed as rays until a constraint blocks them.
ActiveSetOutcome active_set(const Eigen::MatrixXd &Q, const Eigen::VectorXd &c,
                            const std::vector<Row> &rows, Eigen::VectorXd x,
                            std::vector<int> working) {
  const Eigen::Index n = x.size();
  const int max_iter = 200 + 50 * static_cast<int>(n + rows.size());
  std::vector<char> in_w(rows.size(), 0);
  for (int i : working)
    in_w[i] = 1;

  ActiveSetOutcome out;
  for (int iter = 0; iter < max_iter; ++iter) {
    out.iterations = iter + 1;
    const Eigen::VectorXd qx = Q * x;
    const Eigen::VectorXd g = qx + c;
    const double gscale = 1.0 + inf_norm(qx.cwiseAbs()) + inf_norm(c);

    const auto k = static_cast<Eigen::Index>(working.size());
    Eigen::MatrixXd awt(n, k);
    for (Eigen::Index j = 0; j < k; ++j)
      awt.col(j) = rows[working[j]].a;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
    Eigen::MatrixXd Z;
    if (k == 0) {
      Z = Eigen::MatrixXd::Identity(n, n);
    } else {
      qr.compute(awt);
      const Eigen::MatrixXd hq = qr.householderQ();
      Z = hq.rightCols(n - qr.rank());
    }

    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    bool ray = false;
    if (Z.cols() > 0) {
      const Eigen::MatrixXd H = Z.transpose() * Q * Z;
      const Eigen::VectorXd rz = Z.transpose() * g;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
      const Eigen::VectorXd &ev = es.eigenvalues();
      const Eigen::MatrixXd &V = es.eigenvectors();
      const double curv_tol = 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
      const Eigen::VectorXd coeff = V.transpose() * rz;
      Eigen::VectorXd newton = Eigen::VectorXd::Zero(Z.cols());
      Eigen::VectorXd flat = Eigen::VectorXd::Zero(Z.cols());
      for (Eigen::Index j = 0; j < ev.size(); ++j) {
        if (ev(j) > curv_tol)
          newton -= (coeff(j) / ev(j)) * V.col(j);
        else
          flat += coeff(j) * V.col(j);
      }
      if (inf_norm(flat) > 1e-11 * gscale) {
        ray = true;
        p = -Z * flat;
      } else {
        p = Z * newton;
      }
    }

    if (!ray && inf_norm(p) <= 1e-13 * (1.0 + inf_norm(x))) {
      // Stationary on the working set: check multiplier signs.
      Eigen::VectorXd mu = k == 0 ? Eigen::VectorXd() : Eigen::VectorXd(qr.solve(-g));
      int drop = -1;
      double most_negative = 0.0;
      for (Eigen::Index j = 0; j < k; ++j) {
        const Row &r = rows[working[j]];
        if (r.equality())
          continue;
        const double scaled = mu(j) * inf_norm(r.a) / gscale;
        if (scaled < -1e-11 && scaled < most_negative) {
          most_negative = scaled;
          drop = static_cast<int>(j);
        }
      }
      if (drop < 0) {
        out.status = Status::Optimal;
        out.x = x;
        out.multipliers = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows.size()));
        for (Eigen::Index j = 0; j < k; ++j)
          out.multipliers(working[j]) = mu(j);
        out.working = std::move(working);
        return out;
      }
      in_w[working[drop]] = 0;
      working.erase(working.begin() + drop);
      continue;
    }

    double step = ray ? kInf : 1.0;
    int blocking = -1;
    const double pnorm = inf_norm(p);
    for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
      const Row &r = rows[i];
      if (in_w[i] || r.equality())
        continue;
      const double ap = r.a.dot(p);
      if (ap <= 1e-12 * inf_norm(r.a) * pnorm)
        continue;
      const double slack = std::max(0.0, r.b - r.a.dot(x));
      const double s = slack / ap;
      if (s < step) {
        step = s;
        blocking = i;
      }
    }
    if (blocking < 0 && ray) {
      out.status = Status::Unbounded;
      out.x = x;
      return out;
    }
    x += step * p;
    if (blocking >= 0) {
      working.push_back(blocking);
      in_w[blocking] = 1;
    }
  }
  throw std::runtime_error("qp: active-set iteration limit reached");
}

// Finds a point satisfying all rows by minimizing the sum of artificial
// slacks from a bound-feasible start. Returns nullopt if infeasible.
std::optional<Eigen::VectorXd> feasible_point(const Problem &p, const std::vector<Row> &rows,
                                              int &iterations) {
  const Eigen::Index n = p.size();
  Eigen::VectorXd x0(n);
  for (Eigen::Index i = 0; i < n; ++i)
    x0(i) = std::clamp(0.0, p.lb(i), p.ub(i));
  if (p.max_violation(x0) <= kTolerances.feasibility)
    return x0;

  // artificial column per violated general row
  std::vector<int> art_row;
  std::vector<double> art_sign, art_start;
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
    const Row &r = rows[i];
    if (r.kind != RowKind::Eq && r.kind != RowKind::Ineq)
      continue;
    const double resid = r.a.dot(x0) - r.b;
    if (r.kind == RowKind::Ineq && resid <= 0.0)
      continue;
    if (r.kind == RowKind::Eq && resid == 0.0)
      continue;
    art_row.push_back(i);
    art_sign.push_back(resid > 0.0 ? 1.0 : -1.0);
    art_start.push_back(std::abs(resid));
  }
  const auto na = static_cast<Eigen::Index>(art_row.size());
  const Eigen::Index m = n + na;

  std::vector<Row> aug;
  aug.reserve(rows.size() + art_row.size());
  for (const Row &r : rows) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(m);
    a.head(n) = r.a;
    aug.push_back({std::move(a), r.b, r.kind, r.ref});
  }
  for (Eigen::Index j = 0; j < na; ++j) {
    aug[art_row[j]].a(n + j) = -art_sign[j];
    aug.push_back({-Eigen::VectorXd::Unit(m, n + j), 0.0, RowKind::Lower, n + j});
  }

  Eigen::VectorXd xa(m);
  xa.head(n) = x0;
  for (Eigen::Index j = 0; j < na; ++j)
    xa(n + j) = art_start[j];
  Eigen::VectorXd ca = Eigen::VectorXd::Zero(m);
  ca.tail(na).setOnes();

  auto res = active_set(Eigen::MatrixXd::Zero(m, m), ca, aug, xa, independent_equalities(aug, m));
  iterations += res.iterations;
  Eigen::VectorXd x = res.x.head(n);
  if (p.max_violation(x) > kTolerances.feasibility)
    return std::nullopt;
  return x;
}

// Newton refinement of the KKT system restricted to the working set, removing
// drift accumulated by the scaled iterations. Minimum-norm corrections keep it
// usable when the system is singular.
void polish(const Eigen::MatrixXd &Q, const Eigen::VectorXd &c, const std::vector<Row> &rows,
            const std::vector<int> &working, Eigen::VectorXd &x, Eigen::VectorXd &row_mult) {
  const Eigen::Index n = x.size();
  const auto k = static_cast<Eigen::Index>(working.size());
  Eigen::MatrixXd a(k, n);
  Eigen::VectorXd b(k), mu(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    a.row(j) = rows[working[j]].a.transpose();
    b(j) = rows[working[j]].b;
    mu(j) = row_mult(working[j]);
  }
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
  kkt.topLeftCorner(n, n) = Q;
  kkt.topRightCorner(n, k) = a.transpose();
  kkt.bottomLeftCorner(k, n) = a;
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(kkt);
  Eigen::VectorXd rhs(n + k);
  for (int pass = 0; pass < 3; ++pass) {
    rhs.head(n) = -(Q * x + c + a.transpose() * mu);
    rhs.tail(k) = b - a * x;
    const Eigen::VectorXd step = cod.solve(rhs);
    x += step.head(n);
    mu += step.tail(k);
  }
  for (Eigen::Index j = 0; j < k; ++j)
    row_mult(working[j]) = mu(j);
}

void assemble_multipliers(const Problem &p, const std::vector<Row> &rows,
                            const Eigen::VectorXd &row_mult, Solution &s) {
  const Eigen::Index n = p.size();
  s.mu_ineq = Eigen::VectorXd::Zero(p.a_ineq.rows());
  s.nu_eq = Eigen::VectorXd::Zero(p.a_eq.rows());
  s.mu_lb = Eigen::VectorXd::Zero(n);
  s.mu_ub = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double mu = row_mult(static_cast<Eigen::Index>(i));
    switch (rows[i].kind) {
    case RowKind::Eq:
      s.nu_eq(rows[i].ref) = mu;
      break;
    case RowKind::FixedVar:
      if (mu >= 0.0)
        s.mu_ub(rows[i].ref) = mu;
      else
        s.mu_lb(rows[i].ref) = -mu;
      break;
    case RowKind::Ineq:
      s.mu_ineq(rows[i].ref) = mu;
      break;
    case RowKind::Lower:
      s.mu_lb(rows[i].ref) = mu;
      break;
    case RowKind::Upper:
      s.mu_ub(rows[i].ref) = mu;
      break;
    }
  }
}

} // namespace

Problem Problem::unconstrained(Eigen::Index n) {
  Problem p;
  p.Q = Eigen::MatrixXd::Zero(n, n);
  p.c = Eigen::VectorXd::Zero(n);
  p.lb = Eigen::VectorXd::Constant(n, -kInf);
  p.ub = Eigen::VectorXd::Constant(n, kInf);
  p.a_ineq.resize(0, n);
  p.b_ineq.resize(0);
  p.a_eq.resize(0, n);
  p.b_eq.resize(0);
  return p;
}

double Problem::objective(const Eigen::VectorXd &x) const { return 0.5 * x.dot(Q * x) + c.dot(x); }

double Problem::max_violation(const Eigen::VectorXd &x) const {
  double v = 0.0;
  for (Eigen::Index i = 0; i < size(); ++i) {
    v = std::max(v, lb(i) - x(i));
    v = std::max(v, x(i) - ub(i));
  }
  if (a_ineq.rows() > 0)
    v = std::max(v, (a_ineq * x - b_ineq).maxCoeff());
  if (a_eq.rows() > 0)
    v = std::max(v, (a_eq * x - b_eq).cwiseAbs().maxCoeff());
  return v;
}

void Problem::add_inequality(const Eigen::RowVectorXd &a, double b) {
  a_ineq.conservativeResize(a_ineq.rows() + 1, size());
  a_ineq.row(a_ineq.rows() - 1) = a;
  b_ineq.conservativeResize(b_ineq.size() + 1);
  b_ineq(b_ineq.size() - 1) = b;
}

void Problem::add_equality(const Eigen::RowVectorXd &a, double b) {
  a_eq.conservativeResize(a_eq.rows() + 1, size());
  a_eq.row(a_eq.rows() - 1) = a;
  b_eq.conservativeResize(b_eq.size() + 1);
  b_eq(b_eq.size() - 1) = b;
}

const char *to_string(Status s) {
  switch (s) {
  case Status::Optimal:
    return "optimal";
  case Status::Infeasible:
    return "infeasible";
  case Status::Unbounded:
    return "unbounded";
  }
  return "unknown";
}

void validate(const Problem &p) {
  const Eigen::Index n = p.size();
  if (p.Q.rows() != n || p.Q.cols() != n)
    throw InvalidProblem("qp: Q must be n x n");
  if (p.lb.size() != n || p.ub.size() != n)
    throw InvalidProblem("qp: bounds must have n entries");
  if (p.a_ineq.cols() != n && p.a_ineq.rows() > 0)
    throw InvalidProblem("qp: inequality rows must have n columns");
  if (p.a_ineq.rows() != p.b_ineq.size())
    throw InvalidProblem("qp: inequality row/rhs count mismatch");
  if (p.a_eq.cols() != n && p.a_eq.rows() > 0)
    throw InvalidProblem("qp: equality rows must have n columns");
  if (p.a_eq.rows() != p.b_eq.size())
    throw InvalidProblem("qp: equality row/rhs count mismatch");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isnan(p.lb(i)) || std::isnan(p.ub(i)) || p.lb(i) > p.ub(i))
      throw InvalidProblem("qp: requires lb <= ub for variable " + std::to_string(i));
  }
  if (!p.Q.allFinite() || !p.c.allFinite())
    throw InvalidProblem("qp: non-finite objective data");
  if (n == 0)
    return;
  const double qmax = std::max(1.0, p.Q.cwiseAbs().maxCoeff());
  if ((p.Q - p.Q.transpose()).cwiseAbs().maxCoeff() > kTolerances.symmetry * qmax)
    throw InvalidProblem("qp: Q is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.Q, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -kTolerances.psd * qmax)
    throw InvalidProblem("qp: Q is not positive semidefinite");
}

double kkt_residual(const Problem &p, const Solution &s) {
  const Eigen::Index n = p.size();
  if (n == 0)
    return 0.0;
  const Eigen::VectorXd &x = s.x;
  const Eigen::VectorXd qx = p.Q * x;
  Eigen::VectorXd r = qx + p.c - s.mu_lb + s.mu_ub;
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(n) + qx.cwiseAbs() + p.c.cwiseAbs() +
                          s.mu_lb.cwiseAbs() + s.mu_ub.cwiseAbs();
  if (p.a_ineq.rows() > 0) {
    r += p.a_ineq.transpose() * s.mu_ineq;
    scale += p.a_ineq.cwiseAbs().transpose() * s.mu_ineq.cwiseAbs();
  }
  if (p.a_eq.rows() > 0) {
    r += p.a_eq.transpose() * s.nu_eq;
    scale += p.a_eq.cwiseAbs().transpose() * s.nu_eq.cwiseAbs();
  }
  double res = r.cwiseAbs().cwiseQuotient(scale).maxCoeff();
  res = std::max(res, p.max_violation(x));

  const double gscale = 1.0 + inf_norm(qx) + inf_norm(p.c);
  auto dual_comp = [&](double mu, double row_norm, double slack) {
    res = std::max(res, std::max(0.0, -mu) * row_norm / gscale);
    res = std::max(res, std::min(std::abs(mu) * row_norm / gscale, std::abs(slack)));
  };
  for (Eigen::Index j = 0; j < p.a_ineq.rows(); ++j) {
    const Eigen::VectorXd a = p.a_ineq.row(j).transpose();
    dual_comp(s.mu_ineq(j), inf_norm(a), p.b_ineq(j) - a.dot(x));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    dual_comp(s.mu_lb(i), 1.0, x(i) - p.lb(i));
    dual_comp(s.mu_ub(i), 1.0, p.ub(i) - x(i));
  }
  return res;
}

Solution solve_qp(const Problem &p) {
  validate(p);
  const Eigen::Index n = p.size();
  Solution sol;
  sol.x = Eigen::VectorXd::Zero(n);
  if (n == 0) {
    const bool ok = (p.b_ineq.size() == 0 || p.b_ineq.minCoeff() >= -kTolerances.feasibility) &&
                    (p.b_eq.size() == 0 || inf_norm(p.b_eq) <= kTolerances.feasibility);
    sol.status = ok ? Status::Optimal : Status::Infeasible;
    sol.mu_ineq = Eigen::VectorXd::Zero(p.a_ineq.rows());
    sol.nu_eq = Eigen::VectorXd::Zero(p.a_eq.rows());
    return sol;
  }

  const std::vector<Row> rows = build_rows(p);
  int iterations = 0;
  auto start = feasible_point(p, rows, iterations);
  if (!start) {
    sol.status = Status::Infeasible;
    sol.iterations = iterations;
    return sol;
  }

  // Jacobi scaling x = D x~ so the scaled Hessian has a unit diagonal.
  Eigen::VectorXd d = Eigen::VectorXd::Ones(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (p.Q(i, i) > 0.0)
      d(i) = 1.0 / std::sqrt(p.Q(i, i));
  const Eigen::MatrixXd qs = d.asDiagonal() * p.Q * d.asDiagonal();
  const Eigen::VectorXd cs = d.cwiseProduct(p.c);
  std::vector<Row> scaled = rows;
  for (Row &r : scaled)
    r.a = r.a.cwiseProduct(d);
  const Eigen::VectorXd xs = start->cwiseQuotient(d);

  auto res = active_set(qs, cs, scaled, xs, independent_equalities(scaled, n));
  sol.iterations = iterations + res.iterations;
  if (res.status != Status::Optimal) {
    sol.status = res.status;
    sol.x = res.x.cwiseProduct(d);
    return sol;
  }
  sol.status = Status::Optimal;
  sol.x = res.x.cwiseProduct(d);
  polish(p.Q, p.c, rows, res.working, sol.x, res.multipliers);
  // Rounding can leave x a few ulps outside a bound; fixed variables are exact.
  for (Eigen::Index i = 0; i < n; ++i)
    sol.x(i) = std::clamp(sol.x(i), p.lb(i), p.ub(i));
  // Multipliers are invariant under the diagonal change of variables.
  assemble_multipliers(p, rows, res.multipliers, sol);
  sol.objective = p.objective(sol.x);
  sol.kkt_residual = kkt_residual(p, sol);
  return sol;
}

std::size_t SemiContinuousSpec::count() const {
  return static_cast<std::size_t>(
      std::count_if(vars.begin(), vars.end(), [](const auto &v) { return v.has_value(); }));
}

std::optional<Problem> apply_pattern(const Problem &p, const SemiContinuousSpec &spec,
                                     const std::vector<bool> &on) {
  Problem q = p;
  std::size_t k = 0;
  for (std::size_t i = 0; i < spec.vars.size(); ++i) {
    if (!spec.vars[i])
      continue;
    const auto idx = static_cast<Eigen::Index>(i);
    if (on[k]) {
      q.lb(idx) = std::max(q.lb(idx), spec.vars[i]->lo);
      q.ub(idx) = std::min(q.ub(idx), spec.vars[i]->hi);
    } else {
      if (q.lb(idx) > 0.0 || q.ub(idx) < 0.0)
        return std::nullopt;
      q.lb(idx) = 0.0;
      q.ub(idx) = 0.0;
    }
    if (q.lb(idx) > q.ub(idx))
      return std::nullopt;
    ++k;
  }
  return q;
}

PatternResult solve_semicontinuous(const Problem &p, const SemiContinuousSpec &spec) {
  validate(p);
  if (spec.vars.size() != static_cast<std::size_t>(p.size()))
    throw InvalidProblem("qp: semi-continuous spec must cover every variable");
  for (const auto &v : spec.vars)
    if (v && !(v->lo > 0.0 && v->lo <= v->hi))
      throw InvalidProblem("qp: semi-continuous interval requires 0 < lo <= hi");
  const std::size_t k = spec.count();
  if (k > kMaxSemiContinuous)
    throw CapacityError("qp: " + std::to_string(k) + " semi-continuous variables exceed the limit of " +
                        std::to_string(kMaxSemiContinuous));

  PatternResult best;
  best.solution.status = Status::Infeasible;
  best.solution.x = Eigen::VectorXd::Zero(p.size());
  std::size_t best_on = 0;
  bool have = false;

  const std::size_t patterns = std::size_t{1} << k;
  for (std::size_t mask = 0; mask < patterns; ++mask) {
    // bit (k-1-j) of mask is variable j: ascending mask is lexicographic order
    std::vector<bool> on(k);
    std::size_t n_on = 0;
    for (std::size_t j = 0; j < k; ++j) {
      on[j] = (mask >> (k - 1 - j)) & 1U;
      n_on += on[j];
    }
    auto q = apply_pattern(p, spec, on);
    if (!q)
      continue;
    Solution s = solve_qp(*q);
    if (s.status == Status::Unbounded) {
      best.solution = std::move(s);
      best.on = std::move(on);
      return best;
    }
    if (!s.optimal())
      continue;
    bool take = !have;
    if (have) {
      const double tie = kTolerances.objective_tie *
                         std::max({1.0, std::abs(s.objective), std::abs(best.solution.objective)});
      if (s.objective < best.solution.objective - tie)
        take = true;
      else if (s.objective <= best.solution.objective + tie && n_on > best_on)
        take = true;
    }
    if (take) {
      have = true;
      best.solution = std::move(s);
      best.on = std::move(on);
      best_on = n_on;
    }
  }
  return best;
}

} // namespace fcs::qp
