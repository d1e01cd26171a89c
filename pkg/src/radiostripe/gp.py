"""Posynomial algebra, monomial condensation and (successive) geometric programming.

A geometric program here is::

    maximize    m0(x)
    subject to  p_k(x) <= m_k(x)      (posynomial <= monomial)
                lo_v <= x_v <= hi_v

over strictly positive ``x``. With ``y = log x`` it becomes a convex problem
with log-sum-exp constraints, which is handed to ``cvxopt.solvers.gp``.
Signomial programs (posynomial <= posynomial) are solved by repeatedly
condensing the right-hand sides into monomials around the current iterate
and bounding the step with a multiplicative trust region.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping

import numpy as np

logger = logging.getLogger(__name__)

Var = Hashable

FEAS_TOL = 1e-8


class GPDomainError(ValueError):
    pass


class Monomial:
    """``coef * prod(x_v ** exps[v])`` with ``coef > 0``."""

    __slots__ = ("coef", "exps")

    def __init__(self, coef: float, exps: Mapping[Var, float] | None = None):
        coef = float(coef)
        if not coef > 0 or not math.isfinite(coef):
            raise GPDomainError(f"monomial coefficient must be positive and finite, got {coef}")
        self.coef = coef
        self.exps = {v: float(a) for v, a in (exps or {}).items() if a != 0}

    @classmethod
    def var(cls, name: Var) -> "Monomial":
        return cls(1.0, {name: 1.0})

    def __call__(self, x: Mapping[Var, float]) -> float:
        return math.exp(self.log_eval(x))

    def log_eval(self, x: Mapping[Var, float]) -> float:
        out = math.log(self.coef)
        for v, a in self.exps.items():
            xv = x[v]
            if not xv > 0:
                raise GPDomainError(f"variable {v!r} must be positive, got {xv}")
            out += a * math.log(xv)
        return out

    def __mul__(self, other):
        if isinstance(other, Monomial):
            exps = dict(self.exps)
            for v, a in other.exps.items():
                exps[v] = exps.get(v, 0.0) + a
            return Monomial(self.coef * other.coef, exps)
        if isinstance(other, Posynomial):
            return other * self
        return Monomial(self.coef * float(other), self.exps)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Monomial):
            return self * other ** -1
        return Monomial(self.coef / float(other), self.exps)

    def __rtruediv__(self, other):
        return Monomial(float(other), {}) * self ** -1

    def __pow__(self, p: float) -> "Monomial":
        return Monomial(self.coef ** p, {v: a * p for v, a in self.exps.items()})

    def __add__(self, other):
        return Posynomial([self]) + other

    __radd__ = __add__

    def __eq__(self, other):
        return (isinstance(other, Monomial) and self.coef == other.coef
                and self.exps == other.exps)

    def __repr__(self):
        return f"Monomial({self.coef!r}, {self.exps!r})"

    @property
    def variables(self) -> tuple:
        return tuple(self.exps)

    def gradient(self, x: Mapping[Var, float]) -> dict:
        val = self(x)
        return {v: a * val / x[v] for v, a in self.exps.items()}


class Posynomial:
    """Non-empty sum of monomials."""

    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[Monomial]):
        self.terms = tuple(terms)
        if not self.terms:
            raise GPDomainError("a posynomial needs at least one term")

    def __call__(self, x: Mapping[Var, float]) -> float:
        return sum(t(x) for t in self.terms)

    def __add__(self, other):
        if isinstance(other, Posynomial):
            return Posynomial(self.terms + other.terms)
        if isinstance(other, Monomial):
            return Posynomial(self.terms + (other,))
        return Posynomial(self.terms + (Monomial(other),))

    __radd__ = __add__

    def __mul__(self, other):
        if isinstance(other, Posynomial):
            return Posynomial(a * b for a in self.terms for b in other.terms)
        return Posynomial(t * other for t in self.terms)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return Posynomial(t / other for t in self.terms)

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        return f"Posynomial({list(self.terms)!r})"

    @property
    def variables(self) -> tuple:
        seen = {}
        for t in self.terms:
            seen.update(dict.fromkeys(t.exps))
        return tuple(seen)

    def gradient(self, x: Mapping[Var, float]) -> dict:
        grad: dict = {}
        for t in self.terms:
            for v, g in t.gradient(x).items():
                grad[v] = grad.get(v, 0.0) + g
        return grad


def as_posynomial(p) -> Posynomial:
    if isinstance(p, Posynomial):
        return p
    if isinstance(p, Monomial):
        return Posynomial([p])
    return Posynomial([Monomial(p)])


def monomial_condense(p: Posynomial | Monomial, x0: Mapping[Var, float]) -> Monomial:
    """Best local monomial under-estimator of ``p`` at ``x0`` (AM-GM).

    With weights ``beta_l = u_l(x0) / p(x0)`` the result is
    ``prod_l (u_l(x) / beta_l) ** beta_l``; it matches ``p`` in value and
    gradient at ``x0`` and never exceeds ``p`` on the positive orthant.
    """
    p = as_posynomial(p)
    for v in p.variables:
        if not x0[v] > 0:
            raise GPDomainError(f"condensation point must be positive, {v!r}={x0[v]}")
    if len(p.terms) == 1:
        return p.terms[0]
    logs = np.array([t.log_eval(x0) for t in p.terms])
    shift = logs.max()
    w = np.exp(logs - shift)
    log_p0 = shift + math.log(w.sum())
    beta = w / w.sum()
    exps: dict = {}
    for b, t in zip(beta, p.terms):
        for v, a in t.exps.items():
            exps[v] = exps.get(v, 0.0) + b * a
    # anchor at x0: m(x) = p(x0) * prod (x/x0)^a keeps m(x0) = p(x0) to rounding
    log_coef = log_p0 - sum(a * math.log(x0[v]) for v, a in exps.items())
    return Monomial(math.exp(log_coef), exps)


@dataclass
class GPProblem:
    objective: Monomial  # maximized
    constraints: list[tuple[Posynomial, Monomial]] = field(default_factory=list)
    bounds: dict = field(default_factory=dict)  # var -> (lo | None, hi | None)
    labels: list[str] = field(default_factory=list)

    def add(self, lhs, rhs, label: str | None = None) -> None:
        self.constraints.append((as_posynomial(lhs), _as_monomial(rhs)))
        self.labels.append(label or f"c{len(self.constraints) - 1}")

    @property
    def variables(self) -> list:
        seen = dict.fromkeys(self.objective.exps)
        for lhs, rhs in self.constraints:
            seen.update(dict.fromkeys(lhs.variables))
            seen.update(dict.fromkeys(rhs.exps))
        seen.update(dict.fromkeys(self.bounds))
        return list(seen)

    def violations(self, x: Mapping[Var, float]) -> dict[str, float]:
        """Log-domain violation of each constraint and bound (positive means violated)."""
        out = {}
        for (lhs, rhs), label in zip(self.constraints, self.labels):
            out[label] = math.log(lhs(x)) - rhs.log_eval(x)
        for v, (lo, hi) in self.bounds.items():
            if lo is not None:
                out[f"lower[{v}]"] = math.log(lo) - math.log(x[v])
            if hi is not None:
                out[f"upper[{v}]"] = math.log(x[v]) - math.log(hi)
        return out


def _as_monomial(m) -> Monomial:
    if isinstance(m, Monomial):
        return m
    if isinstance(m, Posynomial):
        if len(m.terms) != 1:
            raise GPDomainError("right-hand side of a GP constraint must be a monomial")
        return m.terms[0]
    return Monomial(m)


@dataclass
class SolveResult:
    values: dict
    objective: float
    status: str  # optimal | infeasible | max-iter | numerical-failure
    iterations: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


DEFAULT_SOLVER_OPTIONS = {
    "abstol": 1e-10,
    "reltol": 1e-10,
    "feastol": 1e-10,
    "maxiters": 100,
    "show_progress": False,
}


def _compile(problem: GPProblem):
    """Translate to cvxopt's (K, F, g, G, h) log-domain form."""
    index = {v: i for i, v in enumerate(problem.variables)}
    n = len(index)

    lse_rows, lse_g, K = [], [], []
    lin_rows, lin_h = [], []

    obj = problem.objective ** -1
    obj_row = {index[v]: a for v, a in obj.exps.items()}
    lse_rows.append(obj_row)
    lse_g.append(math.log(obj.coef))
    K.append(1)

    for lhs, rhs in problem.constraints:
        terms = [t / rhs for t in lhs.terms]
        rows = [{index[v]: a for v, a in t.exps.items()} for t in terms]
        if len(terms) == 1:
            lin_rows.append(rows[0])
            lin_h.append(-math.log(terms[0].coef))
        else:
            lse_rows.extend(rows)
            lse_g.extend(math.log(t.coef) for t in terms)
            K.append(len(terms))

    for v, (lo, hi) in problem.bounds.items():
        if lo is not None:
            lin_rows.append({index[v]: -1.0})
            lin_h.append(-math.log(lo))
        if hi is not None:
            lin_rows.append({index[v]: 1.0})
            lin_h.append(math.log(hi))
    return index, n, K, lse_rows, lse_g, lin_rows, lin_h


def _spmatrix(rows: list[dict], n: int):
    from cvxopt import spmatrix

    vals, ri, ci = [], [], []
    for r, row in enumerate(rows):
        for c, a in row.items():
            vals.append(float(a))
            ri.append(r)
            ci.append(c)
    return spmatrix(vals, ri, ci, (len(rows), n))


class _LogSumExpOracle:
    """Sparse value/gradient/Hessian oracle for ``f_k(y) = lse(F_k y + g_k)``.

    cvxopt's own ``gp`` assembles a dense Hessian per constraint, which is
    quadratic in the variable count; here every constraint only touches a
    few variables, so the Hessian is scattered into a fixed sparse pattern.
    """

    def __init__(self, K: list[int], rows: list[dict], g: list[float], n: int):
        self.n = n
        self.K = np.asarray(K)
        self.starts = np.concatenate([[0], np.cumsum(K)[:-1]])
        seg = np.repeat(np.arange(len(K)), K)
        r_idx, c_idx, val = [], [], []
        for r, row in enumerate(rows):
            for c, a in row.items():
                r_idx.append(r)
                c_idx.append(c)
                val.append(a)
        self.r_idx = np.asarray(r_idx, dtype=int)
        self.c_idx = np.asarray(c_idx, dtype=int)
        self.val = np.asarray(val, dtype=float)
        self.g = np.asarray(g, dtype=float)
        self.seg = seg
        from scipy.sparse import csr_matrix

        self.F = csr_matrix((self.val, (self.r_idx, self.c_idx)), shape=(len(rows), n))

        df_keys, self.df_inv = np.unique(seg[self.r_idx] * n + self.c_idx, return_inverse=True)
        self.df_I = (df_keys // n).astype(int)
        self.df_J = (df_keys % n).astype(int)

        # pairs (a >= b) of a segment's gradient entries; single-term segments are linear
        by_seg: dict[int, list[int]] = {}
        for e, k in enumerate(self.df_I):
            by_seg.setdefault(int(k), []).append(e)
        pk, pa, pb = [], [], []
        for k, ents in by_seg.items():
            if self.K[k] < 2:
                continue
            for a in ents:
                for b in ents:
                    if self.df_J[a] >= self.df_J[b]:
                        pk.append(k)
                        pa.append(a)
                        pb.append(b)
        self.pair_k = np.asarray(pk, dtype=int)
        self.pair_a = np.asarray(pa, dtype=int)
        self.pair_b = np.asarray(pb, dtype=int)

        by_row: dict[int, list[int]] = {}
        for e, r in enumerate(self.r_idx):
            if self.K[seg[r]] >= 2:
                by_row.setdefault(int(r), []).append(e)
        tr, tu, tv = [], [], []
        for r, ents in by_row.items():
            for u in ents:
                for v in ents:
                    if self.c_idx[u] >= self.c_idx[v]:
                        tr.append(r)
                        tu.append(u)
                        tv.append(v)
        self.term_r = np.asarray(tr, dtype=int)
        self.term_coef = self.val[np.asarray(tu, dtype=int)] * self.val[np.asarray(tv, dtype=int)]
        term_keys = self.c_idx[np.asarray(tu, dtype=int)] * n + self.c_idx[np.asarray(tv, dtype=int)]
        pair_keys = self.df_J[self.pair_a] * n + self.df_J[self.pair_b]
        h_keys, inv = np.unique(np.concatenate([term_keys, pair_keys]), return_inverse=True)
        self.h_I = (h_keys // n).astype(int)
        self.h_J = (h_keys % n).astype(int)
        self.term_inv = inv[: len(term_keys)]
        self.pair_inv = inv[len(term_keys):]

    def evaluate(self, y: np.ndarray, z: np.ndarray | None = None):
        u = self.F @ y + self.g
        mx = np.maximum.reduceat(u, self.starts)
        e = np.exp(u - mx[self.seg])
        tot = np.add.reduceat(e, self.starts)
        f = mx + np.log(tot)
        p = e / tot[self.seg]
        df = np.bincount(self.df_inv, weights=p[self.r_idx] * self.val,
                         minlength=len(self.df_I))
        if z is None:
            return f, df, None
        nh = len(self.h_I)
        h = np.bincount(self.term_inv, weights=z[self.seg[self.term_r]] * p[self.term_r]
                        * self.term_coef, minlength=nh)
        h -= np.bincount(self.pair_inv, weights=z[self.pair_k] * df[self.pair_a]
                         * df[self.pair_b], minlength=nh)
        return f, df, h

    def cvxopt_F(self, y0: np.ndarray):
        from cvxopt import matrix, spmatrix

        mnl = len(self.K) - 1
        shape = (mnl + 1, self.n)

        def F(x=None, z=None):
            if x is None:
                return mnl, matrix(y0)
            y = np.array(x).reshape(-1)
            zz = None if z is None else np.array(z).reshape(-1)
            f, df, h = self.evaluate(y, zz)
            Df = spmatrix(df.tolist(), self.df_I.tolist(), self.df_J.tolist(), shape)
            if z is None:
                return matrix(f), Df
            H = spmatrix(h.tolist(), self.h_I.tolist(), self.h_J.tolist(), (self.n, self.n))
            return matrix(f), Df, H

        return F


def _solve_log_domain(compiled, opts, y0=None):
    """Run cvxopt's primal-dual cone-program solver on the compiled log-domain problem."""
    from cvxopt import matrix, solvers

    index, n, K, lse_rows, lse_g, lin_rows, lin_h = compiled
    oracle = _LogSumExpOracle(K, lse_rows, lse_g, n)
    y0 = np.zeros(n) if y0 is None else np.asarray(y0, dtype=float)
    kwargs = {}
    if lin_rows:
        kwargs["G"] = _spmatrix(lin_rows, n)
        kwargs["h"] = matrix(lin_h)
    return solvers.cp(oracle.cvxopt_F(y0), options=opts, **kwargs)


def gp_solve(problem: GPProblem, options: Mapping | None = None,
             start: Mapping[Var, float] | None = None) -> SolveResult:
    """Solve a GP in log space with cvxopt's primal-dual interior-point method.

    ``start`` optionally seeds the primal iterate (missing variables start at 1).
    """
    opts = dict(DEFAULT_SOLVER_OPTIONS)
    opts.update(options or {})
    compiled = _compile(problem)
    index = compiled[0]
    y0 = None
    if start:
        y0 = [math.log(start[v]) if start.get(v, 0) > 0 else 0.0 for v in index]
    try:
        sol = _solve_log_domain(compiled, opts, y0)
    except (ArithmeticError, ValueError) as exc:
        logger.debug("cvxopt cp raised %s", exc)
        return _diagnose_failure(problem, str(exc), opts)

    y = np.array(sol["x"]).reshape(-1)
    values = {v: float(math.exp(y[i])) for v, i in index.items()}
    viol = problem.violations(values)
    worst = max(viol.values(), default=0.0)
    diag = {
        "solver_status": sol["status"],
        "max_violation": worst,
        "gap": sol.get("gap"),
        "relative_gap": sol.get("relative gap"),
        "primal_infeasibility": sol.get("primal infeasibility"),
        "dual_infeasibility": sol.get("dual infeasibility"),
    }
    iters = int(sol.get("iterations", 0) or 0)
    if sol["status"] == "optimal" or (worst <= FEAS_TOL and _near_optimal(sol)):
        status = "optimal" if worst <= FEAS_TOL else "numerical-failure"
    elif worst > 1e-3:
        return _diagnose_failure(problem, f"solver status {sol['status']}", opts, diag)
    else:
        status = "max-iter" if iters >= opts["maxiters"] else "numerical-failure"
    return SolveResult(values, problem.objective(values), status, iters, diag)


def _near_optimal(sol) -> bool:
    # cvxopt reports 'unknown' when it stalls just short of very tight tolerances
    rgap = sol.get("relative gap")
    dinf = sol.get("dual infeasibility")
    return rgap is not None and dinf is not None and abs(rgap) <= 1e-7 and dinf <= 1e-7


def _diagnose_failure(problem: GPProblem, reason: str, opts, diag=None) -> SolveResult:
    """Phase-I check: minimize the common slack s with every constraint relaxed by s."""
    slack = object()
    phase1 = GPProblem(objective=Monomial.var(slack) ** -1)
    for (lhs, rhs), label in zip(problem.constraints, problem.labels):
        phase1.add(lhs, rhs * Monomial.var(slack), label)
    for v, (lo, hi) in problem.bounds.items():
        if lo is not None:
            phase1.add(Monomial(lo) / Monomial.var(v), Monomial.var(slack), f"lower[{v}]")
        if hi is not None:
            phase1.add(Monomial.var(v) / hi, Monomial.var(slack), f"upper[{v}]")
    compiled = _compile(phase1)
    index = compiled[0]
    diag = dict(diag or {})
    diag["reason"] = reason
    try:
        sol = _solve_log_domain(compiled, opts)
        y = np.array(sol["x"]).reshape(-1)
        vals = {v: float(math.exp(y[i])) for v, i in index.items()}
        s = vals.pop(slack)
    except (ArithmeticError, ValueError) as exc:
        diag["phase1_error"] = str(exc)
        return SolveResult({}, float("nan"), "numerical-failure", 0, diag)
    diag["phase1_slack"] = s
    if math.log(s) > FEAS_TOL:
        viol = problem.violations(vals)
        diag["violated"] = sorted((k for k, val in viol.items() if val > FEAS_TOL),
                                  key=lambda k: -viol[k])
        return SolveResult(vals, float("nan"), "infeasible", 0, diag)
    return SolveResult(vals, float("nan"), "numerical-failure", 0, diag)


@dataclass
class SignomialProblem:
    """``maximize m0`` subject to posynomial ``lhs <= rhs`` posynomial constraints.

    ``trust_vars`` are the variables confined to ``[x0/omega, omega*x0]`` in
    every condensed GP; ``bounds`` are static box bounds.
    """

    objective: Monomial
    constraints: list[tuple[Posynomial, Posynomial]] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)
    trust_vars: tuple = ()
    bounds: dict = field(default_factory=dict)

    def add(self, lhs, rhs, label: str | None = None) -> None:
        self.constraints.append((as_posynomial(lhs), as_posynomial(rhs)))
        self.labels.append(label or f"c{len(self.constraints) - 1}")

    def condense(self, x0: Mapping[Var, float], omega: float) -> GPProblem:
        if not omega > 1:
            raise GPDomainError(f"trust parameter omega must exceed 1, got {omega}")
        gp = GPProblem(objective=self.objective, bounds=dict(self.bounds))
        for (lhs, rhs), label in zip(self.constraints, self.labels):
            gp.add(lhs, monomial_condense(rhs, x0), label)
        for v in self.trust_vars:
            lo, hi = gp.bounds.get(v, (None, None))
            tlo, thi = x0[v] / omega, x0[v] * omega
            gp.bounds[v] = (tlo if lo is None else max(lo, tlo),
                            thi if hi is None else min(hi, thi))
        return gp


def sgp_solve(problem: SignomialProblem, x0: Mapping[Var, float], omega: float = 1.1,
              eps: float = 1e-6, max_iter: int = 100,
              options: Mapping | None = None,
              record=None) -> tuple[SolveResult, list[dict]]:
    """Successive GP with trust region; returns the final result and a trace.

    Each condensed GP admits the previous iterate as a feasible point, so the
    objective is non-decreasing. When the solver returns a value below the
    previous one (rounding at convergence) the previous iterate is kept and
    the run stops. ``record(values)`` may return extra fields for each trace entry.
    """
    if not eps > 0 or max_iter < 1:
        raise ValueError("eps must be > 0 and max_iter >= 1")
    x = dict(x0)
    trace: list[dict] = []
    best: SolveResult | None = None
    t_prev = math.inf
    for it in range(1, max_iter + 1):
        gp = problem.condense(x, omega)
        res = gp_solve(gp, options, start=x)
        if res.status == "infeasible" and best is None:
            return res, trace
        if res.status not in ("optimal", "max-iter"):
            logger.warning("GP solve failed at iteration %d: %s", it, res.diagnostics)
            if best is None:
                return res, trace
            return (SolveResult(best.values, best.objective, "numerical-failure", it - 1,
                                {**res.diagnostics, "failed_iteration": it}), trace)
        t = res.objective
        if best is not None and t < best.objective:
            trace.append({"iteration": it, "t": best.objective, "status": "kept-previous",
                          **(record(best.values) if record else {})})
            break
        best = SolveResult(res.values, t, "optimal", it, res.diagnostics)
        trace.append({"iteration": it, "t": t, "status": res.status,
                      **(record(res.values) if record else {})})
        x = dict(res.values)
        if abs(t - t_prev) <= eps:
            break
        t_prev = t
    else:
        best = SolveResult(best.values, best.objective, "max-iter", max_iter, best.diagnostics)
    return SolveResult(best.values, best.objective, best.status, len(trace),
                       best.diagnostics), trace


def _fmt_monomial(m: Monomial) -> str:
    parts = [repr(m.coef)] + [f"{v}^{a!r}" for v, a in m.exps.items()]
    return " * ".join(parts)


def dump_gp(problem: GPProblem) -> str:
    """Plain-text rendering, one constraint per line, exponents explicit."""
    lines = ["# maximize objective subject to posynomial <= monomial; x^a is x to the power a",
             "variables: " + " ".join(str(v) for v in problem.variables),
             "maximize: " + _fmt_monomial(problem.objective)]
    for (lhs, rhs), label in zip(problem.constraints, problem.labels):
        left = " + ".join(_fmt_monomial(t) for t in lhs.terms)
        lines.append(f"{label}: {left} <= {_fmt_monomial(rhs)}")
    for v, (lo, hi) in problem.bounds.items():
        lines.append(f"bound {v}: {'-' if lo is None else repr(lo)} <= {v} <= "
                     f"{'-' if hi is None else repr(hi)}")
    return "\n".join(lines) + "\n"
