"""Functional-equation solver for two intertwined dynamic programs.

The two state processes share one bounded state interval W and one finite
decision grid D.  Four Bellman-type operators act on value functions over W:

    (U1 r)(x) = max_{y in D} { q(x, y) + L1(x, y, r(tau(x, y))) }
    (U2 r)(x) = max_{y in D} { q(x, y) + L2(x, y, r(tau(x, y))) }
    (V1 p)(x) = max_{y in D} { q(x, y) + N1(x, y, p(tau(x, y))) }
    (V2 p)(x) = max_{y in D} { q(x, y) + N2(x, y, p(tau(x, y))) }

Each payoff is bounded by Lambda and Lipschitz in its value argument with a
declared constant beta < 1, which makes every operator a sup-metric
contraction with factor beta; both facts are spot-verified on samples at
construction time.  Value functions live on the carrier grid with linear
interpolation in between, maxima over D are exact, and iteration residuals
must respect the geometric envelope beta^k * r0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InputError, NumericalError
from .expr import eval_on_arrays, parse, variables
from .metric import Carrier

Array = np.ndarray

OPERATORS = ("U1", "U2", "V1", "V2")

_PAYOFF_NAMES = {"U1": "L1", "U2": "L2", "V1": "N1", "V2": "N2"}
_BOUND_SAMPLES = 7


@dataclass(frozen=True)
class DPProblem:
    """One pair of intertwined dynamic programs on a shared state interval.

    q, tau take (x, y); the four payoffs take (x, y, z) where z is the value
    of the continuation state.  All callables must accept numpy arrays."""

    w: Carrier
    decisions: tuple[float, ...]
    q: Callable[[Array, Array], Array]
    l1: Callable[[Array, Array, Array], Array]
    l2: Callable[[Array, Array, Array], Array]
    n1: Callable[[Array, Array, Array], Array]
    n2: Callable[[Array, Array, Array], Array]
    tau: Callable[[Array, Array], Array]
    lam: float
    beta: float

    def __post_init__(self):
        if not self.decisions:
            raise InputError("decision grid must be nonempty")
        if any(not math.isfinite(d) for d in self.decisions):
            raise InputError(f"decision grid must be finite: {self.decisions}")
        if not math.isfinite(self.lam) or self.lam <= 0.0:
            raise InputError(f"payoff bound must be positive and finite, got {self.lam}")
        if not 0.0 <= self.beta < 1.0:
            raise InputError(f"contraction factor must lie in [0,1), got {self.beta}")

        x, y = self._sample_xy()
        qv = np.asarray(self.q(x, y), dtype=float)
        if not np.all(np.isfinite(qv)):
            raise InputError("q produces non-finite values on the sample grid")
        tv = np.asarray(self.tau(x, y), dtype=float)
        if not np.all(np.isfinite(tv)):
            raise InputError("tau produces non-finite values on the sample grid")
        if not self.w.contains(tv, tol=1e-9):
            worst = float(tv.ravel()[np.argmax(np.maximum(self.w.lo - tv, tv - self.w.hi))])
            raise InputError(f"tau leaves the state interval [{self.w.lo}, {self.w.hi}]: "
                             f"image {worst}")

        bound = self.lam / (1.0 - self.beta)
        zs = np.linspace(-bound, bound, _BOUND_SAMPLES)
        for which in OPERATORS:
            payoff = self.payoff(which)
            name = _PAYOFF_NAMES[which]
            prev = None
            for z in zs:
                vals = np.asarray(payoff(x, y, np.full(x.shape, float(z))), dtype=float)
                if not np.all(np.isfinite(vals)):
                    raise InputError(f"{name} produces non-finite values")
                worst = float(np.max(np.abs(vals)))
                if worst > self.lam + 1e-9:
                    raise InputError(f"{name} exceeds its bound {self.lam}: "
                                     f"|value| = {worst}")
                if prev is not None:
                    dz = float(z - prev[0])
                    slope = float(np.max(np.abs(vals - prev[1]))) / dz
                    if slope > self.beta + 1e-9:
                        raise InputError(
                            f"{name} violates the declared contraction factor "
                            f"{self.beta}: sampled difference quotient {slope}")
                prev = (float(z), vals)

    def _sample_xy(self) -> tuple[Array, Array]:
        xs = self.w.points()
        ys = np.asarray(self.decisions, dtype=float)
        return xs[:, None], ys[None, :]

    def payoff(self, which: str) -> Callable[[Array, Array, Array], Array]:
        try:
            return {"U1": self.l1, "U2": self.l2, "V1": self.n1, "V2": self.n2}[which]
        except KeyError:
            raise InputError(f"operator must be one of {OPERATORS}, got {which!r}") from None

    @property
    def value_bound(self) -> float:
        """Sup bound for any operator fixed point: (sup|q| + Lambda)/(1 - beta)."""
        x, y = self._sample_xy()
        sup_q = float(np.max(np.abs(np.asarray(self.q(x, y), dtype=float))))
        return (sup_q + self.lam) / (1.0 - self.beta)


def _xy_fn(text: str, names: tuple[str, ...]):
    tree = parse(text)
    extra = variables(tree) - set(names)
    if extra:
        raise InputError(f"expression may only use {list(names)}, found {sorted(extra)}")
    if len(names) == 2:
        return lambda x, y: eval_on_arrays(tree, x=x, y=y)
    return lambda x, y, z: eval_on_arrays(tree, x=x, y=y, z=z)


def problem_from_exprs(w: Carrier, decisions: Sequence[float], q: str, l1: str,
                       l2: str, n1: str, n2: str, tau: str, lam: float,
                       beta: float) -> DPProblem:
    """Build a problem from expression strings in x, y (and z for payoffs)."""
    return DPProblem(
        w=w, decisions=tuple(float(d) for d in decisions),
        q=_xy_fn(q, ("x", "y")),
        l1=_xy_fn(l1, ("x", "y", "z")), l2=_xy_fn(l2, ("x", "y", "z")),
        n1=_xy_fn(n1, ("x", "y", "z")), n2=_xy_fn(n2, ("x", "y", "z")),
        tau=_xy_fn(tau, ("x", "y")), lam=lam, beta=beta)


@dataclass(frozen=True, eq=False)
class ValueFunction:
    """Piecewise-linear value function on the state grid."""

    xs: Array
    values: Array

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "values", values)
        if xs.ndim != 1 or xs.shape != values.shape or xs.size < 2:
            raise InputError("value function needs matching 1-d grids with >= 2 points")
        if not np.all(np.diff(xs) > 0.0):
            raise InputError("value function grid must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise InputError("value function has non-finite values")

    def __call__(self, x) -> Array:
        return np.interp(np.asarray(x, dtype=float), self.xs, self.values)


def zero_value(prob: DPProblem) -> ValueFunction:
    xs = prob.w.points()
    return ValueFunction(xs, np.zeros_like(xs))


def value_from_expr(prob: DPProblem, text: str) -> ValueFunction:
    xs = prob.w.points()
    tree = parse(text)
    extra = variables(tree) - {"x"}
    if extra:
        raise InputError(f"value expression may only use x, found {sorted(extra)}")
    return ValueFunction(xs, eval_on_arrays(tree, x=xs) * np.ones_like(xs))


def sup_metric(u: ValueFunction, v: ValueFunction) -> float:
    if not np.array_equal(u.xs, v.xs):
        raise InputError("sup metric needs value functions on the same grid")
    return float(np.max(np.abs(u.values - v.values)))


def apply_bellman_operator(prob: DPProblem, which: str, v: ValueFunction) -> ValueFunction:
    """One Bellman update; the maximum over the decision grid is exact."""
    payoff = prob.payoff(which)
    xs = prob.w.points()
    if not np.array_equal(v.xs, xs):
        raise InputError("value function grid does not match the problem grid")
    x, y = prob._sample_xy()
    tv = np.asarray(prob.tau(x, y), dtype=float)
    vt = v(tv)
    totals = np.asarray(prob.q(x, y), dtype=float) + np.asarray(
        payoff(x, y, vt), dtype=float)
    return ValueFunction(xs, np.max(totals, axis=1))


@dataclass(frozen=True, eq=False)
class IterationResult:
    operator: str
    value: ValueFunction
    iterations: int
    final_residual: float
    residual_trace: tuple[float, ...]
    envelope_ok: bool
    tolerance: float

    def to_dict(self) -> dict:
        return {"operator": self.operator, "iterations": self.iterations,
                "final_residual": self.final_residual,
                "residual_trace": list(self.residual_trace),
                "envelope_ok": self.envelope_ok, "tolerance": self.tolerance}


def _envelope_ok(trace: Sequence[float], beta: float, slack: float = 1e-9) -> bool:
    if not trace:
        return True
    r0 = trace[0]
    return all(r <= beta**k * r0 + slack for k, r in enumerate(trace))


def value_iterate(prob: DPProblem, which: str, init: ValueFunction | None = None,
                  tol: float = 1e-8, max_iter: int = 500) -> IterationResult:
    """Iterate one operator to its fixed point within tol in sup metric.

    The residual trace must stay under the geometric envelope beta^k * r0;
    running out of iterations raises a NumericalError carrying the trace."""
    if tol <= 0.0:
        raise InputError(f"iteration tolerance must be positive, got {tol}")
    if max_iter < 1:
        raise InputError(f"max_iter must be >= 1, got {max_iter}")
    v = zero_value(prob) if init is None else init
    trace: list[float] = []
    for _ in range(max_iter):
        nxt = apply_bellman_operator(prob, which, v)
        r = sup_metric(nxt, v)
        trace.append(r)
        v = nxt
        if r < tol:
            return IterationResult(which, v, len(trace), r, tuple(trace),
                                   _envelope_ok(trace, prob.beta), tol)
    raise NumericalError(
        f"operator {which} did not converge to {tol} within {max_iter} "
        f"iterations; last residual {trace[-1]}", trace=tuple(trace))


@dataclass(frozen=True, eq=False)
class SystemReport:
    """Joint solve of all four operators from the zero function."""

    results: dict
    pairwise_gaps: dict
    cross_residuals: dict
    common_solution: bool
    agreement_tol: float

    @property
    def representative(self) -> ValueFunction:
        return self.results["U1"].value

    def to_dict(self) -> dict:
        return {"results": {k: r.to_dict() for k, r in self.results.items()},
                "pairwise_gaps": self.pairwise_gaps,
                "cross_residuals": self.cross_residuals,
                "common_solution": self.common_solution,
                "agreement_tol": self.agreement_tol}


def solve_system(prob: DPProblem, tol: float = 1e-8,
                 max_iter: int = 500) -> SystemReport:
    """Solve all four fixed-point equations and compare the solutions.

    A common solution is certified when all pairwise sup distances stay
    within 2*tol; cross residuals measure how far the representative
    solution (from U1) is from being fixed under each operator."""
    results = {which: value_iterate(prob, which, tol=tol, max_iter=max_iter)
               for which in OPERATORS}
    gaps = {}
    for i, p in enumerate(OPERATORS):
        for s in OPERATORS[i + 1:]:
            gaps[f"{p}-{s}"] = sup_metric(results[p].value, results[s].value)
    rep = results["U1"].value
    cross = {which: sup_metric(apply_bellman_operator(prob, which, rep), rep)
             for which in OPERATORS}
    common = all(g <= 2.0 * tol for g in gaps.values())
    return SystemReport(results, gaps, cross, common, 2.0 * tol)


@dataclass(frozen=True)
class ValueSequence:
    """A sequence of value functions, examined over the window
    [tail_start, tail_start + tail_len)."""

    generator: Callable[[int], ValueFunction]
    tail_start: int = 5
    tail_len: int = 10

    def __post_init__(self):
        if self.tail_len < 2:
            raise InputError(f"tail_len must be >= 2, got {self.tail_len}")
        if self.tail_start < 0:
            raise InputError(f"tail_start must be >= 0, got {self.tail_start}")

    def tail(self) -> list[ValueFunction]:
        return [self.generator(n)
                for n in range(self.tail_start, self.tail_start + self.tail_len)]


def constant_sequence(v: ValueFunction, tail_len: int = 10) -> ValueSequence:
    return ValueSequence(lambda n: v, tail_start=0, tail_len=tail_len)


@dataclass(frozen=True)
class ConditionOutcome:
    name: str
    status: str  # "pass" | "fail"
    witness: dict | None
    note: str

    def to_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "witness": self.witness,
                "note": self.note}


@dataclass(frozen=True)
class Theorem53Report:
    conditions: tuple[ConditionOutcome, ...]
    lambda_property: str  # "strict" | "nonstrict"

    @property
    def passed(self) -> bool:
        return all(c.status == "pass" for c in self.conditions)

    def condition(self, name: str) -> ConditionOutcome:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"conditions": [c.to_dict() for c in self.conditions],
                "lambda_property": self.lambda_property, "passed": self.passed}


def _tail_condition(prob: DPProblem, name: str, first: str, second: str,
                    seq: ValueSequence, tol: float) -> ConditionOutcome:
    tail = seq.tail()
    a_stack = np.stack([apply_bellman_operator(prob, first, v).values for v in tail])
    b_stack = np.stack([apply_bellman_operator(prob, second, v).values for v in tail])
    spread_a = float(np.max(np.max(a_stack, axis=0) - np.min(a_stack, axis=0)))
    spread_b = float(np.max(np.max(b_stack, axis=0) - np.min(b_stack, axis=0)))
    gap = float(np.max(np.abs(a_stack[-1] - b_stack[-1])))
    last = tail[-1]
    ab = apply_bellman_operator(prob, first, apply_bellman_operator(prob, second, last))
    ba = apply_bellman_operator(prob, second, apply_bellman_operator(prob, first, last))
    commutator = sup_metric(ab, ba)
    detail = {"spread_first": spread_a, "spread_second": spread_b,
              "limit_gap": gap, "commutator": commutator}
    ok = spread_a < tol and spread_b < tol and gap < tol and commutator < tol
    note = (f"{first} and {second} tails share one limit and commute within tol"
            if ok else "tail limits or the commutator exceed tol")
    return ConditionOutcome(name, "pass" if ok else "fail",
                            None if ok else detail, note)


def check_theorem53(prob: DPProblem, r_seq: ValueSequence, p_seq: ValueSequence,
                    lam_gauge: Callable[[float], float],
                    tol: float = 1e-3) -> Theorem53Report:
    """The three hypotheses tying the two programs together.

    (i) and (ii): along the supplied sequences, the images under the two U
    operators (resp. the two V operators) share a limit and asymptotically
    commute, both in sup metric within tol.

    (iii): for each tail pair (r_n, p_n), the payoff gap
    sup_{x,y} |L1(x,y,r_n(tau)) - N1(x,y,p_n(tau))| must not exceed
    Theta(r_n, p_n) = lam_gauge(max{g(d(U2 r_n, V2 p_n)), g(d(U2 r_n, U1 r_n)),
    g(d(V2 p_n, V1 p_n))}) with the shift gauge g(t) = t - 1, margin
    tolerance -1e-9.

    The gauge must satisfy lam_gauge(u) >= u on a sampled grid (violations
    are input errors); whether the strict form holds everywhere on the grid
    is reported as the lambda_property."""
    if tol <= 0.0:
        raise InputError(f"tolerance must be positive, got {tol}")
    cap = max(1.0, 2.0 * prob.value_bound)
    strict = True
    for u in np.linspace(-1.0, cap, 201):
        u = float(u)
        value = float(lam_gauge(u))
        if value < u:
            raise InputError(f"gauge must dominate the identity: "
                             f"lam_gauge({u}) = {value} < {u}")
        strict &= value > u
    lambda_property = "strict" if strict else "nonstrict"

    conditions = [
        _tail_condition(prob, "(i)", "U1", "U2", r_seq, tol),
        _tail_condition(prob, "(ii)", "V1", "V2", p_seq, tol),
    ]

    x, y = prob._sample_xy()
    tv = np.asarray(prob.tau(x, y), dtype=float)
    witness = None
    checked = 0
    for n, (r, p) in enumerate(zip(r_seq.tail(), p_seq.tail())):
        lhs = float(np.max(np.abs(
            np.asarray(prob.l1(x, y, r(tv)), dtype=float)
            - np.asarray(prob.n1(x, y, p(tv)), dtype=float))))
        inner = max(
            sup_metric(apply_bellman_operator(prob, "U2", r),
                       apply_bellman_operator(prob, "V2", p)),
            sup_metric(apply_bellman_operator(prob, "U2", r),
                       apply_bellman_operator(prob, "U1", r)),
            sup_metric(apply_bellman_operator(prob, "V2", p),
                       apply_bellman_operator(prob, "V1", p)))
        theta = float(lam_gauge(inner - 1.0))
        checked += 1
        if witness is None and lhs - theta > 1e-9:
            witness = {"n": r_seq.tail_start + n, "payoff_gap": lhs, "theta": theta}
    status = "pass" if witness is None else "fail"
    note = (f"payoff gap bounded by Theta on {checked} tail pairs" if witness is None
            else "payoff gap exceeds Theta")
    conditions.append(ConditionOutcome("(iii)", status, witness, note))
    return Theorem53Report(tuple(conditions), lambda_property)
