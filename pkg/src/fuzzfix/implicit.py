"""Implicit-relation gauges psi: [0,1]^4 -> R and their condition checks.

A quadruple gauge drives the contraction inequality psi(...) >= 0.  The
family carries four conditions:

    psi1  monotone in the first argument (orientation noted per example;
          the integral examples act through s -> integral over [0, 1-s],
          which reverses the direction),
    psi2  psi(u,0,u,0) >= 0  implies  u bound,
    psi3  psi(u,0,0,u) >= 0  implies  u bound,
    psi4  psi(u,u,0,0) >= 0  implies  u bound.

Two readings of the bound are implemented and never conflated: the printed
consequent u >= 0, vacuous on [0,1] and reported as "holds-vacuously", and
the strict consequent u <= 0, which is the reading the fixed-point argument
actually needs.  Six builtin constructions are provided under opaque ids
ex2_1 .. ex2_6:

    ex2_1  u1 - delta(max{u2,u3,u4})          delta(u) < u gauge
    ex2_2  u1 - k min{u2,u3,u4}               0 < k < 1
    ex2_3  u1 - delta3(u2,u3,u4)              axis condition delta3 < u
    ex2_4  u1 - k u2 - min{u3,u4}             0 < k < 1
    ex2_5  I(1-u1) - a max{I(1-u2), I(1-u3), I(1-u4)}   0 <= a < 1
    ex2_6  I(1-u1) - delta(max{I(1-u2), I(1-u3), I(1-u4)})

where I(v) is the integral of a positive-mass density over [0, v].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .distances import Density, cumulative_integrals, integrate_density, is_phi_class
from .errors import InputError

PSI_EXAMPLE_IDS = ("ex2_1", "ex2_2", "ex2_3", "ex2_4", "ex2_5", "ex2_6")

_GAUGE_GRID_N = 101


@dataclass(frozen=True)
class PsiFunction:
    """A quadruple gauge with its scalar evaluator, an optional vectorized
    evaluator, and the orientation its first-argument monotonicity takes."""

    example_id: str  # one of PSI_EXAMPLE_IDS or "custom"
    evaluator: Callable[[float, float, float, float], float]
    params: dict = field(default_factory=dict)
    u1_direction: str = "increasing"  # "increasing" | "decreasing"
    array_evaluator: Callable[..., np.ndarray] | None = None


def _validate_unit(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise InputError(f"{name} must lie in [0,1], got {value}")


def _check_delta_gauge(delta: Callable[[float], float], cap: float, what: str) -> None:
    # delta(u) < u for u > 0, delta nonnegative; checked on a grid up to cap
    for u in np.linspace(0.0, cap, _GAUGE_GRID_N)[1:]:
        v = float(delta(float(u)))
        if not 0.0 <= v < u:
            raise InputError(
                f"{what} must satisfy 0 <= delta(u) < u for u > 0; "
                f"delta({float(u)}) = {v}"
            )


def _check_delta3_gauge(delta3: Callable[[float, float, float], float]) -> None:
    for u in np.linspace(0.0, 1.0, _GAUGE_GRID_N)[1:]:
        u = float(u)
        axes = (delta3(0.0, u, 0.0), delta3(0.0, 0.0, u), delta3(u, 0.0, 0.0))
        vals = [float(v) for v in axes]
        if any(v < 0.0 for v in vals) or max(vals) >= u:
            raise InputError(
                f"three-argument gauge must satisfy max over the coordinate "
                f"axes < u for u > 0; at u={u} the axis values are {vals}"
            )


def _vec(f: Callable[..., float]) -> Callable[..., np.ndarray]:
    return np.vectorize(f, otypes=[float])


def make_psi(
    example_id: str,
    *,
    k: float | None = None,
    a: float | None = None,
    delta: Callable[[float], float] | None = None,
    delta3: Callable[[float, float, float], float] | None = None,
    density: Density | None = None,
    quad_tol: float = 1e-10,
    evaluator: Callable[[float, float, float, float], float] | None = None,
    array_evaluator: Callable[..., np.ndarray] | None = None,
    u1_direction: str = "increasing",
) -> PsiFunction:
    """Construct a builtin gauge by id, or a custom one from an evaluator."""
    if example_id == "custom":
        if evaluator is None:
            raise InputError("custom psi requires an evaluator")
        if u1_direction not in ("increasing", "decreasing"):
            raise InputError(f"unknown u1 direction {u1_direction!r}")
        return PsiFunction("custom", evaluator, {}, u1_direction, array_evaluator)
    if example_id not in PSI_EXAMPLE_IDS:
        raise InputError(
            f"unknown psi example {example_id!r}; expected one of "
            f"{PSI_EXAMPLE_IDS} or 'custom'"
        )

    if example_id == "ex2_1":
        if delta is None:
            raise InputError("ex2_1 requires a delta gauge")
        _check_delta_gauge(delta, 1.0, "ex2_1 delta gauge")
        dv = _vec(delta)
        return PsiFunction(
            example_id,
            lambda u1, u2, u3, u4: u1 - float(delta(max(u2, u3, u4))),
            {"delta": delta},
            "increasing",
            lambda u1, u2, u3, u4: u1 - dv(np.maximum(np.maximum(u2, u3), u4)),
        )

    if example_id == "ex2_2":
        if k is None or not 0.0 < k < 1.0:
            raise InputError(f"ex2_2 requires k in (0,1), got {k}")
        return PsiFunction(
            example_id,
            lambda u1, u2, u3, u4: u1 - k * min(u2, u3, u4),
            {"k": k},
            "increasing",
            lambda u1, u2, u3, u4: u1 - k * np.minimum(np.minimum(u2, u3), u4),
        )

    if example_id == "ex2_3":
        if delta3 is None:
            raise InputError("ex2_3 requires a three-argument delta gauge")
        _check_delta3_gauge(delta3)
        dv = _vec(delta3)
        return PsiFunction(
            example_id,
            lambda u1, u2, u3, u4: u1 - float(delta3(u2, u3, u4)),
            {"delta3": delta3},
            "increasing",
            lambda u1, u2, u3, u4: u1 - dv(u2, u3, u4),
        )

    if example_id == "ex2_4":
        if k is None or not 0.0 < k < 1.0:
            raise InputError(f"ex2_4 requires k in (0,1), got {k}")
        return PsiFunction(
            example_id,
            lambda u1, u2, u3, u4: u1 - k * u2 - min(u3, u4),
            {"k": k},
            "increasing",
            lambda u1, u2, u3, u4: u1 - k * u2 - np.minimum(u3, u4),
        )

    # the two integral-backed constructions
    if density is None:
        raise InputError(f"{example_id} requires a density")
    if not is_phi_class(density, quad_tol):
        raise InputError(
            f"{example_id} density {density.description!r} fails the "
            "positive-mass check"
        )
    integ = lru_cache(maxsize=4096)(
        lambda upper: integrate_density(density, 0.0, upper, quad_tol)
    )

    def batched(u1, u2, u3, u4) -> tuple[np.ndarray, np.ndarray]:
        u1, u2, u3, u4 = np.broadcast_arrays(
            np.asarray(u1, dtype=float), np.asarray(u2, dtype=float),
            np.asarray(u3, dtype=float), np.asarray(u4, dtype=float))
        uppers = 1.0 - np.stack([u1, u2, u3, u4])
        ints = cumulative_integrals(density, uppers.ravel(), quad_tol).reshape(uppers.shape)
        inner = np.maximum(np.maximum(ints[1], ints[2]), ints[3])
        return ints[0], inner

    if example_id == "ex2_5":
        if a is None or not 0.0 <= a < 1.0:
            raise InputError(f"ex2_5 requires a in [0,1), got {a}")

        def ev5(u1, u2, u3, u4):
            return integ(1.0 - u1) - a * max(
                integ(1.0 - u2), integ(1.0 - u3), integ(1.0 - u4))

        def arr5(u1, u2, u3, u4):
            first, inner = batched(u1, u2, u3, u4)
            return first - a * inner

        return PsiFunction(example_id, ev5, {"a": a, "density": density},
                           "decreasing", arr5)

    if delta is None:
        raise InputError("ex2_6 requires a delta gauge")
    mass = integrate_density(density, 0.0, 1.0, quad_tol)
    _check_delta_gauge(delta, max(1.0, mass), "ex2_6 delta gauge")
    dv6 = _vec(delta)

    def ev6(u1, u2, u3, u4):
        return integ(1.0 - u1) - float(delta(max(
            integ(1.0 - u2), integ(1.0 - u3), integ(1.0 - u4))))

    def arr6(u1, u2, u3, u4):
        first, inner = batched(u1, u2, u3, u4)
        return first - dv6(inner)

    return PsiFunction(example_id, ev6, {"delta": delta, "density": density},
                       "decreasing", arr6)


def psi_eval(psi: PsiFunction, u1: float, u2: float, u3: float, u4: float) -> float:
    for name, u in (("u1", u1), ("u2", u2), ("u3", u3), ("u4", u4)):
        _validate_unit(name, u)
    return float(psi.evaluator(u1, u2, u3, u4))


def psi_eval_on_arrays(psi: PsiFunction, u1, u2, u3, u4) -> np.ndarray:
    """Vectorized gauge evaluation; falls back to a scalar loop for custom
    gauges that declare no array path."""
    if psi.array_evaluator is not None:
        return np.asarray(psi.array_evaluator(u1, u2, u3, u4), dtype=float)
    return _vec(psi.evaluator)(u1, u2, u3, u4)


@dataclass(frozen=True)
class ConditionCheck:
    name: str  # psi1 | psi2 | psi3 | psi4
    status: str  # "holds" | "holds-vacuously" | "fails"
    witness: dict | None
    samples: int
    note: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "witness": self.witness,
                "samples": self.samples, "note": self.note}


@dataclass(frozen=True)
class PsiReport:
    example_id: str
    variant: str  # "as_printed" | "strict"
    conditions: tuple[ConditionCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.status != "fails" for c in self.conditions)

    def condition(self, name: str) -> ConditionCheck:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"example_id": self.example_id, "variant": self.variant,
                "passed": self.passed,
                "conditions": [c.to_dict() for c in self.conditions]}


_SLOTS = {
    # how each implication condition places u into (u1,u2,u3,u4)
    "psi2": lambda u, z: (u, z, u, z),
    "psi3": lambda u, z: (u, z, z, u),
    "psi4": lambda u, z: (u, u, z, z),
}


def verify_psi(psi: PsiFunction, variant: str = "as_printed", grid_n: int = 21) -> PsiReport:
    """Grid verification of the four family conditions.

    psi1 sweeps the first argument over all grid tuples of the other three
    and demands monotonicity in the gauge's declared orientation (within
    1e-12).  psi2..psi4 scan u over the grid; under "as_printed" the
    consequent u >= 0 cannot fail on [0,1] and the status says so, under
    "strict" the consequent is u <= 0 and each positive u with a nonnegative
    gauge value is a counterexample.
    """
    if variant not in ("as_printed", "strict"):
        raise InputError(f"unknown condition variant {variant!r}")
    if grid_n < 3:
        raise InputError(f"verification grid must have at least 3 points, got {grid_n}")
    grid = np.linspace(0.0, 1.0, grid_n)
    conditions = []

    # psi1: monotone sweep in the first argument
    u1g, u2g, u3g, u4g = np.meshgrid(grid, grid, grid, grid, indexing="ij")
    vals = psi_eval_on_arrays(psi, u1g, u2g, u3g, u4g)
    diffs = np.diff(vals, axis=0)
    sign = 1.0 if psi.u1_direction == "increasing" else -1.0
    bad = np.nonzero((sign * diffs).ravel() < -1e-12)[0]
    samples = int(diffs.size)
    note = "checked nondecreasing in u1" if sign > 0 else "checked nonincreasing in u1"
    if bad.size:
        j, i2, i3, i4 = np.unravel_index(int(bad[0]), diffs.shape)
        witness = {
            "u1_lo": float(grid[j]), "u1_hi": float(grid[j + 1]),
            "u2": float(grid[i2]), "u3": float(grid[i3]), "u4": float(grid[i4]),
            "value_lo": float(vals[j, i2, i3, i4]),
            "value_hi": float(vals[j + 1, i2, i3, i4]),
        }
        conditions.append(ConditionCheck("psi1", "fails", witness, samples, note))
    else:
        conditions.append(ConditionCheck("psi1", "holds", None, samples, note))

    zeros = np.zeros_like(grid)
    for name in ("psi2", "psi3", "psi4"):
        u1, u2, u3, u4 = _SLOTS[name](grid, zeros)
        slot_vals = psi_eval_on_arrays(psi, u1, u2, u3, u4)
        if variant == "as_printed":
            conditions.append(ConditionCheck(
                name, "holds-vacuously", None, int(grid.size),
                "consequent u >= 0 holds for every u in [0,1]"))
            continue
        violating = np.nonzero((slot_vals >= 0.0) & (grid > 0.0))[0]
        if violating.size:
            i = int(violating[0])
            witness = {"u": float(grid[i]), "value": float(slot_vals[i])}
            conditions.append(ConditionCheck(
                name, "fails", witness, int(grid.size),
                "gauge stays nonnegative at a positive u"))
        else:
            conditions.append(ConditionCheck(
                name, "holds", None, int(grid.size),
                "nonnegative gauge forces u = 0 on the grid"))

    return PsiReport(psi.example_id, variant, tuple(conditions))
