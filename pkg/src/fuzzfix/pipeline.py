"""End-to-end checking of the common-fixed-point theorems.

The pipeline runs the hypotheses in proof order and never upgrades a stage
result: tail convergence (the shared-limit property), range containment,
range closedness, the contractive inequality, coincidence points, the
commutation requirement at those points, and finally a search for common
fixed points with a uniqueness verdict on the scanned grid.  Each stage
reports pass/fail/inconclusive on the evidence actually computed; a
pipeline-level pass certifies the grid scan, not the continuum statement.

Four-family variants are supported by composing each family into a single
map and adding a commutation stage for the identities the composition
argument needs (within each family, and across the two family pairs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .contraction import ContractionSpec, ScanPlan, verify_contraction
from .errors import InputError
from .pairs import (CommutationReport, Family, MapPair, MapQuadruple,
                    SequenceSpec, check_commutation_variant,
                    check_family_commuting, check_property_EA,
                    check_range_closed, check_range_containment,
                    find_coincidence_points, COMMUTATION_VARIANTS)

Array = np.ndarray

CONTAINMENT_DIRECTIONS = ("b_in_f", "g_in_a", "f_in_b", "a_in_g")
CLOSEDNESS_TARGETS = ("a", "b", "f", "g")
EA_CHOICES = ("af", "bg", "both")

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_MAX_REFINE_ITERS = 200


@dataclass(frozen=True)
class Tolerances:
    coincidence: float = 1e-9
    fixed_point: float = 1e-9
    commutation: float = -1e-9
    tail: float = 1e-3

    def __post_init__(self):
        if self.coincidence <= 0.0 or self.fixed_point <= 0.0 or self.tail <= 0.0:
            raise InputError("coincidence, fixed-point and tail tolerances must "
                             "be positive")


@dataclass(frozen=True)
class TheoremConfig:
    """Which quadruple to check, under which variant of the hypotheses."""

    quad: MapQuadruple
    contraction: ContractionSpec
    plan: ScanPlan = ScanPlan()
    seq_af: SequenceSpec | None = None
    seq_bg: SequenceSpec | None = None
    ea_pairs: str = "af"
    containment_direction: str = "g_in_a"
    closedness_target: str = "a"
    commutation_variant: str = "weakly_compatible"
    r_constant: float = 1.0
    tolerances: Tolerances = field(default_factory=Tolerances)
    families: tuple[Family, Family, Family, Family] | None = None

    def __post_init__(self):
        if self.ea_pairs not in EA_CHOICES:
            raise InputError(f"ea_pairs must be one of {EA_CHOICES}, got {self.ea_pairs!r}")
        if self.containment_direction not in CONTAINMENT_DIRECTIONS:
            raise InputError(f"containment_direction must be one of "
                             f"{CONTAINMENT_DIRECTIONS}, got {self.containment_direction!r}")
        if self.closedness_target not in CLOSEDNESS_TARGETS:
            raise InputError(f"closedness_target must be one of {CLOSEDNESS_TARGETS}, "
                             f"got {self.closedness_target!r}")
        if self.commutation_variant not in COMMUTATION_VARIANTS:
            raise InputError(f"commutation_variant must be one of "
                             f"{COMMUTATION_VARIANTS}, got {self.commutation_variant!r}")
        if self.ea_pairs in ("af", "both") and self.seq_af is None:
            raise InputError("ea_pairs includes 'af' but no (A,F) sequence was given")
        if self.ea_pairs in ("bg", "both") and self.seq_bg is None:
            raise InputError("ea_pairs includes 'bg' but no (B,G) sequence was given")


@dataclass(frozen=True)
class FixedPointCertificate:
    """A point where all four maps agree with the identity within tol."""

    z: float
    residuals: dict
    max_residual: float
    tolerance: float

    def __post_init__(self):
        if not self.max_residual < self.tolerance:
            raise InputError(f"certificate residual {self.max_residual} is not "
                             f"below tolerance {self.tolerance}")

    def to_dict(self) -> dict:
        return {"z": self.z, "residuals": self.residuals,
                "max_residual": self.max_residual, "tolerance": self.tolerance}


@dataclass(frozen=True)
class FixedPointSearch:
    certificates: tuple[FixedPointCertificate, ...]
    all_points_fixed: bool
    grid_n: int
    tolerance: float

    def to_dict(self) -> dict:
        return {"certificates": [c.to_dict() for c in self.certificates],
                "all_points_fixed": self.all_points_fixed,
                "grid_n": self.grid_n, "tolerance": self.tolerance}


@dataclass(frozen=True)
class RefineResult:
    converged: bool
    x: float
    residual: float
    iterations: int
    certificate: FixedPointCertificate | None

    def to_dict(self) -> dict:
        return {"converged": self.converged, "x": self.x, "residual": self.residual,
                "iterations": self.iterations,
                "certificate": None if self.certificate is None
                else self.certificate.to_dict()}


@dataclass(frozen=True)
class StageResult:
    stage: str
    status: str  # "pass" | "fail" | "inconclusive" | "skipped"
    detail: dict

    def to_dict(self) -> dict:
        return {"stage": self.stage, "status": self.status, "detail": self.detail}


@dataclass(frozen=True)
class TheoremReport:
    stages: tuple[StageResult, ...]
    search: FixedPointSearch
    uniqueness: str  # "unique-on-grid" | "multiple" | "all-points" | "none-found"

    @property
    def hypotheses_pass(self) -> bool:
        return all(s.status == "pass" for s in self.stages)

    @property
    def certified(self) -> bool:
        return self.hypotheses_pass and self.uniqueness == "unique-on-grid"

    def stage(self, name: str) -> StageResult:
        for s in self.stages:
            if s.stage == name:
                return s
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"stages": [s.to_dict() for s in self.stages],
                "search": self.search.to_dict(), "uniqueness": self.uniqueness,
                "hypotheses_pass": self.hypotheses_pass, "certified": self.certified}


def residuals_on_grid(quad: MapQuadruple, xs: Array) -> Array:
    """r(x) = max over the four maps of |map(x) - x|."""
    return np.maximum.reduce([np.abs(quad.a(xs) - xs), np.abs(quad.b(xs) - xs),
                              np.abs(quad.f(xs) - xs), np.abs(quad.g(xs) - xs)])


def _residual_at(quad: MapQuadruple, x: float) -> float:
    return float(residuals_on_grid(quad, np.asarray([x], dtype=float))[0])


def _golden_min(fn, lo: float, hi: float,
                max_iter: int = _MAX_REFINE_ITERS) -> tuple[float, float, int]:
    """Golden-section minimum of fn on [lo, hi]; returns (x, fn(x), iterations)."""
    a, b = float(lo), float(hi)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    its = 0
    while its < max_iter and (b - a) > 1e-14:
        its += 1
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fn(d)
    x = c if fc <= fd else d
    fx = min(fc, fd)
    for cand, fcand in ((a, fn(a)), (b, fn(b))):
        if fcand < fx:
            x, fx = cand, fcand
    return x, fx, its


def _certificate(quad: MapQuadruple, z: float, tol: float) -> FixedPointCertificate:
    maps = {"a": quad.a, "b": quad.b, "f": quad.f, "g": quad.g}
    residuals = {name: abs(float(m(np.asarray([z]))[0]) - z) for name, m in maps.items()}
    return FixedPointCertificate(z=float(z), residuals=residuals,
                                 max_residual=max(residuals.values()), tolerance=tol)


def refine_fixed_point(quad: MapQuadruple, x0: float,
                       tol: float = 1e-9) -> RefineResult:
    """Refine a candidate by minimizing the residual near x0."""
    carrier = quad.fm.carrier
    if not carrier.contains(x0):
        raise InputError(f"start point {x0} is outside the carrier "
                         f"[{carrier.lo}, {carrier.hi}]")
    h = max(carrier.spacing, 1e-6 * (carrier.hi - carrier.lo))
    lo = max(carrier.lo, x0 - h)
    hi = min(carrier.hi, x0 + h)
    z, rz, its = _golden_min(lambda x: _residual_at(quad, x), lo, hi)
    if rz < tol:
        return RefineResult(True, float(z), float(rz), its, _certificate(quad, z, tol))
    return RefineResult(False, float(z), float(rz), its, None)


def find_common_fixed_points(quad: MapQuadruple, tol: float = 1e-9,
                             grid_n: int | None = None) -> FixedPointSearch:
    """Scan the carrier grid for common fixed points of all four maps.

    Local minima of the residual are refined by golden-section search;
    refined hits within one grid spacing are merged.  When the residual is
    below tolerance everywhere the whole carrier is reported as fixed."""
    if tol <= 0.0:
        raise InputError(f"fixed-point tolerance must be positive, got {tol}")
    carrier = quad.fm.carrier
    n = carrier.grid_n if grid_n is None else grid_n
    if n < 3:
        raise InputError(f"fixed-point search needs at least 3 grid points, got {n}")
    xs = carrier.points(n)
    r = residuals_on_grid(quad, xs)

    if bool(np.all(r < tol)):
        certs = tuple(_certificate(quad, float(x), tol) for x in xs)
        return FixedPointSearch(certs, True, n, tol)

    spacing = float(xs[1] - xs[0])
    interior = (r[1:-1] <= r[:-2]) & (r[1:-1] <= r[2:])
    candidates = [0] + (np.nonzero(interior)[0] + 1).tolist() + [xs.size - 1]
    hits: list[tuple[float, float]] = []
    for i in sorted(set(candidates)):
        lo = xs[max(i - 1, 0)]
        hi = xs[min(i + 1, xs.size - 1)]
        z, rz, _ = _golden_min(lambda x: _residual_at(quad, x), float(lo), float(hi))
        if rz < tol:
            hits.append((float(z), float(rz)))

    hits.sort()
    merged: list[tuple[float, float]] = []
    for z, rz in hits:
        if merged and z - merged[-1][0] <= spacing:
            if rz < merged[-1][1]:
                merged[-1] = (z, rz)
        else:
            merged.append((z, rz))
    certs = tuple(_certificate(quad, z, tol) for z, _ in merged)
    return FixedPointSearch(certs, False, n, tol)


def _commutation_stage(pair: MapPair, label: str, variant: str, r_constant: float,
                       points: Sequence[float]) -> StageResult:
    name = f"commutation-{label}"
    if variant == "weakly_compatible":
        if len(points) == 0:
            return StageResult(name, "inconclusive",
                               {"note": "no coincidence points found; nothing to "
                                        "check", "variant": variant})
        report = check_commutation_variant(pair, variant, points=points)
    else:
        report = check_commutation_variant(pair, variant, r_constant=r_constant)
    return StageResult(name, report.status, report.to_dict())


def run_theorem_pipeline(cfg: TheoremConfig) -> TheoremReport:
    """Check every hypothesis of the configured theorem variant in order."""
    quad = cfg.quad
    tols = cfg.tolerances
    stages: list[StageResult] = []

    def guarded(stage: str, fn):
        try:
            return fn()
        except InputError as exc:
            raise InputError(f"stage {stage!r}: {exc}") from exc

    if cfg.families is not None:
        fam_report = guarded("family-commutation", lambda: check_family_commuting(
            *cfg.families))
        stages.append(StageResult("family-commutation", fam_report.status,
                                  fam_report.to_dict()))

    if cfg.ea_pairs == "af":
        ea = guarded("tail-convergence", lambda: check_property_EA(
            [cfg.quad.pair_af], [cfg.seq_af], tol=tols.tail))
    elif cfg.ea_pairs == "bg":
        ea = guarded("tail-convergence", lambda: check_property_EA(
            [cfg.quad.pair_bg], [cfg.seq_bg], tol=tols.tail))
    else:
        ea = guarded("tail-convergence", lambda: check_property_EA(
            [cfg.quad.pair_af, cfg.quad.pair_bg], [cfg.seq_af, cfg.seq_bg],
            tol=tols.tail))
    stages.append(StageResult("tail-convergence", ea.status, ea.to_dict()))

    inner, outer = {"b_in_f": (quad.b, quad.f), "g_in_a": (quad.g, quad.a),
                    "f_in_b": (quad.f, quad.b), "a_in_g": (quad.a, quad.g)}[
                        cfg.containment_direction]
    cont = guarded("containment", lambda: check_range_containment(inner, outer))
    detail = cont.to_dict()
    detail["direction"] = cfg.containment_direction
    stages.append(StageResult("containment", cont.status, detail))

    target = {"a": quad.a, "b": quad.b, "f": quad.f, "g": quad.g}[cfg.closedness_target]
    closed = guarded("closedness", lambda: check_range_closed(target))
    detail = closed.to_dict()
    detail["target"] = cfg.closedness_target
    stages.append(StageResult(
        "closedness", "pass" if closed.status == "closed" else "inconclusive", detail))

    contraction = guarded("contraction", lambda: verify_contraction(
        quad, cfg.contraction, cfg.plan))
    stages.append(StageResult("contraction", contraction.status,
                              contraction.to_dict()))

    for label, pair in (("af", quad.pair_af), ("bg", quad.pair_bg)):
        result = guarded(f"coincidence-{label}", lambda p=pair: find_coincidence_points(
            p.first, p.second, tol=tols.coincidence))
        status = "pass" if result.points else "fail"
        stages.append(StageResult(f"coincidence-{label}", status, result.to_dict()))
        stages.append(_commutation_stage(pair, label, cfg.commutation_variant,
                                         cfg.r_constant, result.points))

    search = guarded("fixed-points", lambda: find_common_fixed_points(
        quad, tol=tols.fixed_point))
    if search.all_points_fixed:
        uniqueness = "all-points"
    elif len(search.certificates) == 1:
        uniqueness = "unique-on-grid"
    elif len(search.certificates) == 0:
        uniqueness = "none-found"
    else:
        uniqueness = "multiple"
    return TheoremReport(tuple(stages), search, uniqueness)
