"""Self-maps on interval carriers and the pairwise hypotheses between them.

Covers everything a common-fixed-point run needs to know about map pairs:
coincidence points, the seven commutation variants (plain, weak, R-weak,
R-weak of types A_g / A_f / P, and weak compatibility at coincidence points),
compatibility along a sequence, property (E.A.) for one or two pairs, range
containment and closedness of ranges, and finite families composed into
single maps with the pairwise-commutation battery.

Limits are certified by Cauchy tails: a sequence tail converges when the
spread (max minus min) of its last ``tail_len`` terms is below tolerance, and
the reported limit is the tail hull midpoint.  This is the computable
surrogate for true limits and every report says so via the tail fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InputError
from .expr import eval_on_arrays, parse, variables
from .metric import Carrier, FuzzyMetric

Array = np.ndarray

DEFAULT_T_GRID = (0.1, 0.5, 1.0, 2.0, 10.0)

COMMUTATION_VARIANTS = (
    "commuting",
    "weakly_commuting",
    "r_weak",
    "r_weak_Ag",
    "r_weak_Af",
    "r_weak_P",
    "weakly_compatible",
)

_BISECTION_STEPS = 60


@dataclass(frozen=True)
class SelfMap:
    """A map of the carrier into itself; sampled images are required to stay
    inside the carrier within 1e-9 at construction time."""

    carrier: Carrier
    fn: Callable[[Array], Array]
    label: str

    def __post_init__(self):
        imgs = np.asarray(self.fn(self.carrier.points()), dtype=float)
        if not np.all(np.isfinite(imgs)):
            raise InputError(f"map {self.label!r} produces non-finite images")
        if not self.carrier.contains(imgs, tol=1e-9):
            worst = imgs[np.argmax(np.maximum(self.carrier.lo - imgs, imgs - self.carrier.hi))]
            raise InputError(
                f"map {self.label!r} leaves the carrier "
                f"[{self.carrier.lo}, {self.carrier.hi}]: image {float(worst)}"
            )

    def __call__(self, x) -> Array:
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)

    def at(self, x: float) -> float:
        return float(self(x))


def selfmap_from_expr(carrier: Carrier, text: str, label: str | None = None) -> SelfMap:
    """Build a self-map from an expression in the single variable x."""
    tree = parse(text)
    extra = variables(tree) - {"x"}
    if extra:
        raise InputError(f"map expression may only use x, found {sorted(extra)}")
    return SelfMap(carrier, lambda x: eval_on_arrays(tree, x=x), label or text)


def compose_maps(outer: SelfMap, inner: SelfMap, label: str | None = None) -> SelfMap:
    if outer.carrier != inner.carrier:
        raise InputError("cannot compose maps on different carriers")
    return SelfMap(outer.carrier, lambda x: outer.fn(inner.fn(np.asarray(x, dtype=float))),
                   label or f"{outer.label} o {inner.label}")


@dataclass(frozen=True)
class MapPair:
    first: SelfMap
    second: SelfMap
    fm: FuzzyMetric

    def __post_init__(self):
        if not (self.first.carrier == self.second.carrier == self.fm.carrier):
            raise InputError("pair maps and fuzzy metric must share one carrier")


@dataclass(frozen=True)
class MapQuadruple:
    a: SelfMap
    b: SelfMap
    f: SelfMap
    g: SelfMap
    fm: FuzzyMetric

    def __post_init__(self):
        carriers = {m.carrier for m in (self.a, self.b, self.f, self.g)}
        if len(carriers) != 1 or self.fm.carrier not in carriers:
            raise InputError("quadruple maps and fuzzy metric must share one carrier")

    @property
    def pair_af(self) -> MapPair:
        return MapPair(self.a, self.f, self.fm)

    @property
    def pair_bg(self) -> MapPair:
        return MapPair(self.b, self.g, self.fm)

    @property
    def maps(self) -> tuple[SelfMap, SelfMap, SelfMap, SelfMap]:
        return (self.a, self.b, self.f, self.g)


@dataclass(frozen=True)
class SequenceSpec:
    """A carrier-valued sequence, examined over the window
    [tail_start, tail_start + tail_len)."""

    generator: Callable[[Array], Array]
    tail_start: int = 1000
    tail_len: int = 100

    def __post_init__(self):
        if self.tail_len < 10:
            raise InputError(f"tail_len must be >= 10, got {self.tail_len}")
        if self.tail_start < 1:
            raise InputError(f"tail_start must be >= 1, got {self.tail_start}")

    def tail(self, carrier: Carrier) -> Array:
        n = np.arange(self.tail_start, self.tail_start + self.tail_len, dtype=float)
        points = np.asarray(self.generator(n), dtype=float)
        if points.shape != n.shape:
            points = np.broadcast_to(points, n.shape).astype(float)
        if not np.all(np.isfinite(points)):
            raise InputError("sequence tail contains non-finite points")
        if not carrier.contains(points, tol=1e-9):
            raise InputError(
                f"sequence tail leaves the carrier [{carrier.lo}, {carrier.hi}]"
            )
        return np.clip(points, carrier.lo, carrier.hi)


def sequence_from_expr(text: str, tail_start: int = 1000, tail_len: int = 100) -> SequenceSpec:
    """Build a sequence from an expression in the single variable n."""
    tree = parse(text)
    extra = variables(tree) - {"n"}
    if extra:
        raise InputError(f"sequence expression may only use n, found {sorted(extra)}")
    return SequenceSpec(lambda n: eval_on_arrays(tree, n=n), tail_start, tail_len)


@dataclass(frozen=True)
class Family:
    maps: tuple[SelfMap, ...]

    def __post_init__(self):
        if not self.maps:
            raise InputError("family must be nonempty")
        if len({m.carrier for m in self.maps}) != 1:
            raise InputError("family members must share one carrier")


def _tail_stats(values: Array, tol: float) -> dict:
    lo, hi = float(np.min(values)), float(np.max(values))
    spread = hi - lo
    return {"limit": (lo + hi) / 2.0, "spread": spread, "converged": spread < tol}


@dataclass(frozen=True)
class CoincidenceResult:
    points: tuple[float, ...]
    coincide_everywhere: bool
    tol: float

    def to_dict(self) -> dict:
        return {"points": list(self.points),
                "coincide_everywhere": self.coincide_everywhere, "tol": self.tol}


def find_coincidence_points(f: SelfMap, g: SelfMap, tol: float = 1e-9) -> CoincidenceResult:
    """Carrier points where f and g agree within tol.

    Grid hits are refined from sign changes of h = f - g by bisection;
    candidates closer than one grid spacing are merged, keeping the one with
    the smallest |h|.  When the maps agree everywhere on the grid, every grid
    point is returned and the everywhere flag is set instead of merging.
    """
    if f.carrier != g.carrier:
        raise InputError("coincidence search needs a shared carrier")
    if not tol > 0.0:
        raise InputError(f"tolerance must be positive, got {tol}")
    grid = f.carrier.points()
    h = f(grid) - g(grid)
    if bool(np.all(np.abs(h) < tol)):
        return CoincidenceResult(tuple(float(x) for x in grid), True, tol)

    candidates = [float(x) for x in grid[np.abs(h) < tol]]
    for i in np.nonzero(h[:-1] * h[1:] < 0.0)[0]:
        lo, hi = float(grid[i]), float(grid[i + 1])
        hlo = float(h[i])
        for _ in range(_BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            hm = f.at(mid) - g.at(mid)
            if hm == 0.0:
                lo = hi = mid
                break
            if (hm > 0.0) == (hlo > 0.0):
                lo, hlo = mid, hm
            else:
                hi = mid
        candidates.append(0.5 * (lo + hi))

    if not candidates:
        return CoincidenceResult((), False, tol)

    candidates.sort()
    spacing = f.carrier.spacing
    clusters: list[list[float]] = [[candidates[0]]]
    for x in candidates[1:]:
        if x - clusters[-1][-1] <= spacing:
            clusters[-1].append(x)
        else:
            clusters.append([x])
    merged = []
    for cluster in clusters:
        best = min(cluster, key=lambda x: (abs(f.at(x) - g.at(x)), x))
        if abs(f.at(best) - g.at(best)) < tol:
            merged.append(best)
    return CoincidenceResult(tuple(merged), False, tol)


@dataclass(frozen=True)
class CommutationReport:
    variant: str
    r_constant: float | None
    status: str  # "pass" | "fail"
    worst_margin: float
    tolerance: float
    samples: int
    witness: dict | None

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        return {"variant": self.variant, "r_constant": self.r_constant,
                "status": self.status, "worst_margin": self.worst_margin,
                "tolerance": self.tolerance, "samples": self.samples,
                "witness": self.witness}


def check_commutation_variant(
    pair: MapPair,
    variant: str,
    r_constant: float = 1.0,
    points: Sequence[float] | None = None,
    t_grid: Sequence[float] = DEFAULT_T_GRID,
) -> CommutationReport:
    """Check one commutation variant's defining inequality at every
    (point, t) sample, margin tolerance -1e-9.

    Variant inequalities for a pair (A, S), all for t > 0:

        commuting          M(ASx, SAx, t) = 1
        weakly_commuting   M(ASx, SAx, t) >= M(Ax, Sx, t)
        r_weak             M(ASx, SAx, t) >= M(Ax, Sx, t/R)
        r_weak_Ag          M(SAx, AAx, t) >= M(Ax, Sx, t/R)
        r_weak_Af          M(ASx, SSx, t) >= M(Ax, Sx, t/R)
        r_weak_P           M(AAx, SSx, t) >= M(Ax, Sx, t/R)
        weakly_compatible  M(ASu, SAu, t) = 1 at supplied coincidence points u
    """
    if variant not in COMMUTATION_VARIANTS:
        raise InputError(
            f"unknown commutation variant {variant!r}; expected one of "
            f"{COMMUTATION_VARIANTS}"
        )
    needs_r = variant in ("r_weak", "r_weak_Ag", "r_weak_Af", "r_weak_P")
    if needs_r and not r_constant > 0.0:
        raise InputError(f"R must be positive, got {r_constant}")
    if variant == "weakly_compatible":
        if points is None or len(points) == 0:
            raise InputError(
                "weakly_compatible requires the detected coincidence points"
            )
    ts = np.asarray(list(t_grid), dtype=float)
    if ts.size == 0 or np.any(ts <= 0.0):
        raise InputError(f"t_grid must be nonempty and positive: {t_grid}")
    xs = (np.asarray(list(points), dtype=float)
          if points is not None else pair.first.carrier.points())

    a, s, m = pair.first, pair.second, pair.fm.membership
    ax, sx = a(xs), s(xs)
    t_row = ts[None, :]

    def mm(u: Array, v: Array) -> Array:
        return np.asarray(m(u[:, None], v[:, None], t_row), dtype=float)

    if variant in ("commuting", "weakly_compatible"):
        margins = mm(a(sx), s(ax)) - 1.0
    elif variant == "weakly_commuting":
        margins = mm(a(sx), s(ax)) - np.asarray(m(ax[:, None], sx[:, None], t_row), dtype=float)
    else:
        rhs = np.asarray(m(ax[:, None], sx[:, None], t_row / r_constant), dtype=float)
        if variant == "r_weak":
            lhs = mm(a(sx), s(ax))
        elif variant == "r_weak_Ag":
            lhs = mm(s(ax), a(ax))
        elif variant == "r_weak_Af":
            lhs = mm(a(sx), s(sx))
        else:  # r_weak_P
            lhs = mm(a(ax), s(sx))
        margins = lhs - rhs

    tol = -1e-9
    flat = margins.ravel()
    worst = float(np.min(flat))
    bad = np.nonzero(flat < tol)[0]
    witness = None
    if bad.size:
        i, j = np.unravel_index(int(bad[0]), margins.shape)
        witness = {"x": float(xs[i]), "t": float(ts[j]),
                   "margin": float(margins[i, j])}
    status = "pass" if witness is None else "fail"
    return CommutationReport(variant, r_constant if needs_r else None, status,
                             worst, tol, int(flat.size), witness)


@dataclass(frozen=True)
class CompatibilityReport:
    status: str  # "compatible" | "noncompatible" | "inconclusive"
    image_limits: dict
    membership_limits: list
    witness: dict | None
    note: str

    def to_dict(self) -> dict:
        return {"status": self.status, "image_limits": self.image_limits,
                "membership_limits": self.membership_limits,
                "witness": self.witness, "note": self.note}


def check_compatibility_on_sequence(
    pair: MapPair,
    seq: SequenceSpec,
    t_grid: Sequence[float] = DEFAULT_T_GRID,
    tol: float = 1e-3,
) -> CompatibilityReport:
    """Compatibility along one sequence: both image tails must reach a common
    limit, then M(ASx_n, SAx_n, t) must tend to 1 at every sampled t.

    Verdicts: compatible, noncompatible (witness t where the membership tail
    settles away from 1), or inconclusive (tails diverge or the common-limit
    precondition fails, with diagnostics)."""
    xs = seq.tail(pair.fm.carrier)
    a, s, m = pair.first, pair.second, pair.fm.membership
    ax, sx = a(xs), s(xs)
    stats_a = _tail_stats(ax, tol)
    stats_s = _tail_stats(sx, tol)
    image_limits = {pair.first.label: stats_a, pair.second.label: stats_s}
    precondition = (stats_a["converged"] and stats_s["converged"]
                    and abs(stats_a["limit"] - stats_s["limit"]) < tol)
    if not precondition:
        return CompatibilityReport(
            "inconclusive", image_limits, [], None,
            "image tails do not reach a common limit within tol; "
            "Def-2.6 hypothesis not established on this sequence")

    ts = np.asarray(list(t_grid), dtype=float)
    asx, sax = a(sx), s(ax)
    membership_limits = []
    witness = None
    for t in ts:
        mv = np.asarray(m(asx, sax, np.full(xs.shape, float(t))), dtype=float)
        stats = _tail_stats(mv, tol)
        entry = {"t": float(t), **stats, "gap_to_one": 1.0 - stats["limit"]}
        membership_limits.append(entry)
        if witness is None and stats["converged"] and entry["gap_to_one"] > tol:
            witness = entry
    if witness is not None:
        return CompatibilityReport(
            "noncompatible", image_limits, membership_limits, witness,
            "membership tail settles away from 1")
    if all(e["converged"] and e["gap_to_one"] <= tol for e in membership_limits):
        return CompatibilityReport(
            "compatible", image_limits, membership_limits, None,
            "Cauchy-tail surrogate for the limit, tail "
            f"[{seq.tail_start}, {seq.tail_start + seq.tail_len})")
    return CompatibilityReport(
        "inconclusive", image_limits, membership_limits, None,
        "membership tail did not settle within tol")


@dataclass(frozen=True)
class EAReport:
    status: str  # "pass" | "fail"
    limit: float | None
    per_map: list
    common: bool
    note: str

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        return {"status": self.status, "limit": self.limit,
                "per_map": self.per_map, "common": self.common, "note": self.note}


def check_property_EA(pairs, seqs, tol: float = 1e-3) -> EAReport:
    """Property (E.A.) for one pair, or its common form for two pairs.

    Each pair contributes the image tails of both its maps along its own
    sequence; the property holds when every tail converges and all limits
    agree within tol.  The reported limit is the midpoint of all tail hulls.
    """
    if isinstance(pairs, MapPair):
        pairs = (pairs,)
        seqs = (seqs,)
    pairs = tuple(pairs)
    seqs = tuple(seqs)
    if len(pairs) not in (1, 2) or len(seqs) != len(pairs):
        raise InputError("property (E.A.) takes one pair or two pairs, with "
                         "one sequence per pair")

    per_map = []
    all_lo, all_hi = math.inf, -math.inf
    converged = True
    for pair, seq in zip(pairs, seqs):
        xs = seq.tail(pair.fm.carrier)
        for sm in (pair.first, pair.second):
            imgs = sm(xs)
            stats = _tail_stats(imgs, tol)
            per_map.append({"map": sm.label, **stats})
            converged &= stats["converged"]
            all_lo = min(all_lo, float(np.min(imgs)))
            all_hi = max(all_hi, float(np.max(imgs)))
    spread = all_hi - all_lo
    limits_agree = spread < tol
    common = len(pairs) == 2
    if converged and limits_agree:
        return EAReport("pass", (all_lo + all_hi) / 2.0, per_map, common,
                        "all tails share one limit within tol (Cauchy-tail surrogate)")
    note = ("some tail failed to converge" if not converged
            else f"tail limits disagree: joint spread {spread}")
    return EAReport("fail", None, per_map, common, note)


@dataclass(frozen=True)
class ContainmentReport:
    status: str  # "pass" | "fail"
    inner_hull: tuple[float, float]
    outer_hull: tuple[float, float]
    closure: bool
    witness: dict | None

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        return {"status": self.status, "inner_hull": list(self.inner_hull),
                "outer_hull": list(self.outer_hull), "closure": self.closure,
                "witness": self.witness}


def check_range_containment(
    inner: SelfMap, outer: SelfMap, tol: float = 1e-9, closure: bool = False
) -> ContainmentReport:
    """Interval-hull containment of sampled ranges: inner(X) inside outer(X)
    within tol.  Hulls of grid images are closed sets, so the closure variant
    differs only in labeling."""
    if inner.carrier != outer.carrier:
        raise InputError("containment check needs a shared carrier")
    grid = inner.carrier.points()
    in_imgs = inner(grid)
    out_imgs = outer(grid)
    inner_hull = (float(np.min(in_imgs)), float(np.max(in_imgs)))
    outer_hull = (float(np.min(out_imgs)), float(np.max(out_imgs)))
    witness = None
    if inner_hull[0] < outer_hull[0] - tol:
        i = int(np.argmin(in_imgs))
        witness = {"x": float(grid[i]), "image": float(in_imgs[i]),
                   "outer_hull": list(outer_hull)}
    elif inner_hull[1] > outer_hull[1] + tol:
        i = int(np.argmax(in_imgs))
        witness = {"x": float(grid[i]), "image": float(in_imgs[i]),
                   "outer_hull": list(outer_hull)}
    status = "pass" if witness is None else "fail"
    return ContainmentReport(status, inner_hull, outer_hull, closure, witness)


@dataclass(frozen=True)
class ClosedReport:
    status: str  # "closed" | "not-verifiable"
    hull: tuple[float, float]
    sign_changes: int
    note: str

    @property
    def passed(self) -> bool:
        return self.status == "closed"

    def to_dict(self) -> dict:
        return {"status": self.status, "hull": list(self.hull),
                "sign_changes": self.sign_changes, "note": self.note}


def check_range_closed(
    f: SelfMap, tol: float = 1e-9, max_sign_changes: int = 16
) -> ClosedReport:
    """Closedness surrogate for the sampled range.

    Validates that f looks piecewise monotone (finite-difference sign changes
    below the bound), then confirms the hull endpoints are attained by grid
    images within tol.  A wildly oscillating map gets "not-verifiable", never
    a wrong verdict."""
    grid = f.carrier.points()
    imgs = f(grid)
    hull = (float(np.min(imgs)), float(np.max(imgs)))
    diffs = np.diff(imgs)
    signs = np.sign(diffs[np.abs(diffs) > tol])
    sign_changes = int(np.sum(signs[1:] != signs[:-1])) if signs.size > 1 else 0
    if sign_changes > max_sign_changes:
        return ClosedReport(
            "not-verifiable", hull, sign_changes,
            f"{sign_changes} monotonicity sign changes exceed the bound "
            f"{max_sign_changes}; hull endpoints untrusted")
    attained_lo = bool(np.any(np.abs(imgs - hull[0]) <= tol))
    attained_hi = bool(np.any(np.abs(imgs - hull[1]) <= tol))
    if attained_lo and attained_hi:
        return ClosedReport("closed", hull, sign_changes,
                            "hull endpoints attained by grid images")
    return ClosedReport("not-verifiable", hull, sign_changes,
                        "hull endpoint not attained on the grid")


def compose_family(fam: Family) -> SelfMap:
    """Composition in declared order: [f1, f2, ..., fl] composes to
    f1 after f2 after ... after fl."""
    composed = fam.maps[-1]
    for sm in reversed(fam.maps[:-1]):
        composed = compose_maps(sm, composed)
    return composed


@dataclass(frozen=True)
class FamilyCommutingReport:
    status: str  # "pass" | "fail"
    identities_checked: int
    failures: tuple

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        return {"status": self.status, "identities_checked": self.identities_checked,
                "failures": list(self.failures)}


def check_family_commuting(
    fam_a: Family, fam_b: Family, fam_f: Family, fam_g: Family,
    tol: float = 1e-9,
) -> FamilyCommutingReport:
    """Pairwise commutation battery for four families: every pair inside each
    family must commute pointwise on the grid, plus every cross pair between
    the first and third families and between the second and fourth."""
    identities: list[tuple[SelfMap, SelfMap]] = []
    for fam in (fam_a, fam_b, fam_f, fam_g):
        ms = fam.maps
        identities.extend((ms[i], ms[j]) for i in range(len(ms)) for j in range(i + 1, len(ms)))
    identities.extend((p, q) for p in fam_a.maps for q in fam_f.maps)
    identities.extend((p, q) for p in fam_b.maps for q in fam_g.maps)

    carrier = fam_a.maps[0].carrier
    grid = carrier.points()
    failures = []
    for p, q in identities:
        if p.carrier != carrier or q.carrier != carrier:
            raise InputError("family commutation check needs one shared carrier")
        pq = p(q(grid))
        qp = q(p(grid))
        gap = np.abs(pq - qp)
        i = int(np.argmax(gap))
        if gap[i] > tol:
            failures.append({"maps": [p.label, q.label], "x": float(grid[i]),
                             "first_then_second": float(qp[i]),
                             "second_then_first": float(pq[i]),
                             "gap": float(gap[i])})
    status = "pass" if not failures else "fail"
    return FamilyCommutingReport(status, len(identities), tuple(failures))
