"""String order analytics: per-site order parameters, the normalized
correlation function f, the efficiency constant kappa, packing cost F, and
the convexity / moon-edge diagnostics behind the dense-packing optimality
argument.

A :class:`StringOrderProfile` is a plain container of numbers extracted from
one ground state; every function here is pure. Synthetic profiles (toy f
shapes on arbitrary grids) are first-class citizens so that the geometric
machinery can be tested against closed forms.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .groundstate import GroundState, expectation
from .pauli import string_order_geq, string_order_pair

F_TAIL_CUTOFF = 1e-12
CLUSTER_POINT_EPS = 1e-12
XI_FIT_UPPER = 0.5
XI_FIT_LOWER = 1e-6


@dataclass
class StringOrderProfile:
    """Scalar string-order data of one ground state, one endpoint parity."""

    parity: str                      # 'odd' (z-rotations) or 'even' (x-rotations)
    n_sites: int
    alpha: float
    k_geq: dict[int, float]          # site k -> <K_{>=k}>
    k_pair: dict[float, float]       # distance -> <K(distance)>, bulk centered
    bulk_value: float                # <K_>> at the central site
    f_values: dict[float, float]     # distance -> f, includes f(0) = 1
    xi_estimate: float               # fitted decay length in sites

    @property
    def deltas(self) -> list[float]:
        return sorted(self.k_pair)


@dataclass(frozen=True)
class ConvexityReport:
    is_convex: bool
    worst_violation: float           # most negative second difference
    violating_distances: tuple[float, ...]
    monotone_decreasing: bool
    worst_increase: float


@dataclass(frozen=True)
class MoonEdgeAreas:
    areas: dict[tuple[float, float], float]
    total: float                     # M_f for the given spacing


# ----------------------------------------------------------------- profiling
def _central_site(n_sites: int, parity: str) -> int:
    k = (n_sites + 1) // 2
    want_odd = parity == "odd"
    if (k % 2 == 1) != want_odd:
        k -= 1
    return k


def _pair_sites(n_sites: int, parity: str, delta: int) -> tuple[int, int]:
    """Left endpoint so the pair operator is centered on the chain middle."""
    k = (n_sites + 1) // 2 - delta // 2
    want_odd = parity == "odd"
    if (k % 2 == 1) != want_odd:
        k -= 1
    k = max(k, 1 if want_odd else 2)
    if k + delta > n_sites:
        raise ValueError(f"pair of span {delta} does not fit on {n_sites} sites")
    return k, k + delta


def default_delta_grid(n_sites: int) -> list[int]:
    top = min(60, n_sites // 3)
    return list(range(2, top + 1, 2))


def fit_decay_length(f_values: dict[float, float]) -> float:
    """Least-squares decay length of log f, windowed away from both ends."""
    xs = [x for x, v in sorted(f_values.items()) if x > 0 and XI_FIT_LOWER <= v <= XI_FIT_UPPER]
    if len(xs) < 2:
        return 0.0
    ys = [math.log(f_values[x]) for x in xs]
    slope = np.polyfit(xs, ys, 1)[0]
    if slope >= 0:
        return math.inf
    return float(-1.0 / slope)


def profile(
    state: GroundState,
    parity: str = "odd",
    deltas: list[int] | None = None,
) -> StringOrderProfile:
    """Measure <K_{>=k}> for every k of one parity and <K(Delta)> on a bulk grid."""
    if parity not in ("odd", "even"):
        raise ValueError(f"parity must be 'odd' or 'even', got {parity!r}")
    if not state.convergence.converged:
        raise ValueError("refusing to profile a non-converged ground state")
    n = state.n_sites
    start = 1 if parity == "odd" else 2
    k_geq = {
        k: expectation(state, string_order_geq(k, n))
        for k in range(start, n, 2)
    }
    bulk = k_geq[_central_site(n, parity)]

    if deltas is None:
        deltas = default_delta_grid(n)
    k_pair: dict[float, float] = {}
    for d in deltas:
        if d <= 0 or d % 2:
            raise ValueError(f"pair distances must be positive even integers, got {d}")
        k, l = _pair_sites(n, parity, d)
        k_pair[float(d)] = expectation(state, string_order_pair(k, l, n))

    denom = 1.0 - bulk * bulk
    f_values: dict[float, float] = {0.0: 1.0}
    for d, value in k_pair.items():
        if denom < CLUSTER_POINT_EPS:
            f_values[d] = 0.0  # cluster point: numerator vanishes identically
        else:
            f_values[d] = (value - bulk * bulk) / denom

    return StringOrderProfile(
        parity=parity,
        n_sites=n,
        alpha=state.spec.alpha,
        k_geq=k_geq,
        k_pair=k_pair,
        bulk_value=bulk,
        f_values=f_values,
        xi_estimate=fit_decay_length(f_values),
    )


def make_synthetic_profile(
    f_samples: dict[float, float],
    bulk_value: float,
    parity: str = "odd",
    n_sites: int = 0,
    alpha: float = 0.0,
) -> StringOrderProfile:
    """Profile carrying a hand-made f; pair values are reconstructed from f."""
    f_values = dict(f_samples)
    f_values.setdefault(0.0, 1.0)
    denom = 1.0 - bulk_value * bulk_value
    k_pair = {
        x: bulk_value * bulk_value + v * denom for x, v in f_values.items() if x > 0
    }
    return StringOrderProfile(
        parity=parity,
        n_sites=n_sites,
        alpha=alpha,
        k_geq={},
        k_pair=k_pair,
        bulk_value=bulk_value,
        f_values=f_values,
        xi_estimate=fit_decay_length(f_values),
    )


# -------------------------------------------------------------- factorization
def factorization_residual(state: GroundState, k: int, l: int) -> tuple[float, float]:
    """(operator-identity residual, decoupling residual) for a site pair.

    The first entry compares <K_{>=k} K_{>=l}> with <K_{k,l}>; these are equal
    as operators, so it probes only the evaluator. The second compares
    <K_{k,l}> with <K_{>=k}><K_{>=l}> and decays with the separation.
    """
    if (l - k) % 2 != 0:
        raise ValueError(f"k and l must share parity, got k={k}, l={l}")
    n = state.n_sites
    geq_k = string_order_geq(k, n)
    geq_l = string_order_geq(l, n)
    pair = string_order_pair(k, l, n)
    product_value = expectation(state, geq_k * geq_l)
    pair_value = expectation(state, pair)
    identity_residual = abs(product_value - pair_value)
    decoupling_residual = abs(pair_value - expectation(state, geq_k) * expectation(state, geq_l))
    return identity_residual, decoupling_residual


# -------------------------------------------------------------------- kappa
def _f_at(prof: StringOrderProfile, x: float) -> float:
    """f at distance x: exact grid hit, geometric tail beyond the grid."""
    if x in prof.f_values:
        return prof.f_values[x]
    xs = sorted(prof.f_values)
    if x > xs[-1]:
        return _geometric_tail_value(prof, x)
    # off-grid interior lookup: interpolate on the sampled grid
    ys = [prof.f_values[t] for t in xs]
    return float(CubicSpline(xs, ys)(x))


def _geometric_tail_value(prof: StringOrderProfile, x: float) -> float:
    xs = sorted(prof.f_values)
    if len(xs) < 2:
        return 0.0
    x1, x2 = xs[-2], xs[-1]
    f1, f2 = prof.f_values[x1], prof.f_values[x2]
    if f2 <= 0 or f1 <= f2:
        return 0.0
    rate = math.log(f1 / f2) / (x2 - x1)
    return f2 * math.exp(-rate * (x - x2))


def kappa(prof: StringOrderProfile, m: int, delta: int) -> float:
    """Efficiency constant (1 + 2 sum_{j<m} f(j Delta)) (1/<K>^2 - 1)."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if delta < 2 or delta % 2:
        raise ValueError(f"delta must be an even integer >= 2, got {delta}")
    b = prof.bulk_value
    if abs(b) < 1e-12:
        raise ValueError("string order vanishes; kappa is singular outside the phase")
    tail = sum(_f_at(prof, float(j * delta)) for j in range(1, m))
    return (1.0 + 2.0 * tail) * (1.0 / (b * b) - 1.0)


def F_of_delta(prof: StringOrderProfile, n_region: int, delta: int) -> float:
    """Packing cost F(Delta) = (Delta/n)(1 + 2 sum_{j>=1} f(j Delta)).

    The sum runs over the sampled grid, continues with a geometric tail fitted
    to the last samples, and is truncated once terms drop below the cutoff; a
    closed-form geometric remainder is added so exact exponentials are summed
    exactly.
    """
    if delta < 1 or n_region % delta:
        raise ValueError(f"delta={delta} must divide n_region={n_region}")
    total = 0.0
    j = 1
    prev = None
    term = None
    while True:
        term = _f_at(prof, float(j * delta))
        if abs(term) < F_TAIL_CUTOFF:
            break
        total += term
        if j > 10_000:  # safety for pathological non-decaying synthetic input
            break
        prev = term
        j += 1
    if prev is not None and term is not None and 0 < term < prev:
        ratio = term / prev
        if 0 < ratio < 1:
            total += term * ratio / (1 - ratio)
    return (delta / n_region) * (1.0 + 2.0 * total)


# ---------------------------------------------------------------- convexity
def convexity_check(prof: StringOrderProfile, tol: float = 1e-6) -> ConvexityReport:
    """Discrete second differences of <K(Delta)> on its uniform grid."""
    xs = prof.deltas
    if len(xs) < 3:
        raise ValueError(f"need at least 3 grid points, got {len(xs)}")
    steps = np.diff(xs)
    if not np.allclose(steps, steps[0]):
        raise ValueError("pair values must be sampled on a uniform grid")
    ys = np.array([prof.k_pair[x] for x in xs])
    second = ys[2:] - 2 * ys[1:-1] + ys[:-2]
    worst = float(second.min())
    violating = tuple(float(xs[i + 1]) for i in np.flatnonzero(second < -tol))
    first = np.diff(ys)
    worst_increase = float(first.max())
    return ConvexityReport(
        is_convex=worst >= -tol,
        worst_violation=worst,
        violating_distances=violating,
        monotone_decreasing=worst_increase <= tol,
        worst_increase=worst_increase,
    )


def moon_edge_areas(prof: StringOrderProfile, delta: float) -> MoonEdgeAreas:
    """Chord-minus-curve areas of f on consecutive intervals of width delta.

    Each area is the trapezoid through the interval endpoints minus the
    integral of the cubic-spline interpolant of f; for convex f every area is
    non-negative and their sum is the quantity minimized at the densest
    packing.
    """
    xs = sorted(prof.f_values)
    if len(xs) < 3:
        raise ValueError("profile carries too few f samples to interpolate")
    ys = [prof.f_values[x] for x in xs]
    second = np.diff(ys, 2)
    if second.size and second.min() < -1e-9:
        warnings.warn("f samples are not convex; moon-edge areas may be negative", stacklevel=2)
    spline = CubicSpline(xs, ys)
    top = xs[-1]
    areas: dict[tuple[float, float], float] = {}
    total = 0.0
    i = 0
    while (i + 1) * delta <= top + 1e-12:
        a, b = i * delta, min((i + 1) * delta, top)
        fa, fb = float(spline(a)), float(spline(b))
        chord = 0.5 * (fa + fb) * (b - a)
        area = chord - float(spline.integrate(a, b))
        areas[(a, b)] = area
        total += area
        i += 1
    return MoonEdgeAreas(areas=areas, total=total)


# ------------------------------------------------------------------- export
def export_profile_csv(prof: StringOrderProfile, directory: str | Path, stem: str = "profile") -> tuple[Path, Path]:
    """Two CSV files: (delta, K_pair, f) and (k, K_geq)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    pair_path = directory / f"{stem}_pairs.csv"
    site_path = directory / f"{stem}_sites.csv"
    with pair_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delta", "K_pair", "f"])
        for d in prof.deltas:
            writer.writerow([_fmt(d), _fmt(prof.k_pair[d]), _fmt(prof.f_values[d])])
    with site_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "K_geq"])
        for k in sorted(prof.k_geq):
            writer.writerow([k, _fmt(prof.k_geq[k])])
    return pair_path, site_path


def export_profile_json(
    prof: StringOrderProfile,
    path: str | Path,
    m_values: list[int] = (2, 4, 8, 16),
    deltas: list[int] = (2, 4, 8),
    convexity_tol: float = 1e-6,
) -> Path:
    path = Path(path)
    report = convexity_check(prof, convexity_tol)
    kappa_table = [
        {"m": m, "delta": d, "kappa": kappa(prof, m, d)}
        for m in m_values
        for d in deltas
    ]
    path.write_text(
        json.dumps(
            {
                "alpha": prof.alpha,
                "N": prof.n_sites,
                "parity": prof.parity,
                "bulk_value": prof.bulk_value,
                "xi_estimate": prof.xi_estimate,
                "kappa": kappa_table,
                "convexity": {
                    "is_convex": report.is_convex,
                    "worst_violation": report.worst_violation,
                    "violating_distances": list(report.violating_distances),
                    "monotone_decreasing": report.monotone_decreasing,
                },
            },
            indent=2,
        )
    )
    return path


def _fmt(x: float) -> str:
    return f"{x:.12g}"
