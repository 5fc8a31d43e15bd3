"""Logical channel induced by a block of equally-spaced symmetry-breaking
measurements, and the derived decoherence metrics.

All channels here act on the logical Bloch components (X, Y, Z). A z-axis
schedule (rotations on odd sites) mixes the X/Y components and fixes Z
exactly; an x-axis schedule (even sites) fixes X. The central quantity is

    E = < prod_k exp(i gamma K_{>= r_k}) >

over the chain ground state, with r_k the rotation sites. Two independent
evaluation routes are provided: an explicit expansion over the 2^m string
subsets, and a bond-dimension-2 operator network that scans the chain once
and scales to hundreds of rotation sites.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CapacityError
from .groundstate import GroundState, expectation
from .mps import apply_mpo_dense
from .pauli import PauliString, string_order_geq

SUBSET_LIMIT = 20


@dataclass(frozen=True)
class RotationSchedule:
    """Placement and strength of the symmetry-breaking measurements.

    ``gamma`` is the per-site measurement angle and ``beta_log`` the intended
    logical rotation angle; both are stored so either convention (auto-scaled
    or raw site angle) can be expressed. Rotation sites are
    ``buffer_d + k*delta`` for ``k = 0..m-1``.
    """

    axis: str                 # 'z' (odd sites) or 'x' (even sites)
    m: int
    delta: int
    buffer_d: int
    gamma: float
    beta_log: float

    def __post_init__(self):
        if self.axis not in ("z", "x"):
            raise ValueError(f"axis must be 'z' or 'x', got {self.axis!r}")
        if self.m < 0:
            raise ValueError(f"m must be non-negative, got {self.m}")
        if self.delta < 2 or self.delta % 2:
            raise ValueError(f"delta must be an even integer >= 2, got {self.delta}")
        if self.buffer_d < 1:
            raise ValueError(f"buffer_d must be positive, got {self.buffer_d}")
        want_odd = self.axis == "z"
        if (self.buffer_d % 2 == 1) != want_odd:
            raise ValueError(
                f"axis {self.axis!r} needs rotation sites of "
                f"{'odd' if want_odd else 'even'} parity; buffer_d={self.buffer_d}"
            )

    @classmethod
    def auto_scaled(cls, axis, m, delta, buffer_d, beta_log, bulk_value) -> "RotationSchedule":
        """Per-site angle scaled up by the inverse string order, beta/(m <K>)."""
        if m < 1:
            raise ValueError("auto-scaling needs m >= 1")
        if abs(bulk_value) < 1e-12:
            raise ValueError("string order vanishes; scaled angle is singular")
        return cls(axis, m, delta, buffer_d, beta_log / (m * bulk_value), beta_log)

    @classmethod
    def from_site_angle(cls, axis, m, delta, buffer_d, gamma, bulk_value) -> "RotationSchedule":
        """Raw per-site angle; the implied logical angle is m*gamma*<K>."""
        return cls(axis, m, delta, buffer_d, gamma, m * gamma * bulk_value)

    @property
    def rotation_sites(self) -> tuple[int, ...]:
        return tuple(self.buffer_d + k * self.delta for k in range(self.m))

    def check_fits(self, n_sites: int) -> None:
        """Last rotation site must leave the readout site (and its neighbour) free."""
        if self.m == 0:
            return
        last = self.buffer_d + (self.m - 1) * self.delta
        if last > n_sites - 2:
            raise ValueError(
                f"schedule does not fit: last rotation site {last} on N={n_sites} "
                f"(need <= N-2)"
            )


@dataclass(frozen=True)
class LogicalChannel:
    """3x3 action on the logical (X, Y, Z) components plus derived metrics."""

    matrix: np.ndarray
    gm: complex
    d_m: float
    beta_effective: float

    def to_json_dict(self, schedule: RotationSchedule | None = None) -> dict:
        out = {
            "matrix": [float(x) for x in self.matrix.ravel()],
            "gm": [self.gm.real, self.gm.imag],
            "d_m": self.d_m,
            "beta_effective": self.beta_effective,
        }
        if schedule is not None:
            out["schedule"] = {
                "axis": schedule.axis,
                "m": schedule.m,
                "delta": schedule.delta,
                "buffer_d": schedule.buffer_d,
                "gamma": schedule.gamma,
                "beta_log": schedule.beta_log,
            }
        return out


def export_channel_json(channel: LogicalChannel, schedule: RotationSchedule, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(channel.to_json_dict(schedule), indent=2))
    return path


# ------------------------------------------------------------------ targets
def target_rotation(axis: str, beta: float) -> np.ndarray:
    """Bloch-component matrix of the ideal rotation by ``beta`` about z or x."""
    c, s = math.cos(beta), math.sin(beta)
    if axis == "z":
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    if axis == "x":
        return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    raise ValueError(f"axis must be 'z' or 'x', got {axis!r}")


def decoherence(channel: np.ndarray, target: np.ndarray) -> float:
    """Distance sqrt(2 Tr[(M-R)^T (M-R)]) between two channel matrices."""
    channel = np.asarray(channel, dtype=float)
    target = np.asarray(target, dtype=float)
    if channel.shape != target.shape:
        raise ValueError(f"shape mismatch {channel.shape} vs {target.shape}")
    diff = channel - target
    return float(math.sqrt(2.0 * float(np.sum(diff * diff))))


def purity_loss(expectations: tuple[float, float, float]) -> float:
    """1 - <X>^2 - <Y>^2 - <Z>^2 of the readout qubit."""
    x, y, z = expectations
    for v in (x, y, z):
        if abs(v) > 1 + 1e-9:
            raise ValueError(f"Bloch component {v} outside [-1, 1]")
    return 1.0 - (x * x + y * y + z * z)


# --------------------------------------------------------------- evaluation
def _product_expectation(state: GroundState, schedule: RotationSchedule, method: str) -> complex:
    """E = < prod_k exp(i gamma K_{>= r_k}) > by subset expansion or network."""
    n = state.n_sites
    schedule.check_fits(n)
    if schedule.m == 0:
        return 1.0 + 0.0j
    if method == "auto":
        method = "subset" if schedule.m <= 10 and state.vector is not None else "network"
    if method == "subset":
        if schedule.m > SUBSET_LIMIT:
            raise CapacityError(
                f"subset expansion limited to m <= {SUBSET_LIMIT}, got m={schedule.m}"
            )
        return _subset_expectation(state, schedule)
    if method == "network":
        return _network_expectation(state, schedule)
    raise ValueError(f"unknown evaluation method {method!r}")


def _subset_expectation(state: GroundState, schedule: RotationSchedule) -> complex:
    n = state.n_sites
    sites = schedule.rotation_sites
    strings = [string_order_geq(r, n) for r in sites]
    c, s = math.cos(schedule.gamma), math.sin(schedule.gamma)
    total = 0.0 + 0.0j
    m = schedule.m
    for mask in range(1 << m):
        op = PauliString.identity(n)
        size = 0
        for k in range(m):
            if mask >> k & 1:
                op = op * strings[k]
                size += 1
        total += (c ** (m - size)) * ((1j * s) ** size) * expectation(state, op)
    return total


def _schedule_mpo(schedule: RotationSchedule, n_sites: int) -> list[np.ndarray]:
    """Bond-dimension-2 network for prod_k (cos g + i sin g K_{>= r_k}).

    The bond carries the parity of how many strings have been opened so far;
    that parity alone fixes the local letter at every site to the right of the
    first rotation site.
    """
    from .pauli import _MATRICES

    ident, x, z = _MATRICES[0], _MATRICES[1], _MATRICES[3]
    c, s = math.cos(schedule.gamma), math.sin(schedule.gamma)
    sites = set(schedule.rotation_sites)
    first = min(sites)
    odd_axis = schedule.axis == "z"

    tensors = []
    for site in range(1, n_sites + 1):
        before = site < first
        dl = 1 if site <= first else 2
        dr = 1 if site < first or site == n_sites else 2
        w = np.zeros((dl, dr, 2, 2), dtype=complex)
        if before:
            w[0, 0] = ident
        elif site in sites:
            # keeping parity skips this string; flipping parity opens it with a Z
            w[0, 0] = c * ident
            w[0, 1] = 1j * s * z
            if dl > 1:
                w[1, 1] = c * ident
                w[1, 0] = 1j * s * z
        elif site == n_sites:
            # string tails all end here: Z^parity on z-axis, X^parity on x-axis
            w[0, 0] = ident
            w[1, 0] = z if odd_axis else x
        else:
            alternating = (site % 2 == 0) if odd_axis else (site % 2 == 1)
            w[0, 0] = ident
            if dl > 1:
                w[1, 1] = x if alternating else ident
        tensors.append(w)
    return tensors


def _network_expectation(state: GroundState, schedule: RotationSchedule) -> complex:
    w_list = _schedule_mpo(schedule, state.n_sites)
    if state.vector is not None:
        return complex(np.vdot(state.vector, apply_mpo_dense(w_list, state.vector)))
    return state.mps.expectation_mpo(w_list)


# ----------------------------------------------------------------- channels
def channel_matrix(state: GroundState, schedule: RotationSchedule, method: str = "auto") -> LogicalChannel:
    """Evaluate the logical channel and its decoherence metrics.

    The returned ``d_m`` is the distance to the ideal ``beta_log`` rotation;
    ``gm`` is the phase-referenced deviation whose modulus obeys
    ``d_m = 2 |gm|`` identically.
    """
    e_value = _product_expectation(state, schedule, method)
    re, im = e_value.real, e_value.imag
    mat = np.eye(3)
    if schedule.axis == "z":
        mat[0, 0] = mat[1, 1] = re
        mat[0, 1] = -im
        mat[1, 0] = im
        beta_eff = math.atan2(im, re)
    else:
        mat[1, 1] = mat[2, 2] = re
        mat[1, 2] = -im
        mat[2, 1] = im
        beta_eff = math.atan2(im, re)
    gm = cmath.exp(-1j * schedule.beta_log) * e_value - 1.0
    d_m = decoherence(mat, target_rotation(schedule.axis, schedule.beta_log))
    return LogicalChannel(matrix=mat, gm=gm, d_m=d_m, beta_effective=beta_eff)


def gm_exact(state: GroundState, schedule: RotationSchedule, method: str = "auto") -> complex:
    """Deviation G_m = e^{-i beta_log} < prod_k e^{i gamma K} > - 1.

    For auto-scaled schedules ``beta_log = m gamma <K>``, so this is the
    mean-subtracted exponential expectation; ``2|G_m|`` equals the channel
    distance to the target rotation.
    """
    e_value = _product_expectation(state, schedule, method)
    return cmath.exp(-1j * schedule.beta_log) * e_value - 1.0


def plus_state_product_formula(state: GroundState, schedule: RotationSchedule, method: str = "auto") -> tuple[float, float]:
    """(<X>, <Y>) at readout for logical input ``|+>`` under a z-axis schedule."""
    if schedule.axis != "z":
        raise ValueError("the plus-input product formula applies to z-axis schedules")
    e_value = _product_expectation(state, schedule, method)
    return e_value.real, e_value.imag


def two_site_closed_form(
    k_geq_k: float,
    k_geq_l: float,
    k_pair: float,
    beta_k: float,
    beta_l: float,
) -> tuple[float, float, float]:
    """Readout Bloch vector for two measurements on sites k < l, input ``|+>``.

    The four expansion terms are a symmetry, string order parameters, or
    operators anti-commuting with a symmetry; only three survive.
    """
    for v in (k_geq_k, k_geq_l, k_pair):
        if abs(v) > 1 + 1e-9:
            raise ValueError(f"string order value {v} outside [-1, 1]")
    x = math.cos(beta_k) * math.cos(beta_l) - math.sin(beta_k) * math.sin(beta_l) * k_pair
    y = math.sin(beta_k) * math.cos(beta_l) * k_geq_k + math.sin(beta_l) * math.cos(beta_k) * k_geq_l
    return x, y, 0.0
