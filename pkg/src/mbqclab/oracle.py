"""Ground-truth MBQC simulator by exhaustive branch enumeration.

Sites 1..N-1 are measured in order in the adapted in-plane basis
``cos(beta) X - (-1)^q sin(beta) Y`` where the sign bit q is the parity of
earlier outcomes on the opposite-parity sites; site N is read out
tomographically. Every one of the 2^(N-1) outcome branches is projected
explicitly, so the result is exact up to the ground-state residual - this is
the oracle that validates the product-formula channel.

Logical outputs are accumulated with the side-processed readout parities:
outcomes on odd sites flip the X (and Y) readout, outcomes on even sites flip
the Z (and Y) readout.

The full 3x3 channel is reconstructed from three preparations that differ
only in the basis of site 1:

* ``x``: the standard wire; the logical input is exactly (1, 0, 0).
* ``y``: site 1 measured at in-plane angle pi/2; logical input (0, 1, 0).
* ``z``: site 1 measured in the computational basis, with its outcome folded
  into the Z readout parity as an extra byproduct; logical input (0, 0, 1).

On the symmetric ground state these inputs are exact (each preparation's
input observable is a product of one chain symmetry with the measured
pattern), so oracle and product formula agree to solver precision.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CapacityError
from .groundstate import GroundState
from .channel import RotationSchedule
from .pauli import PauliString

ORACLE_SITE_LIMIT = 14

_PAULI_1Q = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class MeasurementPlan:
    """Per-site measurement angles for sites 1..N-1 plus the preparation basis."""

    n_sites: int
    angles: tuple[float, ...]         # beta_i for sites 1..N-1; 0 = wire
    readout_basis: str = "x"
    first_site_basis: str = "x"

    def __post_init__(self):
        if len(self.angles) != self.n_sites - 1:
            raise ValueError(
                f"need {self.n_sites - 1} angles for sites 1..N-1, got {len(self.angles)}"
            )
        if self.readout_basis not in ("x", "y", "z"):
            raise ValueError(f"readout basis must be x, y or z, got {self.readout_basis!r}")
        if self.first_site_basis not in ("x", "y", "z"):
            raise ValueError(f"first-site basis must be x, y or z, got {self.first_site_basis!r}")

    @classmethod
    def wire(cls, n_sites: int) -> "MeasurementPlan":
        return cls(n_sites, (0.0,) * (n_sites - 1))

    @classmethod
    def from_schedule(cls, schedule: RotationSchedule, n_sites: int) -> "MeasurementPlan":
        schedule.check_fits(n_sites)
        angles = [0.0] * (n_sites - 1)
        for site in schedule.rotation_sites:
            angles[site - 1] = schedule.gamma
        return cls(n_sites, tuple(angles))

    @classmethod
    def two_site(cls, n_sites: int, k: int, l: int, beta_k: float, beta_l: float) -> "MeasurementPlan":
        if not 1 <= k < l <= n_sites - 1:
            raise IndexError(f"rotation sites must satisfy 1 <= k < l <= N-1")
        angles = [0.0] * (n_sites - 1)
        angles[k - 1] = beta_k
        angles[l - 1] = beta_l
        return cls(n_sites, tuple(angles))


@dataclass
class OracleResult:
    expectations: tuple[float, float, float]   # plus-input readout Bloch vector
    channel: np.ndarray | None                 # 3x3, None if only one preparation ran
    n_branches: int
    max_prob_deviation: float

    def to_json_dict(self) -> dict:
        out = {
            "expectations": list(self.expectations),
            "n_branches": self.n_branches,
            "max_prob_deviation": self.max_prob_deviation,
        }
        if self.channel is not None:
            out["channel"] = [float(x) for x in self.channel.ravel()]
        return out


# ------------------------------------------------------------ side processing
def side_process_q(outcomes, site: int) -> int:
    """Adaptation bit: parity of outcomes at sites site-1, site-3, ... >= 1."""
    if site < 2:
        raise ValueError(f"adaptation starts at site 2, got {site}")
    total = 0
    for j in range(site - 1, 0, -2):
        total ^= outcomes[j - 1] & 1
    return total


def readout_bit(outcomes, basis: str) -> int:
    """Output parity over the record (length N-1) for the given readout basis."""
    if basis == "x":
        sites = range(1, len(outcomes) + 1, 2)
    elif basis == "y":
        sites = range(1, len(outcomes) + 1)
    elif basis == "z":
        sites = range(2, len(outcomes) + 1, 2)
    else:
        raise ValueError(f"readout basis must be x, y or z, got {basis!r}")
    total = 0
    for j in sites:
        total ^= outcomes[j - 1] & 1
    return total


# ---------------------------------------------------------------- projection
def _inplane_observable(beta: float, q: int) -> np.ndarray:
    sign = -1.0 if q else 1.0
    return np.cos(beta) * _PAULI_1Q["x"] - sign * np.sin(beta) * _PAULI_1Q["y"]


def _apply_site_matrix(vec: np.ndarray, mat: np.ndarray, site: int, n: int) -> np.ndarray:
    block = vec.reshape(1 << (site - 1), 2, 1 << (n - site))
    return np.einsum("pq,lqr->lpr", mat, block).reshape(vec.size)


def _last_qubit_bloch(vec: np.ndarray) -> tuple[float, float, float]:
    block = vec.reshape(-1, 2)
    cross = complex(np.vdot(block[:, 0], block[:, 1]))
    pop0 = float(np.vdot(block[:, 0], block[:, 0]).real)
    pop1 = float(np.vdot(block[:, 1], block[:, 1]).real)
    return 2 * cross.real, 2 * cross.imag, pop0 - pop1


def _enumerate(state: GroundState, plan: MeasurementPlan, relabel_site: int | None = None):
    """Sum over all outcome branches; returns signed Bloch sums and diagnostics.

    ``relabel_site`` flips the outcome labels of one site and compensates with
    the byproduct bookkeeping; the result must be unchanged (a consistency
    check of the adaptation conventions).
    """
    if state.vector is None:
        raise ValueError("the oracle runs on dense statevectors only")
    n = state.n_sites
    if n > ORACLE_SITE_LIMIT:
        raise CapacityError(f"branch enumeration limited to N <= {ORACLE_SITE_LIMIT}")
    angles = list(plan.angles)

    totals = np.zeros(3)
    prob_sum = 0.0
    n_branches = 0

    # stack entries: (next_site, vector, parity_odd, parity_even, z_extra)
    stack = [(1, state.vector, 0, 0, 0)]
    while stack:
        site, vec, par_odd, par_even, z_extra = stack.pop()
        if site == n:
            x, y, z = _last_qubit_bloch(vec)
            # a computational-basis preparation turns s_1 into an X-type
            # byproduct on the logical qubit: it flips the Y and Z readouts
            sign_x = -1.0 if par_odd else 1.0
            sign_y = -1.0 if par_odd ^ par_even ^ z_extra else 1.0
            sign_z = -1.0 if par_even ^ z_extra else 1.0
            totals += np.array([sign_x * x, sign_y * y, sign_z * z])
            prob_sum += float(np.vdot(vec, vec).real)
            n_branches += 1
            continue

        if site == 1 and plan.first_site_basis == "z":
            obs = _PAULI_1Q["z"]
        else:
            beta = angles[site - 1]
            if site == 1 and plan.first_site_basis == "y":
                beta = np.pi / 2
            q = (par_even if site % 2 else par_odd) if site > 1 else 0
            obs = _inplane_observable(beta, q)
        if relabel_site == site:
            obs = -obs

        for outcome in (0, 1):
            eig = 1.0 if outcome == 0 else -1.0
            projector = 0.5 * (np.eye(2) + eig * obs)
            child = _apply_site_matrix(vec, projector, site, n)
            if float(np.vdot(child, child).real) < 1e-28:
                continue
            bit = outcome
            if relabel_site == site:
                # relabeled outcome: downstream bookkeeping sees the complement
                bit = outcome ^ 1
            new_odd = par_odd ^ (bit if site % 2 else 0)
            new_even = par_even ^ (bit if site % 2 == 0 else 0)
            new_extra = z_extra
            if site == 1 and plan.first_site_basis == "z":
                new_extra ^= bit
            stack.append((site + 1, child, new_odd, new_even, new_extra))

    return totals, prob_sum, n_branches


def enumerate_logical_expectations(
    state: GroundState, plan: MeasurementPlan, relabel_site: int | None = None
) -> OracleResult:
    """Readout Bloch vector for one preparation, summed over all branches."""
    totals, prob_sum, n_branches = _enumerate(state, plan, relabel_site)
    return OracleResult(
        expectations=(float(totals[0]), float(totals[1]), float(totals[2])),
        channel=None,
        n_branches=n_branches,
        max_prob_deviation=abs(prob_sum - 1.0),
    )


def enumerate_channel(state: GroundState, plan: MeasurementPlan) -> OracleResult:
    """Full 3x3 channel from the x, y and z preparations of site 1.

    Each preparation injects a unit logical Bloch vector along one axis, so
    the three readout vectors are the columns of the channel matrix.
    """
    columns = []
    worst = 0.0
    branches = 0
    plus = None
    for basis in ("x", "y", "z"):
        variant = MeasurementPlan(
            plan.n_sites, plan.angles, plan.readout_basis, first_site_basis=basis
        )
        result = enumerate_logical_expectations(state, variant)
        columns.append(result.expectations)
        worst = max(worst, result.max_prob_deviation)
        branches += result.n_branches
        if basis == "x":
            plus = result.expectations
    channel = np.column_stack(columns)
    return OracleResult(
        expectations=plus,
        channel=channel,
        n_branches=branches,
        max_prob_deviation=worst,
    )


# ------------------------------------------------- decorated-operator route
def decorated_expectation(state: GroundState, plan: MeasurementPlan, which: str) -> float:
    """<X/Y/Z readout> by expanding the decorated observables into Pauli strings.

    Independent of branch enumeration: the adapted measurement observables are
    folded into explicit operator products (each rotated site contributes a
    cos term and a sin term dressed with the opposite-parity X prefix) and
    each resulting string is evaluated as a plain expectation value.
    """
    if state.vector is None:
        raise ValueError("decorated expansion expects a dense state")
    if plan.first_site_basis != "x":
        raise ValueError("decorated expansion is defined for the standard wire input")
    n = state.n_sites
    if which not in ("x", "y", "z"):
        raise ValueError(f"which must be x, y or z, got {which!r}")
    rotated = [i for i, b in enumerate(plan.angles, start=1) if b != 0.0]
    parities = {i % 2 for i in rotated}
    if len(parities) > 1:
        raise ValueError("decorated expansion supports single-parity rotation plans")

    if which == "x":
        body_sites = [i for i in range(1, n, 2)]
        end_letter = "X"
    elif which == "z":
        body_sites = [i for i in range(2, n, 2)]
        end_letter = "Z"
    else:
        body_sites = list(range(1, n))
        end_letter = "Y"

    in_product = [i for i in rotated if i in set(body_sites)]
    base_sites = {i: "X" for i in body_sites}
    base_sites[n] = end_letter

    from .groundstate import expectation

    total = 0.0
    for mask in range(1 << len(in_product)):
        op = PauliString.from_sites(n, base_sites)
        coeff = 1.0
        for pos, site in enumerate(in_product):
            beta = plan.angles[site - 1]
            if mask >> pos & 1:
                coeff *= -np.sin(beta)
                prefix = {j: "X" for j in range(2 if site % 2 else 1, site, 2)}
                prefix[site] = "Y"
                dress = PauliString.from_sites(n, prefix)
                flip = PauliString.from_sites(n, {site: "X"})
                # replace the X_site factor by the dressed Y branch
                op = op * flip * dress
            else:
                coeff *= np.cos(beta)
        value = expectation(state, op) if op.is_hermitian else _signed_expectation(state, op)
        total += coeff * value
    return total


def _signed_expectation(state: GroundState, op: PauliString) -> float:
    # phases +-i cannot appear for these products; guard anyway
    raise RuntimeError(f"unexpected non-Hermitian decorated term {op}")


def export_oracle_json(plan: MeasurementPlan, result: OracleResult, path: str | Path) -> Path:
    payload = {
        "plan": {
            "n_sites": plan.n_sites,
            "angles": list(plan.angles),
            "readout_basis": plan.readout_basis,
            "first_site_basis": plan.first_site_basis,
        }
    }
    payload.update(result.to_json_dict())
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2))
    return path
