"""Matrix-product machinery: MPS tensors, MPO sandwiches, and two-site DMRG.

Internal module; site indices here are 0-based. Tensor layouts:

* MPS site tensor ``A``: ``(left_bond, 2, right_bond)``
* MPO site tensor ``W``: ``(left_bond, right_bond, phys_out, phys_in)``

Dense promotions put site 0 on the most significant bit, matching
:mod:`mbqclab.pauli`.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse.linalg as spla

from .errors import ConvergenceError
from .pauli import PauliString


class MPS:
    """Open-boundary matrix product state with complex tensors."""

    def __init__(self, tensors: list[np.ndarray], left_canonical: bool = False):
        self.tensors = tensors
        self.left_canonical = left_canonical
        self._gram_right: list[np.ndarray] | None = None

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> tuple[int, ...]:
        return tuple(a.shape[2] for a in self.tensors[:-1])

    @classmethod
    def random(cls, n_sites: int, chi: int, rng: np.random.Generator) -> "MPS":
        tensors = []
        for i in range(n_sites):
            dl = min(chi, 2**i, 2 ** (n_sites - i))
            dr = min(chi, 2 ** (i + 1), 2 ** (n_sites - 1 - i))
            shape = (dl, 2, dr)
            tensors.append(rng.normal(size=shape) + 1j * rng.normal(size=shape))
        return cls(tensors)

    def norm(self) -> float:
        t = np.ones((1, 1), dtype=complex)
        for a in self.tensors:
            t = np.tensordot(t, a, axes=([1], [0]))          # (bl', s, br)
            t = np.tensordot(a.conj(), t, axes=([0, 1], [0, 1]))  # (br', br)
        return float(np.sqrt(abs(t[0, 0].real)))

    def canonicalize_left(self) -> None:
        """QR sweep to left-canonical form; the overall norm is set to 1."""
        for i in range(self.n_sites):
            a = self.tensors[i]
            dl, d, dr = a.shape
            q, r = np.linalg.qr(a.reshape(dl * d, dr))
            self.tensors[i] = q.reshape(dl, d, -1)
            if i + 1 < self.n_sites:
                self.tensors[i + 1] = np.tensordot(r, self.tensors[i + 1], axes=([1], [0]))
            # final r is a 1x1 phase*norm factor, dropped
        self.left_canonical = True
        self._gram_right = None

    # -------------------------------------------------------------- contract
    def _grams(self) -> list[np.ndarray]:
        """gram[i] = sandwich of sites i..N-1 with identity; gram[N] = [[1]]."""
        if self._gram_right is None:
            n = self.n_sites
            grams = [None] * (n + 1)
            grams[n] = np.ones((1, 1), dtype=complex)
            for i in range(n - 1, -1, -1):
                a = self.tensors[i]
                t = np.tensordot(a, grams[i + 1], axes=([2], [1]))  # (dl, s, dl_bra')
                grams[i] = np.tensordot(a.conj(), t, axes=([1, 2], [1, 2]))
            self._gram_right = grams
        return self._gram_right

    def expectation_pauli(self, op: PauliString) -> complex:
        """<psi|op|psi> by direct contraction over the operator's support."""
        if op.n_sites != self.n_sites:
            raise ValueError(f"operator on {op.n_sites} sites, state on {self.n_sites}")
        support = op.support
        if not support:
            return op.phase
        if not self.left_canonical:
            return self.expectation_mpo(op.to_mpo())
        a0, b0 = support[0] - 1, support[-1] - 1
        from .pauli import _MATRICES  # single-site 2x2 matrices

        t = np.eye(self.tensors[a0].shape[0], dtype=complex)
        for i in range(a0, b0 + 1):
            a = self.tensors[i]
            m = _MATRICES[op.letters[i]]
            ta = np.tensordot(t, a, axes=([1], [0]))            # (dlbra, s, dr)
            ta = np.tensordot(m, ta, axes=([1], [1]))           # (s', dlbra, dr)
            t = np.tensordot(a.conj(), ta, axes=([0, 1], [1, 0]))  # (drbra, dr)
        gram = self._grams()[b0 + 1]
        return op.phase * complex(np.tensordot(t, gram, axes=([0, 1], [0, 1])))

    def expectation_mpo(self, w_list: list[np.ndarray]) -> complex:
        """Full <psi|W|psi> sandwich, any bond dimension."""
        if len(w_list) != self.n_sites:
            raise ValueError("MPO length mismatch")
        env = np.ones((1, 1, 1), dtype=complex)  # (bra, w, ket)
        for a, w in zip(self.tensors, w_list):
            env = _transfer_left(env, a, w)
        return complex(env[0, 0, 0])

    def to_dense(self) -> np.ndarray:
        if self.n_sites > 20:
            raise ValueError("dense promotion of MPS limited to 20 sites")
        v = np.ones((1, 1), dtype=complex)
        for a in self.tensors:
            v = np.tensordot(v, a, axes=([1], [0]))
            v = v.reshape(-1, a.shape[2])
        return v[:, 0]


def _transfer_left(env: np.ndarray, a: np.ndarray, w: np.ndarray) -> np.ndarray:
    t = np.tensordot(env, a, axes=([2], [0]))               # (bra, w, s, ket')
    t = np.tensordot(t, w, axes=([1, 2], [0, 3]))           # (bra, ket', w', s_out)
    t = np.tensordot(a.conj(), t, axes=([0, 1], [0, 3]))    # (bra', ket', w')
    return t.transpose(0, 2, 1)


def _transfer_right(env: np.ndarray, a: np.ndarray, w: np.ndarray) -> np.ndarray:
    # env: (bra, w, ket) to the right of site; returns env including site
    t = np.tensordot(a, env, axes=([2], [2]))               # (dl, s, bra, w)
    t = np.tensordot(w, t, axes=([1, 3], [3, 1]))           # (wl, s_out, dl, bra)
    t = np.tensordot(t, a.conj(), axes=([1, 3], [1, 2]))    # (wl, dl, dl_bra)
    return t.transpose(2, 0, 1)


# ------------------------------------------------------------------ dense ops
def apply_mpo_dense(w_list: list[np.ndarray], vec: np.ndarray) -> np.ndarray:
    """Apply an MPO to a dense statevector (site 0 = most significant bit)."""
    n = len(w_list)
    dim = 1 << n
    if vec.shape != (dim,):
        raise ValueError(f"statevector shape {vec.shape} != ({dim},)")
    # carry[a] = partial application over sites i..n-1 for left bond index a
    carry = vec[np.newaxis, :].astype(complex)
    for i in range(n - 1, -1, -1):
        w = w_list[i]
        dl, dr = w.shape[0], w.shape[1]
        new = np.zeros((dl, dim), dtype=complex)
        block = carry.reshape(dr, 1 << i, 2, 1 << (n - 1 - i))
        for a in range(dl):
            for b in range(dr):
                m = w[a, b]
                if not m.any():
                    continue
                new[a] += np.einsum("pq,lqr->lpr", m, block[b]).reshape(dim)
        carry = new
    return carry[0]


# --------------------------------------------------------------------- DMRG
def hamiltonian_mpo(n_sites: int, alpha: float) -> list[np.ndarray]:
    """MPO of the cluster-plus-field chain Hamiltonian.

    Finite-state machine with bond states (ready, Z placed, ZX placed, done);
    boundary tensors carry the two-site end stabilizers.
    """
    from .pauli import _MATRICES

    ident, x, z = _MATRICES[0], _MATRICES[1], _MATRICES[3]
    c, s = np.cos(alpha), np.sin(alpha)
    w_bulk = np.zeros((4, 4, 2, 2), dtype=complex)
    w_bulk[0, 0] = ident
    w_bulk[0, 1] = z
    w_bulk[1, 2] = x
    w_bulk[2, 3] = -c * z
    w_bulk[0, 3] = -s * x
    w_bulk[3, 3] = ident

    w_first = np.zeros((1, 4, 2, 2), dtype=complex)
    w_first[0, 0] = ident
    w_first[0, 1] = z
    w_first[0, 2] = x  # left end stabilizer X_1 Z_2 enters mid-pattern

    w_last = np.zeros((4, 1, 2, 2), dtype=complex)
    w_last[1, 0] = -c * x  # right end stabilizer Z_{N-1} X_N
    w_last[2, 0] = -c * z
    w_last[3, 0] = ident

    return [w_first] + [w_bulk.copy() for _ in range(n_sites - 2)] + [w_last]


def mpo_square(w_list: list[np.ndarray]) -> list[np.ndarray]:
    out = []
    for w in w_list:
        a, b = w.shape[0], w.shape[1]
        ww = np.einsum("abpm,cdmq->acbdpq", w, w)
        out.append(ww.reshape(a * a, b * b, 2, 2))
    return out


def _lanczos_smallest(matvec, v0, tol, max_krylov=32, restarts=2):
    """Smallest Ritz pair by Lanczos with full reorthogonalization.

    The Krylov build stops as soon as the Ritz residual bound
    ``beta_{k+1} |u_k|`` drops below ``tol``; warm-started mid-sweep calls
    typically exit after a handful of matvecs.
    """
    import scipy.linalg as sla

    theta, vec = None, v0 / np.linalg.norm(v0)
    for _ in range(restarts):
        basis = [vec]
        alphas: list[float] = []
        betas: list[float] = []
        w = matvec(vec)
        alphas.append(float(np.vdot(vec, w).real))
        w = w - alphas[0] * vec
        converged = False
        vals = vecs = None
        while len(basis) < max_krylov:
            beta = float(np.linalg.norm(w))
            vals, vecs = sla.eigh_tridiagonal(alphas, betas)
            if beta < 1e-14 or beta * abs(vecs[-1, 0]) < tol:
                converged = beta * abs(vecs[-1, 0]) < tol or beta < 1e-14
                break
            v_next = w / beta
            # full reorthogonalization keeps the small basis numerically clean
            for b in basis:
                v_next = v_next - np.vdot(b, v_next) * b
            v_next /= np.linalg.norm(v_next)
            basis.append(v_next)
            betas.append(beta)
            w = matvec(v_next) - beta * basis[-2]
            alphas.append(float(np.vdot(v_next, w).real))
            w = w - alphas[-1] * v_next
        if vals is None or len(vals) != len(alphas):
            vals, vecs = sla.eigh_tridiagonal(alphas, betas)
        theta = float(vals[0])
        vec = np.zeros_like(v0)
        for coef, b in zip(vecs[:, 0], basis):
            vec += coef * b
        vec /= np.linalg.norm(vec)
        if converged:
            break
    return theta, vec


def _local_eigs(l_env, w1, w2, r_env, theta0, tol):
    """Lowest eigenpair of the two-site effective Hamiltonian."""
    dl, d1 = theta0.shape[0], theta0.shape[1]
    d2, dr = theta0.shape[2], theta0.shape[3]
    dim = dl * d1 * d2 * dr

    def matvec(x):
        th = x.reshape(dl, d1, d2, dr)
        t = np.tensordot(l_env, th, axes=([2], [0]))
        t = np.tensordot(t, w1, axes=([1, 2], [0, 3]))
        t = np.tensordot(t, w2, axes=([3, 1], [0, 3]))
        t = np.tensordot(t, r_env, axes=([1, 3], [2, 1]))
        return t.ravel()

    if dim <= 512:
        h = np.einsum("xwy,wvpq,vurs,mun->xprmyqsn", l_env, w1, w2, r_env, optimize=True)
        h = h.reshape(dim, dim)
        vals, vecs = np.linalg.eigh(h)
        return vals[0], vecs[:, 0].reshape(theta0.shape)

    theta, vec = _lanczos_smallest(matvec, theta0.ravel(), tol)
    return theta, vec.reshape(theta0.shape)


def _split_theta(theta, direction, chi_max, svd_tol):
    dl, d1, d2, dr = theta.shape
    mat = theta.reshape(dl * d1, d2 * dr)
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    total = float(np.sum(s**2))
    keep = len(s)
    acc = 0.0
    for i in range(len(s) - 1, 0, -1):
        if acc + s[i] ** 2 > svd_tol * total:
            break
        acc += s[i] ** 2
        keep = i
    keep = max(1, min(keep, chi_max))
    discarded = float(np.sum(s[keep:] ** 2) / total) if keep < len(s) else 0.0
    u, s, vh = u[:, :keep], s[:keep], vh[:keep]
    s = s / np.sqrt(np.sum(s**2))
    if direction == "right":
        a_left = u.reshape(dl, d1, keep)
        a_right = (np.diag(s) @ vh).reshape(keep, d2, dr)
    else:
        a_left = (u @ np.diag(s)).reshape(dl, d1, keep)
        a_right = vh.reshape(keep, d2, dr)
    return a_left, a_right, discarded


def dmrg_minimize(
    n_sites: int,
    alpha: float,
    chi_max: int,
    n_sweeps: int,
    energy_tol: float,
    svd_tol: float = 1e-13,
    seed: int = 7,
):
    """Two-site DMRG ground-state search.

    Returns ``(mps, sweep_energies, truncation_error)``; raises
    :class:`ConvergenceError` when the energy change never drops below
    ``energy_tol`` within ``n_sweeps``.
    """
    w_list = hamiltonian_mpo(n_sites, alpha)
    rng = np.random.default_rng(seed)

    mps = MPS.random(n_sites, min(8, chi_max), rng)
    mps.canonicalize_left()

    # right environments for bonds; r_envs[i] = env right of site i
    r_envs = [None] * n_sites
    r_envs[n_sites - 1] = np.ones((1, 1, 1), dtype=complex)
    for i in range(n_sites - 1, 0, -1):
        r_envs[i - 1] = _transfer_right(r_envs[i], mps.tensors[i], w_list[i])
    l_envs = [None] * (n_sites + 1)
    l_envs[0] = np.ones((1, 1, 1), dtype=complex)

    sweep_energies: list[float] = []
    truncation_error = 0.0
    converged = False

    for sweep in range(n_sweeps):
        # cap doubles per sweep so early sweeps on a random state stay cheap
        chi_cap = min(chi_max, 32 * 2**sweep)
        at_full_chi = chi_cap == chi_max
        # Ritz-value error scales as the residual squared, so a residual
        # target of sqrt(energy_tol) resolves sweep energies to energy_tol;
        # tighten once the sweep energies are nearly settled
        if not at_full_chi:
            local_tol = 1e-4
        elif len(sweep_energies) >= 2 and abs(sweep_energies[-1] - sweep_energies[-2]) < 1e4 * energy_tol:
            local_tol = max(0.1 * math.sqrt(energy_tol), 1e-7)
        else:
            local_tol = max(0.3 * math.sqrt(energy_tol), 1e-6)
        energy = None
        max_discard = 0.0

        for i in range(n_sites - 1):  # left-to-right
            theta = np.tensordot(mps.tensors[i], mps.tensors[i + 1], axes=([2], [0]))
            energy, theta = _local_eigs(l_envs[i], w_list[i], w_list[i + 1], r_envs[i + 1], theta, local_tol)
            a_l, a_r, disc = _split_theta(theta, "right", chi_cap, svd_tol)
            max_discard = max(max_discard, disc)
            mps.tensors[i], mps.tensors[i + 1] = a_l, a_r
            l_envs[i + 1] = _transfer_left(l_envs[i], a_l, w_list[i])

        for i in range(n_sites - 2, -1, -1):  # right-to-left
            theta = np.tensordot(mps.tensors[i], mps.tensors[i + 1], axes=([2], [0]))
            energy, theta = _local_eigs(l_envs[i], w_list[i], w_list[i + 1], r_envs[i + 1], theta, local_tol)
            a_l, a_r, disc = _split_theta(theta, "left", chi_cap, svd_tol)
            max_discard = max(max_discard, disc)
            mps.tensors[i], mps.tensors[i + 1] = a_l, a_r
            r_envs[i] = _transfer_right(r_envs[i + 1], a_r, w_list[i + 1])

        sweep_energies.append(float(energy))
        truncation_error = max_discard
        if at_full_chi and len(sweep_energies) >= 2:
            if abs(sweep_energies[-1] - sweep_energies[-2]) < energy_tol:
                converged = True
                break

    if not converged:
        last = sweep_energies[-2:]
        raise ConvergenceError(
            f"DMRG did not converge in {n_sweeps} sweeps; last sweep energies {last}",
            details={"sweep_energies": sweep_energies},
        )

    mps.left_canonical = False
    mps.canonicalize_left()
    return mps, tuple(sweep_energies), truncation_error
