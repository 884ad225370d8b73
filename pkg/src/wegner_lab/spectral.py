"""Spectral primitives: counting, bounded eigensolves, resolvent blocks.

Counting is exact integer arithmetic on matrix inertia (Sturm sequences for
tridiagonal operators, symmetric-indefinite factorization otherwise), so
interval counts never depend on eigensolver convergence.  The iterative
eigensolver cross-checks its accepted Ritz count against the inertia count
whenever one is available and refuses to return silently short.

Everything here is deterministic: iterative starts come from a fixed
counter-based key, never from global state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grids import DENSE_LIMIT, BoxSpec, DiscreteHamiltonian
from .thick_sets import RasterSet

INERTIA_DENSE_LIMIT = 4096  # LDL on anything larger is slower than re-solving
_LANCZOS_KEY = 12345


class EigensolverError(RuntimeError):
    pass


class ResonantSampleError(RuntimeError):
    """The shift sits too close to an eigenvalue to trust a factorization."""


@dataclass(frozen=True, eq=False)
class EigenResult:
    eigenvalues: np.ndarray  # ascending, all <= the requested cutoff
    eigenvectors: np.ndarray | None  # columns match eigenvalues when requested
    residual_bound: float
    method: str


def _operator_scale(H: DiscreteHamiltonian) -> float:
    # 1-norm of a symmetric matrix dominates its spectral radius
    return float(max(abs(H.matrix).sum(axis=0).max(), 1.0))


def sturm_count(diag: np.ndarray, off: np.ndarray, x: float) -> int:
    """Eigenvalues of the symmetric tridiagonal matrix strictly below x."""
    count = 0
    q = diag[0] - x
    if q == 0.0:
        q = 1e-300
    if q < 0.0:
        count += 1
    for i in range(1, diag.shape[0]):
        q = (diag[i] - x) - off[i - 1] * off[i - 1] / q
        if q == 0.0:
            q = 1e-300
        if q < 0.0:
            count += 1
    return count


def _ldl_negative_count(A: np.ndarray) -> int:
    # eigenvalue signs of the block-diagonal factor carry the inertia
    _, d, _ = sla.ldl(A, lower=True)
    n = A.shape[0]
    count = 0
    i = 0
    while i < n:
        if i + 1 < n and d[i + 1, i] != 0.0:
            a, b, c = d[i, i], d[i + 1, i], d[i + 1, i + 1]
            det = a * c - b * b
            tr = a + c
            if det < 0.0:
                count += 1
            elif det > 0.0 and tr < 0.0:
                count += 2
            elif det == 0.0 and tr < 0.0:
                count += 1
            i += 2
        else:
            if d[i, i] < 0.0:
                count += 1
            i += 1
    return count


def inertia_count(H: DiscreteHamiltonian, x: float) -> int | None:
    """Number of eigenvalues strictly below x, or None when no exact path fits."""
    if H.is_tridiagonal:
        diag, off = H.tridiagonal()
        if diag.shape[0] == 1:
            return int(diag[0] < x)
        return sturm_count(diag, off, x)
    if H.box.ndof <= INERTIA_DENSE_LIMIT:
        A = H.matrix.toarray().astype(float)
        A[np.diag_indices_from(A)] -= x
        return _ldl_negative_count(A)
    return None


def count_in_interval(H: DiscreteHamiltonian, lo: float, hi: float) -> int:
    """Exact count of eigenvalues in the closed interval [lo, hi].

    Closed endpoints are honored by nudging the inertia evaluation points
    outward by a relative 1e-12, far below eigenvalue spacing at the scales
    used here.
    """
    if hi < lo:
        return 0
    delta = 1e-12 * max(1.0, abs(hi), abs(lo) if math.isfinite(lo) else 0.0)
    n_hi = inertia_count(H, hi + delta)
    n_lo = 0 if lo == -math.inf else inertia_count(H, lo - delta)
    if n_hi is not None and n_lo is not None:
        return n_hi - n_lo
    ev = eigs_below(H, hi + delta).eigenvalues
    return int(np.count_nonzero(ev >= lo - delta))


def _eigs_tridiagonal(H: DiscreteHamiltonian, e_max: float, want_vectors: bool) -> EigenResult:
    diag, off = H.tridiagonal()
    n = diag.shape[0]
    if n == 1:
        ev = diag[diag <= e_max]
        vec = np.ones((1, ev.shape[0])) if want_vectors else None
        return EigenResult(ev.copy(), vec, 0.0, "tridiagonal")
    floor = float(diag.min() - 2.0 * (abs(off).max() if off.size else 0.0) - 1.0)
    if want_vectors:
        ev, vecs = sla.eigh_tridiagonal(diag, off, select="v", select_range=(floor, e_max))
        resid = _max_residual(H, ev, vecs)
        return EigenResult(ev, vecs, resid, "tridiagonal")
    ev = sla.eigh_tridiagonal(diag, off, select="v", select_range=(floor, e_max), eigvals_only=True)
    return EigenResult(ev, None, 64 * np.finfo(float).eps * _operator_scale(H), "tridiagonal")


def _eigs_dense(H: DiscreteHamiltonian, e_max: float, want_vectors: bool) -> EigenResult:
    A = H.matrix.toarray()
    if want_vectors:
        ev, vecs = sla.eigh(A, subset_by_value=(-np.inf, e_max))
        resid = _max_residual(H, ev, vecs)
        return EigenResult(ev, vecs, resid, "dense")
    ev = sla.eigvalsh(A, subset_by_value=(-np.inf, e_max))
    return EigenResult(ev, None, 64 * np.finfo(float).eps * _operator_scale(H), "dense")


def _max_residual(H: DiscreteHamiltonian, ev: np.ndarray, vecs: np.ndarray) -> float:
    if ev.size == 0:
        return 0.0
    r = H.matrix @ vecs - vecs * ev[np.newaxis, :]
    return float(np.sqrt((r * r).sum(axis=0)).max())


def _eigs_lanczos(H: DiscreteHamiltonian, e_max: float, want_vectors: bool) -> EigenResult:
    """Lanczos with full reorthogonalization and an inertia cross-check.

    The start vector comes from a fixed counter-based key so repeated runs
    agree bit for bit.  Iteration proceeds in blocks until every Ritz value
    at or below the cutoff has a small residual bound and, when an inertia
    count is available, the accepted count matches it exactly.
    """
    n = H.box.ndof
    scale = _operator_scale(H)
    tol = 1e-9 * scale
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=_LANCZOS_KEY)))
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    V = np.empty((n, min(n, 600) + 1))
    V[:, 0] = v
    alphas: list[float] = []
    betas: list[float] = []
    max_steps = min(n, 600)
    want_count = inertia_count(H, e_max + 1e-12 * max(1.0, abs(e_max)))
    theta = S = None
    m = 0
    exhausted = False
    for step in range(max_steps):
        w = H.matvec(V[:, step])
        if step > 0:
            w -= betas[step - 1] * V[:, step - 1]
        alpha = float(V[:, step] @ w)
        w -= alpha * V[:, step]
        # two passes of full reorthogonalization keep ghosts out
        for _ in range(2):
            w -= V[:, : step + 1] @ (V[:, : step + 1].T @ w)
        beta = float(np.linalg.norm(w))
        alphas.append(alpha)
        betas.append(beta)
        m = step + 1
        if beta <= 1e-13 * scale:
            exhausted = True  # exact invariant subspace
        else:
            V[:, step + 1] = w / beta
        if exhausted or m == max_steps or (m % 60 == 0):
            theta, S = sla.eigh_tridiagonal(np.array(alphas), np.array(betas[:-1]))
            sel = theta <= e_max
            resid_all = np.abs(betas[-1] * S[-1, :])
            ok = bool(np.all(resid_all[sel] <= tol)) if sel.any() else True
            count_ok = want_count is None or int(sel.sum()) == want_count
            if want_count is None and not exhausted:
                # no inertia cross-check at this size: the bottom Ritz pair
                # must converge before any selection (even an empty one) is
                # trusted, or a cutoff below the converged range would return
                # silently short
                if resid_all[0] > tol:
                    ok = False
                elif not sel.any() and theta[0] - resid_all[0] <= e_max:
                    ok = False
            if exhausted or (ok and count_ok):
                break
    assert theta is not None and S is not None
    sel = theta <= e_max
    resid = np.abs(betas[-1] * S[-1, sel]) if not exhausted else np.zeros(int(sel.sum()))
    if want_count is not None and int(sel.sum()) != want_count:
        raise EigensolverError(
            f"iteration stalled: {int(sel.sum())} Ritz values at cutoff, inertia says {want_count}"
        )
    if sel.any() and not exhausted and float(resid.max()) > tol * 100:
        raise EigensolverError("Ritz residuals failed to converge below the cutoff")
    if want_count is None and not exhausted:
        resid_all = np.abs(betas[-1] * S[-1, :])
        if resid_all[0] > tol * 100 or (not sel.any() and theta[0] - resid_all[0] <= e_max):
            raise EigensolverError("bottom of the spectrum did not converge; count uncertified")
    ev = theta[sel].copy()
    vecs = None
    if want_vectors:
        vecs = V[:, :m] @ S[:, sel]
        # refresh residual with the true vectors
        rb = _max_residual(H, ev, vecs)
    else:
        rb = float(resid.max()) if resid.size else 0.0
    return EigenResult(ev, vecs, rb, "lanczos")


def eigs_below(
    H: DiscreteHamiltonian,
    e_max: float,
    method: str = "auto",
    want_vectors: bool = False,
) -> EigenResult:
    """All eigenvalues (with multiplicity) at or below e_max, ascending."""
    if method == "auto":
        if H.is_tridiagonal:
            method = "tridiagonal"
        elif H.box.ndof <= DENSE_LIMIT:
            method = "dense"
        else:
            method = "lanczos"
    if method == "tridiagonal":
        if not H.is_tridiagonal:
            raise EigensolverError("operator has no tridiagonal form")
        return _eigs_tridiagonal(H, e_max, want_vectors)
    if method == "dense":
        return _eigs_dense(H, e_max, want_vectors)
    if method == "lanczos":
        return _eigs_lanczos(H, e_max, want_vectors)
    raise EigensolverError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# sub-box geometry and resolvent blocks


@dataclass(frozen=True)
class SubBox:
    """A rectangular block of grid nodes, inclusive index ranges per axis."""

    lo: tuple[int, ...]
    hi: tuple[int, ...]

    @staticmethod
    def from_coords(box: BoxSpec, lo: tuple[float, ...], hi: tuple[float, ...]) -> "SubBox":
        los, his = [], []
        for axis in range(box.d):
            xs = box.axis_nodes(axis)
            inside = np.flatnonzero((xs >= lo[axis] - 1e-12) & (xs <= hi[axis] + 1e-12))
            if inside.size == 0:
                raise ValueError(f"sub-box is empty along axis {axis}")
            los.append(int(inside[0]))
            his.append(int(inside[-1]))
        return SubBox(lo=tuple(los), hi=tuple(his))

    def indices(self, box: BoxSpec) -> np.ndarray:
        """Flat node indices, C order."""
        grids = np.meshgrid(
            *[np.arange(l, h + 1) for l, h in zip(self.lo, self.hi)], indexing="ij"
        )
        return np.ravel_multi_index([g.ravel() for g in grids], box.shape)

    def count(self) -> int:
        return int(np.prod([h - l + 1 for l, h in zip(self.lo, self.hi)]))


def _check_off_resonance(H: DiscreteHamiltonian, z: float, gap: float = 1e-10) -> None:
    below = inertia_count(H, z - gap)
    above = inertia_count(H, z + gap)
    if below is None or above is None:
        return  # no exact count at this size; the factorization itself will object
    if below != above:
        raise ResonantSampleError(f"eigenvalue within {gap} of shift {z}")


def resolvent_block_norm(
    H: DiscreteHamiltonian,
    z: float,
    block_a: SubBox,
    block_b: SubBox,
) -> float:
    """Operator norm of the A-rows-by-B-columns block of (H - z)^{-1}.

    One factorization serves every column; the norm of the extracted dense
    block is then exact (up to the factorization's own accuracy).  A shift
    within 1e-10 of an eigenvalue is refused rather than silently amplified.
    """
    box = H.box
    ia = block_a.indices(box)
    ib = block_b.indices(box)
    if np.intersect1d(ia, ib).size:
        raise ValueError("blocks overlap; the off-diagonal norm is not defined")
    _check_off_resonance(H, z)
    n = box.ndof
    rhs = np.zeros((n, ib.size))
    rhs[ib, np.arange(ib.size)] = 1.0
    if H.is_tridiagonal:
        diag, off = H.tridiagonal()
        ab = np.zeros((3, n))
        ab[0, 1:] = off
        ab[1, :] = diag - z
        ab[2, :-1] = off
        sol = sla.solve_banded((1, 1), ab, rhs)
    else:
        lu = spla.splu(sp.csc_matrix(H.matrix - z * sp.identity(n, format="csc")))
        sol = lu.solve(rhs)
    M = sol[ia, :]
    if not np.all(np.isfinite(M)):
        raise ResonantSampleError("factorization produced non-finite entries at this shift")
    if M.size == 0:
        return 0.0
    return float(sla.svdvals(M)[0]) if min(M.shape) > 0 else 0.0


# ---------------------------------------------------------------------------
# compressed indicators over a spectral subspace


def compressed_indicator_min_eig(
    basis: np.ndarray,
    box: BoxSpec,
    S: RasterSet,
    orthonormal_tol: float = 1e-8,
) -> float:
    """Smallest eigenvalue of the indicator of S compressed to span(basis).

    basis columns must be orthonormal in the mesh inner product (plain dot
    product; uniform cell volumes cancel from the Rayleigh quotient).  The
    result lies in [0, 1]; its distance from zero is the certified fraction
    of mass any unit vector of the subspace keeps on S.
    """
    if basis.ndim != 2 or basis.shape[0] != box.ndof:
        raise ValueError("basis must be ndof-by-k")
    k = basis.shape[1]
    if k == 0:
        raise ValueError("empty basis")
    gram_id = basis.T @ basis - np.eye(k)
    if float(np.abs(gram_id).max()) > orthonormal_tol:
        raise EigensolverError("basis columns are not orthonormal to the required tolerance")
    mask = S.contains(box.nodes()).astype(float)
    G = basis.T @ (mask[:, np.newaxis] * basis)
    G = 0.5 * (G + G.T)
    ev = sla.eigvalsh(G)
    return float(ev[0])
