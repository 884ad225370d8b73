"""Alloy-type random potentials: V_omega(x) = sum_j pi_j(omega) u_j(x - 0).

Couplings pi_j are independent, bounded, and drawn from per-site
distributions through a splittable counter-based generator keyed by
(experiment seed, site index), so any subset of sites can be evaluated in
any order and reproduce the same field.  Single-site profiles u_j are
nonnegative bumps of finite radius around lattice sites.

The module also houses the two structural verifiers (the covering-type lower
bound with a thickness certificate, and its refutation via empty-window
witnesses) plus the diluted single-scale minorant construction that extracts
a sparse, independent, strictly positive lower bound W_omega <= V_omega.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .grids import BoxSpec
from .thick_sets import (
    GridField,
    RasterGeometry,
    RasterSet,
    WindowSpec,
    build_fat_cantor,
    certify_thickness,
    interval_member,
    level_set,
    load_raster,
    smith_volterra_spec,
    stripes_raster,
    window_measure,
)


class ModelError(ValueError):
    pass


class CoverageError(ModelError):
    """A box reaches outside the region where sites are registered."""


class ConstructionError(ModelError):
    """The diluted minorant cannot be built from the given data."""


class ModelConfigError(ModelError):
    pass


# ---------------------------------------------------------------------------
# coupling distributions


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise ModelError("uniform support must be a nondegenerate finite interval")

    @property
    def min_support(self) -> float:
        return self.lo

    @property
    def max_support(self) -> float:
        return self.hi

    @property
    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def _from_uniform(self, u: float) -> float:
        return self.lo + u * (self.hi - self.lo)

    def _from_uniform_below(self, u: float, cap: float) -> float:
        top = min(cap, self.hi)
        if top < self.lo:
            raise ModelError(f"conditioning cap {cap} leaves no mass below it")
        return self.lo + u * (top - self.lo)

    def interval_mass(self, a: float, b: float) -> float:
        if b < a:
            return 0.0
        lo, hi = max(a, self.lo), min(b, self.hi)
        return max(hi - lo, 0.0) / (self.hi - self.lo)

    def modulus_closed(self, eps: float) -> float:
        return min(eps / (self.hi - self.lo), 1.0)

    @property
    def holder_exponent(self) -> float | None:
        return 1.0


@dataclass(frozen=True)
class BernoulliAt:
    """Two atoms: value v0 with probability p0, else v1."""

    v0: float
    v1: float
    p0: float

    def __post_init__(self) -> None:
        if not (0 < self.p0 < 1):
            raise ModelError("atom probability must lie strictly between 0 and 1")
        if self.v0 == self.v1:
            raise ModelError("atoms must be distinct")

    @property
    def min_support(self) -> float:
        return min(self.v0, self.v1)

    @property
    def max_support(self) -> float:
        return max(self.v0, self.v1)

    @property
    def mean(self) -> float:
        return self.p0 * self.v0 + (1 - self.p0) * self.v1

    def _from_uniform(self, u: float) -> float:
        return self.v0 if u < self.p0 else self.v1

    def _from_uniform_below(self, u: float, cap: float) -> float:
        atoms = [(v, p) for v, p in ((self.v0, self.p0), (self.v1, 1 - self.p0)) if v <= cap]
        total = sum(p for _, p in atoms)
        if total == 0:
            raise ModelError(f"conditioning cap {cap} leaves no mass below it")
        acc = 0.0
        for v, p in atoms:
            acc += p / total
            if u < acc:
                return v
        return atoms[-1][0]

    def interval_mass(self, a: float, b: float) -> float:
        mass = 0.0
        if a <= self.v0 <= b:
            mass += self.p0
        if a <= self.v1 <= b:
            mass += 1 - self.p0
        return mass

    def modulus_closed(self, eps: float) -> float:
        if eps >= abs(self.v1 - self.v0):
            return 1.0
        return max(self.p0, 1 - self.p0)

    @property
    def holder_exponent(self) -> float | None:
        return None  # atoms keep s(eps) away from zero


@dataclass(frozen=True)
class TruncatedPowerHolder:
    """CDF (x/m_plus)^alpha on [0, m_plus]; Holder modulus of order min(alpha, 1)."""

    m_plus: float
    alpha: float

    def __post_init__(self) -> None:
        if not (self.m_plus > 0 and self.alpha > 0):
            raise ModelError("need positive scale and exponent")

    @property
    def min_support(self) -> float:
        return 0.0

    @property
    def max_support(self) -> float:
        return self.m_plus

    @property
    def mean(self) -> float:
        return self.m_plus * self.alpha / (self.alpha + 1)

    def _cdf(self, x: float) -> float:
        if x <= 0:
            return 0.0
        if x >= self.m_plus:
            return 1.0
        return (x / self.m_plus) ** self.alpha

    def _from_uniform(self, u: float) -> float:
        return self.m_plus * u ** (1.0 / self.alpha)

    def _from_uniform_below(self, u: float, cap: float) -> float:
        top = self._cdf(cap)
        if top == 0:
            raise ModelError(f"conditioning cap {cap} leaves no mass below it")
        return self.m_plus * (u * top) ** (1.0 / self.alpha)

    def interval_mass(self, a: float, b: float) -> float:
        if b < a:
            return 0.0
        return max(self._cdf(b) - self._cdf(a), 0.0)

    def modulus_closed(self, eps: float) -> float | None:
        return None  # exercised through the generic grid path

    @property
    def holder_exponent(self) -> float | None:
        return min(self.alpha, 1.0)


Distribution = Uniform | BernoulliAt | TruncatedPowerHolder


def _site_rng(seed: int | tuple[int, ...], site_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(site_index,))
    return np.random.Generator(np.random.Philox(ss))


def sample_value(dist: Distribution, seed: int | tuple[int, ...], site_index: int) -> float:
    return dist._from_uniform(float(_site_rng(seed, site_index).uniform(0.0, 1.0)))


def sample_value_below(
    dist: Distribution, seed: int | tuple[int, ...], site_index: int, cap: float
) -> float:
    return dist._from_uniform_below(float(_site_rng(seed, site_index).uniform(0.0, 1.0)), cap)


def sample_iid(dist: Distribution, seed: int | tuple[int, ...], n: int) -> np.ndarray:
    """Vectorized draws for statistics on a single distribution."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed)))
    u = rng.uniform(0.0, 1.0, size=n)
    if isinstance(dist, BernoulliAt):
        return np.where(u < dist.p0, dist.v0, dist.v1)
    return _vector_from_uniform(dist, u)


def _vector_from_uniform(dist: Distribution, u: np.ndarray) -> np.ndarray:
    if isinstance(dist, Uniform):
        return dist.lo + u * (dist.hi - dist.lo)
    if isinstance(dist, TruncatedPowerHolder):
        return dist.m_plus * u ** (1.0 / dist.alpha)
    raise ModelError("no vectorized path for this kind")


def empirical_modulus(
    dist: Distribution, eps: float, n_samples: int, seed: int | tuple[int, ...]
) -> tuple[float, float, float]:
    """Monte Carlo estimate of the single-site modulus, with standard error.

    Split-sample design: the first half of the draws locates the heaviest
    closed window of length eps (two-pointer sweep over the sorted sample);
    the second half counts hits in that fixed window, so the estimate is an
    unbiased binomial proportion rather than a maximum over fitted windows.
    Returns (estimate, stderr, window_left).
    """
    if eps <= 0:
        raise ModelError("window length must be positive")
    draws = sample_iid(dist, seed, n_samples)
    half = n_samples // 2
    locate, count = np.sort(draws[:half]), draws[half:]
    best_count, best_lo = 0, float(locate[0]) if half else 0.0
    j = 0
    for i in range(locate.shape[0]):
        while j < locate.shape[0] and locate[j] <= locate[i] + eps:
            j += 1
        if j - i > best_count:
            best_count, best_lo = j - i, float(locate[i])
    inside = (count >= best_lo - 1e-12) & (count <= best_lo + eps + 1e-12)
    p = float(inside.mean())
    se = math.sqrt(max(p * (1 - p), 1e-12) / count.shape[0])
    return p, se, best_lo


def modulus_s(dists: Sequence[Distribution], eps: float, grid_points: int = 4096) -> float:
    """Worst-case mass any single coupling puts into a closed window of length eps.

    s(eps) = sup over sites and window centers E of mu_j([E - eps/2, E + eps/2]).
    Uniform and two-atom kinds use closed forms.  Other kinds are scanned over
    an E-grid augmented with windows anchored at both support endpoints, which
    attains the supremum exactly for monotone densities; the grid contributes
    at most one mass increment of error otherwise.
    """
    if eps <= 0:
        return 0.0
    worst = 0.0
    for dist in dists:
        closed = dist.modulus_closed(eps)
        if closed is not None:
            worst = max(worst, closed)
            continue
        lo, hi = dist.min_support, dist.max_support
        anchors = np.array([lo + eps / 2, hi - eps / 2])
        grid = np.linspace(lo - eps / 2, hi + eps / 2, grid_points)
        best = 0.0
        for e in np.concatenate([anchors, grid]):
            best = max(best, dist.interval_mass(e - eps / 2, e + eps / 2))
        worst = max(worst, best)
    return min(worst, 1.0)


# ---------------------------------------------------------------------------
# single-site profiles


@dataclass(frozen=True)
class BallIndicator:
    """Indicator of the radius-R ball.

    In one dimension the ball is the interval [c-R, c+R) taken half open, so
    unit-diameter balls on the integer lattice tile the line with no double
    counting and the covering sum is exactly one everywhere.
    """

    radius: float

    def __post_init__(self) -> None:
        if not (self.radius > 0):
            raise ModelError("ball radius must be positive")

    def evaluate(self, points: np.ndarray, center: tuple[float, ...]) -> np.ndarray:
        pts = np.atleast_2d(points)
        delta = pts - np.asarray(center)
        if pts.shape[1] == 1:
            x = delta[:, 0]
            return ((x >= -self.radius) & (x < self.radius)).astype(float)
        return (np.sqrt((delta**2).sum(axis=1)) < self.radius).astype(float)


@dataclass(frozen=True)
class CantorTranslate:
    """Indicator of a fat Cantor stage carried to the unit cell around the site."""

    endpoints: tuple[Fraction, ...]  # flattened closed intervals within [0, 1]

    @staticmethod
    def from_depth(depth: int) -> "CantorTranslate":
        intervals = smith_volterra_spec(depth).stage_intervals()
        return CantorTranslate(endpoints=tuple(v for ab in intervals for v in ab))

    @property
    def intervals(self) -> list[tuple[Fraction, Fraction]]:
        it = iter(self.endpoints)
        return list(zip(it, it))

    @property
    def radius(self) -> float:
        return 0.5

    def evaluate(self, points: np.ndarray, center: tuple[float, ...]) -> np.ndarray:
        pts = np.atleast_2d(points)
        if pts.shape[1] != 1:
            raise ModelError("cantor-translate profiles are one-dimensional")
        y = pts[:, 0] - (center[0] - 0.5)
        out = np.zeros(pts.shape[0])
        mask = (y >= 0.0) & (y <= 1.0)
        out[mask] = interval_member(y[mask], self.intervals).astype(float)
        return out


@dataclass(frozen=True)
class RasterProfile:
    """Profile given by a raster indicator translated to the site center."""

    raster: RasterSet

    @property
    def radius(self) -> float:
        geo = self.raster.geometry
        corners = [max(abs(o), abs(o + e)) for o, e in zip(geo.origin, geo.extent)]
        return float(np.sqrt(np.sum(np.square(corners))))

    def evaluate(self, points: np.ndarray, center: tuple[float, ...]) -> np.ndarray:
        pts = np.atleast_2d(points) - np.asarray(center)
        return self.raster.contains(pts).astype(float)


Profile = BallIndicator | CantorTranslate | RasterProfile


@dataclass(frozen=True)
class SingleSite:
    """One bump: nonnegative profile of finite radius around a lattice site."""

    center: tuple[float, ...]
    radius: float
    profile: Profile

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return self.profile.evaluate(points, self.center)


# ---------------------------------------------------------------------------
# the alloy model


@dataclass(frozen=True, eq=False)
class AlloyModel:
    """Registered sites, per-site coupling laws, and optional structural claims.

    Sites are registered inside the hull [-extent, extent]^d; simulation
    boxes must stay inside the hull shrunk by the site radius so no
    unregistered bump can reach them.
    """

    d: int
    sites: tuple[SingleSite, ...]
    dists: tuple[Distribution, ...]
    extent: float
    u_resolution: int = 16
    claimed_gamma: float | None = None
    claimed_window: WindowSpec | None = None
    claimed_set: RasterSet | None = None
    claimed_bound: float | None = None

    def __post_init__(self) -> None:
        if not self.sites:
            raise ModelError("a model needs at least one site")
        if len(self.sites) != len(self.dists):
            raise ModelError("need exactly one coupling distribution per site")
        if any(len(s.center) != self.d for s in self.sites):
            raise ModelError("site centers must match the model dimension")

    @property
    def max_radius(self) -> float:
        return max(s.radius for s in self.sites)

    @property
    def m_plus(self) -> float:
        return max(d.max_support for d in self.dists)

    @property
    def m_minus(self) -> float:
        return min(d.min_support for d in self.dists)

    @property
    def coupling_range(self) -> float:
        return self.m_plus - self.m_minus

    def sites_near_box(self, box: BoxSpec) -> list[int]:
        reach = box.length / 2 + self.max_radius
        out = []
        for i, s in enumerate(self.sites):
            if all(abs(s.center[k] - box.center[k]) <= reach + 1e-12 for k in range(self.d)):
                out.append(i)
        return out

    def check_box_registered(self, box: BoxSpec) -> None:
        if box.d != self.d:
            raise ModelError("box dimension does not match the model")
        need = max(abs(c) + box.length / 2 for c in box.center) + self.max_radius
        if need > self.extent + 1e-9:
            raise CoverageError(
                f"box requires sites out to {need:.3f} but registration stops at {self.extent}"
            )


def sample_couplings(model: AlloyModel, seed: int | tuple[int, ...]) -> np.ndarray:
    return np.array([sample_value(d, seed, i) for i, d in enumerate(model.dists)])


def _assemble_potential(model: AlloyModel, box: BoxSpec, coupling_of: dict[int, float]) -> np.ndarray:
    nodes = box.nodes()
    v = np.zeros(box.ndof)
    for i in model.sites_near_box(box):
        c = coupling_of[i]
        if c != 0.0:
            v += c * model.sites[i].evaluate(nodes)
    return v


def sample_potential(
    model: AlloyModel,
    seed: int | tuple[int, ...],
    box: BoxSpec,
    conditioning_cap: float | None = None,
    couplings_override: float | None = None,
) -> np.ndarray:
    """One disorder sample of the potential at every grid node of the box.

    conditioning_cap draws every coupling conditioned on staying at or below
    the cap (the small-coupling event used for the spectral minimum probe);
    couplings_override pins all couplings to a constant, a diagnostic seam.
    """
    model.check_box_registered(box)
    needed = model.sites_near_box(box)
    coupling_of: dict[int, float] = {}
    for i in needed:
        if couplings_override is not None:
            coupling_of[i] = couplings_override
        elif conditioning_cap is not None:
            coupling_of[i] = sample_value_below(model.dists[i], seed, i, conditioning_cap)
        else:
            coupling_of[i] = sample_value(model.dists[i], seed, i)
    return _assemble_potential(model, box, coupling_of)


def mean_potential(model: AlloyModel, box: BoxSpec) -> np.ndarray:
    """Expected potential: per-site means against the profiles."""
    model.check_box_registered(box)
    coupling_of = {i: model.dists[i].mean for i in model.sites_near_box(box)}
    return _assemble_potential(model, box, coupling_of)


# ---------------------------------------------------------------------------
# the deterministic upper envelope U = sum_j u_j and its verifiers


def registration_geometry(model: AlloyModel, margin: float = 0.0) -> RasterGeometry:
    half = model.extent - margin
    cells = half * 2 * model.u_resolution
    if abs(cells - round(cells)) > 1e-9:
        half = math.floor(half * model.u_resolution) / model.u_resolution
    return RasterGeometry(
        origin=(-half,) * model.d,
        extent=(2 * half,) * model.d,
        resolution=(model.u_resolution,) * model.d,
        periodic=False,
    )


def potential_envelope(model: AlloyModel, margin: float = 0.0) -> GridField:
    """U = sum_j u_j sampled at raster cell centers over the registration hull."""
    geo = registration_geometry(model, margin)
    axes = [geo.axis_centers(k) for k in range(model.d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = np.zeros(pts.shape[0])
    for s in model.sites:
        vals += s.evaluate(pts)
    return GridField(geometry=geo, values=vals.reshape(geo.shape))


@dataclass(frozen=True)
class PiCertificate:
    passed: bool
    gamma_star: float
    gamma_claimed: float
    thickness_error: float
    lower_bound_ok: bool
    first_violation: tuple[float, ...] | None
    checked_cells: int


def verify_Pi(model: AlloyModel, slack: float = 1e-12) -> PiCertificate:
    """Certify the covering claim: sum_j u_j >= 1 on S, and S is (gamma, a)-thick.

    The pointwise bound is checked at every raster cell center of S inside
    the registration hull shrunk by the site radius, so every contributing
    site is registered.
    """
    if model.claimed_set is None or model.claimed_gamma is None or model.claimed_window is None:
        raise ModelError("model declares no thick-set claim to verify")
    env = potential_envelope(model, margin=model.max_radius)
    geo = env.geometry
    axes = [geo.axis_centers(k) for k in range(model.d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    member = model.claimed_set.contains(pts)
    values = env.values.ravel()
    bad = member & (values < 1.0 - slack)
    first: tuple[float, ...] | None = None
    if np.any(bad):
        first = tuple(float(v) for v in pts[int(np.argmax(bad))])
    cert = certify_thickness(model.claimed_set, model.claimed_window)
    thick_ok = model.claimed_gamma <= cert.gamma_star - cert.error_bound + 1e-12
    return PiCertificate(
        passed=bool(first is None and thick_ok),
        gamma_star=cert.gamma_star,
        gamma_claimed=model.claimed_gamma,
        thickness_error=cert.error_bound,
        lower_bound_ok=first is None,
        first_violation=first,
        checked_cells=int(member.sum()),
    )


@dataclass(frozen=True)
class NoPiCertificate:
    passed: bool
    sup_u: float
    bound_claimed: float
    bound_ok: bool
    witnesses: dict[tuple[float, tuple[float, ...]], tuple[float, ...]]
    missing: tuple[tuple[float, tuple[float, ...]], ...]


def _find_empty_window(S: RasterSet, a: Sequence[float]) -> tuple[float, ...] | None:
    """First cell-aligned anchor (C order) whose window misses S entirely."""
    geo = S.geometry
    counts = S.cells.astype(np.int64)
    for axis in range(S.d):
        lo, hi = geo._axis_window(axis, geo.origin[axis], a[axis])
        q = hi - lo + 1
        m = geo.shape[axis]
        if q > m:
            return None
        work = np.moveaxis(counts, axis, 0)
        c = np.cumsum(work, axis=0)
        zero = np.zeros((1,) + c.shape[1:], dtype=c.dtype)
        c = np.concatenate([zero, c], axis=0)
        counts = np.moveaxis(c[q:] - c[:-q] if q < m else c[m:] - c[:1], 0, axis)
    hits = np.argwhere(counts == 0)
    if hits.size == 0:
        return None
    k = hits[0]
    return tuple(geo.origin[axis] + k[axis] / geo.resolution[axis] for axis in range(S.d))


def verify_NoPi(
    model: AlloyModel,
    kappa_list: Sequence[float],
    a_list: Sequence[Sequence[float]],
) -> NoPiCertificate:
    """Refute thickness of every tested level set {U >= kappa}.

    For each kappa and each window shape a the verifier exhibits a window
    position meeting the level set in nothing at all, which defeats
    (gamma, a)-thickness for every positive gamma at once.  It also confirms
    the claimed sup-norm bound on U.
    """
    if model.claimed_bound is None:
        raise ModelError("model declares no sup-norm bound to verify")
    env = potential_envelope(model)
    sup_u = float(env.values.max())
    bound_ok = sup_u <= model.claimed_bound + 1e-12
    witnesses: dict[tuple[float, tuple[float, ...]], tuple[float, ...]] = {}
    missing: list[tuple[float, tuple[float, ...]]] = []
    for kappa in kappa_list:
        s_k = level_set(env, kappa)
        for a in a_list:
            key = (float(kappa), tuple(float(v) for v in a))
            spot = _find_empty_window(s_k, a)
            if spot is None:
                missing.append(key)
            else:
                witnesses[key] = spot
    return NoPiCertificate(
        passed=bool(bound_ok and not missing),
        sup_u=sup_u,
        bound_claimed=model.claimed_bound,
        bound_ok=bound_ok,
        witnesses=witnesses,
        missing=tuple(missing),
    )


# ---------------------------------------------------------------------------
# diluted minorant


@dataclass(frozen=True, eq=False)
class MinorantCell:
    anchor: tuple[float, ...]  # sublattice cell center k
    site_index: int
    kept: RasterSet  # T_k, trimmed to measure gamma_hat within one cell


@dataclass(frozen=True, eq=False)
class DilutedMinorant:
    """W_omega = sum_k eta_{j_k}(omega) (1/N) 1_{T_k} with eta = eps1 above threshold."""

    spacing: float
    lattice_count: int  # N, integer points reachable inside one sublattice cell
    threshold: float  # eps1
    weight: float  # 1/N
    gamma_hat: float
    s_at_threshold: float
    margin: float  # min(eps1/N, gamma_hat, 1 - s(eps1))
    cells: tuple[MinorantCell, ...]

    def sample_on(self, model: AlloyModel, box: BoxSpec, seed: int | tuple[int, ...]) -> np.ndarray:
        """The minorant field for the same disorder draw sample_potential uses."""
        nodes = box.nodes()
        w = np.zeros(box.ndof)
        for cell in self.cells:
            pi = sample_value(model.dists[cell.site_index], seed, cell.site_index)
            if pi >= self.threshold:
                w += self.threshold * self.weight * cell.kept.contains(nodes).astype(float)
        return w


def _threshold_bisection(dists: Sequence[Distribution], tol: float = 1e-6) -> float:
    """Smallest coupling-window length with positive but non-unit modulus.

    Bisection on the boundary of {eps : s(eps) > 0}; the returned value sits
    within tol above the infimum.
    """
    span = max(d.max_support for d in dists) - min(d.min_support for d in dists)
    if span <= 0:
        raise ConstructionError("degenerate couplings admit no dilution threshold")
    hi = min(tol, span / 4)
    while modulus_s(dists, hi) == 0.0 and hi < span:
        hi *= 2
    if modulus_s(dists, hi) == 0.0:
        raise ConstructionError("modulus stays zero up to the coupling range")
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if modulus_s(dists, mid) > 0.0:
            hi = mid
        else:
            lo = mid
    if modulus_s(dists, hi) >= 1.0:
        raise ConstructionError("modulus jumps straight to one; couplings are a single atom")
    return hi


def construct_diluted_minorant(
    model: AlloyModel,
    L: float,
    raster_resolution: int | None = None,
) -> DilutedMinorant:
    """Select one site per sublattice cell and trim its strong set to measure gamma_hat.

    Sublattice spacing is L + 2R.  In each cell the site whose profile
    reaches 1/N on the largest part of the inner box wins (lexicographic
    tie-break); its strong set is trimmed to gamma_hat = gamma * prod(a) / N
    by dropping the highest raster cells in C order.
    """
    if model.claimed_gamma is None or model.claimed_window is None:
        raise ConstructionError("minorant construction needs the thickness claim (gamma, a)")
    if any(d.min_support != 0.0 for d in model.dists):
        raise ConstructionError("couplings must have minimal support 0")
    res = raster_resolution or model.u_resolution
    r_max = model.max_radius
    spacing = L + 2 * r_max
    eps1 = _threshold_bisection(model.dists)
    s1 = modulus_s(model.dists, eps1)

    # integer points inside the open sublattice cell, per axis
    half = spacing / 2
    zs = [z for z in range(-math.ceil(half), math.ceil(half) + 1) if abs(z) < half]
    n_points = len(zs) ** model.d
    if n_points == 0:
        raise ConstructionError("sublattice cell contains no lattice points")

    gamma_hat = model.claimed_gamma * float(np.prod(model.claimed_window.a)) / n_points
    weight = 1.0 / n_points

    # sublattice anchors whose padded cell stays inside the registration hull
    reach = math.floor((model.extent - half) / spacing)
    if reach < 0:
        raise ConstructionError("registration hull too small for a single sublattice cell")
    anchor_axis = [k * spacing for k in range(-reach, reach + 1)]
    site_by_center = {s.center: i for i, s in enumerate(model.sites)}

    cells: list[MinorantCell] = []
    import itertools as _it

    for anchor in _it.product(anchor_axis, repeat=model.d):
        geo = RasterGeometry(
            origin=tuple(a - L / 2 for a in anchor),
            extent=(float(L),) * model.d,
            resolution=(res,) * model.d,
            periodic=False,
        )
        axes = [geo.axis_centers(k) for k in range(model.d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        best: tuple[int, int] | None = None  # (cell count, site index), maximizing count
        best_mask: np.ndarray | None = None
        for offs in sorted(_it.product(zs, repeat=model.d)):
            center = tuple(a + o for a, o in zip(anchor, offs))
            idx = site_by_center.get(center)
            if idx is None:
                continue
            mask = model.sites[idx].evaluate(pts) >= weight - 1e-12
            count = int(mask.sum())
            if best is None or count > best[0]:
                best = (count, idx)
                best_mask = mask
        if best is None:
            continue  # no registered site in this cell; skip it
        count, site_idx = best
        assert best_mask is not None
        cell_vol = geo.cell_volume
        target = int(round(gamma_hat / cell_vol))
        if target < 1:
            raise ConstructionError(
                f"raster resolution {res} too coarse to hold measure {gamma_hat} in one cell"
            )
        if count < target:
            raise ConstructionError(
                f"strongest site in cell {anchor} covers {count * cell_vol}, need {gamma_hat}"
            )
        flat = np.zeros(pts.shape[0], dtype=bool)
        keep_idx = np.flatnonzero(best_mask)[:target]  # lexicographic trim in C order
        flat[keep_idx] = True
        kept = RasterSet(geometry=geo, cells=flat.reshape(geo.shape))
        cells.append(MinorantCell(anchor=tuple(float(a) for a in anchor), site_index=site_idx, kept=kept))

    if not cells:
        raise ConstructionError("no sublattice cell found a registered site")
    margin = min(eps1 / n_points, gamma_hat, 1.0 - s1)
    return DilutedMinorant(
        spacing=spacing,
        lattice_count=n_points,
        threshold=eps1,
        weight=weight,
        gamma_hat=gamma_hat,
        s_at_threshold=s1,
        margin=margin,
        cells=tuple(cells),
    )


# ---------------------------------------------------------------------------
# model factories


def _integer_sites(extent: float, d: int) -> list[tuple[float, ...]]:
    import itertools as _it

    rng = range(-int(extent), int(extent) + 1)
    return [tuple(float(v) for v in tup) for tup in _it.product(rng, repeat=d)]


def covering_model(
    extent: float = 40.0,
    dist: Distribution = Uniform(0.0, 1.0),
    u_resolution: int = 16,
) -> AlloyModel:
    """d=1 unit-cell indicators at every integer: sum_j u_j = 1 everywhere."""
    centers = _integer_sites(extent, 1)
    profile = BallIndicator(radius=0.5)
    sites = tuple(SingleSite(center=c, radius=0.5, profile=profile) for c in centers)
    full = stripes_raster(width=1.0, period=1.0, resolution=u_resolution)
    return AlloyModel(
        d=1,
        sites=sites,
        dists=(dist,) * len(sites),
        extent=float(extent),
        u_resolution=u_resolution,
        claimed_gamma=1.0,
        claimed_window=WindowSpec((1.0,)),
        claimed_set=full,
    )


def fat_cantor_model(
    extent: float = 40.0,
    depth: int = 4,
    dist: Distribution = Uniform(0.0, 1.0),
    u_resolution: int = 16,
    set_resolution: int = 1024,
) -> AlloyModel:
    """d=1 fat-Cantor stage indicators: the support is nowhere dense yet thick."""
    cspec = smith_volterra_spec(depth)
    profile = CantorTranslate.from_depth(depth)
    centers = _integer_sites(extent, 1)
    sites = tuple(SingleSite(center=c, radius=0.5, profile=profile) for c in centers)
    stage = build_fat_cantor(cspec, set_resolution, periodic=True)
    # S = union of stage translates sits in cells [j-1/2, j+1/2): roll by half a period
    rolled = np.roll(stage.cells, set_resolution // 2)
    claimed = RasterSet(geometry=stage.geometry, cells=rolled)
    return AlloyModel(
        d=1,
        sites=sites,
        dists=(dist,) * len(sites),
        extent=float(extent),
        u_resolution=u_resolution,
        claimed_gamma=float(cspec.stage_measure()),
        claimed_window=WindowSpec((1.0,)),
        claimed_set=claimed,
    )


def geometric_dilution_model(
    extent: float = 200.0,
    dist: Distribution = Uniform(0.0, 1.0),
    u_resolution: int = 8,
) -> AlloyModel:
    """d=1 sites only at +-2^m: gaps double forever, so no level set is thick."""
    centers: list[tuple[float, ...]] = []
    m = 1
    while m <= extent:
        centers.extend([(-float(m),), (float(m),)])
        m *= 2
    centers.sort()
    profile = BallIndicator(radius=0.5)
    sites = tuple(SingleSite(center=c, radius=0.5, profile=profile) for c in centers)
    return AlloyModel(
        d=1,
        sites=sites,
        dists=(dist,) * len(sites),
        extent=float(extent),
        u_resolution=u_resolution,
        claimed_bound=1.0,
    )


def slab_model(
    extent: float = 20.0,
    dist: Distribution = Uniform(0.0, 1.0),
    u_resolution: int = 8,
) -> AlloyModel:
    """d=2 balls along one axis: support confined to a slab, thick nowhere."""
    centers = [(0.0, float(k)) for k in range(-int(extent), int(extent) + 1)]
    profile = BallIndicator(radius=1.0)
    sites = tuple(SingleSite(center=c, radius=1.0, profile=profile) for c in centers)
    return AlloyModel(
        d=2,
        sites=sites,
        dists=(dist,) * len(sites),
        extent=float(extent),
        u_resolution=u_resolution,
        claimed_bound=2.0,  # adjacent balls overlap pairwise, never three deep
    )


# ---------------------------------------------------------------------------
# model description files

_MODEL_SECTIONS = {
    "model": {"dimension", "extent", "resolution"},
    "sites": {"profile", "radius", "placement", "cantor_depth", "set_resolution", "raster"},
    "distribution": {"kind", "lo", "hi", "v0", "v1", "p0", "m_plus", "alpha"},
    "thickness": {"gamma", "a", "set"},
    "bound": {"c_u"},
}


def _parse_distribution(sec: configparser.SectionProxy) -> Distribution:
    kind = sec.get("kind", "").strip()
    if kind == "uniform":
        return Uniform(lo=sec.getfloat("lo", 0.0), hi=sec.getfloat("hi", 1.0))
    if kind == "bernoulli":
        return BernoulliAt(v0=sec.getfloat("v0", 0.0), v1=sec.getfloat("v1", 1.0), p0=sec.getfloat("p0", 0.5))
    if kind == "truncated-power":
        return TruncatedPowerHolder(m_plus=sec.getfloat("m_plus", 1.0), alpha=sec.getfloat("alpha", 0.5))
    raise ModelConfigError(f"unknown distribution kind {kind!r}")


def load_model_config(path: str | Path) -> AlloyModel:
    """Build an AlloyModel from a sectioned key-value description file."""
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with path.open() as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ModelConfigError(f"{path}: {exc}") from exc
    for section in parser.sections():
        if section not in _MODEL_SECTIONS:
            raise ModelConfigError(f"{path}: unknown section [{section}]")
        for key in parser[section]:
            if key not in _MODEL_SECTIONS[section]:
                raise ModelConfigError(f"{path}: unknown key {key!r} in section [{section}]")
    if "model" not in parser or "sites" not in parser or "distribution" not in parser:
        raise ModelConfigError(f"{path}: need [model], [sites], and [distribution] sections")

    m = parser["model"]
    d = m.getint("dimension", 1)
    extent = m.getfloat("extent", 40.0)
    resolution = m.getint("resolution", 16)
    dist = _parse_distribution(parser["distribution"])

    s = parser["sites"]
    placement = s.get("placement", "all-integers").strip()
    profile_kind = s.get("profile", "indicator-ball").strip()

    profile: Profile
    if profile_kind == "indicator-ball":
        radius = s.getfloat("radius", 0.5)
        profile = BallIndicator(radius=radius)
    elif profile_kind == "cantor-translate":
        if d != 1:
            raise ModelConfigError("cantor-translate profiles are one-dimensional")
        profile = CantorTranslate.from_depth(s.getint("cantor_depth", 4))
        radius = 0.5
    elif profile_kind == "raster-file":
        rel = s.get("raster", "")
        if not rel:
            raise ModelConfigError(f"{path}: raster-file profile needs a raster key")
        raster = load_raster(path.parent / rel)
        profile = RasterProfile(raster=raster)
        radius = profile.radius
    else:
        raise ModelConfigError(f"unknown profile kind {profile_kind!r}")

    if placement == "all-integers":
        centers = _integer_sites(extent, d)
    elif placement == "powers-of-two":
        if d != 1:
            raise ModelConfigError("powers-of-two placement is one-dimensional")
        centers = []
        v = 1
        while v <= extent:
            centers.extend([(-float(v),), (float(v),)])
            v *= 2
        centers.sort()
    elif placement == "hyperplane":
        if d < 2:
            raise ModelConfigError("hyperplane placement needs dimension at least 2")
        side = range(-int(extent), int(extent) + 1)
        import itertools as _it

        centers = [(0.0,) + tuple(float(v) for v in tup) for tup in _it.product(side, repeat=d - 1)]
    else:
        raise ModelConfigError(f"unknown placement {placement!r}")

    sites = tuple(SingleSite(center=c, radius=radius, profile=profile) for c in centers)

    claimed_gamma = claimed_window = claimed_set = None
    if "thickness" in parser:
        t = parser["thickness"]
        claimed_gamma = t.getfloat("gamma")
        a_vals = tuple(float(v.strip()) for v in t.get("a", "1.0").split(","))
        claimed_window = WindowSpec(a_vals)
        which = t.get("set", "full").strip()
        if which == "full":
            claimed_set = stripes_raster(1.0, 1.0, resolution)
        elif which == "cantor":
            if not isinstance(profile, CantorTranslate):
                raise ModelConfigError("thickness set 'cantor' needs a cantor-translate profile")
            set_res = s.getint("set_resolution", 1024)
            stage = build_fat_cantor(smith_volterra_spec(s.getint("cantor_depth", 4)), set_res)
            claimed_set = RasterSet(geometry=stage.geometry, cells=np.roll(stage.cells, set_res // 2))
        else:
            claimed_set = load_raster(path.parent / which)

    claimed_bound = parser["bound"].getfloat("c_u") if "bound" in parser else None

    return AlloyModel(
        d=d,
        sites=sites,
        dists=(dist,) * len(sites),
        extent=extent,
        u_resolution=resolution,
        claimed_gamma=claimed_gamma,
        claimed_window=claimed_window,
        claimed_set=claimed_set,
        claimed_bound=claimed_bound,
    )
