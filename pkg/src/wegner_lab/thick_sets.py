"""Rasterized sets, sliding-window thickness certification, fat Cantor stages.

A set S is (gamma, a)-thick when every axis-aligned window with side lengths
a = (a_1, ..., a_d) carries at least gamma times the window volume of S.
Sets are stored as bit rasters over a box region; membership of a cell is
decided by its center.  Window counts are exact integers, so certification
over all cell-aligned window positions is exact up to the documented
boundary-cell error, and exact with no error at all when the window faces
align with cell boundaries.

Fat Cantor stages are built with exact rational arithmetic and rasterized
afterwards, so the stage measure survives as a closed-form rational that a
suitably aligned raster reproduces exactly.
"""

from __future__ import annotations

import math
import struct
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

_ALIGN_TOL = 1e-9  # cells; forgives float noise at aligned window faces


class RasterError(ValueError):
    pass


class RasterFormatError(RasterError):
    pass


@dataclass(frozen=True)
class WindowSpec:
    """Side lengths of the sliding window A_a = [0,a_1] x ... x [0,a_d]."""

    a: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.a:
            raise RasterError("window needs at least one axis")
        if any(not (ai > 0 and math.isfinite(ai)) for ai in self.a):
            raise RasterError("window side lengths must be positive and finite")

    @property
    def volume(self) -> float:
        return float(np.prod(self.a))


@dataclass(frozen=True)
class RasterGeometry:
    """Axis-aligned region [origin, origin+extent) with a fixed cell raster."""

    origin: tuple[float, ...]
    extent: tuple[float, ...]
    resolution: tuple[int, ...]  # cells per unit length, per axis
    periodic: bool = False

    def __post_init__(self) -> None:
        d = len(self.origin)
        if not (len(self.extent) == len(self.resolution) == d):
            raise RasterError("origin, extent, resolution must agree on dimension")
        if any(e <= 0 for e in self.extent):
            raise RasterError("extents must be positive")
        if any(r < 1 for r in self.resolution):
            raise RasterError("resolution must be at least one cell per unit")
        for e, r in zip(self.extent, self.resolution):
            cells = e * r
            if abs(cells - round(cells)) > _ALIGN_TOL:
                raise RasterError(f"extent {e} times resolution {r} must be a whole cell count")

    @property
    def d(self) -> int:
        return len(self.origin)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(int(round(e * r)) for e, r in zip(self.extent, self.resolution))

    @property
    def cell_volume(self) -> float:
        return float(np.prod([1.0 / r for r in self.resolution]))

    @property
    def period(self) -> tuple[float, ...]:
        """Periodic rasters tile with their extent as the period."""
        return self.extent

    def axis_centers(self, axis: int) -> np.ndarray:
        m = self.shape[axis]
        r = self.resolution[axis]
        return self.origin[axis] + (np.arange(m) + 0.5) / r

    def _axis_window(self, axis: int, x: float, a: float) -> tuple[int, int]:
        """Index range [lo, hi] of cell centers inside the closed window [x, x+a]."""
        r = self.resolution[axis]
        o = self.origin[axis]
        lo = math.ceil((x - o) * r - 0.5 - _ALIGN_TOL)
        hi = math.floor((x + a - o) * r - 0.5 + _ALIGN_TOL)
        return lo, hi

    def window_indices(self, x: Sequence[float], a: Sequence[float]) -> tuple[np.ndarray, ...] | None:
        """Per-axis index arrays covering the window, or None when it misses the region.

        Periodic rasters wrap; a window longer than the period revisits cells
        and the duplicated indices deliberately count them again.
        """
        if len(x) != self.d or len(a) != self.d:
            raise RasterError("window position and side count must match the raster dimension")
        per_axis = []
        for axis in range(self.d):
            lo, hi = self._axis_window(axis, x[axis], a[axis])
            m = self.shape[axis]
            if self.periodic:
                idx = np.arange(lo, hi + 1, dtype=np.int64) % m
            else:
                lo2, hi2 = max(lo, 0), min(hi, m - 1)
                if lo2 > hi2:
                    return None
                idx = np.arange(lo2, hi2 + 1, dtype=np.int64)
            if idx.size == 0:
                return None
            per_axis.append(idx)
        return np.ix_(*per_axis)


@dataclass(frozen=True, eq=False)
class GridField:
    """Scalar samples at every cell center of a raster geometry."""

    geometry: RasterGeometry
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.values.shape != self.geometry.shape:
            raise RasterError("field shape does not match the raster geometry")


@dataclass(frozen=True, eq=False)
class RasterSet:
    """Bit raster of a measurable set over a box region."""

    geometry: RasterGeometry
    cells: np.ndarray

    def __post_init__(self) -> None:
        if self.cells.dtype != np.bool_:
            raise RasterError("raster cells must be boolean")
        if self.cells.shape != self.geometry.shape:
            raise RasterError("cell array shape does not match the geometry")

    @property
    def d(self) -> int:
        return self.geometry.d

    @property
    def periodic(self) -> bool:
        return self.geometry.periodic

    @property
    def measure(self) -> float:
        return float(self.cells.sum()) * self.geometry.cell_volume

    @property
    def cell_fraction(self) -> float:
        return float(self.cells.sum()) / self.cells.size

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Membership of points, decided by the cell the point falls in."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.d:
            raise RasterError("points must have one coordinate per raster axis")
        ok = np.ones(pts.shape[0], dtype=bool)
        idx = []
        for axis in range(self.d):
            rel = pts[:, axis] - self.geometry.origin[axis]
            ext = self.geometry.extent[axis]
            if self.periodic:
                rel = np.mod(rel, ext)
            i = np.floor(rel * self.geometry.resolution[axis] + _ALIGN_TOL).astype(np.int64)
            m = self.shape_axis(axis)
            if self.periodic:
                i = np.clip(i, 0, m - 1)
            else:
                ok &= (i >= 0) & (i < m)
                i = np.clip(i, 0, m - 1)
            idx.append(i)
        return ok & self.cells[tuple(idx)]

    def shape_axis(self, axis: int) -> int:
        return self.geometry.shape[axis]


def window_measure(S: RasterSet, x: Sequence[float], a: Sequence[float]) -> float:
    """Raster volume of S intersected with the closed window [x, x+a].

    Exact when the window faces align with cell boundaries; otherwise each
    boundary layer of cells contributes plus or minus one cell volume.
    """
    idx = S.geometry.window_indices(x, a)
    if idx is None:
        if S.periodic:
            return 0.0
        raise RasterError("window does not meet the raster region")
    return float(S.cells[idx].sum()) * S.geometry.cell_volume


def window_field_max(field: GridField, x: Sequence[float], a: Sequence[float]) -> float:
    """Largest field sample over the window; mirrors window_measure indexing."""
    idx = field.geometry.window_indices(x, a)
    if idx is None:
        raise RasterError("window does not meet the raster region")
    return float(field.values[idx].max())


@dataclass(frozen=True)
class ThicknessCertificate:
    """Result of scanning all cell-aligned window positions over one period."""

    gamma_star: float
    window: tuple[float, ...]
    error_bound: float  # boundary-cell volume as a fraction of the window volume
    argmin: tuple[float, ...]  # a window anchor achieving gamma_star

    def certifies(self, gamma: float) -> bool:
        return gamma <= self.gamma_star - self.error_bound


def _cyclic_window_sums(arr: np.ndarray, q: int, axis: int) -> np.ndarray:
    """Sums over cyclic windows of q consecutive cells, for every anchor position."""
    m = arr.shape[axis]
    full, rem = divmod(q, m)
    base = np.zeros_like(np.moveaxis(arr, axis, 0))
    work = np.moveaxis(arr, axis, 0)
    if full:
        base = base + work.sum(axis=0, keepdims=True)
        base = np.broadcast_to(base * full, work.shape).copy()
    if rem:
        pad = np.concatenate([work, work[: rem - 1]], axis=0)
        c = np.cumsum(pad, axis=0)
        zero = np.zeros((1,) + c.shape[1:], dtype=c.dtype)
        c = np.concatenate([zero, c], axis=0)
        base = base + (c[rem : rem + m] - c[:m])
    return np.moveaxis(base, 0, axis)


def certify_thickness(S: RasterSet, a: Sequence[float] | WindowSpec) -> ThicknessCertificate:
    """Certified thickness constant gamma* of a periodic raster for window sides a.

    gamma* is the minimum over every cell-aligned window anchor within one
    period of vol(S within window) / vol(window).  S is certified
    (gamma, a)-thick for any gamma <= gamma* - error_bound.
    """
    win = a if isinstance(a, WindowSpec) else WindowSpec(tuple(float(v) for v in a))
    if len(win.a) != S.d:
        raise RasterError("window dimension does not match the raster")
    if not S.periodic:
        raise RasterError("thickness certification needs a periodic raster")
    counts = S.cells.astype(np.int64)
    qs = []
    for axis in range(S.d):
        lo, hi = S.geometry._axis_window(axis, S.geometry.origin[axis], win.a[axis])
        q = hi - lo + 1
        if q < 1:
            raise RasterError(f"window side {win.a[axis]} spans no cell along axis {axis}")
        qs.append(q)
        counts = _cyclic_window_sums(counts, q, axis)
    ratios = counts * (S.geometry.cell_volume / win.volume)
    flat = int(np.argmin(ratios))
    anchor_idx = np.unravel_index(flat, ratios.shape)
    argmin = tuple(
        float(S.geometry.origin[axis] + anchor_idx[axis] / S.geometry.resolution[axis])
        for axis in range(S.d)
    )
    # Sliding the anchor within one cell changes the window measure
    # multilinearly in the per-axis offsets, so when every window side is a
    # whole number of cells the continuum minimum sits at an aligned anchor
    # and the scan is exact.  Otherwise partial boundary cells can leak.
    aligned = all(
        abs(win.a[axis] * S.geometry.resolution[axis] - round(win.a[axis] * S.geometry.resolution[axis]))
        <= _ALIGN_TOL
        for axis in range(S.d)
    )
    if aligned:
        err = 0.0
    else:
        boundary_cells = float(np.prod(qs)) - float(np.prod([max(q - 2, 0) for q in qs]))
        err = boundary_cells * S.geometry.cell_volume / win.volume
    return ThicknessCertificate(
        gamma_star=float(ratios[anchor_idx]),
        window=win.a,
        error_bound=float(err),
        argmin=argmin,
    )


# ---------------------------------------------------------------------------
# fat Cantor stages


@dataclass(frozen=True)
class CantorSpec:
    """Middle-interval removal schedule on [0,1].

    removal[k] is the proportion of each surviving interval removed at stage
    k+1, as an exact rational.  The classic schedule removing absolute length
    4^-k at stage k corresponds to removal fractions 1/(2^k + 2).
    """

    depth: int
    removal: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if self.depth < 0:
            raise RasterError("depth must be nonnegative")
        if len(self.removal) < self.depth:
            raise RasterError("need one removal fraction per stage")
        if any(not (0 < r < 1) for r in self.removal):
            raise RasterError("removal fractions must lie strictly between 0 and 1")

    def stage_intervals(self) -> list[tuple[Fraction, Fraction]]:
        """Closed surviving intervals after `depth` removal stages, exact."""
        intervals = [(Fraction(0), Fraction(1))]
        for k in range(self.depth):
            r = Fraction(self.removal[k])
            nxt: list[tuple[Fraction, Fraction]] = []
            for lo, hi in intervals:
                w = (hi - lo) * r
                mid = (lo + hi) / 2
                nxt.append((lo, mid - w / 2))
                nxt.append((mid + w / 2, hi))
            intervals = nxt
        return intervals

    def stage_measure(self) -> Fraction:
        """Total surviving length, 1 - sum over stages of 2^(k-1) w_k."""
        total = Fraction(1)
        length = Fraction(1)
        for k in range(self.depth):
            r = Fraction(self.removal[k])
            w = length * r
            total -= 2**k * w
            length = (length - w) / 2
        if total <= 0:
            raise RasterError("removal schedule exhausts the interval")
        return total


def smith_volterra_spec(depth: int) -> CantorSpec:
    """Schedule removing absolute middle length 4^-k at stage k (limit measure 1/2)."""
    return CantorSpec(depth=depth, removal=tuple(Fraction(1, 2**k + 2) for k in range(1, depth + 1)))


def build_fat_cantor(cspec: CantorSpec, resolution: int, periodic: bool = True) -> RasterSet:
    """Rasterize the stage-depth pre-Cantor set on [0,1].

    Requires every surviving interval to span at least four cells so the
    raster resolves the construction rather than aliasing it.
    """
    intervals = cspec.stage_intervals()
    finest = min(hi - lo for lo, hi in intervals)
    if finest * resolution < 4:
        raise RasterError(
            f"resolution {resolution} cannot resolve stage intervals of length {finest}; "
            f"need at least {math.ceil(4 / finest)} cells per unit"
        )
    geo = RasterGeometry(origin=(0.0,), extent=(1.0,), resolution=(resolution,), periodic=periodic)
    centers = [Fraction(2 * k + 1, 2 * resolution) for k in range(resolution)]
    flat: list[Fraction] = []
    for lo, hi in intervals:
        flat.extend((lo, hi))
    bits = np.zeros(resolution, dtype=bool)
    for k, c in enumerate(centers):
        pos = bisect_right(flat, c)
        inside = pos % 2 == 1
        if not inside and pos >= 1 and flat[pos - 1] == c:
            inside = True  # center exactly on a closed right endpoint
        bits[k] = inside
    return RasterSet(geometry=geo, cells=bits)


def interval_member(points: np.ndarray, intervals: Sequence[tuple[Fraction, Fraction]]) -> np.ndarray:
    """Exact-as-possible membership of float points in closed rational intervals."""
    flat = np.array([float(v) for ab in intervals for v in ab])
    pts = np.asarray(points, dtype=float)
    idx = np.searchsorted(flat, pts, side="right")
    inside = idx % 2 == 1
    at_right = (idx >= 1) & (idx % 2 == 0)
    if np.any(at_right):
        prev = flat[np.clip(idx - 1, 0, len(flat) - 1)]
        inside = inside | (at_right & (prev == pts))
    return inside


# ---------------------------------------------------------------------------
# products, level sets


def product_and_periodize(axes: Sequence[RasterSet]) -> RasterSet:
    """Tensor product of 1-d periodic rasters into a d-dim periodic raster."""
    if not axes:
        raise RasterError("need at least one axis raster")
    if any(s.d != 1 for s in axes):
        raise RasterError("product factors must be one-dimensional")
    if any(not s.periodic for s in axes):
        raise RasterError("product factors must be periodic")
    geo = RasterGeometry(
        origin=tuple(s.geometry.origin[0] for s in axes),
        extent=tuple(s.geometry.extent[0] for s in axes),
        resolution=tuple(s.geometry.resolution[0] for s in axes),
        periodic=True,
    )
    bits = axes[0].cells
    for s in axes[1:]:
        bits = np.logical_and.outer(bits, s.cells)
    return RasterSet(geometry=geo, cells=bits)


def stripes_raster(width: float, period: float, resolution: int) -> RasterSet:
    """Periodic 1-d stripes: S = [0, width) repeated with the given period."""
    if not (0 < width <= period):
        raise RasterError("stripe width must lie in (0, period]")
    geo = RasterGeometry(origin=(0.0,), extent=(period,), resolution=(resolution,), periodic=True)
    centers = geo.axis_centers(0)
    return RasterSet(geometry=geo, cells=centers < width)


def level_set(field: GridField, kappa: float) -> RasterSet:
    """Cells whose sampled value reaches kappa: the raster of {U >= kappa}."""
    return RasterSet(geometry=field.geometry, cells=field.values >= kappa)


# ---------------------------------------------------------------------------
# serialization

_MAGIC = b"WLRS"
_VERSION = 1
_TEXT_HEADER = "wegner-lab-raster v1"


def save_raster_binary(S: RasterSet, path: str | Path) -> None:
    geo = S.geometry
    blob = bytearray()
    blob += struct.pack("<4sBBBB", _MAGIC, _VERSION, geo.d, 1 if geo.periodic else 0, 0)
    for axis in range(geo.d):
        blob += struct.pack("<ddI", geo.origin[axis], geo.extent[axis], geo.resolution[axis])
    bits = np.packbits(S.cells.ravel())
    blob += struct.pack("<Q", S.cells.size)
    blob += bits.tobytes()
    Path(path).write_bytes(bytes(blob))


def load_raster_binary(path: str | Path) -> RasterSet:
    raw = Path(path).read_bytes()
    if len(raw) < 8 or raw[:4] != _MAGIC:
        raise RasterFormatError(f"{path}: not a raster file (bad magic)")
    magic, version, d, periodic, _ = struct.unpack_from("<4sBBBB", raw, 0)
    if version != _VERSION:
        raise RasterFormatError(f"{path}: unsupported raster version {version}")
    off = 8
    origin, extent, resolution = [], [], []
    for _ in range(d):
        o, e, r = struct.unpack_from("<ddI", raw, off)
        origin.append(o)
        extent.append(e)
        resolution.append(int(r))
        off += 20
    (ncells,) = struct.unpack_from("<Q", raw, off)
    off += 8
    geo = RasterGeometry(tuple(origin), tuple(extent), tuple(resolution), bool(periodic))
    expect = int(np.prod(geo.shape))
    if ncells != expect:
        raise RasterFormatError(f"{path}: cell count {ncells} does not match geometry {expect}")
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8, offset=off), count=ncells)
    return RasterSet(geometry=geo, cells=bits.astype(bool).reshape(geo.shape))


def raster_to_rle_text(S: RasterSet) -> str:
    geo = S.geometry
    lines = [_TEXT_HEADER, f"d {geo.d}"]
    for axis in range(geo.d):
        lines.append(f"axis {geo.origin[axis]!r} {geo.extent[axis]!r} {geo.resolution[axis]}")
    lines.append(f"periodic {1 if geo.periodic else 0}")
    flat = S.cells.ravel()
    runs: list[str] = []
    pos = 0
    while pos < flat.size:
        bit = flat[pos]
        end = pos
        while end < flat.size and flat[end] == bit:
            end += 1
        runs.append(f"{1 if bit else 0}x{end - pos}")
        pos = end
    lines.append("runs " + ",".join(runs))
    return "\n".join(lines) + "\n"


def raster_from_rle_text(text: str) -> RasterSet:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != _TEXT_HEADER:
        raise RasterFormatError("missing raster text header")
    try:
        d = int(lines[1].split()[1])
    except (IndexError, ValueError) as exc:
        raise RasterFormatError("unreadable dimension line") from exc
    origin, extent, resolution = [], [], []
    for axis in range(d):
        parts = lines[2 + axis].split()
        if len(parts) != 4 or parts[0] != "axis":
            raise RasterFormatError(f"axis line {axis} malformed: {lines[2 + axis]!r}")
        origin.append(float(parts[1]))
        extent.append(float(parts[2]))
        resolution.append(int(parts[3]))
    per_line = lines[2 + d].split()
    if per_line[0] != "periodic":
        raise RasterFormatError("missing periodic line")
    periodic = bool(int(per_line[1]))
    runs_line = lines[3 + d]
    if not runs_line.startswith("runs "):
        raise RasterFormatError("missing runs line")
    geo = RasterGeometry(tuple(origin), tuple(extent), tuple(resolution), periodic)
    bits: list[np.ndarray] = []
    for token in runs_line[5:].split(","):
        try:
            bit, count = token.split("x")
            if bit not in ("0", "1") or int(count) < 1:
                raise ValueError(token)
            bits.append(np.full(int(count), bit == "1", dtype=bool))
        except ValueError as exc:
            raise RasterFormatError(f"bad run token {token!r}") from exc
    flat = np.concatenate(bits) if bits else np.zeros(0, dtype=bool)
    expect = int(np.prod(geo.shape))
    if flat.size != expect:
        raise RasterFormatError(f"runs cover {flat.size} cells, geometry needs {expect}")
    return RasterSet(geometry=geo, cells=flat.reshape(geo.shape))


def save_raster(S: RasterSet, path: str | Path) -> None:
    """Binary for .rast, run-length text for anything else."""
    p = Path(path)
    if p.suffix == ".rast":
        save_raster_binary(S, p)
    else:
        p.write_text(raster_to_rle_text(S))


def load_raster(path: str | Path) -> RasterSet:
    p = Path(path)
    head = p.open("rb").read(4)
    if head == _MAGIC:
        return load_raster_binary(p)
    return raster_from_rle_text(p.read_text())
