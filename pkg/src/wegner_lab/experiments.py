"""Experiment drivers: each takes a model plus run parameters, returns a report.

Replica r of an experiment with root seed s draws its couplings through the
key (s, r), so any replica can be recomputed in isolation and worker count
never changes results.  All reductions iterate in replica order; records and
verdicts are deterministic functions of the inputs.

Verdicts are deliberately coarse: PASS/FAIL where a claim is on trial,
INFORMATIONAL where the run only measures.  Every threshold encodes a
statistical allowance (usually 2 or 3 standard errors), never a tuned fudge.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Sequence

import numpy as np

from .grids import BoxSpec, add_potential, build_free_laplacian, discrete_dirichlet_spectrum
from .random_model import (
    AlloyModel,
    ModelError,
    construct_diluted_minorant,
    mean_potential,
    modulus_s,
    potential_envelope,
    sample_potential,
    verify_NoPi,
)
from .reports import FAIL, INFORMATIONAL, PASS, ExperimentReport, record
from .spectral import (
    ResonantSampleError,
    SubBox,
    compressed_indicator_min_eig,
    count_in_interval,
    eigs_below,
    resolvent_block_norm,
)
from .thick_sets import RasterSet, WindowSpec, certify_thickness, stripes_raster, window_field_max


class PreconditionError(RuntimeError):
    """The run's standing assumptions fail before any statistics are drawn."""


def _map_replicas(worker, arg_tuples: list, workers: int) -> list:
    if workers <= 1:
        return [worker(a) for a in arg_tuples]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, len(arg_tuples) // (4 * workers))
        return list(pool.map(worker, arg_tuples, chunksize=chunk))


def _box(model_d: int, L: float, mesh_density: int, center: tuple | None = None, bc: str = "dirichlet") -> BoxSpec:
    n = int(round(L * mesh_density)) - (1 if bc == "dirichlet" else 0)
    return BoxSpec(
        d=model_d,
        length=float(L),
        center=center if center is not None else (0.0,) * model_d,
        n=n,
        bc=bc,  # type: ignore[arg-type]
    )


# ---------------------------------------------------------------------------
# eigenvalue counting in random boxes (the volume-law estimate)


def _wegner_replica(args) -> tuple[int, ...]:
    model, box, seed_key, e_anchor, eps_list = args
    v = sample_potential(model, seed_key, box)
    H = add_potential(build_free_laplacian(box), v)
    return tuple(count_in_interval(H, e_anchor - e, e_anchor + e) for e in eps_list)


def _anchor_energy(model: AlloyModel, box: BoxSpec, e_ref: float, eps_max: float) -> float:
    """Mean-shifted free eigenvalue: the highest one keeping the window under e_ref.

    Anchoring at a shifted free eigenvalue keeps expected counts away from
    zero at every box size; anchoring does not depend on the window length,
    so nested windows stay nested across the eps scan.
    """
    shift = float(np.mean(mean_potential(model, box)))
    spec = discrete_dirichlet_spectrum(box)
    usable = [lam for lam in spec if lam + shift + eps_max <= e_ref]
    if not usable:
        raise PreconditionError(f"no free eigenvalue fits below {e_ref} with window {eps_max}")
    return float(usable[-1] + shift)


def run_wegner(
    model: AlloyModel,
    L_list: Sequence[float] = (8.0, 16.0, 32.0),
    eps_list: Sequence[float] = (0.4, 0.2, 0.1),
    replicas: int = 200,
    seed: int = 20260822,
    mesh_density: int = 16,
    e_ref: float = 30.0,
    workers: int = 1,
) -> ExperimentReport:
    """Mean eigenvalue count in [E-eps, E+eps] against the volume law s(eps) L^d.

    For each box size the window count is averaged over disorder replicas and
    divided by s(eps) L^d.  The law predicts this ratio stays bounded, and on
    these models the boundary-dominated small boxes give the largest ratio,
    so the fitted constant is the maximum of mean + 3 stderr over the grid
    and the trend verdict demands no growth from smallest to largest box.
    """
    t0 = time.perf_counter()
    eps_sorted = tuple(sorted(eps_list))
    L_sorted = tuple(sorted(L_list))
    rep = ExperimentReport(
        experiment="wegner",
        config={
            "L_list": list(L_sorted),
            "eps_list": list(eps_sorted),
            "replicas": replicas,
            "mesh_density": mesh_density,
            "e_ref": e_ref,
        },
        seed=seed,
    )
    s_eps = {e: modulus_s(model.dists, e) for e in eps_sorted}
    ratios: dict[tuple[float, float], tuple[float, float]] = {}
    nested_ok = True
    for L in L_sorted:
        box = _box(model.d, L, mesh_density)
        e_anchor = _anchor_energy(model, box, e_ref, eps_sorted[-1])
        rep.fitted[f"anchor_energy_L={L:g}"] = e_anchor
        args = [(model, box, (seed, r), e_anchor, eps_sorted) for r in range(replicas)]
        counts = np.array(_map_replicas(_wegner_replica, args, workers), dtype=float)
        if np.any(np.diff(counts, axis=1) < 0):
            nested_ok = False
        for k, e in enumerate(eps_sorted):
            mean = float(counts[:, k].mean())
            se = float(counts[:, k].std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else 0.0
            denom = s_eps[e] * L**model.d
            rep.records.append(record([L, e], "count_mean", mean, se, replicas))
            rep.records.append(record([L, e], "volume_ratio", mean / denom, se / denom, replicas))
            ratios[(L, e)] = (mean / denom, se / denom)
    rep.verdicts["nested_window_monotonicity"] = PASS if nested_ok else FAIL
    for e in eps_sorted:
        first, last = ratios[(L_sorted[0], e)], ratios[(L_sorted[-1], e)]
        allowance = 3.0 * math.hypot(first[1], last[1])
        ok = last[0] <= first[0] + allowance
        rep.verdicts[f"volume_trend_eps={e:g}"] = PASS if ok else FAIL
    rep.fitted["c_w_hat"] = max(m + 3 * s for (m, s) in ratios.values())
    rep.fitted["modulus"] = {f"{e:g}": s_eps[e] for e in eps_sorted}
    rep.wall_clock_s = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------------------
# integrated density of states


def _ids_replica(args) -> tuple[int, ...]:
    model, box, seed_key, thresholds = args
    v = sample_potential(model, seed_key, box)
    H = add_potential(build_free_laplacian(box), v)
    return tuple(count_in_interval(H, -math.inf, t) for t in thresholds)


def estimate_ids(
    model: AlloyModel,
    L: float = 12.0,
    E_list: Sequence[float] = (2.0, 5.0, 10.0, 15.0, 20.0),
    eps: float = 0.25,
    replicas: int = 100,
    seed: int = 101,
    mesh_density: int = 16,
    c_w: float | None = None,
    workers: int = 1,
) -> ExperimentReport:
    """Finite-volume eigenvalue counting function per unit volume.

    Estimates N(E) = E{#eigenvalues <= E} / L^d on an energy grid, checks the
    exact free-field limit through the zero-coupling seam, and bounds the
    window increments N(E+eps) - N(E-eps) by the volume-law constant when one
    is supplied (informational otherwise).
    """
    t0 = time.perf_counter()
    E_sorted = tuple(sorted(E_list))
    rep = ExperimentReport(
        experiment="ids",
        config={
            "L": L,
            "E_list": list(E_sorted),
            "eps": eps,
            "replicas": replicas,
            "mesh_density": mesh_density,
            "c_w": c_w,
        },
        seed=seed,
    )
    box = _box(model.d, L, mesh_density)
    vol = L**model.d
    thresholds = tuple(v for E in E_sorted for v in (E - eps, E, E + eps))
    args = [(model, box, (seed, r), thresholds) for r in range(replicas)]
    counts = np.array(_map_replicas(_ids_replica, args, workers), dtype=float)
    at_e = counts[:, 1::3]
    means = at_e.mean(axis=0) / vol
    ses = at_e.std(axis=0, ddof=1) / math.sqrt(replicas) / vol
    for E, m, s in zip(E_sorted, means, ses):
        rep.records.append(record(E, "ids", float(m), float(s), replicas))
    rep.verdicts["monotone_in_energy"] = PASS if bool(np.all(np.diff(means) >= 0)) else FAIL

    # zero-coupling seam: one deterministic evaluation must hit the free count
    free_v = sample_potential(model, (seed, 0), box, couplings_override=0.0)
    H_free = add_potential(build_free_laplacian(box), free_v)
    spec = discrete_dirichlet_spectrum(box)
    seam_ok = True
    for E in E_sorted:
        got = count_in_interval(H_free, -math.inf, E)
        want = sum(1 for lam in spec if lam <= E + 1e-12 * max(1.0, E))
        rep.records.append(record(E, "ids_free_seam", got / vol, None, 1))
        seam_ok = seam_ok and got == want
    rep.verdicts["free_field_seam"] = PASS if seam_ok else FAIL

    s_val = modulus_s(model.dists, eps)
    increments = (counts[:, 2::3] - counts[:, 0::3]).mean(axis=0) / vol
    worst = float(increments.max())
    rep.fitted["max_window_increment"] = worst
    rep.fitted["modulus_at_eps"] = s_val
    if s_val > 0:
        rep.fitted["implied_c_w"] = worst / s_val
    if c_w is not None and s_val > 0:
        rep.verdicts["continuity_bound"] = PASS if worst <= c_w * s_val else FAIL
    else:
        rep.verdicts["continuity_bound"] = INFORMATIONAL
    rep.wall_clock_s = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------------------
# stubborn windows around free eigenvalues (sparse-site counterexamples)


def _candidate_centers(model: AlloyModel, L: float, kappa: float) -> list[tuple[tuple[float, ...], float]]:
    """Integer box centers whose box-wide potential ceiling stays at or below kappa."""
    env = potential_envelope(model)
    reach = int(math.floor(model.extent - L / 2 - model.max_radius))
    if reach < 0:
        return []
    import itertools as _it

    out = []
    for tup in _it.product(range(-reach, reach + 1), repeat=model.d):
        x = tuple(float(v) for v in tup)
        lo = tuple(v - L / 2 for v in x)
        peak = window_field_max(env, lo, (L,) * model.d)
        if peak <= kappa + 1e-12:
            out.append((x, peak))
    out.sort(key=lambda item: (item[1], sum(abs(v) for v in item[0]), item[0]))
    return out


def _greedy_disjoint(centers: list[tuple[tuple[float, ...], float]], L: float, want: int) -> list[tuple[float, ...]]:
    chosen: list[tuple[float, ...]] = []
    for x, _ in centers:
        if all(max(abs(a - b) for a, b in zip(x, y)) >= L for y in chosen):
            chosen.append(x)
        if len(chosen) == want:
            break
    return chosen


def _stubborn_replica(args) -> int:
    model, box, seed_key, lo, hi, override = args
    v = sample_potential(model, seed_key, box, couplings_override=override)
    H = add_potential(build_free_laplacian(box), v)
    return count_in_interval(H, lo, hi)


def run_stubborn(
    model: AlloyModel,
    E: float = 4.0,
    L_list: Sequence[float] = (8.0, 16.0),
    replicas: int = 6,
    seed: int = 7,
    mesh_density: int | None = None,
    min_boxes: int = 3,
    workers: int = 1,
) -> ExperimentReport:
    """Windows of half-width 12 pi sqrt(E+1) / L that no disorder can empty.

    Requires a model whose support fails the covering condition; the run
    first re-establishes that failure with empty-window witnesses.  Boxes are
    centered where the potential ceiling is at most kappa = 6 pi sqrt(E+1) /
    (L m_plus), so every coupling configuration moves eigenvalues by at most
    half the window, and the free spectrum is never further than the other
    half from E.  The verdict demands an eigenvalue in the window for every
    box, every draw, including both coupling extremes.
    """
    t0 = time.perf_counter()
    rho = mesh_density if mesh_density is not None else (16 if model.d == 1 else 4)
    L_sorted = tuple(sorted(L_list))
    rep = ExperimentReport(
        experiment="stubborn",
        config={
            "E": E,
            "L_list": list(L_sorted),
            "replicas": replicas,
            "mesh_density": rho,
            "min_boxes": min_boxes,
        },
        seed=seed,
    )
    if model.claimed_bound is None:
        raise PreconditionError("stubborn runs need a model with a declared sup-norm bound")
    kappa0 = 6 * math.pi * math.sqrt(E + 1) / (max(L_sorted) * max(model.m_plus, 1e-300))
    nopi = verify_NoPi(model, kappa_list=[min(kappa0, model.claimed_bound / 2)], a_list=[(L_sorted[0],) * model.d])
    if not nopi.passed:
        raise PreconditionError("support looks covering-like; no thin region for stubborn boxes")
    rep.fitted["nopi_witness_count"] = len(nopi.witnesses)

    all_ok = True
    for L in L_sorted:
        eps = 12 * math.pi * math.sqrt(E + 1) / L
        kappa = 6 * math.pi * math.sqrt(E + 1) / (L * max(model.m_plus, 1e-300))
        centers = _greedy_disjoint(_candidate_centers(model, L, kappa), L, min_boxes)
        rep.fitted[f"eps_L={L:g}"] = eps
        rep.fitted[f"centers_L={L:g}"] = [list(c) for c in centers]
        if len(centers) < min_boxes:
            rep.verdicts[f"persistent_window_L={L:g}"] = FAIL
            rep.records.append(record([L], "disjoint_boxes_found", float(len(centers)), None, None))
            all_ok = False
            continue
        box0 = _box(model.d, L, rho)
        h = box0.h
        allowance = (E + eps) ** 2 * h * h / 8.0
        lo, hi = E - eps - allowance, E + eps + allowance
        spec = discrete_dirichlet_spectrum(box0)
        gap_to_free = min(abs(lam - E) for lam in spec)
        rep.records.append(record([L], "free_spectrum_distance", gap_to_free, None, None))
        rep.records.append(record([L], "distance_budget", 6 * math.pi * math.sqrt(E + 1) / L + allowance, None, None))
        hits = 0
        total = 0
        for x in centers:
            box = _box(model.d, L, rho, center=x)
            draws: list[tuple[Any, float | None]] = [((seed, r), None) for r in range(replicas)]
            draws += [((seed, 0), 0.0), ((seed, 0), model.m_plus)]
            args = [(model, box, key, lo, hi, override) for key, override in draws]
            counts = _map_replicas(_stubborn_replica, args, workers)
            hits += sum(1 for c in counts if c >= 1)
            total += len(counts)
        rep.records.append(record([L], "window_hit_fraction", hits / total, None, total))
        ok = hits == total
        rep.verdicts[f"persistent_window_L={L:g}"] = PASS if ok else FAIL
        all_ok = all_ok and ok
    rep.fitted["kappa"] = kappa0
    rep.wall_clock_s = time.perf_counter() - t0
    return rep


def run_stubborn_exponential(
    model: AlloyModel,
    L: float = 6.0,
    eigen_index: int = 3,
    replicas: int = 8,
    seed: int = 11,
    mesh_density: int = 16,
    workers: int = 1,
) -> ExperimentReport:
    """An exponentially thin window exp(-L) that still traps an eigenvalue surely.

    Needs a box the potential cannot touch at all: there the operator equals
    the free one for every draw, so its spectrum sits at the free eigenvalues
    exactly and even a window of half-width exp(-L) around one of them is hit
    with probability one.  Boxes longer than 28 are refused because exp(-L)
    then falls below attainable eigenvalue accuracy.
    """
    t0 = time.perf_counter()
    if L >= 28:
        raise PreconditionError("exp(-L) below achievable eigenvalue accuracy; use L < 28")
    rep = ExperimentReport(
        experiment="stubborn-exp",
        config={"L": L, "eigen_index": eigen_index, "replicas": replicas, "mesh_density": mesh_density},
        seed=seed,
    )
    centers = _candidate_centers(model, L, math.inf)
    zero_centers = [x for x, peak in centers if peak == 0.0]
    if not zero_centers:
        rep.verdicts["persistent_eigenvalue"] = FAIL
        rep.fitted["reason"] = "no potential-free box inside the registered region"
        rep.wall_clock_s = time.perf_counter() - t0
        return rep
    x0 = zero_centers[0]
    box = _box(model.d, L, mesh_density, center=x0)
    spec = discrete_dirichlet_spectrum(box)
    if eigen_index >= len(spec):
        raise PreconditionError("eigen_index beyond the discrete spectrum")
    E = float(spec[eigen_index])
    width = math.exp(-L)
    rep.fitted["center"] = list(x0)
    rep.fitted["energy"] = E
    rep.fitted["window_halfwidth"] = width
    cont = [
        (math.pi / L) ** 2 * sum(k * k for k in tup)
        for tup in np.ndindex(*((eigen_index + 3,) * model.d))
        if all(k >= 1 for k in tup)
    ]
    cont.sort()
    if eigen_index < len(cont):
        rep.fitted["continuum_deviation"] = abs(E - cont[eigen_index])

    draws: list[tuple[Any, float | None]] = [((seed, r), None) for r in range(replicas)]
    draws += [((seed, 0), model.m_plus)]
    ok = True
    silent = True
    for key, override in draws:
        v = sample_potential(model, key, box, couplings_override=override)
        silent = silent and float(np.abs(v).max()) == 0.0
        H = add_potential(build_free_laplacian(box), v)
        ok = ok and count_in_interval(H, E - width, E + width) >= 1
    rep.verdicts["persistent_eigenvalue"] = PASS if ok else FAIL
    rep.verdicts["box_untouched_by_disorder"] = PASS if silent else FAIL

    # contrast: the most occupied box usually loses the window
    occupied = sorted(
        ((x, peak) for x, peak in centers if peak > 0.0),
        key=lambda item: (-item[1], sum(abs(v) for v in item[0]), item[0]),
    )
    xc = occupied[0][0] if occupied else (0.0,) * model.d
    try:
        cbox = _box(model.d, L, mesh_density, center=xc)
        model.check_box_registered(cbox)
        c_spec = discrete_dirichlet_spectrum(cbox)
        Ec = float(c_spec[eigen_index])
        in_win = 0
        for r in range(replicas):
            v = sample_potential(model, (seed, r), cbox)
            H = add_potential(build_free_laplacian(cbox), v)
            in_win += int(count_in_interval(H, Ec - width, Ec + width) >= 1)
        rep.records.append(record([L], "contrast_hit_fraction", in_win / replicas, None, replicas))
    except ModelError:
        pass
    rep.wall_clock_s = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------------------
# spectral mass on thick sets (uncertainty relation)


def _solve_rate_constant(log_inv_lambda: float, E: float, a_sum: float, d: int, gamma: float) -> float:
    """Smallest K >= 1 with K sqrt(E) (a_sum + d) log(K^d / gamma) >= log(1/lambda)."""

    def g(K: float) -> float:
        return K * math.sqrt(E) * (a_sum + d) * math.log(K**d / gamma) - log_inv_lambda

    if g(1.0) >= 0:
        return 1.0
    lo, hi = 1.0, 2.0
    while g(hi) < 0:
        hi *= 2
        if hi > 1e12:
            return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return hi


def run_uncertainty(
    S: RasterSet,
    a: Sequence[float] = (1.0,),
    E_list: Sequence[float] = (25.0, 100.0, 225.0, 400.0),
    L_list: Sequence[float] = (2.0, 3.0, 4.0),
    mesh_density: int = 64,
    bc: str = "dirichlet",
    seed: int = 0,
    lambda_floor: float = 1e-6,
) -> ExperimentReport:
    """How much spectral-subspace mass a thick set is guaranteed to keep.

    For the free operator on [0, L]^d, compresses the indicator of S to the
    span of eigenvectors at or below E and records the smallest eigenvalue
    lambda of that Gram matrix.  Deterministic.  Verdicts: lambda stays
    positive, is stable in L within a factor 2, and log(1/lambda) grows no
    faster than sqrt(E) (correlation at least 0.9); the fitted constant
    K_hat makes K sqrt(E)(|a|_1 + d) log(K^d / gamma) dominate every point.

    The factor-2 stability verdict only judges energies whose lambda exceeds
    lambda_floor on every box: below that, mesh-level eigenvector error moves
    log(lambda) by more than the factor under test, so a ratio verdict there
    would measure discretization, not the claim.  Excluded energies are
    listed in the fitted summary.
    """
    t0 = time.perf_counter()
    d = S.d
    E_sorted = tuple(sorted(E_list))
    L_sorted = tuple(sorted(L_list))
    rep = ExperimentReport(
        experiment="uncertainty",
        config={
            "a": list(a),
            "E_list": list(E_sorted),
            "L_list": list(L_sorted),
            "mesh_density": mesh_density,
            "bc": bc,
        },
        seed=seed,
    )
    cert = certify_thickness(S, WindowSpec(tuple(float(v) for v in a)))
    gamma = cert.gamma_star - cert.error_bound
    if gamma <= 0:
        raise PreconditionError("the set certifies no positive thickness for this window")
    rep.fitted["gamma_certified"] = gamma
    rep.fitted["thickness_error_bound"] = cert.error_bound

    lam: dict[tuple[float, float], float] = {}
    positive = True
    full_ok = True
    for L in L_sorted:
        box = _box(d, L, mesh_density, center=(L / 2,) * d, bc=bc)
        H = build_free_laplacian(box)
        full = RasterSet(
            geometry=S.geometry,
            cells=np.ones_like(S.cells),
        )
        for E in E_sorted:
            res = eigs_below(H, E, want_vectors=True)
            if res.eigenvalues.size == 0:
                continue
            val = compressed_indicator_min_eig(res.eigenvectors, box, S)
            lam[(L, E)] = val
            positive = positive and val > 0
            rep.records.append(record([L, E], "lambda_min", val, None, None))
            rep.records.append(record([L, E], "subspace_dim", float(res.eigenvalues.size), None, None))
        ref = eigs_below(H, E_sorted[0], want_vectors=True)
        if ref.eigenvalues.size:
            full_ok = full_ok and compressed_indicator_min_eig(ref.eigenvectors, box, full) >= 1 - 1e-10
    rep.verdicts["positivity"] = PASS if positive and lam else FAIL
    rep.verdicts["full_set_identity"] = PASS if full_ok else FAIL

    stable = True
    judged = 0
    excluded: list[float] = []
    for E in E_sorted:
        vals = [lam[(L, E)] for L in L_sorted if (L, E) in lam]
        if len(vals) < 2:
            continue
        if min(vals) < lambda_floor:
            excluded.append(E)
            continue
        judged += 1
        if max(vals) > 2.0 * min(vals):
            stable = False
    rep.fitted["stability_excluded_E"] = excluded
    if judged == 0:
        # a single scale (or everything under the floor) tests nothing
        rep.verdicts["scale_stability"] = INFORMATIONAL
    else:
        rep.verdicts["scale_stability"] = PASS if stable else FAIL

    worst_corr = 1.0
    for L in L_sorted:
        pts = [(math.sqrt(E), math.log(1.0 / lam[(L, E)])) for E in E_sorted if (L, E) in lam and lam[(L, E)] > 0]
        if len(pts) >= 3:
            xs = np.array([p[0] for p in pts])
            ys = np.array([p[1] for p in pts])
            corr = float(np.corrcoef(xs, ys)[0, 1])
            rep.records.append(record([L], "sqrt_energy_corr", corr, None, None))
            worst_corr = min(worst_corr, corr)
    rep.verdicts["sqrt_energy_rate"] = PASS if worst_corr >= 0.9 else FAIL

    a_sum = float(sum(a))
    k_hat = 1.0
    for (L, E), val in lam.items():
        if val > 0:
            k_hat = max(k_hat, _solve_rate_constant(math.log(1.0 / val), E, a_sum, d, gamma))
    rep.fitted["K_hat"] = k_hat
    rep.wall_clock_s = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------------------
# initial-scale resolvent decay


def _ise_replica(args) -> float | None:
    model, box, seed_key, z, a_lo, a_hi, b_lo, b_hi = args
    v = sample_potential(model, seed_key, box)
    H = add_potential(build_free_laplacian(box), v)
    block_a = SubBox.from_coords(box, a_lo, a_hi)
    block_b = SubBox.from_coords(box, b_lo, b_hi)
    try:
        return resolvent_block_norm(H, z, block_a, block_b)
    except ResonantSampleError:
        return None


def run_ise(
    model: AlloyModel,
    L_list: Sequence[float] = (8.0, 16.0),
    replicas: int = 200,
    seed: int = 777,
    mesh_density: int = 16,
    workers: int = 1,
) -> ExperimentReport:
    """Resolvent decay between opposite ends of a box at shift 1/sqrt(L).

    Measures |1_A (H - 1/sqrt(L))^{-1} 1_B| for the end blocks A, B at
    distance L/2, fits the largest rate c with exp(-c sqrt(L)) decay holding
    with empirical probability at least 1 - exp(-c L^{d/4}) at the largest
    box, then checks that the smaller boxes meet the same probability target
    within binomial noise.  Samples whose shift lands on an eigenvalue are
    counted separately, never silently dropped into the statistics.
    """
    t0 = time.perf_counter()
    L_sorted = tuple(sorted(L_list))
    rep = ExperimentReport(
        experiment="ise",
        config={"L_list": list(L_sorted), "replicas": replicas, "mesh_density": mesh_density},
        seed=seed,
    )
    rates: dict[float, np.ndarray] = {}
    resonant: dict[float, int] = {}
    for L in L_sorted:
        box = _box(model.d, L, mesh_density)
        z = 1.0 / math.sqrt(L)
        a_lo, a_hi = (-L / 2,) * model.d, (-L / 4,) + (L / 2,) * (model.d - 1)
        b_lo, b_hi = (L / 4,) + (-L / 2,) * (model.d - 1), (L / 2,) * model.d
        args = [(model, box, (seed, r), z, a_lo, a_hi, b_lo, b_hi) for r in range(replicas)]
        results = _map_replicas(_ise_replica, args, workers)
        norms = np.array([r for r in results if r is not None], dtype=float)
        resonant[L] = sum(1 for r in results if r is None)
        if norms.size == 0:
            raise PreconditionError(f"all samples resonant at L={L}; shift choice is broken")
        rates[L] = -np.log(np.maximum(norms, 1e-300)) / math.sqrt(L)
        rep.records.append(record([L], "median_norm", float(np.median(norms)), None, int(norms.size)))
        rep.records.append(record([L], "resonant_samples", float(resonant[L]), None, replicas))

    # the largest rate whose probability target holds at every tested box
    cand = np.sort(np.unique(np.concatenate([rates[L][rates[L] > 0] for L in L_sorted])))[::-1]
    c0 = 0.0
    for c in cand:
        ok = all(
            float((rates[L] >= c).mean()) >= 1.0 - math.exp(-c * L ** (model.d / 4.0))
            for L in L_sorted
        )
        if ok:
            c0 = float(c)
            break
    rep.fitted["c0_hat"] = c0
    rep.verdicts["exponential_rate_positive"] = PASS if c0 > 0 else FAIL

    qs: dict[float, tuple[float, float]] = {}
    scaling_ok = c0 > 0
    for L in L_sorted:
        n = rates[L].size
        q = float((rates[L] >= c0).mean())
        req = 1.0 - math.exp(-c0 * L ** (model.d / 4.0))
        sigma = math.sqrt(max(q * (1 - q), 1e-12) / n)
        qs[L] = (q, sigma)
        rep.records.append(record([L], "success_fraction", q, sigma, n))
        rep.records.append(record([L], "required_fraction", req, None, None))
        if q < req - 2 * sigma:
            scaling_ok = False
    rep.verdicts["probability_scaling"] = PASS if scaling_ok else FAIL
    q_lo, q_hi = qs[L_sorted[0]], qs[L_sorted[-1]]
    improves = q_hi[0] >= q_lo[0] - 2 * math.hypot(q_lo[1], q_hi[1])
    rep.verdicts["probability_improves_with_box"] = PASS if improves else FAIL
    rep.wall_clock_s = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------------------
# bottom of the spectrum


def _minimum_replica(args) -> float:
    model, box, seed_key, cap, e_cap = args
    v = sample_potential(model, seed_key, box, conditioning_cap=cap)
    H = add_potential(build_free_laplacian(box), v)
    ev = eigs_below(H, e_cap).eigenvalues
    if ev.size == 0:
        raise PreconditionError("eigenvalue cap missed the ground state")
    return float(ev[0])


def run_spectral_minimum(
    model: AlloyModel,
    eps_list: Sequence[float] = (0.5, 0.25),
    replicas: int = 40,
    seed: int = 5,
    L: float = 8.0,
    mesh_density: int = 16,
    workers: int = 1,
) -> ExperimentReport:
    """Ground-state location: floored by the free box, approached under smallness.

    Unconditioned draws must respect the free Dirichlet ground state as a hard
    floor (the potential is nonnegative).  Draws conditioned on every coupling
    staying at or below eps must land within eps times the potential ceiling
    of that floor.  The zero-coupling seam must reproduce the floor exactly.
    """
    t0 = time.perf_counter()
    rep = ExperimentReport(
        experiment="spectral-minimum",
        config={"eps_list": list(eps_list), "replicas": replicas, "L": L, "mesh_density": mesh_density},
        seed=seed,
    )
    box = _box(model.d, L, mesh_density)
    ground = float(discrete_dirichlet_spectrum(box)[0])
    sup_env = float(potential_envelope(model).values.max())
    e_cap = ground + model.m_plus * sup_env + 1.0
    rep.fitted["free_ground"] = ground
    rep.fitted["potential_ceiling"] = sup_env

    args = [(model, box, (seed, r), None, e_cap) for r in range(replicas)]
    mins = np.array(_map_replicas(_minimum_replica, args, workers))
    rep.records.append(record(["unconditioned"], "min_eig_mean", float(mins.mean()), float(mins.std(ddof=1) / math.sqrt(replicas)), replicas))
    rep.records.append(record(["unconditioned"], "min_eig_low", float(mins.min()), None, replicas))
    rep.verdicts["floor_respected"] = PASS if bool(np.all(mins >= ground - 1e-9 * max(1.0, ground))) else FAIL

    near = model.sites_near_box(box)
    for eps in sorted(eps_list, reverse=True):
        args = [(model, box, (seed, r), eps, e_cap) for r in range(replicas)]
        cmins = np.array(_map_replicas(_minimum_replica, args, workers))
        bound = ground + eps * sup_env
        rep.records.append(record(["conditioned", eps], "min_eig_mean", float(cmins.mean()), float(cmins.std(ddof=1) / math.sqrt(replicas)), replicas))
        rep.records.append(record(["conditioned", eps], "min_eig_high", float(cmins.max()), None, replicas))
        ok = bool(np.all(cmins <= bound + 1e-9 * max(1.0, bound)))
        rep.verdicts[f"conditioned_proximity_eps={eps:g}"] = PASS if ok else FAIL
        log10p = sum(
            math.log10(max(model.dists[i].interval_mass(model.dists[i].min_support, eps), 1e-300))
            for i in near
        )
        rep.fitted[f"event_log10_prob_eps={eps:g}"] = log10p

    v0 = sample_potential(model, (seed, 0), box, couplings_override=0.0)
    H0 = add_potential(build_free_laplacian(box), v0)
    ev0 = eigs_below(H0, e_cap).eigenvalues
    exact = abs(float(ev0[0]) - ground) <= 1e-9 * max(1.0, ground)
    rep.verdicts["zero_coupling_exact"] = PASS if exact else FAIL
    rep.wall_clock_s = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------------------
# qualitative localization probe


def _shell_decay_rate(psi: np.ndarray, box: BoxSpec) -> float | None:
    shape = box.shape
    arr = np.abs(psi.reshape(shape))
    peak = np.unravel_index(int(np.argmax(arr)), shape)
    idx = np.indices(shape)
    dist = np.zeros(shape, dtype=int)
    for axis in range(box.d):
        dist = np.maximum(dist, np.abs(idx[axis] - peak[axis]))
    shell_width = max(1, int(round(1.0 / box.h)))
    bands = dist // shell_width
    norms = []
    for b in range(int(bands.max()) + 1):
        m = bands == b
        val = float(np.sqrt((arr[m] ** 2).sum()))
        norms.append(val)
    usable = [(b, math.log(v)) for b, v in enumerate(norms) if v > 1e-14]
    if len(usable) < 3:
        return None
    xs = np.array([u[0] for u in usable], dtype=float)
    ys = np.array([u[1] for u in usable])
    slope = float(np.polyfit(xs, ys, 1)[0])
    return -slope


def localisation_probe(
    model: AlloyModel,
    E_lo: float = 0.0,
    E_hi: float = 2.0,
    L: float = 24.0,
    replicas: int = 12,
    seed: int = 3,
    mesh_density: int = 16,
    workers: int = 1,
) -> ExperimentReport:
    """Eigenvector concentration in a low-energy window; measurement only.

    Requires couplings with a positive Holder exponent (atomic laws are
    refused: with atoms the modulus never vanishes and the probe's premise
    is broken).  Reports participation ratios and per-shell decay rates;
    every verdict is informational by design.
    """
    t0 = time.perf_counter()
    for dist in model.dists:
        if dist.holder_exponent is None:
            raise PreconditionError("localization probe needs Holder-continuous couplings")
    rep = ExperimentReport(
        experiment="localisation-probe",
        config={"E_lo": E_lo, "E_hi": E_hi, "L": L, "replicas": replicas, "mesh_density": mesh_density},
        seed=seed,
    )
    box = _box(model.d, L, mesh_density)
    prs: list[float] = []
    decays: list[float] = []
    found = 0
    for r in range(replicas):
        v = sample_potential(model, (seed, r), box)
        H = add_potential(build_free_laplacian(box), v)
        res = eigs_below(H, E_hi, want_vectors=True)
        sel = res.eigenvalues >= E_lo
        vecs = res.eigenvectors[:, sel] if res.eigenvectors is not None else None
        if vecs is None or vecs.shape[1] == 0:
            continue
        found += vecs.shape[1]
        for k in range(vecs.shape[1]):
            psi = vecs[:, k]
            psi = psi / np.linalg.norm(psi)
            prs.append(float(1.0 / np.sum(psi**4)))
            rate = _shell_decay_rate(psi, box)
            if rate is not None:
                decays.append(rate)
    if prs:
        rep.records.append(record([L], "participation_ratio_mean", float(np.mean(prs)), None, len(prs)))
        rep.records.append(record([L], "participation_fraction", float(np.mean(prs)) / box.ndof, None, len(prs)))
    if decays:
        rep.records.append(record([L], "shell_decay_rate_mean", float(np.mean(decays)), None, len(decays)))
        rep.fitted["decay_positive_fraction"] = float(np.mean([d > 0 for d in decays]))
    rep.fitted["states_found"] = found
    rep.verdicts["probe"] = INFORMATIONAL
    rep.wall_clock_s = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------------------
# minorant demonstration wrapper (ties the construction to sampled fields)


def run_minorant_check(
    model: AlloyModel,
    L: float = 4.0,
    replicas: int = 20,
    seed: int = 13,
    box_length: float = 8.0,
    mesh_density: int = 16,
) -> ExperimentReport:
    """Build the diluted minorant and confirm W <= V pathwise on sampled draws."""
    t0 = time.perf_counter()
    rep = ExperimentReport(
        experiment="minorant",
        config={"L": L, "replicas": replicas, "box_length": box_length, "mesh_density": mesh_density},
        seed=seed,
    )
    dm = construct_diluted_minorant(model, L)
    rep.fitted["spacing"] = dm.spacing
    rep.fitted["lattice_count"] = dm.lattice_count
    rep.fitted["gamma_hat"] = dm.gamma_hat
    rep.fitted["threshold"] = dm.threshold
    rep.fitted["margin"] = dm.margin
    box = _box(model.d, box_length, mesh_density)
    ok = True
    active = 0
    for r in range(replicas):
        v = sample_potential(model, (seed, r), box)
        w = dm.sample_on(model, box, (seed, r))
        ok = ok and bool(np.all(w <= v + 1e-12))
        active += int(np.any(w > 0))
    rep.records.append(record([L], "active_fraction", active / replicas, None, replicas))
    rep.verdicts["pathwise_minorant"] = PASS if ok else FAIL
    rep.verdicts["positive_margin"] = PASS if dm.margin > 0 else FAIL
    rep.wall_clock_s = time.perf_counter() - t0
    return rep
