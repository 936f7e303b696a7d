"""Point charges on a neutralizing unit background (classical one-component plasma).

Periodic side: energies and gradients on a cubic torus through the zero-mean
kernel, local quasi-Newton descent, and seeded basin hopping; at unit charge
density the per-particle energy of a commensurate crystal equals the lattice
zeta value at s = 1 with no finite-size error, which pins down every sign and
factor convention in the sums.

Finite side: n points of charge q in a bounded domain with background density
one, the object whose ground state drives the dilute droplet expansion.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from liqdrop.coulomb.ewald import PeriodicKernel
from liqdrop.coulomb.potentials import (
    domain_pair_coulomb,
    potential_domain,
    potential_domain_gradient,
)
from liqdrop.geom import Tetrahedron, regular_tetrahedron

__all__ = [
    "PointConfiguration",
    "PeriodicEnergyReport",
    "FiniteEnergyReport",
    "periodic_energy",
    "periodic_gradient",
    "finite_jellium_energy",
    "minimize_local",
    "basin_hop",
    "BasinHopResult",
    "crystal_positions",
    "grand_canonical_point_jellium",
    "GrandCanonicalPointReport",
    "e_jel_extrapolate",
]


@dataclass
class PointConfiguration:
    """Point charges of a common magnitude, either in a domain or on a torus."""

    positions: np.ndarray
    charge: float = 1.0
    container: object | None = None  # a geom domain, or a cell side for tori

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 3)

    def __len__(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class PeriodicEnergyReport:
    pair: float
    madelung_self: float
    total: float
    per_particle: float


def periodic_energy(
    positions, kernel: PeriodicKernel, q: float = 1.0, include_madelung: bool = True
) -> PeriodicEnergyReport:
    """Total torus energy: pair sum of the zero-mean kernel plus, by default,
    the self-image term n q^2 M / 2 that completes each charge's interaction
    with its own periodic copies."""
    pos = np.asarray(positions, dtype=float).reshape(-1, 3)
    n = len(pos)
    pair = kernel.pair_energy(pos, q=q)
    mad = n * q**2 * kernel.madelung() / 2.0 if include_madelung else 0.0
    total = pair + mad
    return PeriodicEnergyReport(
        pair=pair, madelung_self=mad, total=total, per_particle=total / max(n, 1)
    )


def periodic_gradient(positions, kernel: PeriodicKernel, q: float = 1.0) -> np.ndarray:
    return kernel.pair_gradient(positions, q=q)


# ---------------------------------------------------------------------------
# local and global optimization on the torus
# ---------------------------------------------------------------------------


def minimize_local(
    positions,
    kernel: PeriodicKernel,
    q: float = 1.0,
    gtol: float = 1e-8,
    maxiter: int = 500,
):
    """L-BFGS descent of the periodic pair energy.

    Returns (positions, trace); the trace rows are (eval index, energy,
    gradient max-norm) recorded at every objective call.  Coincidence is
    already an infinite barrier of the energy itself, so the only guard
    needed is against exactly overlapping points during line search.
    """
    x0 = np.asarray(positions, dtype=float).reshape(-1).copy()
    n = x0.size // 3
    trace = []

    def objective(x):
        pos = x.reshape(n, 3)
        iu, ju = np.triu_indices(n, k=1)
        dx = pos[iu] - pos[ju]
        dx -= kernel.ell * np.round(dx / kernel.ell)
        r = np.linalg.norm(dx, axis=1)
        if np.any(r < 1e-10 * kernel.ell):
            # off-manifold guard: huge value, gradient pushing apart
            return 1e12, np.zeros_like(x)
        e = kernel.pair_energy(pos, q=q)
        g = kernel.pair_gradient(pos, q=q).ravel()
        trace.append((len(trace), e, float(np.abs(g).max())))
        return e, g

    res = minimize(
        objective,
        x0,
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": maxiter, "gtol": gtol, "ftol": 1e-14},
    )
    pos = res.x.reshape(n, 3)
    pos -= kernel.ell * np.floor(pos / kernel.ell)  # canonical cell reps
    return pos, np.array(trace)


@dataclass
class BasinHopResult:
    best_positions: np.ndarray
    best_energy: float  # pair energy (no Madelung term)
    best_per_particle: float  # with Madelung self term
    restart_table: np.ndarray  # rows: (restart, per-particle energy)


def _one_restart(args):
    idx, seed, n, kernel, q, hops, hop_scale, gtol, start = args
    rng = np.random.default_rng(seed)
    pos = rng.random((n, 3)) * kernel.ell if start is None else np.array(start)
    pos, _ = minimize_local(pos, kernel, q=q, gtol=gtol)
    best = kernel.pair_energy(pos, q=q)
    for _ in range(hops):
        trial = pos + rng.normal(scale=hop_scale * kernel.ell, size=pos.shape)
        trial, _ = minimize_local(trial, kernel, q=q, gtol=gtol)
        e = kernel.pair_energy(trial, q=q)
        if e < best:
            best, pos = e, trial
    return idx, best, pos


def basin_hop(
    n: int,
    kernel: PeriodicKernel,
    q: float = 1.0,
    restarts: int = 20,
    hops: int = 4,
    hop_scale: float = 0.12,
    seed: int = 0,
    threads: int = 1,
    gtol: float = 1e-8,
    initial_configs=None,
) -> BasinHopResult:
    """Monotone basin hopping with independent seeded restarts.

    Each restart draws from its own spawned RNG stream and the reduction is
    by restart index, so results are identical for any thread count.
    ``initial_configs`` adds deterministic extra restarts started from the
    given configurations instead of uniform draws.
    """
    extras = [np.asarray(p, dtype=float).reshape(n, 3) for p in (initial_configs or [])]
    total = restarts + len(extras)
    seeds = np.random.SeedSequence(seed).spawn(total)
    jobs = [(i, seeds[i], n, kernel, q, hops, hop_scale, gtol, None)
            for i in range(restarts)]
    jobs += [(restarts + j, seeds[restarts + j], n, kernel, q, hops, hop_scale,
              gtol, extras[j]) for j in range(len(extras))]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(_one_restart, jobs))
    else:
        results = [_one_restart(j) for j in jobs]
    results.sort(key=lambda t: t[0])
    mad = kernel.madelung()
    table = np.array([(i, (e + n * q**2 * mad / 2.0) / n) for i, e, _ in results])
    best_idx = int(np.argmin([e for _, e, _ in results]))
    _, best_e, best_pos = results[best_idx]
    return BasinHopResult(
        best_positions=best_pos,
        best_energy=best_e,
        best_per_particle=(best_e + n * q**2 * mad / 2.0) / n,
        restart_table=table,
    )


def crystal_positions(kind: str, k: int, ell: float) -> np.ndarray:
    """Commensurate sc/bcc/fcc sublattice filling a cubic cell of side ell.

    k conventional cubes per cell side; N = k^3, 2 k^3, 4 k^3 points.
    """
    a = ell / k
    base = {
        "sc": [(0.0, 0.0, 0.0)],
        "bcc": [(0.0, 0.0, 0.0), (0.5, 0.5, 0.5)],
        "fcc": [(0.0, 0.0, 0.0), (0.5, 0.5, 0.0), (0.5, 0.0, 0.5), (0.0, 0.5, 0.5)],
    }[kind.lower()]
    ii = np.arange(k)
    gx, gy, gz = np.meshgrid(ii, ii, ii, indexing="ij")
    cells = np.stack([gx, gy, gz], axis=-1).reshape(-1, 3).astype(float)
    pts = (cells[:, None, :] + np.asarray(base)[None, :, :]).reshape(-1, 3) * a
    return pts


# ---------------------------------------------------------------------------
# finite domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteEnergyReport:
    point_point: float
    point_background: float
    background_background: float
    total: float


def finite_jellium_energy(
    positions, domain, q: float = 1.0, tol: float = 1e-8
) -> FiniteEnergyReport:
    """Energy of charges q at ``positions`` against background 1 on ``domain``:
    sum_{i<j} q^2/r_ij - q sum_i Phi_D(x_i) + (1/2) int int_D 1/|x-y|."""
    pos = np.asarray(positions, dtype=float).reshape(-1, 3)
    n = len(pos)
    pp = 0.0
    if n >= 2:
        iu, ju = np.triu_indices(n, k=1)
        r = np.linalg.norm(pos[iu] - pos[ju], axis=1)
        if np.any(r <= 0.0):
            raise ValueError("coincident points")
        pp = q**2 * float(np.sum(1.0 / r))
    pb = -q * float(np.sum(potential_domain(domain, pos, tol=tol))) if n else 0.0
    bb, _ = domain_pair_coulomb(domain, domain, tol=tol)
    bb *= 0.5
    return FiniteEnergyReport(
        point_point=pp, point_background=pb, background_background=bb, total=pp + pb + bb
    )


# ---------------------------------------------------------------------------
# grand-canonical point problem on a scaled tetrahedron
# ---------------------------------------------------------------------------


@dataclass
class GrandCanonicalPointReport:
    a_scale: float
    charge: float
    best_n: int
    best_value: float
    best_positions: np.ndarray
    values_by_n: dict
    averaging_bounds: dict  # n -> J_n, the uniform-i.i.d. upper bound
    interpolation_bound: float  # certified-negative convex combination value
    background_self: float  # (1/2) int int over the scaled tetra


def _finite_objective_factory(q, verts, bb, penalty):
    tet = Tetrahedron(vertices=verts)
    normals, offsets = tet.face_planes()

    def objective(x):
        pos = x.reshape(-1, 3)
        n = len(pos)
        e = bb
        g = np.zeros_like(pos)
        if n >= 2:
            iu, ju = np.triu_indices(n, k=1)
            d = pos[iu] - pos[ju]
            r = np.linalg.norm(d, axis=1)
            r = np.maximum(r, 1e-12)
            e += q**2 * float(np.sum(1.0 / r))
            gp = -q**2 * d / (r**3)[:, None]
            np.add.at(g, iu, gp)
            np.add.at(g, ju, -gp)
        if n >= 1:
            phi, dphi = _tetra_phi_grad(verts, pos, tol=3e-8)
            e -= q * float(np.sum(phi))
            g -= q * dphi
            # quadratic penalty per violated face keeps iterates inside
            s = pos @ normals.T - offsets  # (n, 4), negative = outside
            viol = np.minimum(s, 0.0)
            e += penalty * float(np.sum(viol**2))
            g += 2.0 * penalty * (viol @ normals)
        return e, g.ravel()

    return objective


def _tetra_phi_grad(verts, pos, tol=1e-9):
    from liqdrop.coulomb.potentials import tetra_field

    return tetra_field(verts, pos, tol=tol)


def grand_canonical_point_jellium(
    a_scale: float,
    charge: float = 2.5,
    tetra: Tetrahedron | None = None,
    seed: int = 0,
    window: tuple | None = None,
    starts: int = 3,
    threads: int = 1,
) -> GrandCanonicalPointReport:
    """Minimize over n and positions in the tetra A*Delta the energy of n
    charges q on unit background, scanning n over a window around A^3/q.

    Also evaluates, for each n, the closed-form bound J_n obtained by
    averaging the energy over i.i.d. uniform positions, and the convex
    combination of J_N, J_{N+1} at N = floor(A^3/q) that certifies a
    strictly negative optimum for every A with A^3 > q.
    """
    base = tetra if tetra is not None else regular_tetrahedron()
    verts = base.vertices * a_scale
    tet = Tetrahedron(vertices=verts)
    q = float(charge)
    bb_full, _ = domain_pair_coulomb(tet, tet, tol=1e-9)
    bb = 0.5 * bb_full

    nstar = a_scale**3 * base.volume / q
    half = int(np.ceil(a_scale**2))
    if window is None:
        lo = max(0, int(np.floor(nstar)) - half)
        hi = int(np.ceil(nstar)) + half
    else:
        lo, hi = window
    energy_scale = max(1.0, q**2 * max(nstar, 1.0) ** 2 / max(a_scale, 1.0))
    penalty = 1e4 * energy_scale

    seeds = np.random.SeedSequence(seed).spawn(hi - lo + 1)
    values, configs, jbounds = {}, {}, {}
    for n in range(lo, hi + 1):
        jbounds[n] = (n * (n - 1) * q**2 / (2.0 * a_scale**6 * base.volume**2)
                      - q * n / (a_scale**3 * base.volume) + 0.5) * bb_full
        if n == 0:
            values[0] = bb
            configs[0] = np.zeros((0, 3))
            continue
        rng = np.random.default_rng(seeds[n - lo])
        obj = _finite_objective_factory(q, verts, bb, penalty)
        best_e, best_pos = np.inf, None
        for _ in range(starts):
            x0 = _sample_in_tetra(rng, tet, n).ravel()
            res = minimize(obj, x0, jac=True, method="L-BFGS-B",
                           options={"maxiter": 400, "gtol": 1e-7, "ftol": 1e-14})
            pos = _project_into(tet, res.x.reshape(n, 3))
            e = _finite_value(q, verts, bb, pos)
            if e < best_e:
                best_e, best_pos = e, pos
        values[n] = best_e
        configs[n] = best_pos

    best_n = min(values, key=lambda k: values[k])
    nfloor = int(np.floor(nstar))
    t = nstar - nfloor
    interp = -(nfloor + t**2) * q**2 / (2.0 * a_scale**6 * base.volume**2) * bb_full
    return GrandCanonicalPointReport(
        a_scale=a_scale,
        charge=q,
        best_n=best_n,
        best_value=values[best_n],
        best_positions=configs[best_n],
        values_by_n=values,
        averaging_bounds=jbounds,
        interpolation_bound=interp,
        background_self=bb,
    )


def _finite_value(q, verts, bb, pos):
    e = bb
    n = len(pos)
    if n >= 2:
        iu, ju = np.triu_indices(n, k=1)
        r = np.linalg.norm(pos[iu] - pos[ju], axis=1)
        e += q**2 * float(np.sum(1.0 / r))
    if n >= 1:
        phi, _ = _tetra_phi_grad(verts, pos)
        e -= q * float(np.sum(phi))
    return e


def _project_into(tet: Tetrahedron, pos: np.ndarray) -> np.ndarray:
    """Push points just inside the tetra (cyclic projection on violated faces)."""
    normals, offsets = tet.face_planes()
    pos = pos.copy()
    for _ in range(40):
        s = pos @ normals.T - offsets
        worst = s.min(axis=1)
        if np.all(worst >= 0.0):
            break
        f = s.argmin(axis=1)
        bad = worst < 0.0
        pos[bad] -= worst[bad, None] * normals[f[bad]]
    return pos


def _sample_in_tetra(rng, tet, n):
    lo = tet.vertices.min(axis=0)
    hi = tet.vertices.max(axis=0)
    out = np.empty((0, 3))
    while len(out) < n:
        cand = rng.random((4 * n + 16, 3)) * (hi - lo) + lo
        good = cand[tet.contains(cand)]
        out = np.concatenate([out, good])
    return out[:n]


# ---------------------------------------------------------------------------
# size-trend extrapolation
# ---------------------------------------------------------------------------


def e_jel_extrapolate(counts, energies):
    """Fit per-particle energies to e_inf + c N^(-1/3) and report the limit.

    Crude but honest: with commensurate crystals the slope is zero by
    construction, with optimizer output it absorbs the leading finite-size
    drift.  Returns (e_inf, slope, residual_max).
    """
    counts = np.asarray(counts, dtype=float)
    energies = np.asarray(energies, dtype=float)
    if len(counts) < 2:
        raise ValueError("need at least two sizes")
    X = np.stack([np.ones_like(counts), counts ** (-1.0 / 3.0)], axis=1)
    coef, *_ = np.linalg.lstsq(X, energies, rcond=None)
    resid = energies - X @ coef
    return float(coef[0]), float(coef[1]), float(np.abs(resid).max())
