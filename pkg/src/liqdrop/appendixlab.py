"""Boundary screening layers, ball-packing schedules, and averaged limits.

Three constructions that control how a finite sample interacts with the rest
of space:

* :func:`quadrupole_layer` tiles the outer neighborhood of a ball or cube
  with disjoint axis-aligned cube unions and places inside each one a smaller
  cube whose volume restores local neutrality and whose position kills the
  dipole moment, so the leftover potential of every piece decays like a
  quadrupole (``1/r^3``) or faster.
* :func:`swiss_cheese` evaluates the exact radius/count schedule for packing
  a large ball with exponentially growing families of smaller balls, together
  with the leftover-volume and surface-area ratios that make the packing
  useful.
* :func:`recursion_limit` certifies the limit of a sequence that is almost
  superaveraged against its own geometric history, returning the limit value
  and the per-index slack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.spatial import cKDTree

from liqdrop.coulomb import potential_box
from liqdrop.geom import Ball, Cube

__all__ = [
    "LayerPiece",
    "PieceDiagnostics",
    "BoundaryLayer",
    "quadrupole_layer",
    "piece_diagnostics",
    "PackingSchedule",
    "swiss_cheese",
    "RecursionLimitCertificate",
    "recursion_limit",
]


# ---------------------------------------------------------------------------
# box/domain classification helpers
# ---------------------------------------------------------------------------


def _lexsort_rows(a: np.ndarray) -> np.ndarray:
    """Rows of an integer array sorted lexicographically (x, then y, then z)."""
    order = np.lexsort((a[:, 2], a[:, 1], a[:, 0]))
    return order


def _box_domain_relation(domain, centers: np.ndarray, half: float):
    """Classify axis-aligned boxes of half-width ``half`` against ``domain``.

    Returns ``(outside, meets, dist)`` where ``outside`` marks boxes disjoint
    from the closed domain, ``meets`` marks boxes intersecting the boundary,
    and ``dist`` is the Euclidean distance from the (closed) box to the
    boundary surface (zero for boxes that meet it).
    """
    c = np.asarray(domain.center, dtype=float)
    off = np.abs(centers - c)
    # boxes that merely touch the domain's closure (zero-volume overlap)
    # count as outside, so grid-aligned flat boundaries stay non-degenerate
    if isinstance(domain, Ball):
        r = domain.radius
        dmin = np.linalg.norm(np.maximum(off - half, 0.0), axis=1)
        dmax = np.linalg.norm(off + half, axis=1)
        outside = dmin >= r
        inside = dmax <= r
        dist = np.where(outside, dmin - r, np.where(inside, r - dmax, 0.0))
        return outside, ~outside & ~inside, dist
    if isinstance(domain, Cube):
        hs = domain.side / 2.0
        gap = off - half - hs
        outside = np.any(gap >= 0.0, axis=1)
        inside = np.all(off + half <= hs, axis=1)
        d_out = np.linalg.norm(np.maximum(gap, 0.0), axis=1)
        d_in = hs - (off + half).max(axis=1)
        dist = np.where(outside, d_out, np.where(inside & ~outside, d_in, 0.0))
        return outside, ~outside & ~inside, dist
    raise TypeError("domain must be a Ball or a Cube")


def _regularity_scale(domain) -> float:
    """Largest tile size the construction accepts for this domain."""
    if isinstance(domain, Ball):
        return domain.radius / 8.0
    if isinstance(domain, Cube):
        return domain.side / 16.0
    raise TypeError("domain must be a Ball or a Cube")


# ---------------------------------------------------------------------------
# layer pieces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LayerPiece:
    """One neutral, dipole-free piece of a boundary layer.

    The support is a union of axis-aligned boxes (``box_lo[i]..box_hi[i]``);
    the first box of a merged piece is its host cube.  ``inner_center`` and
    ``inner_side`` describe the smaller cube placed inside the host so that
    the signed density (inner cube minus ``background_fraction`` times the
    support) carries zero total charge and zero dipole moment.
    """

    kind: str  # "subcell" | "exterior-cube" | "merged"
    key: tuple
    box_lo: np.ndarray
    box_hi: np.ndarray
    inner_center: np.ndarray
    inner_side: float
    background_fraction: float
    tile_size: float

    @property
    def volume(self) -> float:
        sides = self.box_hi - self.box_lo
        return float(np.prod(sides, axis=1).sum())

    @property
    def inner_volume(self) -> float:
        return self.inner_side**3

    @property
    def inner_perimeter(self) -> float:
        return 6.0 * self.inner_side**2


@dataclass(frozen=True)
class PieceDiagnostics:
    """Exact multipole data and measured far-field decay of a layer piece."""

    charge: float
    dipole: np.ndarray
    quadrupole: np.ndarray
    decay_exponent: float


class BoundaryLayer:
    """Decomposition of a domain's outer cube layer into neutral pieces.

    Behaves as a read-only sequence of :class:`LayerPiece`.  Bulk vectorized
    diagnostics (:meth:`charges`, :meth:`dipoles`, ...) cover all pieces at
    once; individual pieces are materialized lazily on indexing.

    Piece order: pieces hosted by fully-exterior tiles first (sorted
    lexicographically by tile index; merged and plain exterior cubes
    interleaved), then the fully-exterior subcells of boundary tiles (sorted
    by subcell index).
    """

    def __init__(self, domain, eps, subdiv, rho, *, _build=None):
        if _build is None:
            raise TypeError("use quadrupole_layer() to construct a BoundaryLayer")
        self.domain = domain
        self.eps = float(eps)
        self.subdiv = int(subdiv)
        self.rho = float(rho)
        (
            self._host_index,  # (nh, 3) int, lex sorted: all fully-exterior tiles
            self._host_sub_centers,  # (M, 3) float: merged subcell centers
            self._host_sub_ptr,  # (nh+1,) int CSR pointers into the above
            self._host_inner_center,  # (nh, 3)
            self._host_inner_side,  # (nh,)
            self._sub_index,  # (ns, 3) int, lex sorted: exterior subcells
        ) = _build

    # -- sequence protocol --------------------------------------------------

    def __len__(self) -> int:
        return len(self._host_index) + len(self._sub_index)

    def _host_piece(self, i: int) -> LayerPiece:
        eps, k, rho = self.eps, self.subdiv, self.rho
        z = self._host_index[i]
        c = eps * z.astype(float)
        lo, hi = self._host_sub_ptr[i], self._host_sub_ptr[i + 1]
        subc = self._host_sub_centers[lo:hi]
        half = np.full((1 + len(subc), 3), eps / 2.0)
        half[1:] = eps / (2.0 * k)
        cs = np.vstack([c[None, :], subc])
        kind = "merged" if len(subc) else "exterior-cube"
        return LayerPiece(
            kind=kind,
            key=tuple(int(v) for v in z),
            box_lo=cs - half,
            box_hi=cs + half,
            inner_center=self._host_inner_center[i].copy(),
            inner_side=float(self._host_inner_side[i]),
            background_fraction=rho,
            tile_size=eps,
        )

    def _sub_piece(self, i: int) -> LayerPiece:
        eps, k, rho = self.eps, self.subdiv, self.rho
        key = self._sub_index[i]
        c = _subcell_center(key, eps, k)
        h = eps / (2.0 * k)
        return LayerPiece(
            kind="subcell",
            key=tuple(int(v) for v in key),
            box_lo=(c - h)[None, :],
            box_hi=(c + h)[None, :],
            inner_center=c.copy(),
            inner_side=self.rho ** (1.0 / 3.0) * eps / k,
            background_fraction=rho,
            tile_size=eps,
        )

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        n = len(self)
        if i < 0:
            i += n
        if not 0 <= i < n:
            raise IndexError("piece index out of range")
        nh = len(self._host_index)
        return self._host_piece(i) if i < nh else self._sub_piece(i - nh)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    # -- bulk diagnostics ---------------------------------------------------

    def counts(self) -> dict:
        nsub = np.diff(self._host_sub_ptr)
        merged = int((nsub > 0).sum())
        return {
            "merged": merged,
            "exterior-cube": len(self._host_index) - merged,
            "subcell": len(self._sub_index),
        }

    def kinds(self) -> np.ndarray:
        """Piece kind for every piece, in sequence order."""
        nsub = np.diff(self._host_sub_ptr)
        host = np.where(nsub > 0, "merged", "exterior-cube")
        return np.concatenate(
            [host, np.full(len(self._sub_index), "subcell")]
        )

    def _host_volumes(self) -> np.ndarray:
        eps, k = self.eps, self.subdiv
        nsub = np.diff(self._host_sub_ptr)
        return eps**3 + nsub * (eps / k) ** 3

    def _host_first_moments(self) -> np.ndarray:
        eps, k = self.eps, self.subdiv
        hostm = eps**3 * (eps * self._host_index.astype(float))
        subm = _segment_sums(self._host_sub_centers, self._host_sub_ptr)
        return hostm + (eps / k) ** 3 * subm

    def volumes(self) -> np.ndarray:
        """Support volume of every piece, in sequence order."""
        sub = np.full(len(self._sub_index), (self.eps / self.subdiv) ** 3)
        return np.concatenate([self._host_volumes(), sub])

    def inner_sides(self) -> np.ndarray:
        sub = np.full(
            len(self._sub_index),
            self.rho ** (1.0 / 3.0) * self.eps / self.subdiv,
        )
        return np.concatenate([self._host_inner_side, sub])

    def charges(self) -> np.ndarray:
        """Total signed charge of every piece (inner cube minus background)."""
        return self.inner_sides() ** 3 - self.rho * self.volumes()

    def dipoles(self) -> np.ndarray:
        """First moment of the signed density of every piece."""
        eps, k, rho = self.eps, self.subdiv, self.rho
        host = (
            self._host_inner_side[:, None] ** 3 * self._host_inner_center
            - rho * self._host_first_moments()
        )
        side = rho ** (1.0 / 3.0) * eps / k
        if len(self._sub_index):
            c = _subcell_center(self._sub_index, eps, k)
            sub = (side**3 - rho * (eps / k) ** 3) * c
        else:
            sub = np.zeros((0, 3))
        return np.vstack([host, sub])

    def quadrupoles(self) -> np.ndarray:
        """Trace-free second moment of the signed density of every piece."""
        eps, k, rho = self.eps, self.subdiv, self.rho
        n = len(self)
        out = np.zeros((n, 3, 3))
        # centered pieces (plain exterior cubes and subcells) have a signed
        # second moment proportional to the identity, hence zero trace-free
        # part up to the same roundoff as the charge; compute only merged.
        nsub = np.diff(self._host_sub_ptr)
        for i in np.nonzero(nsub)[0]:
            lo, hi = self._host_sub_ptr[i], self._host_sub_ptr[i + 1]
            host_c = eps * self._host_index[i].astype(float)
            cs = np.vstack([host_c[None, :], self._host_sub_centers[lo:hi]])
            vols = np.full(len(cs), (eps / k) ** 3)
            vols[0] = eps**3
            halves = np.full(len(cs), eps / (2.0 * k))
            halves[0] = eps / 2.0
            s_bg = np.einsum("b,bi,bj->ij", vols, cs, cs)
            s_bg[np.diag_indices(3)] += (vols * halves**2).sum() / 3.0
            side = self._host_inner_side[i]
            cc = self._host_inner_center[i]
            s_in = side**3 * np.outer(cc, cc)
            s_in[np.diag_indices(3)] += side**3 * (side / 2.0) ** 2 / 3.0
            s = s_in - rho * s_bg
            out[i] = s - np.trace(s) / 3.0 * np.eye(3)
        return out

    def inner_perimeters(self) -> np.ndarray:
        return 6.0 * self.inner_sides() ** 2

    def perimeter_constant(self) -> float:
        """Smallest C with Per(inner cube) <= C rho^(2/3) eps^2 for all pieces."""
        return float(
            self.inner_perimeters().max() / (self.rho ** (2.0 / 3.0) * self.eps**2)
        )

    def containment_margins(self) -> np.ndarray:
        """Distance from each inner cube to its host tile's boundary (> 0)."""
        eps, k = self.eps, self.subdiv
        host_c = eps * self._host_index.astype(float)
        shift = np.abs(self._host_inner_center - host_c).max(axis=1)
        host = eps / 2.0 - shift - self._host_inner_side / 2.0
        sub_margin = (1.0 - self.rho ** (1.0 / 3.0)) * eps / (2.0 * k)
        return np.concatenate(
            [host, np.full(len(self._sub_index), sub_margin)]
        )

    def com_shift_constant(self) -> float:
        """Max inner-cube displacement from its tile center in units of
        tile size over (subdivision + 1)."""
        eps = self.eps
        host_c = eps * self._host_index.astype(float)
        shift = np.abs(self._host_inner_center - host_c).max(axis=1)
        if not len(shift):
            return 0.0
        return float(shift.max() * (self.subdiv + 1) / eps)

    def shell_volume(self) -> float:
        """Volume of the outer shell that provably contains every piece."""
        t = (1.0 + math.sqrt(3.0)) * self.eps
        if isinstance(self.domain, Ball):
            r = self.domain.radius
            return 4.0 * math.pi / 3.0 * ((r + t) ** 3 - r**3)
        s = self.domain.side
        return (s + 2.0 * t) ** 3 - s**3

    def piece_count_constant(self) -> float:
        """Piece count over (shell volume / tile volume)."""
        return len(self) * self.eps**3 / self.shell_volume()

    def total_volume(self) -> float:
        return float(self.volumes().sum())


def _segment_sums(rows: np.ndarray, ptr: np.ndarray) -> np.ndarray:
    """Per-segment row sums for CSR-style pointers (empty segments give 0)."""
    n = len(ptr) - 1
    out = np.zeros((n, rows.shape[1])) if rows.ndim > 1 else np.zeros(n)
    counts = np.diff(ptr)
    nz = counts > 0
    if rows.size and nz.any():
        starts = ptr[:-1][nz]
        out[nz] = np.add.reduceat(rows, starts, axis=0)
    return out


def _subcell_center(key, eps: float, k: int) -> np.ndarray:
    """Center of the subcell with integer key ``k*z + m`` (m in [0, k)^3)."""
    key = np.asarray(key, dtype=float)
    return (eps / k) * (key + 0.5) - eps / 2.0


def _enumerate_layer_tiles(domain, eps: float, pool_reach: float):
    """Integer indices of layer and host tiles around the boundary.

    Returns ``(pool, pool_dist, boundary)``: fully-exterior tiles within
    ``pool_reach`` of the domain (lexicographically sorted, with matching
    distances) and the boundary-crossing tiles.
    """
    c = np.asarray(domain.center, dtype=float)
    reach = domain.diameter / 2.0 + pool_reach + 1.5 * eps
    lo = np.floor((c - reach) / eps).astype(int)
    hi = np.ceil((c + reach) / eps).astype(int)
    axes = [np.arange(lo[i], hi[i] + 1) for i in range(3)]
    z = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    centers = eps * z.astype(float)
    outside, meets, dist = _box_domain_relation(domain, centers, eps / 2.0)
    pool_mask = outside & (dist <= pool_reach * (1.0 + 1e-12))
    pool = z[pool_mask]
    pool_dist = dist[pool_mask]
    order = _lexsort_rows(pool)
    boundary = z[meets]
    return pool[order], pool_dist[order], boundary[_lexsort_rows(boundary)]


def _classify_subcells(domain, boundary_tiles, eps: float, k: int, batch: int = 2_000_000):
    """Split boundary tiles into (eps/k)-subcells; classify each one.

    Returns ``(ext_keys, bnd_keys)``: integer keys ``k*z + m`` of subcells
    fully outside the closed domain and of subcells meeting the boundary.
    """
    m = np.stack(
        np.meshgrid(np.arange(k), np.arange(k), np.arange(k), indexing="ij"),
        axis=-1,
    ).reshape(-1, 3)
    ext_parts, bnd_parts = [], []
    tiles_per_batch = max(1, batch // (k**3))
    for start in range(0, len(boundary_tiles), tiles_per_batch):
        zb = boundary_tiles[start : start + tiles_per_batch]
        keys = (k * zb[:, None, :] + m[None, :, :]).reshape(-1, 3)
        centers = _subcell_center(keys, eps, k)
        outside, meets, _ = _box_domain_relation(domain, centers, eps / (2.0 * k))
        ext_parts.append(keys[outside])
        bnd_parts.append(keys[meets])
    ext = np.vstack(ext_parts) if ext_parts else np.zeros((0, 3), dtype=int)
    bnd = np.vstack(bnd_parts) if bnd_parts else np.zeros((0, 3), dtype=int)
    return ext[_lexsort_rows(ext)], bnd[_lexsort_rows(bnd)]


class _HostState:
    """Running feasibility state of candidate host tiles during assembly."""

    __slots__ = ("eps", "k", "rho", "cell_vol", "tile_vol", "cx", "cy", "cz",
                 "count", "mx", "my", "mz", "members")

    def __init__(self, tile_index: np.ndarray, eps: float, k: int, rho: float):
        n = len(tile_index)
        self.eps = eps
        self.k = k
        self.rho = rho
        self.cell_vol = (eps / k) ** 3
        self.tile_vol = eps**3
        centers = eps * tile_index.astype(float)
        self.cx = centers[:, 0].tolist()
        self.cy = centers[:, 1].tolist()
        self.cz = centers[:, 2].tolist()
        self.count = [0] * n
        self.mx = [0.0] * n
        self.my = [0.0] * n
        self.mz = [0.0] * n
        self.members: list = [[] for _ in range(n)]

    def margin_if(self, i: int, ox: float, oy: float, oz: float) -> float:
        vol = self.tile_vol + (self.count[i] + 1) * self.cell_vol
        w = self.cell_vol / vol
        shift = max(
            abs((self.mx[i] + ox) * w),
            abs((self.my[i] + oy) * w),
            abs((self.mz[i] + oz) * w),
        )
        return self.eps / 2.0 - shift - (self.rho * vol) ** (1.0 / 3.0) / 2.0

    def add(self, i: int, sub: int, ox: float, oy: float, oz: float) -> None:
        self.count[i] += 1
        self.mx[i] += ox
        self.my[i] += oy
        self.mz[i] += oz
        self.members[i].append(sub)


def _assemble_hosts(
    pool_tiles: np.ndarray,
    sub_keys: np.ndarray,
    eps: float,
    k: int,
    rho: float,
):
    """Attach each boundary subcell to the nearest host tile that can still
    absorb it, keeping every inner cube strictly inside its host.

    Hosts are fully-exterior tiles (nearest preferred, by distance between
    the closed boxes, ties by lexicographic tile index); a subcell spills
    over to the next-nearest host whenever the addition would push the
    host's inner cube out of its tile.  Raises ``ValueError`` when a subcell
    cannot be placed at all (subdivision too coarse).
    """
    n_pool = len(pool_tiles)
    if n_pool == 0:
        raise ValueError(
            "no fully-exterior tile available to absorb boundary subcells; "
            "decrease the tile size"
        )
    reserve = 1e-3 * eps
    state = _HostState(pool_tiles, eps, k, rho)
    ns = len(sub_keys)
    if ns == 0:
        return state
    centers = _subcell_center(sub_keys, eps, k)
    half_sum = eps / 2.0 + eps / (2.0 * k)
    pad = math.sqrt(3.0) * half_sum
    tile_centers = eps * pool_tiles.astype(float)
    tree = cKDTree(tile_centers)

    # candidate hosts per subcell: nearest kq tile centers, re-ranked by the
    # distance between the closed boxes with lexicographic (= positional)
    # tie-breaks; a prefix of each list is certified complete
    kq = min(n_pool, 48)
    cand_order = np.empty((ns, kq), dtype=np.int32)
    cand_certified = np.empty(ns, dtype=np.int32)
    d_pref = np.empty(ns)
    batch = 150_000
    for start in range(0, ns, batch):
        p = centers[start : start + batch]
        d_center, cand = tree.query(p, k=kq)
        if kq == 1:
            d_center = d_center[:, None]
            cand = cand[:, None]
        gap = np.abs(tile_centers[cand] - p[:, None, :]) - half_sum
        d_set = np.linalg.norm(np.maximum(gap, 0.0), axis=2)
        ind = np.lexsort((cand, d_set), axis=1)
        rows = np.arange(len(p))[:, None]
        d_sorted = d_set[rows, ind]
        cand_order[start : start + len(p)] = cand[rows, ind]
        d_pref[start : start + len(p)] = d_sorted[:, 0]
        if kq == n_pool:
            cand_certified[start : start + len(p)] = kq
        else:
            # candidate r is certified when no non-candidate can be closer
            cand_certified[start : start + len(p)] = (
                d_sorted + pad <= d_center[:, -1:]
            ).sum(axis=1)

    # nearest-first greedy: subcells in order of increasing distance to
    # their preferred host, ties in lexicographic subcell order
    sched = np.lexsort((np.arange(ns), d_pref))
    cxs, cys, czs = centers[:, 0], centers[:, 1], centers[:, 2]
    for s in sched:
        sx, sy, sz = cxs[s], cys[s], czs[s]
        placed = False
        for i in cand_order[s, : max(1, cand_certified[s])]:
            ox, oy, oz = sx - state.cx[i], sy - state.cy[i], sz - state.cz[i]
            if state.margin_if(i, ox, oy, oz) >= reserve:
                state.add(i, int(s), ox, oy, oz)
                placed = True
                break
        if not placed:
            placed = _place_wide(state, tree, tile_centers, centers[s], int(s),
                                 half_sum, reserve)
        if not placed:
            key = tuple(int(v) for v in sub_keys[s])
            raise ValueError(
                f"no host tile can absorb the boundary subcell at index {key} "
                f"without its inner cube escaping; increase the subdivision "
                f"or use coarser tiles"
            )
    return state


def _place_wide(state, tree, tile_centers, pt, s, half_sum, reserve) -> bool:
    """Fallback placement scanning hosts in growing neighborhoods, then all."""
    eps = state.eps
    tried = None
    for radius in (6.0 * eps, 12.0 * eps, None):
        if radius is None:
            idx = np.arange(len(tile_centers))
        else:
            idx = np.asarray(
                sorted(tree.query_ball_point(pt, radius)), dtype=int
            )
            if len(idx) == 0 or (tried is not None and len(idx) == len(tried)):
                tried = idx
                continue
        gap = np.abs(tile_centers[idx] - pt) - half_sum
        d_all = np.linalg.norm(np.maximum(gap, 0.0), axis=1)
        for j in np.lexsort((idx, d_all)):
            i = int(idx[j])
            ox = pt[0] - state.cx[i]
            oy = pt[1] - state.cy[i]
            oz = pt[2] - state.cz[i]
            if state.margin_if(i, ox, oy, oz) >= reserve:
                state.add(i, s, ox, oy, oz)
                return True
        tried = idx
    return False


def quadrupole_layer(domain, eps: float, subdiv: int, rho: float) -> BoundaryLayer:
    """Tile the outer boundary neighborhood of ``domain`` with neutral pieces.

    Space is tiled by cubes of side ``eps`` centered at ``eps * z`` for
    integer ``z``.  Fully-exterior tiles within distance ``eps`` of the
    domain form the base of the layer.  Boundary-crossing tiles are
    subdivided at resolution ``eps/subdiv``; their fully-exterior subcells
    become standalone pieces, while subcells that still cross the boundary
    are attached (as full boxes) to the nearest fully-exterior tile that can
    absorb them, spilling over to the next-nearest host when an addition
    would push the host's inner cube out of its tile.  Every piece receives
    an inner cube of volume ``rho`` times the piece volume, centered at the
    piece's center of mass, so the signed density carries no charge and no
    dipole moment.

    Raises ``ValueError`` when some subcell cannot be absorbed by any host
    (subdivision too coarse), naming the offending subcell.
    """
    if not 0.0 < rho <= 0.5:
        raise ValueError("background fraction must lie in (0, 1/2]")
    if eps <= 0.0:
        raise ValueError("tile size must be positive")
    scale = _regularity_scale(domain)
    if eps > scale * (1.0 + 1e-12):
        raise ValueError(
            f"tile size {eps} too coarse for this domain; need <= {scale}"
        )
    if subdiv != int(subdiv):
        raise TypeError("subdivision must be an integer")
    subdiv = int(subdiv)
    if subdiv < 2:
        raise ValueError("subdivision must be an integer >= 2")

    pool, pool_dist, boundary = _enumerate_layer_tiles(domain, eps, 3.0 * eps)
    first_shell = pool_dist <= eps * (1.0 + 1e-12)
    ext_keys, bnd_keys = _classify_subcells(domain, boundary, eps, subdiv)
    state = _assemble_hosts(pool, bnd_keys, eps, subdiv, rho)

    # hosts: every first-shell exterior tile, plus any farther tile that
    # received spilled subcells
    counts_pool = np.asarray(state.count, dtype=int)
    rows = np.nonzero(first_shell | (counts_pool > 0))[0]
    hosts = pool[rows]
    counts = counts_pool[rows]
    ptr = np.zeros(len(hosts) + 1, dtype=int)
    np.cumsum(counts, out=ptr[1:])
    member_ids = [sorted(state.members[r]) for r in rows]
    flat = [s for ids in member_ids for s in ids]
    if flat:
        sub_centers = _subcell_center(bnd_keys[np.asarray(flat)], eps, subdiv)
    else:
        sub_centers = np.zeros((0, 3))

    vols = eps**3 + counts * (eps / subdiv) ** 3
    host_c = eps * hosts.astype(float)
    moments = eps**3 * host_c + (eps / subdiv) ** 3 * _segment_sums(
        sub_centers, ptr
    )
    com = moments / vols[:, None]
    sides = np.cbrt(rho * vols)

    # strict containment of every inner cube in its host tile
    margins = eps / 2.0 - np.abs(com - host_c).max(axis=1) - sides / 2.0
    bad = np.nonzero(margins <= 0.0)[0]
    if len(bad):
        z = tuple(int(v) for v in hosts[bad[0]])
        raise ValueError(
            f"inner cube escapes its host tile for the merged piece at index "
            f"{z} (margin {margins[bad[0]]:.3e}); increase the subdivision"
        )

    build = (hosts, sub_centers, ptr, com, sides, ext_keys)
    return BoundaryLayer(domain, eps, subdiv, rho, _build=build)


_FIT_DIRECTIONS = None


def _fit_directions(count: int = 32) -> np.ndarray:
    """Deterministic, roughly equidistributed unit directions."""
    global _FIT_DIRECTIONS
    if _FIT_DIRECTIONS is None or len(_FIT_DIRECTIONS) != count:
        i = np.arange(count, dtype=float)
        phi = (1.0 + math.sqrt(5.0)) / 2.0
        zc = 1.0 - (2.0 * i + 1.0) / count
        theta = 2.0 * math.pi * i / phi
        s = np.sqrt(np.maximum(1.0 - zc**2, 0.0))
        _FIT_DIRECTIONS = np.stack(
            [s * np.cos(theta), s * np.sin(theta), zc], axis=1
        )
    return _FIT_DIRECTIONS


def piece_potential(piece: LayerPiece, pts) -> np.ndarray:
    """Coulomb potential of a piece's signed density at the given points."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    h = piece.inner_side / 2.0
    v = potential_box(piece.inner_center - h, piece.inner_center + h, pts)
    for lo, hi in zip(piece.box_lo, piece.box_hi):
        v = v - piece.background_fraction * potential_box(lo, hi, pts)
    return v


def far_field_exponent(
    piece: LayerPiece, radii=None, directions: int = 32
) -> float:
    """Fitted decay exponent p of |potential| ~ r^(-p) away from the piece."""
    eps = piece.tile_size
    if radii is None:
        radii = np.geomspace(4.0 * eps, 32.0 * eps, 7)
    radii = np.asarray(radii, dtype=float)
    dirs = _fit_directions(directions)
    com = _piece_com(piece)
    rms = np.empty(len(radii))
    for i, r in enumerate(radii):
        vals = piece_potential(piece, com + r * dirs)
        rms[i] = math.sqrt(float(np.mean(vals**2)))
    if np.any(rms <= 0.0):
        return math.inf
    slope = np.polyfit(np.log(radii), np.log(rms), 1)[0]
    return float(-slope)


def _piece_com(piece: LayerPiece) -> np.ndarray:
    sides = piece.box_hi - piece.box_lo
    vols = np.prod(sides, axis=1)
    centers = (piece.box_lo + piece.box_hi) / 2.0
    return (vols[:, None] * centers).sum(axis=0) / vols.sum()


def piece_diagnostics(piece: LayerPiece, directions: int = 32) -> PieceDiagnostics:
    """Exact charge/dipole/quadrupole and fitted far-field decay exponent.

    Moments are closed-form box integrals; the decay exponent is a log-log
    fit of the direction-RMS potential over radii between 4 and 32 tile
    sizes from the piece's center of mass.
    """
    rho = piece.background_fraction
    sides = piece.box_hi - piece.box_lo
    vols = np.prod(sides, axis=1)
    centers = (piece.box_lo + piece.box_hi) / 2.0
    vol = vols.sum()
    side = piece.inner_side
    charge = side**3 - rho * vol
    dipole = side**3 * piece.inner_center - rho * (vols[:, None] * centers).sum(
        axis=0
    )
    s_bg = np.einsum("b,bi,bj->ij", vols, centers, centers)
    s_bg[np.diag_indices(3)] += (vols[:, None] * (sides / 2.0) ** 2).sum(
        axis=0
    ) / 3.0
    s_in = side**3 * np.outer(piece.inner_center, piece.inner_center)
    s_in[np.diag_indices(3)] += side**3 * (side / 2.0) ** 2 / 3.0
    s = s_in - rho * s_bg
    quad = s - np.trace(s) / 3.0 * np.eye(3)
    return PieceDiagnostics(
        charge=float(charge),
        dipole=dipole,
        quadrupole=quad,
        decay_exponent=far_field_exponent(piece, directions=directions),
    )


# ---------------------------------------------------------------------------
# ball-packing schedule
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PackingSchedule:
    """Exact radius/count schedule for the recursive ball packing.

    Generation ``j`` uses balls of radius ``radii[j]``; a ball of generation
    ``K`` is packed with ``counts[K - j]`` copies of each earlier generation
    ``j < K``.  ``leftover_ratios[K]`` is the unfilled volume fraction in
    units of ``keep_fraction**K`` and ``perimeter_ratios[K]`` the packed
    surface area over ball volume in the same units; both are exact
    rationals evaluated to float.
    """

    growth: int
    keep_fraction: Fraction
    shrink: Fraction
    radii: tuple
    counts: tuple
    leftover_ratios: tuple
    perimeter_ratios: tuple

    @property
    def depth(self) -> int:
        return len(self.radii) - 1


def swiss_cheese(depth: int, growth: int = 26) -> PackingSchedule:
    """Exact packing schedule up to the given generation ``depth``.

    Radii grow like ``(1 + growth)**j`` with an offset keeping leftover
    space; counts grow so that the unfilled volume fraction after packing
    generation ``K`` is of order ``keep_fraction**K`` with
    ``keep_fraction = growth / (1 + growth)``.
    """
    if not 1 <= depth <= 14:
        raise ValueError("packing depth must lie in 1..14")
    p = int(growth)
    if p < 2:
        raise ValueError("growth must be an integer >= 2")
    gamma = Fraction(p, p + 1)
    theta = Fraction(1, p + 1)
    radii = [Fraction(p + 1) ** j * (1 - theta**j / 2) for j in range(depth + 1)]
    # family sizes; generation 0 is the degenerate base case (a single ball)
    counts = [
        gamma**j * Fraction(p + 1) ** (3 * j) / p if j else Fraction(1)
        for j in range(depth + 1)
    ]
    for j, n in enumerate(counts[1:], start=1):
        if n.denominator != 1:
            raise ValueError(f"count at generation {j} is not an integer: {n}")
    leftover, perim = [Fraction(0)], [Fraction(0)]
    for bigk in range(1, depth + 1):
        occupied = sum(
            counts[bigk - j] * radii[j] ** 3 for j in range(bigk)
        )
        area = sum(counts[bigk - j] * 3 * radii[j] ** 2 for j in range(bigk))
        vol = radii[bigk] ** 3
        left = vol - occupied
        if left <= 0:
            raise ValueError(
                f"packing at generation {bigk} overfills the ball (exact check)"
            )
        leftover.append(left / (gamma**bigk * vol))
        perim.append(area / (gamma**bigk * vol))
    return PackingSchedule(
        growth=p,
        keep_fraction=gamma,
        shrink=theta,
        radii=tuple(radii),
        counts=tuple(int(n) for n in counts),
        leftover_ratios=tuple(leftover),
        perimeter_ratios=tuple(perim),
    )


# ---------------------------------------------------------------------------
# averaged-sequence limit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RecursionLimitCertificate:
    """Limit certificate for an almost-superaveraged sequence.

    ``limit`` equals ``(1 - gamma) * sum(increments)`` over the horizon;
    ``increments[K]`` is the sequence value minus the geometric average of
    its history, ``slack[K] = allowances[K] - increments[K] >= 0`` is the
    verified hypothesis margin, and ``tail_bound`` estimates the neglected
    tail from the measured decay of the allowances (infinite when they do
    not decay).
    """

    limit: float
    increments: np.ndarray
    slack: np.ndarray
    tail_bound: float
    horizon: int


def recursion_limit(values, gamma: float, allowances) -> RecursionLimitCertificate:
    """Certify the limit of a sequence dominated by its geometric history.

    Hypothesis (verified index by index): each value exceeds the
    geometrically weighted average of all earlier values by at most the
    corresponding allowance,

        values[K] <= (1 - gamma)/gamma * sum_{j<K} gamma**(K-j) * values[j]
                     + allowances[K].

    The increment sequence ``g[K] = values[K] - average`` then reconstructs
    the values exactly via ``values[K] = g[K] + (1-gamma)*sum_{j<K} g[j]``,
    so when the allowances are summable the values converge to
    ``(1 - gamma) * sum(g)``.  Raises ``ValueError`` naming the first index
    where the hypothesis fails.
    """
    f = np.asarray(values, dtype=float)
    delta = np.asarray(allowances, dtype=float)
    if f.ndim != 1 or delta.shape != f.shape:
        raise ValueError("values and allowances must be 1-d of equal length")
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie strictly between 0 and 1")
    n = len(f)
    if n < 2:
        raise ValueError("need at least two sequence values")
    g = np.empty(n)
    hist = 0.0  # sum_{j<K} gamma**(K-j) * f[j], updated recursively
    for bigk in range(n):
        g[bigk] = f[bigk] - (1.0 - gamma) / gamma * hist
        tol = 1e-12 * max(1.0, abs(f[bigk]), abs(hist))
        if g[bigk] > delta[bigk] + tol:
            raise ValueError(
                f"averaging hypothesis fails at index {bigk}: "
                f"increment {g[bigk]:.6e} exceeds allowance {delta[bigk]:.6e}"
            )
        hist = gamma * (hist + f[bigk])
    limit = (1.0 - gamma) * float(g.sum())
    # tail estimate from the measured decay of the allowances
    tail = math.inf
    pos = delta[delta > 0]
    if len(delta) >= 2 and delta[-1] <= 0.0:
        tail = 0.0
    elif len(pos) >= 2 and delta[-1] > 0.0 and delta[-2] > 0.0:
        q = delta[-1] / delta[-2]
        if q < 1.0:
            tail = (1.0 - gamma) * delta[-1] * q / (1.0 - q)
    return RecursionLimitCertificate(
        limit=limit,
        increments=g,
        slack=delta - g,
        tail_bound=tail,
        horizon=n - 1,
    )
