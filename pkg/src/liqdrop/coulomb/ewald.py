"""Periodic Coulomb kernel on a cubic torus, evaluated by Ewald splitting.

The kernel G_l is the l-periodic solution of -Delta G = 4 pi (delta_per - 1/l^3)
with zero mean over the cell, i.e. the interaction of a unit point charge with
its own periodic images on a neutralizing background.  Near the origin
G_l(x) ~ 1/|x|, and G_l(x) = G_1(x/l) / l.

The split moves short range into a screened real-space image sum and the rest
into a Gaussian-damped reciprocal sum; the constant term pins the cell mean of
the kernel to zero, which is what makes values independent of the splitting
parameter alpha.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erfc

__all__ = ["PeriodicKernel", "madelung_z3"]


class PeriodicKernel:
    """Ewald evaluator for the zero-mean periodic Coulomb kernel at period ``ell``.

    Parameters
    ----------
    ell : float
        Cell side.
    alpha : float, optional
        Splitting parameter (inverse length squared). Default pi / ell^2.
        Results are alpha-independent up to the truncation tolerance.
    tol : float
        Target absolute truncation error of kernel values; real and
        reciprocal cutoffs are derived from it.
    """

    def __init__(self, ell: float, alpha: float | None = None, tol: float = 1e-13):
        if ell <= 0.0:
            raise ValueError("ell must be positive")
        self.ell = float(ell)
        self.alpha = float(alpha) if alpha is not None else np.pi / ell**2
        if self.alpha <= 0.0:
            raise ValueError("alpha must be positive")
        self.tol = float(tol)

        # real-space cutoff: erfc(sqrt(alpha) r) / r below tol for r >= rcut
        eta = np.sqrt(np.log(1.0 / tol)) + 1.0
        self.rcut = eta / np.sqrt(self.alpha)
        # displacements are reduced to the centered cell, so images within
        # rcut + half the cell diagonal are enough
        reach = self.rcut / ell + np.sqrt(3.0) / 2.0 + 1e-9
        m = int(np.ceil(reach))
        rng = np.arange(-m, m + 1)
        shifts = np.stack(np.meshgrid(rng, rng, rng, indexing="ij"), -1).reshape(-1, 3)
        keep = np.linalg.norm(shifts, axis=1) <= reach
        self.shifts = shifts[keep].astype(float) * ell

        # reciprocal cutoff: exp(-k^2/(4 alpha)) / k^2 below tol
        kcut = 2.0 * np.sqrt(self.alpha * np.log(1.0 / tol)) + 2.0 * np.pi / ell
        nmax = int(np.ceil(kcut * ell / (2.0 * np.pi)))
        rng = np.arange(-nmax, nmax + 1)
        kgrid = np.stack(np.meshgrid(rng, rng, rng, indexing="ij"), -1).reshape(-1, 3)
        kvecs = kgrid * (2.0 * np.pi / ell)
        k2 = np.sum(kvecs**2, axis=1)
        keep = (k2 > 0.0) & (np.sqrt(k2) <= kcut)
        self.kvecs = kvecs[keep]
        k2 = k2[keep]
        self.kcoef = (4.0 * np.pi / ell**3) * np.exp(-k2 / (4.0 * self.alpha)) / k2
        self.self_const = np.pi / (self.alpha * ell**3)

    # -- point values -------------------------------------------------------

    def green(self, x) -> np.ndarray:
        """G_ell at displacement(s) x, shape (..., 3) -> (...)."""
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        pts = np.atleast_2d(x)
        pts = pts - self.ell * np.round(pts / self.ell)
        d = pts[:, None, :] - self.shifts[None, :, :]
        r = np.linalg.norm(d, axis=-1)
        if np.any(r == 0.0):
            raise ValueError("kernel evaluated at a lattice point")
        real = np.sum(erfc(np.sqrt(self.alpha) * r) / r, axis=1)
        phase = pts @ self.kvecs.T
        recip = np.cos(phase) @ self.kcoef
        out = real + recip - self.self_const
        return out[0] if squeeze else out

    def madelung(self) -> float:
        """lim_{x->0} (G_ell(x) - 1/|x|): self-image energy scale, < 0."""
        s = self.shifts
        r = np.linalg.norm(s, axis=1)
        real = np.sum(erfc(np.sqrt(self.alpha) * r[r > 0.0]) / r[r > 0.0])
        recip = float(np.sum(self.kcoef))
        return real + recip - self.self_const - 2.0 * np.sqrt(self.alpha / np.pi)

    # -- many-body sums -----------------------------------------------------

    def _reduced_pair_displacements(self, positions):
        pos = np.asarray(positions, dtype=float).reshape(-1, 3)
        iu, ju = np.triu_indices(len(pos), k=1)
        dx = pos[iu] - pos[ju]
        dx -= self.ell * np.round(dx / self.ell)
        return pos, dx

    def pair_energy(self, positions, q: float = 1.0) -> float:
        """q^2 * sum_{j<k} G_ell(x_j - x_k) via one structure-factor pass."""
        pos, dx = self._reduced_pair_displacements(positions)
        n = len(pos)
        if n < 2:
            return 0.0
        d = dx[:, None, :] - self.shifts[None, :, :]
        r = np.linalg.norm(d, axis=-1)
        if np.any(r < 1e-300):
            raise ValueError("coincident points in pair energy")
        real = np.sum(erfc(np.sqrt(self.alpha) * r) / r)
        phase = pos @ self.kvecs.T
        sk2 = np.cos(phase).sum(axis=0) ** 2 + np.sin(phase).sum(axis=0) ** 2
        recip = 0.5 * np.dot(self.kcoef, sk2 - n)
        npairs = n * (n - 1) / 2.0
        return q**2 * (real + recip - npairs * self.self_const)

    def pair_gradient(self, positions, q: float = 1.0) -> np.ndarray:
        """Gradient of ``pair_energy`` with respect to every position."""
        pos = np.asarray(positions, dtype=float).reshape(-1, 3)
        n = len(pos)
        grad = np.zeros_like(pos)
        if n < 2:
            return grad
        iu, ju = np.triu_indices(n, k=1)
        dx = pos[iu] - pos[ju]
        dx -= self.ell * np.round(dx / self.ell)
        d = dx[:, None, :] - self.shifts[None, :, :]
        r = np.linalg.norm(d, axis=-1)
        sa = np.sqrt(self.alpha)
        # d/dr [erfc(s r)/r] = -(erfc(s r)/r^2 + 2 s exp(-s^2 r^2)/(sqrt(pi) r))
        mag = erfc(sa * r) / r**2 + (2.0 * sa / np.sqrt(np.pi)) * np.exp(-self.alpha * r**2) / r
        gpair = -np.sum((mag / r)[:, :, None] * d, axis=1)  # grad wrt x_i of pair (i, j)
        np.add.at(grad, iu, gpair)
        np.add.at(grad, ju, -gpair)
        phase = pos @ self.kvecs.T
        c, s = np.cos(phase), np.sin(phase)
        ctot, stot = c.sum(axis=0), s.sum(axis=0)
        # sum_{j != i} sin(k.(x_i - x_j)) = s_i ctot - c_i stot
        cross = s * ctot[None, :] - c * stot[None, :]
        grad += -(cross * self.kcoef[None, :]) @ self.kvecs
        return q**2 * grad


def madelung_z3(ell: float = 1.0, alpha: float | None = None) -> float:
    """Madelung-type constant of the cubic lattice ell*Z^3: M(ell) = M(1)/ell."""
    return PeriodicKernel(ell, alpha=alpha).madelung()
