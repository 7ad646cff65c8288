"""Per-channel linear generators and their exact unitary propagation.

Each channel (fixed k_j) carries the 2N x 2N real symmetric generator

    H = [ A0         -D + k/r ]
        [ D + k/r    -A0      ]

acting on the stacked radial pair (psi+, psi-). D is the exactly
antisymmetric 4th-order derivative (zero extension beyond both walls), so H
is hermitian by construction; the flow step is the exact exponential
exp(+i H dt) applied through a dense eigendecomposition, computed once per
(k_j, A0, grid) and reused for every step and every m_j.

The wall at r = R is a hard Dirichlet cutoff: experiments must be sized so
that outgoing waves (unit propagation speed) do not reflect back into the
diagnostic region during the run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import fd
from .grids import RadialGrid

__all__ = ["ChannelGenerator", "assemble", "propagate"]


@dataclass
class ChannelGenerator:
    """Hermitian channel generator with a lazily computed eigendecomposition."""

    kappa: int
    grid: RadialGrid
    matrix: np.ndarray
    _eigvals: np.ndarray | None = field(default=None, repr=False)
    _eigvecs: np.ndarray | None = field(default=None, repr=False)

    def ensure_eigh(self) -> tuple[np.ndarray, np.ndarray]:
        if self._eigvals is None:
            self._eigvals, self._eigvecs = np.linalg.eigh(self.matrix)
        return self._eigvals, self._eigvecs

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.ensure_eigh()[0]

    def propagator(self, dt: float) -> np.ndarray:
        """Dense exp(+i H dt); cache externally if applied repeatedly."""
        lam, u = self.ensure_eigh()
        return (u * np.exp(1j * lam * dt)[None, :]) @ u.T

    def apply_exp(self, z: np.ndarray, dt: float) -> np.ndarray:
        """exp(+i H dt) @ z through the eigenbasis; z is (2N,) or (2N, m)."""
        lam, u = self.ensure_eigh()
        zz = u.T @ z
        if z.ndim == 1:
            return u @ (np.exp(1j * lam * dt) * zz)
        return u @ (np.exp(1j * lam * dt)[:, None] * zz)


def assemble(kappa, a0: Callable[[np.ndarray], np.ndarray] | None,
             grid: RadialGrid) -> ChannelGenerator:
    """Build the channel generator for k_j (a ChannelIndex is also accepted)."""
    k = int(getattr(kappa, "kappa", kappa))
    if k == 0:
        raise ValueError("k_j must be a nonzero integer")
    n = grid.n
    r = grid.r
    a0v = np.zeros(n) if a0 is None else np.asarray(a0(r), dtype=float)
    if not np.all(np.isfinite(a0v)):
        raise ValueError("non-finite A0 samples")
    d = fd.d1_matrix(n, grid.h, boundary="zero_pad")
    c = np.diag(k / r)
    h = np.zeros((2 * n, 2 * n))
    h[:n, :n] = np.diag(a0v)
    h[n:, n:] = -np.diag(a0v)
    h[:n, n:] = -d + c
    h[n:, :n] = d + c
    asym = np.abs(h - h.T).max()
    scale = max(1.0, np.abs(h).max())
    if asym > 1e-12 * scale:
        raise AssertionError("assembled generator lost hermiticity")
    return ChannelGenerator(kappa=k, grid=grid, matrix=h)


def propagate(gen: ChannelGenerator, state: tuple[np.ndarray, np.ndarray],
              dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Advance one channel pair (psi+, psi-) by the exact linear flow."""
    n = gen.grid.n
    z = np.concatenate([np.asarray(state[0]), np.asarray(state[1])])
    if z.shape != (2 * n,):
        raise ValueError("state length does not match the grid")
    out = gen.apply_exp(z.astype(np.complex128), dt)
    return out[:n], out[n:]


def spurious_mode_columns(gen: ChannelGenerator, n_pts: int = 6,
                          mass_frac: float = 0.3) -> np.ndarray:
    """Eigenvectors that are boundary-layer artifacts of the origin closure.

    The singular k/r coefficient meeting the derivative closure at r = h/2
    produces a conjugate pair of modes per channel with nearly all their mass
    on the first few grid points and |eigenvalue| of order 1/h; they carry no
    physics and are removed from initial data by the evolution driver.
    Returns the (2N, n_spurious) real matrix of those eigenvector columns.
    """
    lam, u = gen.ensure_eigh()
    n = gen.grid.n
    frac = (np.abs(u[:n_pts]) ** 2).sum(0) + (np.abs(u[n:n + n_pts]) ** 2).sum(0)
    cols = np.nonzero(frac > mass_frac)[0]
    return u[:, cols]
