"""Partial-wave machinery on the sphere.

The four-spinor fields are expanded over the orthonormal family
Phi^{+-}_{m_j, k_j} built from spherical harmonics with Condon-Shortley
phase. Channels are indexed by (j, m_j, k_j) with j a positive half-integer,
|m_j| <= j and k_j = +-(j + 1/2); half-integers are stored doubled so all
bookkeeping stays in exact integers.

Explicit basis, with Y_l^m == 0 whenever |m| > l. For k_j = j + 1/2:

    Phi^+ = i / sqrt(2j+2) * ( sqrt(j+1-m) Y_{k}^{m-1/2},
                              -sqrt(j+1+m) Y_{k}^{m+1/2}, 0, 0 )
    Phi^- = 1 / sqrt(2j)   * ( 0, 0,  sqrt(j+m) Y_{k-1}^{m-1/2},
                                       sqrt(j-m) Y_{k-1}^{m+1/2} )

and for k_j = -(j + 1/2):

    Phi^+ = i / sqrt(2j)   * ( sqrt(j+m) Y_{-k-1}^{m-1/2},
                               sqrt(j-m) Y_{-k-1}^{m+1/2}, 0, 0 )
    Phi^- = 1 / sqrt(2j+2) * ( 0, 0,  sqrt(j+1-m) Y_{-k}^{m-1/2},
                                      -sqrt(j+1+m) Y_{-k}^{m+1/2} ).

The upper-spinor degree for negative k_j is -k_j - 1 (= j - 1/2), the unique
choice compatible with spin-1/2 coupling and with the spin-orbit eigenvalue
relation K Phi = -k_j Phi, K = beta (2 S . L + 1); both are verified in the
test-suite against independent finite-difference oracles.

On these channels the Dirac operator D = -i alpha . grad acts radially:

    D Psi = sum  (-dpsi-/dr + (k/r) psi-) Phi+/r
          + sum  ( dpsi+/dr + (k/r) psi+) Phi-/r.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from . import fd
from .grids import AngularQuadrature, GridField, RadialGrid

__all__ = [
    "ChannelIndex", "channel_list", "sph_harm",
    "ScalarSphereTransform", "SphereBasis", "ChannelState",
    "analyze", "synthesize", "apply_K", "apply_abs_K_pow",
    "lambda_s_scalar", "apply_dirac_channel",
]


@dataclass(frozen=True, order=True)
class ChannelIndex:
    """Partial-wave channel (j, m_j, k_j); two_j = 2j, two_mj = 2 m_j."""

    two_j: int
    two_mj: int
    kappa: int

    def __post_init__(self):
        if self.two_j < 1 or self.two_j % 2 == 0:
            raise ValueError("2j must be a positive odd integer")
        if abs(self.two_mj) > self.two_j or self.two_mj % 2 == 0:
            raise ValueError("2m_j must be odd with |m_j| <= j")
        if abs(self.kappa) != (self.two_j + 1) // 2:
            raise ValueError("need |k_j| = j + 1/2")

    @property
    def j(self) -> float:
        return self.two_j / 2.0

    @property
    def mj(self) -> float:
        return self.two_mj / 2.0

    @property
    def ell_upper(self) -> int:
        return self.kappa if self.kappa > 0 else -self.kappa - 1

    @property
    def ell_lower(self) -> int:
        return self.kappa - 1 if self.kappa > 0 else -self.kappa

    def __str__(self):
        return f"(j={self.two_j}/2, mj={self.two_mj}/2, k={self.kappa})"


def channel_list(two_j_max: int) -> list[ChannelIndex]:
    """All channels with j <= two_j_max / 2, both signs of k_j."""
    if two_j_max < 1 or two_j_max % 2 == 0:
        raise ValueError("2*j_max must be a positive odd integer")
    out = []
    for two_j in range(1, two_j_max + 1, 2):
        kap = (two_j + 1) // 2
        for two_mj in range(-two_j, two_j + 1, 2):
            out.append(ChannelIndex(two_j, two_mj, -kap))
            out.append(ChannelIndex(two_j, two_mj, kap))
    return out


def sph_harm(ell: int, m: int, theta, phi) -> np.ndarray:
    """Orthonormal spherical harmonic with Condon-Shortley phase."""
    if abs(m) > ell:
        raise ValueError(f"|m| = {abs(m)} exceeds ell = {ell}")
    return special.sph_harm_y(ell, m, np.asarray(theta), np.asarray(phi))


def _sph_or_zero(ell: int, m: int, theta, phi) -> np.ndarray:
    if abs(m) > ell:
        return np.zeros(np.broadcast(theta, phi).shape, dtype=np.complex128)
    return special.sph_harm_y(ell, m, theta, phi)


def channel_spinor(c: ChannelIndex, sign: int, theta, phi) -> np.ndarray:
    """Evaluate Phi^sign_c at angles; sign = +1 or -1. Shape (..., 4)."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    j, m = c.j, c.mj
    mm, mp = (c.two_mj - 1) // 2, (c.two_mj + 1) // 2
    shape = np.broadcast(np.asarray(theta), np.asarray(phi)).shape
    out = np.zeros(shape + (4,), dtype=np.complex128)
    if c.kappa > 0:
        if sign > 0:
            pref = 1j / np.sqrt(2 * j + 2)
            out[..., 0] = pref * np.sqrt(j + 1 - m) * _sph_or_zero(c.ell_upper, mm, theta, phi)
            out[..., 1] = -pref * np.sqrt(j + 1 + m) * _sph_or_zero(c.ell_upper, mp, theta, phi)
        else:
            pref = 1.0 / np.sqrt(2 * j)
            out[..., 2] = pref * np.sqrt(j + m) * _sph_or_zero(c.ell_lower, mm, theta, phi)
            out[..., 3] = pref * np.sqrt(j - m) * _sph_or_zero(c.ell_lower, mp, theta, phi)
    else:
        if sign > 0:
            pref = 1j / np.sqrt(2 * j)
            out[..., 0] = pref * np.sqrt(j + m) * _sph_or_zero(c.ell_upper, mm, theta, phi)
            out[..., 1] = pref * np.sqrt(j - m) * _sph_or_zero(c.ell_upper, mp, theta, phi)
        else:
            pref = 1.0 / np.sqrt(2 * j + 2)
            out[..., 2] = pref * np.sqrt(j + 1 - m) * _sph_or_zero(c.ell_lower, mm, theta, phi)
            out[..., 3] = -pref * np.sqrt(j + 1 + m) * _sph_or_zero(c.ell_lower, mp, theta, phi)
    return out


class ScalarSphereTransform:
    """Forward/backward scalar spherical-harmonic transform on a quadrature.

    Exact (to rounding) for functions band-limited to the quadrature degree.
    """

    def __init__(self, quad: AngularQuadrature):
        self.quad = quad
        L = quad.degree
        ells = []
        rows = []
        for ell in range(L + 1):
            for m in range(-ell, ell + 1):
                rows.append(special.sph_harm_y(ell, m, quad.theta, quad.phi))
                ells.append(ell)
        self.ells = np.array(ells)
        self._ymat = np.array(rows)                                 # (nlm, q)
        self._ymat_w = self._ymat.conj() * quad.weights[None, :]

    def analyze(self, values: np.ndarray) -> np.ndarray:
        """values (..., q) -> coefficients (..., nlm)."""
        return values @ self._ymat_w.T

    def synthesize(self, coeff: np.ndarray) -> np.ndarray:
        return coeff @ self._ymat

    def laplace_beltrami_multiplier(self, s: float) -> np.ndarray:
        """(1 + ell(ell+1))^(s/2) per coefficient."""
        return (1.0 + self.ells * (self.ells + 1.0)) ** (s / 2.0)


class SphereBasis:
    """The truncated channel basis tabulated on an angular quadrature.

    Exposes vectorized analysis/synthesis between pointwise sphere data of
    shape (..., q, 4) and channel coefficients of shape (..., n_ch, 2); the
    trailing axis of the coefficients indexes (Phi+, Phi-).
    """

    def __init__(self, quad: AngularQuadrature, two_j_max: int):
        max_ell = (two_j_max + 1) // 2
        if 2 * max_ell > 2 * quad.degree + 1:
            raise ValueError(
                f"quadrature degree {quad.degree} cannot resolve channels up "
                f"to 2j = {two_j_max} (needs degree >= {max_ell})")
        self.quad = quad
        self.two_j_max = two_j_max
        self.channels = channel_list(two_j_max)
        self.kappas = np.array([c.kappa for c in self.channels])
        phi = np.empty((len(self.channels), 2, quad.n_nodes, 4), dtype=np.complex128)
        for i, c in enumerate(self.channels):
            phi[i, 0] = channel_spinor(c, +1, quad.theta, quad.phi)
            phi[i, 1] = channel_spinor(c, -1, quad.theta, quad.phi)
        self.phi = phi
        q4 = quad.n_nodes * 4
        self._synth = phi.reshape(-1, q4)                           # (2 nch, q*4)
        self._anal = (phi.conj() * quad.weights[None, None, :, None]).reshape(-1, q4)

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    def index_of(self, c: ChannelIndex) -> int:
        return self.channels.index(c)

    def analyze_sphere(self, values: np.ndarray) -> np.ndarray:
        """(..., q, 4) pointwise data -> (..., n_ch, 2) coefficients."""
        flat = values.reshape(values.shape[:-2] + (-1,))
        coeff = flat @ self._anal.T
        return coeff.reshape(values.shape[:-2] + (self.n_channels, 2))

    def synthesize_sphere(self, coeff: np.ndarray) -> np.ndarray:
        flat = coeff.reshape(coeff.shape[:-2] + (-1,))
        values = flat @ self._synth
        return values.reshape(coeff.shape[:-2] + (self.quad.n_nodes, 4))


@dataclass
class ChannelState:
    """Radial channel data psi[ch, sign, i]; the solver's native state.

    sign index 0 holds psi+ and 1 holds psi-. The L2 norm is the Parseval
    sum sqrt( sum_ch integral |psi+|^2 + |psi-|^2 dr ) with midpoint weights.
    """

    psi: np.ndarray
    grid: RadialGrid
    basis: SphereBasis

    def __post_init__(self):
        expected = (self.basis.n_channels, 2, self.grid.n)
        if self.psi.shape != expected:
            raise ValueError(f"channel array shape {self.psi.shape} != {expected}")

    @classmethod
    def zeros(cls, grid: RadialGrid, basis: SphereBasis) -> "ChannelState":
        return cls(np.zeros((basis.n_channels, 2, grid.n), dtype=np.complex128),
                   grid, basis)

    def copy(self) -> "ChannelState":
        return ChannelState(self.psi.copy(), self.grid, self.basis)

    def channel(self, c: ChannelIndex) -> tuple[np.ndarray, np.ndarray]:
        i = self.basis.index_of(c)
        return self.psi[i, 0], self.psi[i, 1]

    def l2_norm(self) -> float:
        return float(np.sqrt(self.grid.h * np.sum(np.abs(self.psi) ** 2)))

    def sphere_l2_profile(self, channel_weights: np.ndarray | None = None) -> np.ndarray:
        """Per-radius L2(S^2, dS) norm, i.e. sqrt(sum_ch |psi(r_i)|^2)."""
        dens = np.abs(self.psi) ** 2
        if channel_weights is not None:
            dens = dens * channel_weights[:, None, None] ** 2
        return np.sqrt(np.sum(dens, axis=(0, 1)))


def analyze(f: GridField, basis: SphereBasis) -> ChannelState:
    """Project a pointwise field onto the channel basis: psi = r <f, Phi>."""
    if f.quad is not basis.quad and f.quad.n_nodes != basis.quad.n_nodes:
        raise ValueError("field and basis live on different quadratures")
    coeff = basis.analyze_sphere(f.values)              # (n_r, nch, 2)
    psi = np.ascontiguousarray(coeff.transpose(1, 2, 0)) * f.grid.r[None, None, :]
    return ChannelState(psi, f.grid, basis)


def synthesize(s: ChannelState) -> GridField:
    """Evaluate sum (1/r) psi Phi on the grid-times-quadrature nodes."""
    coeff = (s.psi / s.grid.r[None, None, :]).transpose(2, 0, 1)
    values = s.basis.synthesize_sphere(np.ascontiguousarray(coeff))
    return GridField(values, s.grid, s.basis.quad)


def apply_K(s: ChannelState) -> ChannelState:
    """Spin-orbit operator: channel-diagonal multiplier -k_j."""
    return ChannelState(s.psi * (-s.basis.kappas)[:, None, None], s.grid, s.basis)


def apply_abs_K_pow(s: ChannelState, sigma: float) -> ChannelState:
    """|K|^sigma: channel-diagonal multiplier |k_j|^sigma (sigma >= 0)."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    w = np.abs(s.basis.kappas).astype(float) ** sigma
    return ChannelState(s.psi * w[:, None, None], s.grid, s.basis)


_SCALAR_CACHE: dict[int, ScalarSphereTransform] = {}


def scalar_transform(quad: AngularQuadrature) -> ScalarSphereTransform:
    key = id(quad)
    t = _SCALAR_CACHE.get(key)
    if t is None:
        t = ScalarSphereTransform(quad)
        _SCALAR_CACHE[key] = t
    return t


def lambda_s_scalar(f: GridField, s: float) -> GridField:
    """Componentwise angular regularity operator (1 - Laplace-Beltrami)^(s/2).

    Acts as the multiplier (1 + ell(ell+1))^(s/2) on each scalar spherical
    harmonic component of each spinor entry; exact on band-limited input.
    """
    t = scalar_transform(f.quad)
    vals = f.values.transpose(0, 2, 1)                  # (n_r, 4, q)
    coeff = t.analyze(vals) * t.laplace_beltrami_multiplier(s)
    out = t.synthesize(coeff).transpose(0, 2, 1)
    return GridField(np.ascontiguousarray(out), f.grid, f.quad)


def apply_dirac_channel(s: ChannelState, boundary: str = "one_sided") -> ChannelState:
    """Apply the Dirac operator channelwise.

    Output Phi+ coefficient is -d(psi-)/dr + (k/r) psi-, output Phi-
    coefficient is d(psi+)/dr + (k/r) psi+. The radial derivative is the
    4th-order scheme selected by ``boundary``; D applied twice reproduces
    the (componentwise) Laplacian by the anticommutation relations.
    """
    d = fd.d1_matrix(s.grid.n, s.grid.h, boundary)
    kr = s.basis.kappas[:, None] / s.grid.r[None, :]
    dpsi = s.psi @ d.T                                  # derivative along r
    out = np.empty_like(s.psi)
    out[:, 0, :] = -dpsi[:, 1, :] + kr * s.psi[:, 1, :]
    out[:, 1, :] = dpsi[:, 0, :] + kr * s.psi[:, 0, :]
    return ChannelState(out, s.grid, s.basis)
