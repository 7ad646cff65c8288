"""Exact finite-dimensional spinor algebra.

Dirac matrices in the standard representation, the real subspace E fixed by
the antilinear conjugation C(z) = gamma * conj(z), the chiral invariant, and
the class-V structure of hermitian matrices compatible with that conjugation
(the structure under which the Lochak-Majorana condition is preserved).

Conventions
-----------
* Complex inner product <a, b> = sum_i a_i * conj(b_i), linear in the first
  slot, so <beta z, z> is real for hermitian beta.
* The bilinear pairing used by the charge functional is (a, b) = sum_i a_i b_i
  applied as (gamma u, u); no conjugation.
* All functions accept arrays of shape (..., 4) and broadcast over leading
  axes, so they apply unchanged to pointwise spinor fields.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ALPHA", "BETA", "GAMMA", "ALPHA5", "SPIN",
    "dirac_constants", "inner", "beta_pairing", "gamma_pairing",
    "chiral_invariant", "conjugation_C", "in_E",
    "LMDecomposition", "project_E", "project_E_alt",
    "in_class_V", "class_V_matrix", "random_E_spinor",
]

_C = np.complex128


def _mat(rows) -> np.ndarray:
    m = np.array(rows, dtype=_C)
    m.setflags(write=False)
    return m


BETA = _mat([[1, 0, 0, 0],
             [0, 1, 0, 0],
             [0, 0, -1, 0],
             [0, 0, 0, -1]])

ALPHA = (
    _mat([[0, 0, 0, 1],
          [0, 0, 1, 0],
          [0, 1, 0, 0],
          [1, 0, 0, 0]]),
    _mat([[0, 0, 0, -1j],
          [0, 0, 1j, 0],
          [0, -1j, 0, 0],
          [1j, 0, 0, 0]]),
    _mat([[0, 0, 1, 0],
          [0, 0, 0, -1],
          [1, 0, 0, 0],
          [0, -1, 0, 0]]),
)

GAMMA = _mat([[0, 0, 0, 1],
              [0, 0, -1, 0],
              [0, -1, 0, 0],
              [1, 0, 0, 0]])

ALPHA5 = _mat([[0, 0, -1j, 0],
               [0, 0, 0, -1j],
               [1j, 0, 0, 0],
               [0, 1j, 0, 0]])

# S_j = -(i/2) alpha_k alpha_l for (j, k, l) a cyclic permutation of (1, 2, 3)
SPIN = tuple(
    _mat(-0.5j * (ALPHA[k] @ ALPHA[l]))
    for k, l in ((1, 2), (2, 0), (0, 1))
)


def dirac_constants() -> dict[str, np.ndarray]:
    """All constant matrices of the model, keyed by conventional names."""
    return {
        "alpha1": ALPHA[0], "alpha2": ALPHA[1], "alpha3": ALPHA[2],
        "beta": BETA, "gamma": GAMMA, "alpha5": ALPHA5,
        "S1": SPIN[0], "S2": SPIN[1], "S3": SPIN[2],
    }


def inner(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """<a, b> = sum a_i conj(b_i) over the last axis."""
    return np.sum(np.asarray(a) * np.conj(b), axis=-1)


def beta_pairing(z: np.ndarray) -> np.ndarray:
    """<beta z, z>, real valued; the density driving the cubic term."""
    z = np.asarray(z)
    a = np.abs(z) ** 2
    return (a[..., 0] + a[..., 1] - a[..., 2] - a[..., 3]).real


def gamma_pairing(z: np.ndarray) -> np.ndarray:
    """Bilinear pairing sum_i (gamma z)_i z_i (no conjugation)."""
    z = np.asarray(z)
    gz = z @ GAMMA.T
    return np.sum(gz * z, axis=-1)


def chiral_invariant(z: np.ndarray) -> np.ndarray:
    """|<beta z, z>|^2 + |<alpha5 z, z>|^2.

    Nonnegative; vanishes exactly on phase rotations of the subspace E.
    """
    z = np.asarray(z)
    b = beta_pairing(z)
    a5 = inner(z @ ALPHA5.T, z)
    return b ** 2 + np.abs(a5) ** 2


def conjugation_C(z: np.ndarray) -> np.ndarray:
    """Antilinear involution C(z) = gamma * conj(z); fixed-point set is E."""
    return np.conj(z) @ GAMMA.T


def in_E(z: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Pointwise membership test gamma z = conj(z) up to tol."""
    z = np.asarray(z)
    defect = np.abs(z @ GAMMA.T - np.conj(z)).max(axis=-1)
    return defect <= tol * max(1.0, float(np.abs(z).max(initial=0.0)))


@dataclass(frozen=True)
class LMDecomposition:
    """Split z = parallel + defect with parallel in E and defect in i*E.

    The defect is real-orthogonal to E under Re<., .>; the reconstruction
    parallel + defect is exact by construction.
    """

    parallel: np.ndarray
    defect: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.parallel + self.defect


def project_E(z: np.ndarray) -> LMDecomposition:
    """Canonical real-orthogonal projection Q(z) = (z + gamma conj(z)) / 2.

    Q is idempotent as a real-linear map, fixes E pointwise, and its defect
    z - Q(z) is real-orthogonal to E.
    """
    z = np.asarray(z, dtype=_C)
    par = 0.5 * (z + conjugation_C(z))
    return LMDecomposition(parallel=par, defect=z - par)


def project_E_alt(z: np.ndarray) -> np.ndarray:
    """Componentwise symmetrization onto E.

    Maps z to (z1+z4, z2-z3, conj(z3)-conj(z2), conj(z1)+conj(z4)).
    The output always lies in E, but the map is not idempotent and does not
    restrict to a scalar multiple of the identity on E; it is retained only
    for cross-checking project_E (both land in E exactly).
    """
    z = np.asarray(z, dtype=_C)
    out = np.empty_like(z)
    out[..., 0] = z[..., 0] + z[..., 3]
    out[..., 1] = z[..., 1] - z[..., 2]
    out[..., 2] = np.conj(z[..., 2]) - np.conj(z[..., 1])
    out[..., 3] = np.conj(z[..., 0]) + np.conj(z[..., 3])
    return out


def in_class_V(m: np.ndarray, tol: float = 1e-12) -> bool:
    """True iff m is hermitian and conj(m) gamma = -gamma m, within tol.

    Checked in max-entry norm. The class is a real vector space of hermitian
    matrices; beta belongs to it, the alpha_j do not.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    m = np.asarray(m, dtype=_C)
    if m.shape != (4, 4):
        raise ValueError("expected a 4x4 matrix")
    herm = np.abs(m - m.conj().T).max()
    struct = np.abs(np.conj(m) @ GAMMA + GAMMA @ m).max()
    return bool(herm <= tol and struct <= tol)


def class_V_matrix(a: float, b: float, z: complex, w: complex) -> np.ndarray:
    """Parametric form of the class: a, b real and z, w complex."""
    return np.array([
        [a, z, w, 0],
        [np.conj(z), b, 0, w],
        [np.conj(w), 0, -b, z],
        [0, np.conj(w), np.conj(z), -a],
    ], dtype=_C)


def random_E_spinor(rng: np.random.Generator, shape=()) -> np.ndarray:
    """Random element(s) of E via the parametrization (a, b, -conj(b), conj(a))."""
    a = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    b = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return np.stack([a, b, -np.conj(b), np.conj(a)], axis=-1)
