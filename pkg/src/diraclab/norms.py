"""Function-space norms: dyadic mixed norms, weighted smoothing norms,
H1 through the Dirac operator, and space-time accumulators.

Mixed radial-angular norms follow the convention that the inner integral at
radius rho is taken against the surface measure dS = rho^2 dOmega, so the
(2,2,2) case reproduces the plain L2 norm of R^3. Angular and radial
L-infinity norms are grid maxima and therefore lower bounds of the true
suprema. Dyadic shells are clipped to the grid support [r_1, R]; reports
carry the shell range actually covered.

Angular regularity inside norms is applied through the channel-diagonal
multiplier |k_j|^s, which is exact on the truncated basis; the scalar
spherical-harmonic route is available separately for cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .angular import ChannelState, apply_abs_K_pow, apply_dirac_channel
from .grids import GridField

__all__ = [
    "MixedNormSpec", "MixedNormReport", "mixed_norm", "mixed_norm_report",
    "smoothing_norm", "h1_norm", "strichartz_partial",
    "SpaceTimeAccumulator", "accumulate", "x_norm",
]

_INF = float("inf")


def _parse_exponent(value) -> float:
    if isinstance(value, str):
        if value.lower() in ("inf", "infinity", "oo"):
            return _INF
        return float(value)
    v = float(value)
    if not (v >= 1.0):
        raise ValueError("exponents must lie in [1, inf]")
    return v


@dataclass(frozen=True)
class MixedNormSpec:
    """Outer dyadic l^p over shells of the radial-L^q angular-L^r norm.

    An optional radial weight multiplies the field before measuring: a
    WeightSpec (its rho) or any positive radial callable, optionally combined
    with a plain power of |x|.
    """

    p: float = 2.0
    q: float = 2.0
    r: float = 2.0
    angular_order: float | None = None   # reserved: weight in channel space instead
    weight: object | None = None         # WeightSpec or callable rho(r)
    radial_power: float = 0.0            # extra |x|^a factor

    def __post_init__(self):
        for name in ("p", "q", "r"):
            object.__setattr__(self, name, _parse_exponent(getattr(self, name)))

    def weight_values(self, radii: np.ndarray) -> np.ndarray | None:
        if self.weight is None and self.radial_power == 0.0:
            return None
        w = np.ones_like(radii)
        if self.weight is not None:
            rho = self.weight.rho if hasattr(self.weight, "rho") else self.weight
            w = w * np.asarray(rho(radii), float)
        if self.radial_power != 0.0:
            w = w * radii ** self.radial_power
        return w

    @property
    def name(self) -> str:
        def fmt(v):
            return "inf" if v == _INF else ("%g" % v)
        tag = f"l{fmt(self.p)}_Lq{fmt(self.q)}_Lr{fmt(self.r)}"
        if self.weight is not None:
            tag += "_w"
        if self.radial_power:
            tag += f"_x{self.radial_power:g}"
        return tag


@dataclass
class MixedNormReport:
    value: float
    shells: list = dc_field(default_factory=list)   # (j, shell norm, n_points)
    clipped_inner: bool = False
    clipped_outer: bool = False


def _angular_norm(values: np.ndarray, weights: np.ndarray, r_exp: float,
                  radius: np.ndarray) -> np.ndarray:
    """Angular L^r against dS = rho^2 dOmega at each radius; values (n_r, q, 4)."""
    mag = np.sqrt(np.sum(np.abs(values) ** 2, axis=-1))   # (n_r, q)
    if r_exp == _INF:
        return mag.max(axis=1)
    integ = np.sum(weights[None, :] * mag ** r_exp, axis=1) * radius ** 2
    return integ ** (1.0 / r_exp)


def _radial_norm(per_radius: np.ndarray, h: float, q_exp: float) -> float:
    if per_radius.size == 0:
        return 0.0
    if q_exp == _INF:
        return float(per_radius.max())
    return float((h * np.sum(per_radius ** q_exp)) ** (1.0 / q_exp))


def mixed_norm_report(f: GridField, spec: MixedNormSpec) -> MixedNormReport:
    if spec.angular_order:
        raise ValueError("angular weighting happens in channel space: apply "
                         "apply_abs_K_pow before synthesizing, then measure")
    r = f.grid.r
    h = f.grid.h
    wvals = spec.weight_values(r)
    values = f.values if wvals is None else f.values * wvals[:, None, None]
    j_lo = math.floor(math.log2(r[0]))
    j_hi = math.floor(math.log2(f.grid.r_max * (1 - 1e-12)))
    report = MixedNormReport(value=0.0, clipped_inner=True, clipped_outer=True)
    shell_norms = []
    for j in range(j_lo, j_hi + 1):
        mask = (r >= 2.0 ** j) & (r < 2.0 ** (j + 1))
        if not np.any(mask):
            continue
        ang = _angular_norm(values[mask], f.quad.weights, spec.r, r[mask])
        val = _radial_norm(ang, h, spec.q)
        shell_norms.append(val)
        report.shells.append((j, val, int(mask.sum())))
    a = np.array(shell_norms)
    if spec.p == _INF:
        report.value = float(a.max()) if a.size else 0.0
    else:
        report.value = float(np.sum(a ** spec.p) ** (1.0 / spec.p))
    return report


def mixed_norm(f: GridField, spec: MixedNormSpec) -> float:
    return mixed_norm_report(f, spec).value


def smoothing_norm(f: GridField, weight) -> float:
    """Spatial factor of the local-smoothing norm: || rho |x|^(-1/2) f ||_L2.

    ``weight`` is a WeightSpec or any positive radial callable rho(r).
    """
    rho = weight.rho if hasattr(weight, "rho") else weight
    r = f.grid.r
    w = np.asarray(rho(r), float)
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValueError("weight must be positive and finite on the grid")
    dens = f.norm_sq_density()
    integ = f.grid.h * np.sum((w ** 2 * r)[:, None] * f.quad.weights[None, :] * dens)
    return float(np.sqrt(integ))


def h1_norm(s: ChannelState, boundary: str = "one_sided") -> float:
    """( ||u||^2 + ||D u||^2 )^(1/2) computed channelwise.

    Using the Dirac operator instead of the gradient is exact for decaying
    fields since D squares to the (componentwise) Laplacian.
    """
    du = apply_dirac_channel(s, boundary=boundary)
    return math.sqrt(s.l2_norm() ** 2 + du.l2_norm() ** 2)


def strichartz_partial(s: ChannelState, angular_order: float = 0.0) -> float:
    """|| |K|^s u ||_{Linf_{|x|} L2_omega}: per-radius sphere norm, radial max.

    The sphere L2 with surface measure at radius r_i equals the plain channel
    sum sqrt(sum |psi|^2) there, so this is exact on the truncated basis.
    """
    st = apply_abs_K_pow(s, angular_order) if angular_order else s
    return float(st.sphere_l2_profile().max())


class SpaceTimeAccumulator:
    """Running L^p_t accumulation of a scalar spatial norm.

    p = 2 integrates the squared samples by the trapezoid rule; p = inf keeps
    the running maximum. Times must be strictly increasing.
    """

    def __init__(self, p: float = 2.0):
        self.p = _parse_exponent(p)
        if self.p not in (2.0, _INF):
            raise ValueError("only p = 2 and p = inf accumulators are supported")
        self.times: list[float] = []
        self.values: list[float] = []

    def add(self, value: float, t: float) -> "SpaceTimeAccumulator":
        if self.times and t <= self.times[-1]:
            raise ValueError("snapshot times must be strictly increasing")
        self.times.append(float(t))
        self.values.append(float(value))
        return self

    def result(self) -> float:
        if not self.values:
            return 0.0
        v = np.asarray(self.values)
        if self.p == _INF:
            return float(v.max())
        if len(v) == 1:
            return float(v[0])  # degenerate single-snapshot case
        t = np.asarray(self.times)
        return float(math.sqrt(np.trapezoid(v ** 2, t)))


def accumulate(acc: SpaceTimeAccumulator, value: float, t: float) -> SpaceTimeAccumulator:
    return acc.add(value, t)


def x_norm(strichartz_acc: SpaceTimeAccumulator, h1_acc: SpaceTimeAccumulator) -> float:
    """Fixed-point space norm: L2_t of the Strichartz partial plus sup_t of H1.

    Both accumulators must have been fed the same snapshot schedule.
    """
    if strichartz_acc.times != h1_acc.times:
        raise ValueError("mismatched snapshot schedules")
    if strichartz_acc.p != 2.0 or h1_acc.p != _INF:
        raise ValueError("expected an (L2_t, Linf_t) accumulator pair")
    return strichartz_acc.result() + h1_acc.result()
