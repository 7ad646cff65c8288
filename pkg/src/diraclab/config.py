"""Run configuration: schema, validation, presets, and object builders.

Configs are plain JSON documents with a ``schema_version`` field. Unknown
keys anywhere in the document are rejected (typo protection). The same
canonical serialization feeds the reproducibility hash, so a config and its
hash round-trip bit-exactly through disk.

All numeric defaults are desk-scale choices (N = 512, R = 32, dt = 0.01,
j_max = 9/2, s = 1.5) sized so that the Dirichlet wall stays causally
irrelevant over the run unless explicitly overridden.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np

from .algebra import BETA
from .angular import ChannelIndex, ChannelState, SphereBasis, analyze
from .grids import AngularQuadrature, GridField, RadialGrid
from .norms import MixedNormSpec
from .potentials import PotentialSpec, V0Term, WeightSpec, radial_profile

__all__ = [
    "SimulationConfig", "config_from_dict", "config_to_dict", "config_hash",
    "preset", "PRESET_NAMES", "build_grid", "build_quadrature", "build_basis",
    "build_potential", "build_weight", "build_initial_state", "build_norm_specs",
    "ConfigError",
]

SCHEMA_VERSION = 1

_MATRICES = {"beta": BETA, "identity": np.eye(4, dtype=complex)}


class ConfigError(ValueError):
    pass


@dataclass
class SimulationConfig:
    schema_version: int = SCHEMA_VERSION
    # grid
    n_r: int = 512
    r_max: float = 32.0
    two_j_max: int = 9
    quad_degree: int | None = None          # default: 2 * max orbital degree
    # time stepping
    dt: float = 0.01
    t_final: float = 16.0
    snapshot_every: int = 20                # steps between diagnostics rows
    # physics
    potential: dict = dc_field(default_factory=dict)
    initial_data: dict = dc_field(default_factory=lambda: {"kind": "gaussian-spinor"})
    nonlinearity: bool = True
    # measurement
    norms: list = dc_field(default_factory=list)       # list of {p, q, r} dicts
    weight: dict = dc_field(default_factory=lambda: {"kind": "log", "nu": 1.0})
    angular_order_s: float = 1.5
    # bookkeeping
    seed: int = 1234
    override_wall_guard: bool = False
    label: str = ""

    def validate(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}")
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.t_final < 0:
            raise ConfigError("t_final must be nonnegative")
        if self.snapshot_every < 1:
            raise ConfigError("snapshot_every must be >= 1")
        if self.n_r < 8:
            raise ConfigError("n_r too small")
        if self.two_j_max % 2 == 0 or self.two_j_max < 1:
            raise ConfigError("two_j_max must be a positive odd integer")
        if not (1.0 < self.angular_order_s <= 2.0):
            raise ConfigError("angular_order_s must lie in (1, 2]")
        # referenced names resolvable
        build_potential(self.potential)
        build_weight(self.weight)
        build_norm_specs(self.norms)
        kind = self.initial_data.get("kind", "gaussian-spinor")
        if kind not in ("gaussian-spinor", "lm-profile", "channel-packet", "zero"):
            raise ConfigError(f"unknown initial data kind {kind!r}")

    def wall_guard_check(self, support_radius: float):
        """Fail unless the light cone from the data support stays inside R."""
        budget = self.r_max - support_radius
        if self.t_final > budget + 1e-9 and not self.override_wall_guard:
            raise ConfigError(
                f"t_final = {self.t_final} exceeds the wall budget "
                f"R - support = {budget:.3f}; set override_wall_guard to proceed")


_ALLOWED_KEYS = {f for f in SimulationConfig.__dataclass_fields__}

_ALLOWED_SUBKEYS = {
    "potential": {"a0", "v0", "in_class_v"},
    "initial_data": {"kind", "amplitude", "width", "center", "spinor",
                     "lm_defect", "channel", "sign", "seed_offset"},
    "weight": {"kind", "eps", "nu"},
}


def config_from_dict(doc: dict) -> SimulationConfig:
    unknown = set(doc) - _ALLOWED_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for section, allowed in _ALLOWED_SUBKEYS.items():
        sub = doc.get(section, {})
        if not isinstance(sub, dict):
            raise ConfigError(f"{section} must be a mapping")
        extra = set(sub) - allowed
        if extra:
            raise ConfigError(f"unknown keys in {section}: {sorted(extra)}")
    if "norms" in doc:
        for item in doc["norms"]:
            extra = set(item) - {"p", "q", "r"}
            if extra:
                raise ConfigError(f"unknown keys in norm spec: {sorted(extra)}")
    cfg = SimulationConfig(**doc)
    cfg.validate()
    return cfg


def config_to_dict(cfg: SimulationConfig) -> dict:
    return asdict(cfg)


def config_hash(cfg: SimulationConfig) -> str:
    canonical = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def build_grid(cfg: SimulationConfig) -> RadialGrid:
    return RadialGrid(n=cfg.n_r, r_max=cfg.r_max)


def max_orbital_degree(two_j_max: int) -> int:
    return (two_j_max + 1) // 2


def build_quadrature(cfg: SimulationConfig) -> AngularQuadrature:
    # Default degree 2 * ell_max keeps the projection of the cubic term onto
    # the resolved channels quadrature-exact.
    deg = cfg.quad_degree or 2 * max_orbital_degree(cfg.two_j_max)
    return AngularQuadrature.gauss_legendre(deg)


def build_basis(cfg: SimulationConfig, quad: AngularQuadrature | None = None) -> SphereBasis:
    return SphereBasis(quad or build_quadrature(cfg), cfg.two_j_max)


def _profile_from(doc: dict | None):
    if not doc:
        return None
    doc = dict(doc)
    kind = doc.pop("kind")
    doc.pop("matrix", None)
    return radial_profile(kind, **doc)


def build_potential(doc: dict) -> PotentialSpec:
    """Potential section: {"a0": {...profile...}, "v0": {...profile, matrix...}}."""
    doc = doc or {}
    a0 = _profile_from(doc.get("a0"))
    v0_terms = []
    v0 = doc.get("v0")
    if v0:
        mat = v0.get("matrix", "beta")
        if isinstance(mat, str):
            if mat not in _MATRICES:
                raise ConfigError(f"unknown matrix name {mat!r}")
            m = _MATRICES[mat]
        else:
            arr = np.asarray(mat, dtype=float)
            if arr.shape == (4, 4, 2):
                m = arr[..., 0] + 1j * arr[..., 1]
            elif arr.shape == (4, 4):
                m = arr.astype(complex)
            else:
                raise ConfigError("matrix entries must be 4x4 or 4x4x2")
        prof = _profile_from({k: v for k, v in v0.items() if k != "matrix"})
        v0_terms.append(V0Term(profile=prof, matrix=m))
    in_class_v = bool(doc.get("in_class_v", False))
    return PotentialSpec(a0=a0, v0_terms=tuple(v0_terms),
                         is_v0_in_class_V=in_class_v)


def build_weight(doc: dict) -> WeightSpec:
    doc = doc or {"kind": "log", "nu": 1.0}
    return WeightSpec(**doc)


def build_norm_specs(items: list) -> list[MixedNormSpec]:
    return [MixedNormSpec(p=i.get("p", 2), q=i.get("q", 2), r=i.get("r", 2))
            for i in (items or [])]


_DEFAULT_E_SPINOR = (1.0 + 0.0j, 0.6 + 0.3j)        # (a, b) -> (a, b, -conj b, conj a)
_DEFECT_E_SPINOR = (0.2 - 0.5j, 0.8 + 0.1j)


def _e_vector(a: complex, b: complex) -> np.ndarray:
    v = np.array([a, b, -np.conj(b), np.conj(a)], dtype=complex)
    return v / np.linalg.norm(v)


def build_initial_state(cfg: SimulationConfig, grid: RadialGrid,
                        basis: SphereBasis) -> tuple[ChannelState, float]:
    """Initial channel data plus the numerical support radius of the profile."""
    doc = dict(cfg.initial_data)
    kind = doc.get("kind", "gaussian-spinor")
    amp = float(doc.get("amplitude", 0.05))
    width = float(doc.get("width", 2.0))
    center = float(doc.get("center", 0.0))
    quad = basis.quad
    r = grid.r

    if kind == "zero":
        return ChannelState.zeros(grid, basis), 0.0

    if kind == "channel-packet":
        ch = doc.get("channel", {"two_j": 1, "two_mj": 1, "kappa": -1})
        c = ChannelIndex(int(ch["two_j"]), int(ch["two_mj"]), int(ch["kappa"]))
        sign = int(doc.get("sign", +1))
        r0 = center if center > 0 else grid.r_max / 4.0
        bump = amp * np.exp(-((r - r0) ** 2) / (2 * width ** 2))
        state = ChannelState.zeros(grid, basis)
        state.psi[basis.index_of(c), 0 if sign > 0 else 1, :] = bump
        return state, _support_radius(state)

    envelope = np.exp(-((r - center) ** 2) / (2 * width ** 2))
    if kind == "gaussian-spinor":
        spinor = doc.get("spinor")
        z = (np.asarray([complex(a, b) for a, b in spinor])
             if spinor else np.array([1.0, 0.5, 0.25j, 0.1], dtype=complex))
        z = z / np.linalg.norm(z)
        vals = amp * envelope[:, None, None] * z[None, None, :]
    elif kind == "lm-profile":
        eps = float(doc.get("lm_defect", 0.0))
        z_par = _e_vector(*_DEFAULT_E_SPINOR)
        z_def = 1j * _e_vector(*_DEFECT_E_SPINOR)      # i*E is the real-orthogonal complement
        z = z_par + eps * z_def
        vals = amp * envelope[:, None, None] * z[None, None, :]
    else:
        raise ConfigError(f"unknown initial data kind {kind!r}")

    field = GridField(np.broadcast_to(vals, (grid.n, quad.n_nodes, 4)).copy(),
                      grid, quad)
    state = analyze(field, basis)
    return state, _support_radius(state)


def _support_radius(state: ChannelState, mass_tail: float = 1e-12) -> float:
    """Smallest radius enclosing all but ``mass_tail`` of the data's mass."""
    dens = np.sum(np.abs(state.psi) ** 2, axis=(0, 1))
    total = dens.sum()
    if total == 0.0:
        return 0.0
    tail = np.cumsum(dens[::-1])[::-1] / total
    idx = np.nonzero(tail > mass_tail)[0]
    return float(state.grid.r[idx[-1]]) if idx.size else 0.0


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

PRESET_NAMES = ("free", "conservation", "small-data", "lm-large",
                "scattering", "identity-checks", "free-convergence")


def preset(name: str) -> SimulationConfig:
    """Fully populated experiment presets; all values are desk-scale defaults."""
    base_norms = [{"p": 2, "q": 2, "r": 2}]
    if name == "free":
        cfg = SimulationConfig(
            label="free",
            n_r=256, r_max=16.0, two_j_max=3, dt=0.01, t_final=8.0,
            snapshot_every=40, nonlinearity=False,
            potential={},
            initial_data={"kind": "gaussian-spinor", "amplitude": 0.1, "width": 1.5},
            norms=base_norms)
    elif name == "conservation":
        cfg = SimulationConfig(
            label="conservation",
            n_r=512, r_max=32.0, two_j_max=9, dt=0.01, t_final=16.0,
            snapshot_every=100,
            potential={"v0": {"kind": "exponential", "amplitude": 0.1,
                              "rate": 1.0, "matrix": "beta"},
                       "in_class_v": True},
            initial_data={"kind": "gaussian-spinor", "amplitude": 0.1,
                          "width": 2.0, "center": 4.0},
            norms=base_norms)
    elif name == "small-data":
        cfg = SimulationConfig(
            label="small-data",
            n_r=512, r_max=32.0, two_j_max=9, dt=0.01, t_final=24.0,
            snapshot_every=25, override_wall_guard=True,
            potential={"v0": {"kind": "exponential", "amplitude": 0.1,
                              "rate": 1.0, "matrix": "beta"},
                       "in_class_v": True},
            initial_data={"kind": "gaussian-spinor", "amplitude": 0.05,
                          "width": 1.5},
            norms=base_norms)
    elif name == "lm-large":
        cfg = SimulationConfig(
            label="lm-large",
            n_r=512, r_max=32.0, two_j_max=9, dt=0.01, t_final=24.0,
            snapshot_every=25, override_wall_guard=True,
            potential={"v0": {"kind": "exponential", "amplitude": 0.1,
                              "rate": 1.0, "matrix": "beta"},
                       "in_class_v": True},
            initial_data={"kind": "lm-profile", "amplitude": 5.0,
                          "width": 1.5, "lm_defect": 0.01},
            norms=base_norms)
    elif name == "scattering":
        cfg = preset("small-data")
        cfg.label = "scattering"
    elif name == "identity-checks":
        cfg = SimulationConfig(label="identity-checks", t_final=0.0, n_r=64,
                               r_max=8.0, two_j_max=1, snapshot_every=1,
                               initial_data={"kind": "zero"})
    elif name == "free-convergence":
        cfg = preset("free")
        cfg.label = "free-convergence"
        cfg.t_final = 1.0
        cfg.nonlinearity = True
        cfg.initial_data = {"kind": "gaussian-spinor", "amplitude": 1.0, "width": 1.5}
        cfg.potential = {"v0": {"kind": "exponential", "amplitude": 0.5,
                                "rate": 1.0, "matrix": "beta"},
                         "in_class_v": True}
    else:
        raise ConfigError(f"unknown preset {name!r}; known: {PRESET_NAMES}")
    cfg.validate()
    return cfg
