"""Acceptance gate: one test per criterion, each at its stated tolerance.

Every test prints a single PASS line with its headline numbers (visible with
``pytest -s``); a failing assertion is the FAIL signal. The long end-to-end
criteria are additionally marked ``slow``.
"""

import math
import time

import numpy as np
import pytest

from diraclab.algebra import (ALPHA, BETA, GAMMA, chiral_invariant, in_class_V,
                              random_E_spinor)
from diraclab.angular import (ChannelIndex, ChannelState, SphereBasis, analyze,
                              apply_K, channel_spinor, synthesize)
from diraclab.config import build_potential, preset
from diraclab.diagnostics import hardy_check, lm_monitor
from diraclab.evolution import EvolutionState, Stepper, nonlinear_substep
from diraclab.grids import AngularQuadrature, GridField, RadialGrid
from diraclab.norms import MixedNormSpec, mixed_norm
from diraclab.potentials import PotentialSpec, check_A2, check_condition_V
from diraclab.runner import convergence_suite, identity_checks_suite, run

pytestmark = pytest.mark.acceptance


def _report(num, detail):
    print(f"\n[acceptance] criterion {num}: PASS  {detail}")


# ---------------------------------------------------------------------------

def test_criterion_1_algebra_suite(rng):
    t0 = time.perf_counter()
    i4 = np.eye(4)
    assert np.array_equal(BETA @ BETA, i4)
    for j in range(3):
        assert np.array_equal(BETA @ ALPHA[j] + ALPHA[j] @ BETA, np.zeros((4, 4)))
        for k in range(3):
            assert np.array_equal(ALPHA[j] @ ALPHA[k] + ALPHA[k] @ ALPHA[j],
                                  2.0 * (j == k) * i4)
    assert np.array_equal(GAMMA @ GAMMA, i4)
    assert in_class_V(BETA)

    z = random_E_spinor(rng, shape=(1000,))
    theta = rng.uniform(0, 2 * np.pi, size=(1000, 1))
    vals = chiral_invariant(np.exp(1j * theta) * z)
    bound = 1e-12 * np.linalg.norm(z, axis=-1) ** 4
    assert np.all(vals <= bound)
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    _report(1, f"worst chiral/|z|^4 = {np.max(vals / np.maximum(bound, 1e-300)) * 1e-12:.2e}, "
               f"runtime {elapsed:.2f}s")


def test_criterion_2_partial_wave_suite(rng):
    t0 = time.perf_counter()
    quad = AngularQuadrature.gauss_legendre(10)
    basis = SphereBasis(quad, two_j_max=9)

    # Gram matrix within 1e-9 of the identity
    vecs = basis.phi.reshape(-1, quad.n_nodes, 4)
    gram = np.einsum("aqs,bqs->ab", vecs * quad.weights[None, :, None], vecs.conj())
    gram_dev = np.abs(gram - np.eye(len(vecs))).max()
    assert gram_dev < 1e-9

    # analyze/synthesize round trip at 1e-10
    grid = RadialGrid(n=128, r_max=8.0)
    psi = np.zeros((basis.n_channels, 2, grid.n), complex)
    for i in range(basis.n_channels):
        amp = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        psi[i, 0] = amp[0] * np.exp(-((grid.r - 4) ** 2))
        psi[i, 1] = amp[1] * np.exp(-((grid.r - 3.5) ** 2))
    st = ChannelState(psi, grid, basis)
    rt = np.abs(analyze(synthesize(st), basis).psi - st.psi).max()
    assert rt < 1e-10

    # K Phi = -k Phi against the finite-difference spin-orbit oracle
    from test_angular import _spin_orbit_fd
    worst_k = 0.0
    for (tj, tm, kap) in ((1, 1, -1), (3, -1, 2), (5, 3, -3), (9, 1, 5), (9, -7, -5)):
        c = ChannelIndex(tj, tm, kap)
        for sign in (1, -1):
            v = channel_spinor(c, sign, quad.theta, quad.phi)
            kv = _spin_orbit_fd(c, sign, quad)
            worst_k = max(worst_k, float(np.abs(kv - (-kap) * v).max()))
    assert worst_k < 1e-6

    # channel Dirac action vs the 3D finite-difference oracle
    from test_angular import test_dirac_channel_against_3d_oracle
    test_dirac_channel_against_3d_oracle()

    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    _report(2, f"gram dev {gram_dev:.1e}, roundtrip {rt:.1e}, "
               f"K-oracle {worst_k:.1e}, runtime {elapsed:.1f}s")


@pytest.mark.slow
def test_criterion_3_conservation(tmp_path):
    t0 = time.perf_counter()
    cfg = preset("conservation")
    assert (cfg.n_r, cfg.t_final, cfg.dt) == (512, 16.0, 0.01)
    manifest = run(cfg, str(tmp_path / "conservation"))
    assert manifest.status == "complete"
    import json, os
    summary = json.load(open(os.path.join(tmp_path, "conservation", "summary.json")))
    mass_drift = summary["mass_drift_rel"]
    gamma_drift = summary["gamma_charge_drift_rel"]
    assert mass_drift <= 1e-8
    assert gamma_drift <= 1e-6
    elapsed = time.perf_counter() - t0
    assert elapsed < 300.0
    _report(3, f"mass drift {mass_drift:.2e}, gamma-charge drift {gamma_drift:.2e}, "
               f"runtime {elapsed:.0f}s")


@pytest.mark.slow
def test_criterion_4_lm_preservation():
    t0 = time.perf_counter()
    grid = RadialGrid(n=256, r_max=16.0)
    quad = AngularQuadrature.gauss_legendre(6)
    basis = SphereBasis(quad, two_j_max=3)
    pot = build_potential({"v0": {"kind": "exponential", "amplitude": 0.1,
                                  "rate": 1.0, "matrix": "beta"},
                           "in_class_v": True})
    a, b = 1.1 - 0.4j, 0.5 + 0.8j
    z = np.array([a, b, -np.conj(b), np.conj(a)])
    prof = np.exp(-((grid.r - 4.0) ** 2) / 2.0)
    vals = (prof[:, None, None] * z[None, None, :])
    f0 = GridField(np.broadcast_to(vals, (grid.n, quad.n_nodes, 4)).copy(), grid, quad)
    init = analyze(f0, basis)
    sup0 = float(np.max(np.sqrt(np.sum(np.abs(f0.values) ** 2, -1))))

    dt, n_steps = 0.01, 800
    st_nl = Stepper(grid, basis, pot, nonlinear=True)
    st_li = Stepper(grid, basis, pot, nonlinear=False)
    init, _ = st_nl.prepare_initial(init)
    s_nl = EvolutionState(0.0, init.copy())
    s_li = EvolutionState(0.0, init.copy())
    sup_pairing = 0.0
    for _ in range(8):
        s_nl = st_nl.run_segment(s_nl, n_steps // 8, dt)
        s_li = st_li.run_segment(s_li, n_steps // 8, dt)
        mon = lm_monitor(synthesize(s_nl.channels))
        sup_pairing = max(sup_pairing, mon.chiral_sup)
    assert sup_pairing <= 1e-7 * sup0 ** 2
    diff = np.sqrt(grid.h * np.sum(np.abs(s_nl.channels.psi - s_li.channels.psi) ** 2))
    rel = diff / init.l2_norm()
    assert rel <= 1e-6
    elapsed = time.perf_counter() - t0
    assert elapsed < 300.0
    _report(4, f"sup |<beta u,u>| / |u0|_sup^2 = {sup_pairing / sup0**2:.2e}, "
               f"nl-vs-linear {rel:.2e}, runtime {elapsed:.0f}s")


def test_criterion_5_nonlinear_substep_oracle(rng):
    from test_evolution import _rk4_pointwise
    grid = RadialGrid(n=100, r_max=10.0)
    quad = AngularQuadrature.gauss_legendre(7)     # 128 nodes: 12800 spinors
    shape = (grid.n, quad.n_nodes, 4)
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    dt = 0.2
    f = GridField(z.copy(), grid, quad)
    exact = nonlinear_substep(f, dt).values
    brute = _rk4_pointwise(z, dt, 2000)
    worst = float(np.abs(exact - brute).max())
    assert worst < 1e-10
    _report(5, f"exact rotation vs micro-stepped RK4: max dev {worst:.1e} "
               f"on {shape[0] * shape[1]} random spinors")


@pytest.mark.slow
def test_criterion_6_splitting_order():
    cfg = preset("free-convergence")
    res = convergence_suite(cfg, dts=(0.04, 0.02, 0.01, 0.005))
    slope = res["slope"]
    assert abs(slope - 2.0) <= 0.1
    _report(6, f"self-convergence slope {slope:.3f} over dt = 0.04 .. 0.005, "
               f"orders {['%.3f' % o for o in res['orders']]}")


@pytest.mark.slow
def test_criterion_7_identity_suite(rng):
    t0 = time.perf_counter()
    res = identity_checks_suite(sizes=(32, 64, 128), half_width=2.0)
    slope = res["morawetz"]["slope_res2"]
    assert slope >= 1.9

    worst = {}
    for sigma in (0.0, 0.25, 0.5, 1.0):
        bound = 2.0 / (sigma + 1.0)
        ratios = [hardy_check(lambda r: np.exp(-r ** 2), sigma)]
        for _ in range(50):
            nb = rng.integers(1, 4)
            cs = rng.uniform(0.5, 4.0, nb)
            ws = rng.uniform(0.3, 1.2, nb)
            amps = rng.uniform(0.2, 2.0, nb)
            def w(r, cs=cs, ws=ws, amps=amps):
                return sum(a * np.exp(-((r - c) ** 2) / (2 * s * s))
                           for a, c, s in zip(amps, cs, ws))
            ratios.append(hardy_check(w, sigma))
        assert max(ratios) <= bound + 1e-3
        worst[sigma] = max(ratios)
    elapsed = time.perf_counter() - t0
    assert elapsed < 600.0
    _report(7, f"morawetz slope {slope:.2f}, hardy worst ratios "
               + ", ".join(f"s={s}: {v:.3f}" for s, v in worst.items())
               + f", runtime {elapsed:.0f}s")


def test_criterion_8_norm_suite(rng):
    # dyadic indicator vs analytic shell volume at 1e-6 relative
    grid = RadialGrid(n=2048, r_max=4.0)
    quad = AngularQuadrature.gauss_legendre(2)
    f = GridField.zeros(grid, quad)
    f.values[(grid.r >= 1.0) & (grid.r < 2.0), :, 0] = 1.0
    expect = math.sqrt(4 * np.pi * 7.0 / 3.0)
    got = mixed_norm(f, MixedNormSpec(2, 2, 2))
    ind_rel = abs(got - expect) / expect
    assert ind_rel < 1e-6

    # lp ordering on 100 random fields
    sgrid = RadialGrid(n=64, r_max=8.0)
    squad = AngularQuadrature.gauss_legendre(4)
    sbasis = SphereBasis(squad, 3)
    from conftest import random_state
    worst_parseval = 0.0
    for _ in range(100):
        st = random_state(sgrid, sbasis, rng)
        g = synthesize(st)
        n1 = mixed_norm(g, MixedNormSpec(1, 2, 2))
        n2 = mixed_norm(g, MixedNormSpec(2, 2, 2))
        ninf = mixed_norm(g, MixedNormSpec("inf", 2, 2))
        assert n1 >= n2 - 1e-12 and n2 >= ninf - 1e-12
        worst_parseval = max(worst_parseval,
                             abs(n2 - st.l2_norm()) / max(1.0, st.l2_norm()))
    assert worst_parseval <= 1e-9
    _report(8, f"indicator rel err {ind_rel:.1e}, parseval dev {worst_parseval:.1e}, "
               f"lp ordering on 100 fields")


@pytest.mark.slow
def test_criterion_9_scattering(tmp_path):
    import json, os
    t0 = time.perf_counter()
    results = {}
    for name in ("small-data", "lm-large"):
        cfg = preset(name)
        out = str(tmp_path / name)
        manifest = run(cfg, out)
        assert manifest.status == "complete"
        sc = json.load(open(os.path.join(out, "scattering.json")))
        tails = sc["tail_norms"]
        assert len(tails) >= 3
        assert tails[1] < tails[0] and tails[2] < tails[1], tails

        rows = open(os.path.join(out, "diagnostics.csv")).read().splitlines()
        cols = rows[0].split(",")
        data = np.array([[float(x) for x in row.split(",")] for row in rows[1:]])
        tcol = data[:, cols.index("time")]
        after = tcol >= 1.0 - 1e-9
        for col in ("xnorm_strichartz_partial", "xnorm_h1_partial"):
            series = data[:, cols.index(col)]
            at_1 = series[np.argmin(np.abs(tcol - 1.0))]
            assert series[after].max() <= 3.0 * at_1, col
        results[name] = tails
    elapsed = time.perf_counter() - t0
    assert elapsed < 1200.0
    _report(9, "; ".join(f"{k}: tails {['%.2e' % t for t in v]}"
                         for k, v in results.items())
               + f", runtime {elapsed:.0f}s")


def test_criterion_10_assumption_checkers():
    rep = check_condition_V(PotentialSpec(), j_min=-4, j_max=4, n_r_per_shell=8)
    zero_names = ("xV0_l1Linf", "sup_x2pd_V2_DV", "x2_V2_DV_DV0_l1Linf", "xB_l1Linf")
    assert all(rep.quantities[k] == 0.0 for k in zero_names)

    from diraclab.potentials import V0Term, radial_profile
    spec = PotentialSpec(v0_terms=(V0Term(
        profile=radial_profile("exponential", amplitude=1.0),
        matrix=np.eye(4, dtype=complex)),))
    c = 2.0
    base = check_condition_V(spec, j_min=-3, j_max=3, n_r_per_shell=8)
    scaled = check_condition_V(spec.scaled(c), j_min=-3, j_max=3, n_r_per_shell=8)
    lin_dev = abs(scaled.quantities["xV0_l1Linf"] - c * base.quantities["xV0_l1Linf"]) \
        / (c * base.quantities["xV0_l1Linf"])
    assert lin_dev <= 1e-10

    spec_const = PotentialSpec(v0_terms=(V0Term(
        profile=radial_profile("exponential", amplitude=1.0, rate=0.0),
        matrix=np.eye(4, dtype=complex)),))
    b = check_condition_V(spec_const, j_min=-2, j_max=0, n_r_per_shell=4)
    s = check_condition_V(spec_const.scaled(c), j_min=-2, j_max=0, n_r_per_shell=4)
    quad_dev = abs(s.quantities["x2_V2_DV_DV0_l1Linf"]
                   - c ** 2 * b.quantities["x2_V2_DV_DV0_l1Linf"]) \
        / (c ** 2 * b.quantities["x2_V2_DV_DV0_l1Linf"])
    assert quad_dev <= 1e-10

    a2 = check_A2(lambda r: np.ones_like(r))
    assert a2 == 1.0
    _report(10, f"zero-potential zeros, linearity dev {lin_dev:.1e}, "
                f"quadratic dev {quad_dev:.1e}, constant-weight A2 = {a2}")
