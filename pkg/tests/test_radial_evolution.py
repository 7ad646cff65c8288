import numpy as np
import pytest
from scipy.interpolate import CubicSpline

from diraclab.angular import ChannelIndex, channel_spinor
from diraclab.grids import RadialGrid
from diraclab.radial_evolution import assemble, propagate


def test_assembled_matrix_entrywise():
    # hand-assembled 12x12 generator on a 6-point grid, A0 = 1
    grid = RadialGrid(n=8, r_max=4.0)
    h = grid.h
    r = grid.r
    k = 1
    n = grid.n
    d = np.zeros((n, n))
    for i in range(n):
        for off, coef in ((1, 8 / (12 * h)), (2, -1 / (12 * h))):
            if i + off < n:
                d[i, i + off] = coef
            if i - off >= 0:
                d[i, i - off] = -coef
    expect = np.zeros((2 * n, 2 * n))
    expect[:n, :n] = np.eye(n)
    expect[n:, n:] = -np.eye(n)
    expect[:n, n:] = -d + np.diag(k / r)
    expect[n:, :n] = d + np.diag(k / r)
    gen = assemble(k, lambda rr: np.ones_like(rr), grid)
    assert np.array_equal(gen.matrix, expect)


def test_hermiticity_and_symmetric_spectrum():
    grid = RadialGrid(n=128, r_max=8.0)
    gen = assemble(1, None, grid)
    assert np.abs(gen.matrix - gen.matrix.T).max() == 0.0
    lam = gen.eigenvalues
    # charge-conjugation symmetry of the free channel: spectrum symmetric about 0
    assert np.abs(np.sort(lam) + np.sort(-lam)[::-1]).max() < 1e-10


def test_constant_shift_perturbation_bound():
    grid = RadialGrid(n=96, r_max=8.0)
    c = 0.37
    g0 = assemble(2, None, grid)
    gc = assemble(2, lambda r: c * np.ones_like(r), grid)
    assert np.abs(gc.matrix - g0.matrix).max() == c
    # Weyl: hermitian perturbation of norm c moves each eigenvalue by at most c
    l0, lc = np.sort(g0.eigenvalues), np.sort(gc.eigenvalues)
    assert np.abs(lc - l0).max() <= c + 1e-10


def test_assemble_rejects_bad_input():
    grid = RadialGrid(n=64, r_max=8.0)
    with pytest.raises(ValueError):
        assemble(0, None, grid)
    with pytest.raises(ValueError):
        assemble(1, lambda r: np.full_like(r, np.nan), grid)


def test_propagate_identity_phase_and_unitarity(rng):
    grid = RadialGrid(n=96, r_max=8.0)
    gen = assemble(-1, lambda r: np.exp(-r), grid)
    psi = (np.exp(-((grid.r - 3) ** 2)), 0.3 * np.exp(-((grid.r - 4) ** 2)))

    out = propagate(gen, psi, 0.0)
    assert np.abs(out[0] - psi[0]).max() < 1e-12
    assert np.abs(out[1] - psi[1]).max() < 1e-12

    lam, u = gen.ensure_eigh()
    k = 40
    vec = u[:, k]
    out = propagate(gen, (vec[:grid.n], vec[grid.n:]), 0.9)
    expect = np.exp(1j * lam[k] * 0.9) * vec
    assert np.abs(np.concatenate(out) - expect).max() < 1e-12

    for _ in range(5):
        z = rng.standard_normal(2 * grid.n) + 1j * rng.standard_normal(2 * grid.n)
        out = propagate(gen, (z[:grid.n], z[grid.n:]), 1.7)
        n0 = np.sqrt(grid.h) * np.linalg.norm(z)
        n1 = np.sqrt(grid.h) * np.linalg.norm(np.concatenate(out))
        assert abs(n1 - n0) <= 1e-12 * max(1.0, n0)


def test_propagation_composition():
    grid = RadialGrid(n=64, r_max=8.0)
    gen = assemble(1, None, grid)
    z0 = (np.exp(-((grid.r - 3) ** 2)), np.zeros(grid.n))
    a = propagate(gen, propagate(gen, z0, 0.3), 0.5)
    b = propagate(gen, z0, 0.8)
    assert np.abs(np.concatenate(a) - np.concatenate(b)).max() < 1e-12


def _evolve_on_grid(n, r_max, kappa, T, psi_fn):
    grid = RadialGrid(n=n, r_max=r_max)
    gen = assemble(kappa, None, grid)
    p, m = propagate(gen, (psi_fn(grid.r), np.zeros(grid.n)), T)
    return grid.r, p, m


@pytest.mark.slow
def test_grid_self_convergence_order():
    # smooth compact data away from both walls; fixed T; measured order >= 2
    r_max, T, kappa = 16.0, 2.0, 1
    psi_fn = lambda r: np.exp(-((r - 6.0) ** 2) / 0.5)
    r_ref, p_ref, m_ref = _evolve_on_grid(2048, r_max, kappa, T, psi_fn)
    ref_p = CubicSpline(r_ref, p_ref.real) , CubicSpline(r_ref, p_ref.imag)
    errs = []
    ns = [128, 256, 512]
    for n in ns:
        r, p, _ = _evolve_on_grid(n, r_max, kappa, T, psi_fn)
        ref = ref_p[0](r) + 1j * ref_p[1](r)
        errs.append(np.sqrt(r_max / n * np.sum(np.abs(p - ref) ** 2)))
    orders = [np.log2(e1 / e2) for e1, e2 in zip(errs, errs[1:])]
    assert min(orders) >= 2.0


def _cn_evolve(u0, box, T, dt, order=2):
    """Crank-Nicolson evolution of the periodic FD Dirac operator via FFT.

    The FD stencil is diagonalized by the DFT; the 4x4 symbol
    A(xi) = sum alpha_j s_j(xi) satisfies A^2 = |s|^2 I by anticommutation,
    so each CN step ((1 - i dt/2 A)^-1 (1 + i dt/2 A)) has the closed form
    ((1 - a^2 |s|^2) I + 2 i a A) / (1 + a^2 |s|^2), a = dt/2. ``order``
    selects the 2nd- or 4th-order central stencil symbol; the difference of
    the two runs estimates the 2nd-order scheme's spatial error.
    """
    from diraclab.algebra import ALPHA
    n = u0.shape[0]
    h = 2 * box / n
    freqs = 2 * np.pi * np.fft.fftfreq(n, d=h)
    if order == 2:
        s1 = np.sin(freqs * h) / h
    elif order == 4:
        s1 = (8 * np.sin(freqs * h) - np.sin(2 * freqs * h)) / (6 * h)
    else:
        raise ValueError(order)
    sq = [s1, s1, s1]
    sx, sy, sz = np.meshgrid(*sq, indexing="ij")
    a = dt / 2
    s2 = sx ** 2 + sy ** 2 + sz ** 2
    c0 = (1 - a ** 2 * s2) / (1 + a ** 2 * s2)
    c1 = 2j * a / (1 + a ** 2 * s2)
    uhat = np.fft.fftn(u0, axes=(0, 1, 2))
    steps = int(round(T / dt))
    for _ in range(steps):
        au = (sx[..., None] * (uhat @ ALPHA[0].T)
              + sy[..., None] * (uhat @ ALPHA[1].T)
              + sz[..., None] * (uhat @ ALPHA[2].T))
        uhat = c0[..., None] * uhat + c1[..., None] * au
    return np.fft.ifftn(uhat, axes=(0, 1, 2))


@pytest.mark.slow
def test_channel_propagation_matches_3d_crank_nicolson():
    """Single-channel propagation, synthesized, against a brute-force 3D
    finite-difference Crank-Nicolson evolution of the free equation."""
    kappa, T = -1, 1.0
    c = ChannelIndex(1, 1, kappa)
    r0, w = 4.0, 0.9
    psi_fn = lambda r: np.exp(-((r - r0) ** 2) / (2 * w * w))

    # channel solution on a fine radial grid
    grid = RadialGrid(n=1024, r_max=16.0)
    gen = assemble(kappa, None, grid)
    p, m = propagate(gen, (psi_fn(grid.r), np.zeros(grid.n)), T)
    sp_r = CubicSpline(grid.r, p.real), CubicSpline(grid.r, p.imag)
    sp_m = CubicSpline(grid.r, m.real), CubicSpline(grid.r, m.imag)

    # 3D oracle
    box, n3 = 8.0, 48
    ax = -box + (np.arange(n3) + 0.5) * (2 * box / n3)
    xx, yy, zz = np.meshgrid(ax, ax, ax, indexing="ij")
    pts = np.stack([xx, yy, zz], -1)
    rr = np.linalg.norm(pts, axis=-1)
    th = np.arccos(np.clip(pts[..., 2] / rr, -1, 1))
    ph = np.arctan2(pts[..., 1], pts[..., 0])
    phi_p = channel_spinor(c, +1, th, ph)
    phi_m = channel_spinor(c, -1, th, ph)
    u0 = psi_fn(rr)[..., None] * phi_p / rr[..., None]

    dt = 0.02
    u_cn2 = _cn_evolve(u0, box, T, dt, order=2)
    u_cn2_fine = _cn_evolve(u0, box, T, dt / 2, order=2)
    u_cn4 = _cn_evolve(u0, box, T, dt / 2, order=4)

    u_chan = ((sp_r[0](rr) + 1j * sp_r[1](rr))[..., None] * phi_p
              + (sp_m[0](rr) + 1j * sp_m[1](rr))[..., None] * phi_m) / rr[..., None]

    # compare away from the box corners / origin
    mask = (rr > 1.0) & (rr < 6.5)
    # oracle error estimate: spatial (2nd vs 4th order symbol) + temporal
    envelope = (np.abs(u_cn2_fine - u_cn4)[mask].max()
                + (4.0 / 3.0) * np.abs(u_cn2 - u_cn2_fine)[mask].max())
    diff2 = np.abs(u_chan - u_cn2_fine)[mask].max()
    assert diff2 <= 1.5 * envelope + 1e-4
    # against the 4th-order oracle the channel solution is much closer still
    diff4 = np.abs(u_chan - u_cn4)[mask].max()
    assert diff4 <= 0.2 * envelope + 1e-4
