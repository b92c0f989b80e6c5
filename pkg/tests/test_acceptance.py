"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v` (add `-s` to see the
criterion lines inline).  Criteria with runtime budgets assert them.
"""

import itertools
import sys
import time

import numpy as np
import pytest

import conftest
from conftest import random_frame
from z2kit import models
from z2kit.errors import Aliasing
from z2kit.frames import (
    EffectiveCell,
    TransitionLoop,
    frame_midpoint,
    run_boundary_pipeline,
    symmetric_frame_1d,
    symmetric_frame_2d,
    winding_with_refinement,
)
from z2kit.invariants import (
    classify_orbit,
    fkm_indices,
    gl3z_transform,
    homotopy_invariance_check,
    sewing_line,
    z2_all_routes,
    z2_quadruple_3d,
)
from z2kit.linalg import (
    epsilon_form,
    pfaffian,
    random_unitary,
    symplectic_square_root,
    winding_number,
)

ROUTES = ("degree", "trim", "fu_kane")


def report(num, ok, detail):
    line = f"[acceptance {num:2d}] {'PASS' if ok else 'FAIL'}  {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    sys.stdout.write(line + "\n")
    assert ok, line


def km(lam_v, lam_r=0.05, lam_so=0.06):
    return models.kane_mele(t=1.0, lam_so=lam_so, lam_v=lam_v, lam_r=lam_r)


def test_criterion_1_three_route_agreement():
    cell = EffectiveCell(edge_samples=256)
    points = [0.0, 0.1, 0.25, 0.34, 0.4, 0.55]
    worst_time = 0.0
    checked = 0
    for lam_v in points:
        t0 = time.perf_counter()
        routes = z2_all_routes(km(lam_v), cell)
        worst_time = max(worst_time, time.perf_counter() - t0)
        values = [routes[r].value for r in ROUTES]
        assert len(set(values)) == 1, (lam_v, values)
        checked += 1
    for seed in range(20):
        fam = models.twisted_family(seed=seed)
        t0 = time.perf_counter()
        routes = z2_all_routes(fam, cell)
        worst_time = max(worst_time, time.perf_counter() - t0)
        values = [routes[r].value for r in ROUTES]
        assert len(set(values)) == 1, (seed, values)
        checked += 1
    report(1, checked == 26 and worst_time < 10.0,
           f"3-route agreement on {checked} families at 256 samples, "
           f"slowest {worst_time:.2f}s < 10s")


def test_criterion_2_phase_detection_and_bisection():
    t_start = time.perf_counter()
    cell = EffectiveCell(edge_samples=64)
    qsh = z2_all_routes(km(0.1), EffectiveCell(edge_samples=256))
    triv = z2_all_routes(km(0.4), EffectiveCell(edge_samples=256))
    assert all(qsh[r].value == 1 for r in ROUTES)
    assert all(triv[r].value == 0 for r in ROUTES)

    def delta_at(lam_v):
        pipeline, _ = winding_with_refinement(km(lam_v, lam_r=0.0), cell)
        return pipeline.winding % 2

    lo, hi = 0.25, 0.40
    assert delta_at(lo) == 1 and delta_at(hi) == 0
    while hi - lo > 0.005:
        mid = 0.5 * (lo + hi)
        if delta_at(mid) == 1:
            lo = mid
        else:
            hi = mid
    # confirm by gap closing: the direct gap dips at the located boundary
    rng = np.random.default_rng(0)
    cloud = rng.uniform(-0.5, 0.5, size=(20000, 2))
    gap_at_boundary = float(np.min(models.direct_gap(km(0.5 * (lo + hi), lam_r=0.0), cloud)))
    gap_inside = float(np.min(models.direct_gap(km(0.1, lam_r=0.0), cloud)))
    elapsed = time.perf_counter() - t_start
    ok = (0.30 <= lo <= hi <= 0.33 and gap_at_boundary < 0.1 * gap_inside
          and elapsed < 120.0)
    report(2, ok, f"delta=1/0 at lam_v=0.1/0.4; transition in "
                  f"[{lo:.4f}, {hi:.4f}] (lit. 0.3117), boundary gap "
                  f"{gap_at_boundary:.2e}, {elapsed:.0f}s < 120s")


def _smooth_gauge(seed, m=2, strength=0.5):
    rng = np.random.default_rng(seed)
    coeffs = []
    for lam in ((1, 0), (0, 1), (1, -1)):
        c = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        coeffs.append((np.array(lam, float), strength * c / np.linalg.norm(c, 2)))

    def gauge(ks):
        h = np.zeros(ks.shape[:-1] + (m, m), dtype=complex)
        for lam, c in coeffs:
            ph = np.exp(2j * np.pi * (ks @ lam))
            h = h + ph[..., None, None] * c
        h = h + np.swapaxes(h.conj(), -1, -2)
        ev, vec = np.linalg.eigh(h)
        return (vec * np.exp(1j * ev)[..., None, :]) @ np.swapaxes(vec.conj(), -1, -2)

    return gauge


def test_criterion_3_gauge_independence(km_qsh, cell64):
    base = run_boundary_pipeline(km_qsh, cell64)
    even_shifts = 0
    for seed in range(20):
        other = run_boundary_pipeline(km_qsh, cell64, gauge=_smooth_gauge(seed))
        assert other.winding % 2 == base.winding % 2, seed
        if (other.winding - base.winding) % 2 == 0:
            even_shifts += 1
    report(3, even_shifts == 20,
           f"20 gauge twists: delta stable at {base.winding % 2}, all shifts even")


def test_criterion_4_interpolation_independence(km_qsh, cell64):
    rng = np.random.default_rng(123)
    windings = []
    for _ in range(10):
        detours = {}
        for edge in ("E1", "E2", "E3"):
            a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            a = 0.8 * (a - a.conj().T)
            spin = int(rng.integers(-1, 2))

            def detour(s, a=a, spin=spin):
                out = np.empty(s.shape + (2, 2), dtype=complex)
                for idx, t in enumerate(s):
                    ev, vec = np.linalg.eigh(1j * np.sin(np.pi * t) * a)
                    rot = (vec * np.exp(-1j * ev)) @ vec.conj().T
                    tw = np.diag([np.exp(2j * np.pi * spin * t),
                                  np.exp(-2j * np.pi * spin * t)])
                    out[idx] = rot @ tw
                return out

            detours[edge] = detour
        pipeline = run_boundary_pipeline(km_qsh, cell64, detours=detours)
        windings.append(pipeline.winding)
    values = {w % 2 for w in windings}
    pairwise_even = all((a - b) % 2 == 0 for a in windings for b in windings)
    report(4, len(values) == 1 and pairwise_even,
           f"10 re-interpolations: delta identical, windings {sorted(set(windings))} "
           f"pairwise even")


def test_criterion_5_homotopy_invariance():
    budgets = {}
    for side, (lo, hi, expect) in {
        "qsh": (0.0, 0.2, 1),
        "trivial": (0.36, 0.56, 0),
    }.items():
        families = [km(lv, lam_r=0.0) for lv in np.linspace(lo, hi, 10)]
        rep = homotopy_invariance_check(families, cell=64)
        assert rep["constant"] and rep["values"][0] == expect, (side, rep["values"])
        assert rep["max_step_norm"] < 1.0
        budgets[side] = rep["max_step_norm"]
    report(5, True, "delta constant on 10-step paths both sides; "
                    f"Kato-Nagy step norms {budgets['qsh']:.3f}, "
                    f"{budgets['trivial']:.3f} < 1")


def test_criterion_6_frame_synthesis(km_trivial):
    # constant family: machine-precision residuals
    const = models.constant_family(seed=3)
    f_const = symmetric_frame_2d(const, EffectiveCell(edge_samples=32))
    assert f_const.meta["orthonormality_residual"] <= 1e-8
    assert f_const.meta["range_residual"] <= 1e-8
    assert f_const.meta["trs_residual"] <= 1e-6
    assert f_const.meta["periodicity_residual"] <= 1e-6
    assert f_const.meta["max_adjacent_distance"] <= 1e-12

    dist = {}
    for n in (128, 256):
        field = symmetric_frame_2d(km_trivial, EffectiveCell(edge_samples=n))
        assert field.meta["orthonormality_residual"] <= 1e-8, n
        assert field.meta["range_residual"] <= 1e-8, n
        assert field.meta["trs_residual"] <= 1e-6, n
        assert field.meta["periodicity_residual"] <= 1e-6, n
        dist[n] = field.meta["max_adjacent_distance"]
    ratio = dist[256] / dist[128]

    fam1d = models.restrict_family(km_trivial, axis=1, value=0.0)
    f1 = symmetric_frame_1d(fam1d, n_samples=128)
    assert f1.meta["orthonormality_residual"] <= 1e-8
    assert f1.meta["range_residual"] <= 1e-8
    assert f1.meta["trs_residual"] <= 1e-6
    assert f1.meta["periodicity_residual"] <= 1e-6
    report(6, ratio <= 0.55,
           f"frames synthesized; adjacent distance ratio on doubling "
           f"{ratio:.3f} <= 0.55; 1d unconditional")


def test_criterion_7_identity_suite(qsh_pipeline, km_qsh):
    rng = np.random.default_rng(42)
    # pfaffian identities
    for m in (2, 4, 8, 12, 16):
        a = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        a = a - a.T
        det = np.linalg.det(a)
        assert abs(pfaffian(a) ** 2 - det) <= 1e-9 * abs(det)
        c = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        lhs = pfaffian(c @ a @ c.T)
        rhs = np.linalg.det(c) * pfaffian(a)
        assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(rhs))
    # symplectic square root on 100 compatible inputs
    eps4 = epsilon_form(4)
    for _ in range(100):
        u0 = random_unitary(4, rng)
        v = u0 @ eps4.inverse @ u0.T @ eps4.matrix
        u = symplectic_square_root(v, eps4)
        assert np.max(np.abs(u @ eps4.inverse @ u.T @ eps4.matrix - v)) <= 1e-8
    # boundary identities on Kane-Mele data
    cell = qsh_pipeline.cell
    eps = qsh_pipeline.eps
    u_line0 = np.concatenate([qsh_pipeline.transition.edges["E1"][::-1],
                              qsh_pipeline.transition.edges["E6"][::-1][1:]])
    u_line1 = np.concatenate([qsh_pipeline.transition.edges["E3"],
                              qsh_pipeline.transition.edges["E4"][1:]])
    worst_hat = 0.0
    for lam, col, u_line in (((0, 0), qsh_pipeline.cylinder.values[0], u_line0),
                             ((1, 0), qsh_pipeline.cylinder.values[cell.n], u_line1)):
        w = sewing_line(km_qsh, col, lam)
        rebuilt = u_line[::-1] @ eps.inverse @ np.swapaxes(u_line, -1, -2)
        worst_hat = max(worst_hat, float(np.max(np.abs(w - rebuilt))))
    assert worst_hat <= 1e-8
    pf_inv = pfaffian(eps.inverse)
    worst_pf = 0.0
    for edge in ("E1", "E2", "E3", "E4", "E5", "E6"):
        name = {"E1": "v1", "E2": "v2", "E3": "v3",
                "E4": "v4", "E5": "v5", "E6": "v6"}[edge]
        i, j = cell.vertex_index(name)
        frame = qsh_pipeline.cylinder.values[i, j]
        from z2kit.frames import VERTEX_LAMBDA_2D
        from z2kit.invariants import sewing_matrix
        w = sewing_matrix(km_qsh, frame, frame, lam=VERTEX_LAMBDA_2D[name])
        u_hat = qsh_pipeline.transition.edges[edge][0]
        worst_pf = max(worst_pf,
                       abs(pfaffian(0.5 * (w - w.T)) - np.linalg.det(u_hat) * pf_inv))
    assert worst_pf <= 1e-8
    # midpoint lemma on 100 random close frame pairs
    eps2 = epsilon_form(2)
    worst_mid = 0.0
    for _ in range(100):
        a = random_frame(4, 2, rng)
        u = random_unitary(2, rng)
        phases, z = np.linalg.eigh(1j * (u - u.conj().T))
        b = a @ ((z * np.exp(0.05j * phases)) @ z.conj().T)
        lhs = frame_midpoint(a, b @ eps2.matrix)
        rhs = frame_midpoint(a @ eps2.inverse, b) @ eps2.matrix
        worst_mid = max(worst_mid, float(np.max(np.abs(lhs - rhs))))
    assert worst_mid <= 1e-9
    report(7, True, f"identities: boundary sewing {worst_hat:.1e}, "
                    f"Pf/det {worst_pf:.1e}, midpoint lemma {worst_mid:.1e}")


def test_criterion_8_three_dimensional_suite():
    cell = EffectiveCell(edge_samples=128)
    t0 = time.perf_counter()
    quad_const = z2_quadruple_3d(models.constant_family(dimension=3, seed=2), cell)
    t_const = time.perf_counter() - t0
    assert quad_const.deltas == (0, 0, 0, 0)

    t0 = time.perf_counter()
    quad_stack = z2_quadruple_3d(models.stacked_kane_mele(lam_v=0.1), cell)
    t_stack = time.perf_counter() - t0
    assert quad_stack.deltas == (0, 0, 0, 1)
    assert fkm_indices(quad_stack.deltas)[0] == 0

    t0 = time.perf_counter()
    quad_fkm = z2_quadruple_3d(models.fkm_diamond(dt1=0.4, lam_so=0.125), cell)
    t_fkm = time.perf_counter() - t0
    assert fkm_indices(quad_fkm.deltas)[0] == 1

    all_consistent = all(
        all(q.consistency.values()) for q in (quad_const, quad_stack, quad_fkm))
    slowest = max(t_const, t_stack, t_fkm)
    ok = all_consistent and slowest / 6.0 < 30.0 and slowest < 300.0
    report(8, ok, f"3d: constant (0,0,0,0), stacked KM (0,0,0,1), FKM nu0=1; "
                  f"plus/minus faces agree; slowest quadruple {slowest:.1f}s < 300s")


def test_criterion_9_orbit_algebra():
    quads = list(itertools.product((0, 1), repeat=4))
    for quad in quads:
        ref = classify_orbit(quad)
        for gen in ("s1", "s2", "t"):
            image = classify_orbit(gl3z_transform(quad, gen))
            assert image["nu0"] == ref["nu0"]
            assert image["nu_tot"] == ref["nu_tot"]
            if ref["nu0"] == 0:
                assert image["omega_hat"] == ref["omega_hat"]
        if quad == (0, 0, 0, 0):
            assert ref["orbit"] == "O1"
        elif (quad[0] + quad[1]) % 2 == 0:
            assert ref["orbit"] == "O2"
        else:
            assert ref["orbit"] == "O3"
    report(9, True, "nu0, nu_tot invariant on all 16 quadruples; omega_hat "
                    "invariant on the nu0=0 half; orbits partition 1/7/8")


def test_criterion_10_winding_robustness(km_qsh):
    for degree in range(-5, 6):
        j = np.arange(257)
        loop = np.exp(2j * np.pi * degree * j / 256)
        assert winding_number(loop) == degree
    # coarse sampling of a degree-3 loop aliases, refinement succeeds
    j = np.arange(9)
    with pytest.raises(Aliasing):
        winding_number(np.exp(2j * np.pi * 3 * j / 8))

    def spinning_detour(s):
        out = np.zeros(s.shape + (2, 2), dtype=complex)
        out[..., 0, 0] = np.exp(2j * np.pi * 3 * s)
        out[..., 1, 1] = 1.0
        return out

    pipeline, used = winding_with_refinement(
        km_qsh, EffectiveCell(edge_samples=8), detours={"E2": spinning_detour})
    assert used.n > 8 and pipeline.winding % 2 == 1
    # the cap is honoured: an impossible margin cannot refine forever
    with pytest.raises(Aliasing):
        winding_with_refinement(km_qsh, EffectiveCell(edge_samples=8),
                                detours={"E2": spinning_detour}, max_edge_samples=8)
    report(10, True, f"degrees -5..5 exact; aliasing refined 8 -> {used.n} "
                     f"samples; cap enforced")
