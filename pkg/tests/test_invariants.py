import itertools

import numpy as np
import pytest

from z2kit import models
from z2kit.errors import GapClosed
from z2kit.frames import EffectiveCell, symmetric_frame_1d, transport_input_frame
from z2kit.invariants import (
    classify_orbit,
    delta_2d,
    delta_trim,
    fkm_indices,
    fu_kane_delta,
    gl3z_transform,
    homotopy_invariance_check,
    sewing_line,
    sewing_matrix,
    time_reversal_polarization,
    trim_recipe,
    z2_all_routes,
    z2_quadruple_3d,
)
from z2kit.linalg import epsilon_form, pfaffian

ALL_QUADRUPLES = list(itertools.product((0, 1), repeat=4))


class TestSewingMatrix:
    def test_symmetric_frame_gives_eps_inverse(self, km_qsh):
        # a 1d symmetric frame is time-reversal compatible by construction
        line = models.restrict_family(km_qsh, axis=1, value=0.0)
        eps = epsilon_form(2)
        field = symmetric_frame_1d(line, n_samples=32)
        n2 = field.values.shape[0] - 1
        for j in range(0, n2 + 1, 4):
            w = sewing_matrix(line, field.values[n2 - j], field.values[j])
            assert np.max(np.abs(w - eps.inverse)) < 1e-8

    def test_unitary_and_skew_at_vertices(self, qsh_pipeline, km_qsh):
        col = qsh_pipeline.cylinder.values[0]
        w = sewing_line(km_qsh, col, (0, 0))
        n2 = w.shape[0] - 1
        gram = np.swapaxes(w.conj(), -1, -2) @ w
        assert np.max(np.abs(gram - np.eye(2))) <= 1e-10
        for j in (0, n2 // 2, n2):  # k2 = -1/2, 0, 1/2 are fixed points
            assert np.max(np.abs(w[j] + w[j].T)) < 1e-10

    def test_inversion_antisymmetry(self, qsh_pipeline, km_qsh):
        col = qsh_pipeline.cylinder.values[0]
        w = sewing_line(km_qsh, col, (0, 0))
        # w(-k) = -w(k)^T along the whole line
        assert np.max(np.abs(w[::-1] + np.swapaxes(w, -1, -2))) < 1e-10

    def test_translation_invariance(self, qsh_pipeline, km_qsh):
        col = qsh_pipeline.cylinder.values[0]
        w = sewing_line(km_qsh, col, (0, 0))
        assert np.max(np.abs(w[-1] - w[0])) < 1e-10


class TestTimeReversalPolarization:
    def test_symmetric_frame_vanishes(self, constant_2d):
        line = time_reversal_polarization(
            constant_2d,
            transport_input_frame(constant_2d, EffectiveCell(edge_samples=16)).values[0],
            (0, 0),
        )
        assert line["integer"] % 2 == 0
        assert line["int_residual"] < 1e-8

    def test_qsh_lines_differ_by_one(self, qsh_pipeline, km_qsh):
        cyl = qsh_pipeline.cylinder
        n = qsh_pipeline.cell.n
        p0 = time_reversal_polarization(km_qsh, cyl.values[0], (0, 0))
        p1 = time_reversal_polarization(km_qsh, cyl.values[n], (1, 0))
        assert (p1["integer"] - p0["integer"]) % 2 == 1
        assert max(p0["int_residual"], p1["int_residual"]) < 1e-6


class TestRoutes:
    def test_constant_family_all_zero(self, constant_2d):
        routes = z2_all_routes(constant_2d, EffectiveCell(edge_samples=16))
        assert [routes[k].value for k in ("degree", "trim", "fu_kane")] == [0, 0, 0]

    def test_qsh(self, km_qsh):
        routes = z2_all_routes(km_qsh, EffectiveCell(edge_samples=64))
        assert [routes[k].value for k in ("degree", "trim", "fu_kane")] == [1, 1, 1]

    def test_trivial(self, km_trivial):
        routes = z2_all_routes(km_trivial, EffectiveCell(edge_samples=64))
        assert [routes[k].value for k in ("degree", "trim", "fu_kane")] == [0, 0, 0]

    def test_fu_kane_standalone(self, km_qsh, km_trivial, constant_2d):
        assert fu_kane_delta(km_qsh, 64).value == 1
        assert fu_kane_delta(km_trivial, 64).value == 0
        assert fu_kane_delta(constant_2d, 16).value == 0

    def test_report_serialization(self, km_qsh):
        rep = delta_2d(km_qsh, EffectiveCell(edge_samples=32))
        data = rep.to_dict()
        assert data["value"] == 1
        assert data["route"] == "degree"
        assert set(data["residuals"]) == {"unitary", "symmetry", "range"}
        assert data["winding"] % 2 == 1

    def test_synthetic_agreement(self):
        for seed in range(6):
            fam = models.twisted_family(seed=seed)
            routes = z2_all_routes(fam, EffectiveCell(edge_samples=48))
            vals = {r.value for r in routes.values()}
            assert len(vals) == 1


class TestTrimRecipe:
    def test_all_identity(self):
        value, per_vertex = trim_recipe([np.eye(2, dtype=complex)] * 4)
        assert value == 0
        assert all(v["factor"] == 1 for v in per_vertex)

    def test_hand_case_minus_one(self):
        obstructions = [-np.eye(2, dtype=complex)] + [np.eye(2, dtype=complex)] * 3
        value, per_vertex = trim_recipe(obstructions)
        assert per_vertex[0]["factor"] == -1
        assert value == 1

    def test_delta_trim_matches_degree_on_same_frame(self, qsh_pipeline, km_qsh):
        frames_v = [qsh_pipeline.vertices[v]["frame"] for v in ("v1", "v2", "v3", "v4")]
        cols = {"0": qsh_pipeline.cylinder.values[0],
                "0.5": qsh_pipeline.cylinder.values[qsh_pipeline.cell.n]}
        rep = delta_trim(km_qsh, frames_v, eps=qsh_pipeline.eps, edge_columns=cols)
        assert rep.value == qsh_pipeline.winding % 2
        assert rep.residuals["symmetry"] <= 1e-8


class TestBoundaryIdentities:
    @pytest.mark.parametrize("pipeline_name", ["qsh_pipeline", "trivial_pipeline"])
    def test_sewing_from_boundary_transition(self, pipeline_name, request, km_qsh, km_trivial):
        pipeline = request.getfixturevalue(pipeline_name)
        family = km_qsh if pipeline_name == "qsh_pipeline" else km_trivial
        cell = pipeline.cell
        n = cell.n
        eps = pipeline.eps
        # u along the full k1 = 0 and k1 = 1/2 lines, k2 ascending
        u_line0 = np.concatenate([pipeline.transition.edges["E1"][::-1],
                                  pipeline.transition.edges["E6"][::-1][1:]])
        u_line1 = np.concatenate([pipeline.transition.edges["E3"],
                                  pipeline.transition.edges["E4"][1:]])
        for lam, col, u_line in (((0, 0), pipeline.cylinder.values[0], u_line0),
                                 ((1, 0), pipeline.cylinder.values[n], u_line1)):
            w = sewing_line(family, col, lam)
            rebuilt = u_line[::-1] @ eps.inverse @ np.swapaxes(u_line, -1, -2)
            assert np.max(np.abs(w - rebuilt)) <= 1e-8

    def test_pfaffian_determinant_identity(self, qsh_pipeline, km_qsh):
        # Pf w = det(boundary transition) Pf eps^{-1} at all six vertices
        cell = qsh_pipeline.cell
        eps = qsh_pipeline.eps
        pf_inv = pfaffian(eps.inverse)
        endpoint = {"v1": ("E1", 0), "v2": ("E2", 0), "v3": ("E3", 0),
                    "v4": ("E4", 0), "v5": ("E5", 0), "v6": ("E6", 0)}
        from z2kit.frames import VERTEX_LAMBDA_2D

        for name, (edge, pos) in endpoint.items():
            i, j = cell.vertex_index(name)
            frame = qsh_pipeline.cylinder.values[i, j]
            w = sewing_matrix(km_qsh, frame, frame, lam=VERTEX_LAMBDA_2D[name])
            u_hat = qsh_pipeline.transition.edges[edge][pos]
            assert abs(pfaffian(0.5 * (w - w.T)) - np.linalg.det(u_hat) * pf_inv) <= 1e-8


class TestQuadruple3d:
    def test_constant(self):
        fam = models.constant_family(dimension=3, seed=2)
        quad = z2_quadruple_3d(fam, EffectiveCell(edge_samples=16))
        assert quad.deltas == (0, 0, 0, 0)
        assert all(quad.consistency.values())

    def test_stacked_kane_mele(self):
        quad = z2_quadruple_3d(models.stacked_kane_mele(lam_v=0.1),
                               EffectiveCell(edge_samples=32))
        assert quad.deltas == (0, 0, 0, 1)
        nu0, nu = fkm_indices(quad.deltas)
        assert nu0 == 0 and nu == (0, 0, 1)
        assert all(quad.consistency.values())

    def test_fkm_diamond_strong(self):
        quad = z2_quadruple_3d(models.fkm_diamond(dt1=0.4, lam_so=0.125),
                               EffectiveCell(edge_samples=32))
        nu0, _ = fkm_indices(quad.deltas)
        assert nu0 == 1
        assert all(quad.consistency.values())

    def test_serialization(self):
        quad = z2_quadruple_3d(models.constant_family(dimension=3, seed=2),
                               EffectiveCell(edge_samples=16))
        data = quad.to_dict()
        assert data["nu0"] == 0
        assert data["orbit"] == "O1"
        assert set(data["faces"]) == {"1,0", "1,+", "2,+", "3,+", "2,-", "3,-"}


class TestOrbitAlgebra:
    def test_fkm_index_examples(self):
        assert fkm_indices((0, 0, 0, 0)) == (0, (0, 0, 0))
        assert fkm_indices((1, 0, 0, 0)) == (1, (0, 0, 0))
        assert fkm_indices((0, 0, 0, 1)) == (0, (0, 0, 1))

    def test_generator_examples(self):
        a, b, c, d = 1, 0, 1, 1
        assert gl3z_transform((a, b, c, d), "t") == (b, a, c, d)
        assert gl3z_transform((1, 0, 1, 0), "s2") == (0, 1, 1, 0)
        assert gl3z_transform((a, b, c, d), "s1") == ((a + b + c) % 2, c, d, b)

    def test_orbit_examples(self):
        assert classify_orbit((0, 0, 0, 0)) == {
            "orbit": "O1", "nu0": 0, "nu_tot": 1, "omega_hat": 1, "trivial": True}
        info = classify_orbit((1, 1, 0, 0))
        assert (info["orbit"], info["nu0"], info["nu_tot"], info["omega_hat"]) == \
            ("O2", 0, 0, 0)
        info = classify_orbit((1, 0, 0, 0))
        assert (info["orbit"], info["nu0"], info["nu_tot"], info["omega_hat"]) == \
            ("O3", 1, 0, 1)

    def test_nu0_nu_tot_invariant_under_action(self):
        for quad in ALL_QUADRUPLES:
            ref = classify_orbit(quad)
            for gen in ("s1", "s2", "t"):
                image = classify_orbit(gl3z_transform(quad, gen))
                assert image["nu0"] == ref["nu0"]
                assert image["nu_tot"] == ref["nu_tot"]
                assert image["orbit"] == ref["orbit"]

    def test_omega_hat_invariant_when_nu0_vanishes(self):
        count = 0
        for quad in ALL_QUADRUPLES:
            ref = classify_orbit(quad)
            if ref["nu0"] != 0:
                continue
            count += 1
            for gen in ("s1", "s2", "t"):
                image = classify_orbit(gl3z_transform(quad, gen))
                assert image["omega_hat"] == ref["omega_hat"]
        assert count == 8

    def test_three_orbit_partition(self):
        counts = {"O1": 0, "O2": 0, "O3": 0}
        for quad in ALL_QUADRUPLES:
            info = classify_orbit(quad)
            counts[info["orbit"]] += 1
            if quad == (0, 0, 0, 0):
                assert info["orbit"] == "O1"
            elif (quad[0] + quad[1]) % 2 == 0:
                assert info["orbit"] == "O2"
            else:
                assert info["orbit"] == "O3"
        assert counts == {"O1": 1, "O2": 7, "O3": 8}

    def test_trivial_predicate(self):
        for quad in ALL_QUADRUPLES:
            info = classify_orbit(quad)
            assert info["trivial"] == (quad == (0, 0, 0, 0))


class TestHomotopyInvariance:
    def test_qsh_side_path(self):
        families = [models.kane_mele(lam_v=lv, lam_r=0.0)
                    for lv in np.linspace(0.0, 0.2, 6)]
        report = homotopy_invariance_check(families, cell=48)
        assert report["constant"]
        assert report["values"][0] == 1
        assert report["max_step_norm"] < 1.0

    def test_crossing_detected_by_gap_scan(self):
        families = [models.kane_mele(lam_v=lv, lam_r=0.0)
                    for lv in np.linspace(0.25, 0.40, 8)]
        with pytest.raises(GapClosed):
            homotopy_invariance_check(families, cell=32, min_gap=0.05)

    def test_constant_family_gauge_path(self):
        families = [models.twisted_family(seed=5, strength=0.8 * t)
                    for t in np.linspace(0.0, 1.0, 5)]
        report = homotopy_invariance_check(families, cell=32)
        assert report["constant"]
        assert report["values"][0] == 0


class TestPolarizationGaugeExperiment:
    def test_pair_phase_twist_shifts_evenly(self, km_qsh):
        from z2kit.frames import apply_gauge

        cell = EffectiveCell(edge_samples=64)
        cylinder = transport_input_frame(km_qsh, cell)
        base = {
            "0": time_reversal_polarization(km_qsh, cylinder.values[0], (0, 0)),
            "0.5": time_reversal_polarization(km_qsh, cylinder.values[cell.n], (1, 0)),
        }
        base_delta = (base["0.5"]["integer"] - base["0"]["integer"]) % 2

        def pair_phase(n_winds):
            def gauge(ks):
                ph = np.exp(2j * np.pi * n_winds * ks[..., 1])
                out = np.zeros(ks.shape[:-1] + (2, 2), dtype=complex)
                out[..., 0, 0] = ph
                out[..., 1, 1] = ph
                return out
            return gauge

        for n_winds in (1, 2):
            twisted = apply_gauge(cylinder, pair_phase(n_winds))
            shifted = {
                "0": time_reversal_polarization(km_qsh, twisted.values[0], (0, 0)),
                "0.5": time_reversal_polarization(km_qsh, twisted.values[cell.n], (1, 0)),
            }
            for line in ("0", "0.5"):
                shift = shifted[line]["integer"] - base[line]["integer"]
                assert shift % 2 == 0, (n_winds, line, shift)
            delta = (shifted["0.5"]["integer"] - shifted["0"]["integer"]) % 2
            assert delta == base_delta

    def test_unpaired_twist_keeps_delta(self, km_qsh):
        # a gauge winding only one column can shift each line's polarization
        # by an odd integer, but it shifts both lines equally
        from z2kit.frames import apply_gauge

        cell = EffectiveCell(edge_samples=64)
        cylinder = transport_input_frame(km_qsh, cell)

        def lone_phase(ks):
            out = np.zeros(ks.shape[:-1] + (2, 2), dtype=complex)
            out[..., 0, 0] = np.exp(2j * np.pi * ks[..., 1])
            out[..., 1, 1] = 1.0
            return out

        twisted = apply_gauge(cylinder, lone_phase)
        p0 = time_reversal_polarization(km_qsh, twisted.values[0], (0, 0))
        p1 = time_reversal_polarization(km_qsh, twisted.values[cell.n], (1, 0))
        assert (p1["integer"] - p0["integer"]) % 2 == 1  # QSH delta unchanged


class TestCrossRouteDiagnostics:
    def test_trim_product_matches_fu_kane_value(self, km_qsh, km_trivial, constant_2d):
        for fam, expect in ((km_qsh, 1), (km_trivial, 0), (constant_2d, 0)):
            rep = fu_kane_delta(fam, 48)
            assert rep.value == expect
            product = complex(*rep.p_theta["trim_product"])
            assert abs(product - (-1.0) ** rep.value) < 1e-6

    def test_per_face_fu_kane_oracle_on_diamond(self):
        fam = models.fkm_diamond(dt1=0.4, lam_so=0.125)
        cell = EffectiveCell(edge_samples=32)
        quad = z2_quadruple_3d(fam, cell)
        from z2kit.invariants import FACE_DEFS

        for name in ("1,0", "1,+", "2,+", "3,+"):
            axis, value = FACE_DEFS[name]
            face = models.restrict_family(fam, axis, value)
            assert fu_kane_delta(face, cell).value == quad.faces[name].value, name


class TestConventionIndependence:
    @pytest.mark.parametrize("lam_v,expect", [(0.1, 1), (0.4, 0)])
    def test_canonical_tau_gives_same_invariant(self, lam_v, expect):
        pos = np.array([[1 / 3, 1 / 3], [2 / 3, 2 / 3]] * 2)
        spec = models.kane_mele_spec(lam_v=lam_v)
        canon = models.ModelSpec(
            lattice=spec.lattice, ambient_dim=4, hoppings=spec.hoppings, rank=2,
            theta=spec.theta, tau_convention="canonical", positions=pos,
        )
        fam = models.build_model(canon)
        routes = z2_all_routes(fam, EffectiveCell(edge_samples=48))
        assert [routes[k].value for k in ("degree", "trim", "fu_kane")] == [expect] * 3
