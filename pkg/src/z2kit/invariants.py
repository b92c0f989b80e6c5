"""Z2 invariants: boundary winding, Fu-Kane polarization, TRIM recipe.

Three independent routes to the 2d invariant are provided and cross
checked: the parity of the boundary-transition determinant winding
("degree"), the Fu-Kane index from time-reversal polarizations on the two
invariant lines ("fu_kane"), and the vertex recipe evaluating obstruction
unitaries at the four inequivalent time-reversal invariant momenta
("trim").  In 3d the 2d machinery runs on four faces of the half cell,
yielding the invariant quadruple, the strong/weak indices and the orbit
algebra under relabelings of the lattice basis.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import Aliasing, GapClosed, NotSkew
from .frames import (
    VERTEX_LAMBDA_2D,
    BoundaryPipeline,
    EffectiveCell,
    FrameField,
    obstruction_unitary,
    transport_input_frame,
    winding_with_refinement,
)
from .linalg import (
    EpsilonForm,
    Tolerances,
    epsilon_form,
    kato_nagy_intertwiner,
    pfaffian,
    principal_sqrt,
)
from .models import ProjectorFamily, restrict_family, spectral_projector

FACE_DEFS = {
    "1,0": (0, 0.0),
    "1,+": (0, 0.5),
    "2,+": (1, 0.5),
    "3,+": (2, 0.5),
    "2,-": (1, -0.5),
    "3,-": (2, -0.5),
}


@dataclass
class Z2Report:
    """A Z2 value together with the diagnostics of the route that produced it."""

    value: int
    route: str
    winding: int | None = None
    residuals: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    per_vertex: list | None = None
    p_theta: dict | None = None

    def to_dict(self) -> dict:
        out = {
            "value": int(self.value),
            "route": self.route,
            "winding": self.winding,
            "residuals": self.residuals,
            "grid": self.grid,
        }
        if self.per_vertex is not None:
            out["per_vertex"] = self.per_vertex
        if self.p_theta is not None:
            out["p_theta"] = self.p_theta
        return out


@dataclass
class Z2Quadruple:
    """The four face invariants of a 3d family plus per-face reports."""

    deltas: tuple
    faces: dict = field(default_factory=dict)
    consistency: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        nu0, nu_weak = fkm_indices(self.deltas)
        orbit = classify_orbit(self.deltas)
        return {
            "deltas": [int(d) for d in self.deltas],
            "nu0": nu0,
            "nu": list(nu_weak),
            "orbit": orbit["orbit"],
            "nu_tot": orbit["nu_tot"],
            "omega_hat": orbit["omega_hat"],
            "consistency": self.consistency,
            "faces": {name: rep.to_dict() for name, rep in self.faces.items()},
        }


# ---------------------------------------------------------------------------
# sewing matrix and time-reversal polarization
# ---------------------------------------------------------------------------

def sewing_matrix(family: ProjectorFamily, frame_minus_k: np.ndarray,
                  frame_k: np.ndarray, lam=None) -> np.ndarray:
    """Overlap w_ab = <psi_a(-k) | Theta psi_b(k)>.

    When -k is represented through a translate, ``lam`` is the integer
    lattice vector with -k = (representative) - lam and ``frame_minus_k``
    the frame at the representative.
    """
    th = family.theta_frame(frame_k)
    if lam is not None and np.any(np.asarray(lam)):
        th = family.tau(lam) @ th
    return np.swapaxes(frame_minus_k.conj(), -1, -2) @ th


def sewing_line(family: ProjectorFamily, column: np.ndarray, lam_star) -> np.ndarray:
    """Sewing matrices along a k2 column over [-1/2, 1/2] of a TRIM line.

    ``column`` holds frames at k2 indices 0..2n; the frame at -k2 is the
    mirrored index, translated by ``lam_star`` (0 for the k1 = 0 line, e1
    for k1 = 1/2).  Returns the stack of w over the same indices.
    """
    mirrored = column[::-1]
    th = np.einsum("ab,jbm->jam", family.tau(lam_star), family.theta_frame(column))
    return np.swapaxes(mirrored.conj(), -1, -2) @ th


def _tracked_arg(values: np.ndarray, margin: float) -> np.ndarray:
    """Cumulative continuous argument along a sequence of unit complex numbers."""
    inc = np.angle(values[1:] / values[:-1])
    if inc.size and np.max(np.abs(inc)) >= np.pi - margin:
        raise Aliasing("determinant phase increments too coarse; refine the line grid")
    return np.angle(values[0]) + np.concatenate([[0.0], np.cumsum(inc)])


def time_reversal_polarization(
    family: ProjectorFamily,
    column: np.ndarray,
    lam_star,
    tols: Tolerances = Tolerances(),
) -> dict:
    """Time-reversal polarization of one invariant line, as a real number.

    Uses the continuous argument of det w over k2 in [0, 1/2] and the
    principal-log Pfaffians at the two momenta fixed under inversion; the
    result is an integer up to floating point and defined modulo 2.
    """
    w = sewing_line(family, column, lam_star)
    n2 = w.shape[0] - 1
    half = w[n2 // 2:]
    dets = np.linalg.det(half)
    dets = dets / np.abs(dets)
    track = _tracked_arg(dets, tols.winding_margin)

    pf_start = pfaffian(0.5 * (half[0] - half[0].T), tol_skew=tols.skew)
    pf_end = pfaffian(0.5 * (half[-1] - half[-1].T), tol_skew=tols.skew)
    skew_res = max(
        float(np.max(np.abs(half[0] + half[0].T))),
        float(np.max(np.abs(half[-1] + half[-1].T))),
    )
    if skew_res > tols.skew:
        raise NotSkew(f"sewing matrix not skew at a vertex ({skew_res:.2e})")

    value = (track[-1] - track[0]) / (2.0 * np.pi) - (
        np.angle(pf_end) - np.angle(pf_start)
    ) / np.pi
    unitary_res = float(
        np.max(np.abs(np.swapaxes(w.conj(), -1, -2) @ w - np.eye(w.shape[-1])))
    )
    # continuous square root of det w along the line, divided by the Pfaffians
    sqrt_start = np.exp(0.5j * track[0])
    sqrt_end = np.exp(0.5j * track[-1])
    branch_factor = (sqrt_start / pf_start) * (sqrt_end / pf_end)
    return {
        "value": float(value),
        "integer": int(round(value)),
        "int_residual": float(abs(value - round(value))),
        "unitary_residual": unitary_res,
        "skew_residual": skew_res,
        "branch_factor": complex(branch_factor),
    }


def _fu_kane_from_cylinder(
    family: ProjectorFamily,
    cylinder: FrameField,
    cell: EffectiveCell,
    tols: Tolerances = Tolerances(),
) -> Z2Report:
    n = cell.n
    line0 = time_reversal_polarization(family, cylinder.values[0], (0, 0), tols)
    line1 = time_reversal_polarization(family, cylinder.values[n], (1, 0), tols)
    value = (line1["integer"] - line0["integer"]) % 2
    diag = line0["branch_factor"] * line1["branch_factor"]
    residuals = {
        "unitary": max(line0["unitary_residual"], line1["unitary_residual"]),
        "symmetry": max(line0["skew_residual"], line1["skew_residual"]),
        "range": float(cylinder.meta.get("range_residual", 0.0)),
    }
    return Z2Report(
        value=value,
        route="fu_kane",
        winding=None,
        residuals=residuals,
        grid={"edge_samples": cell.n},
        p_theta={
            "0": line0["value"],
            "0.5": line1["value"],
            "int_residual": max(line0["int_residual"], line1["int_residual"]),
            "trim_product": [float(np.real(diag)), float(np.imag(diag))],
        },
    )


def fu_kane_delta(
    family: ProjectorFamily,
    cell: EffectiveCell | int = 256,
    tols: Tolerances = Tolerances(),
) -> Z2Report:
    """Fu-Kane index from the polarizations of the two invariant lines."""
    if isinstance(cell, int):
        cell = EffectiveCell(edge_samples=cell)
    if family.dimension != 2:
        raise ValueError("fu_kane_delta expects a 2d family")
    cylinder = transport_input_frame(family, cell, tols=tols)
    return _fu_kane_from_cylinder(family, cylinder, cell, tols)


# ---------------------------------------------------------------------------
# degree route
# ---------------------------------------------------------------------------

def _degree_report(pipeline: BoundaryPipeline, cell: EffectiveCell) -> Z2Report:
    loop = pipeline.transition.loop_samples()
    m = loop.shape[-1]
    unitary_res = float(
        np.max(np.abs(np.swapaxes(loop.conj(), -1, -2) @ loop - np.eye(m)))
    )
    diag = pipeline.diagnostics
    residuals = {
        "unitary": unitary_res,
        "symmetry": max(diag["edge_symmetry_residual"], diag["vertex_condition_residual"],
                        diag["seam_residual"]),
        "range": diag["range_residual"],
    }
    per_vertex = []
    for name in ("v1", "v2", "v3", "v4"):
        data = pipeline.vertices[name]
        per_vertex.append({
            "vertex": name,
            "det_u_obs": _c2pair(np.linalg.det(data["u_obs"])),
            "det_u": _c2pair(np.linalg.det(data["u"])),
        })
    return Z2Report(
        value=pipeline.winding % 2,
        route="degree",
        winding=pipeline.winding,
        residuals=residuals,
        grid={"edge_samples": cell.n},
        per_vertex=per_vertex,
    )


def delta_2d(
    family: ProjectorFamily,
    cell: EffectiveCell | int = 256,
    tols: Tolerances = Tolerances(),
    gauge=None,
    detours=None,
) -> Z2Report:
    """Invariant as the parity of the boundary determinant winding."""
    if isinstance(cell, int):
        cell = EffectiveCell(edge_samples=cell)
    pipeline, used = winding_with_refinement(family, cell, tols=tols,
                                             gauge=gauge, detours=detours)
    return _degree_report(pipeline, used)


# ---------------------------------------------------------------------------
# TRIM recipe
# ---------------------------------------------------------------------------

def _c2pair(z: complex) -> list:
    return [float(np.real(z)), float(np.imag(z))]


def trim_recipe(obstructions: list) -> tuple[int, list]:
    """Vertex recipe on the four obstruction unitaries.

    For each vertex: normalize the eigenphases to [0, 2 pi), evaluate
    det u_obs = exp(i sum), det u = exp(i sum / 2), and the sign
    sqrt(det u_obs) / det u with the principal square root; the invariant
    is the parity of the number of -1 signs.
    """
    per_vertex = []
    parity = 0
    for idx, u_obs in enumerate(obstructions):
        vals = np.linalg.eigvals(u_obs)
        lam = np.mod(np.angle(vals), 2.0 * np.pi)
        lam[lam > 2.0 * np.pi - 1e-8] = 0.0
        total = float(np.sum(lam))
        det_obs = np.exp(1j * total)
        det_u = np.exp(0.5j * total)
        factor = principal_sqrt(det_obs) / det_u
        sign = int(np.sign(np.real(factor)))
        if abs(np.imag(factor)) > 1e-6 or sign == 0:
            raise ValueError(f"vertex factor {factor} is not a sign")
        parity ^= sign < 0
        per_vertex.append({
            "vertex": f"v{idx + 1}",
            "eigenphases": [float(x) for x in np.sort(lam)],
            "det_u_obs": _c2pair(det_obs),
            "det_u": _c2pair(det_u),
            "factor": sign,
        })
    return int(parity), per_vertex


def _tracked_factor(anchor_arg: float, delta_arg: float, det_u: complex) -> int:
    """Sign of the edge-tracked square root against the canonical root."""
    factor = np.exp(0.5j * (anchor_arg + delta_arg)) / det_u
    sign = int(np.sign(np.real(factor)))
    if abs(np.imag(factor)) > 1e-6 or sign == 0:
        raise ValueError(f"tracked vertex factor {factor} is not a sign")
    return sign


def delta_trim(
    family: ProjectorFamily,
    vertex_frames: list,
    eps: EpsilonForm | None = None,
    tols: Tolerances = Tolerances(),
    edge_columns: dict | None = None,
    grid: dict | None = None,
) -> Z2Report:
    """Invariant from the obstruction unitaries at v1..v4.

    The vertex frames must come from one frame continuous on the half
    cell.  ``edge_columns`` optionally supplies the k2 columns of that
    same frame at k1 = 0 and k1 = 1/2 (keys "0" and "0.5", each a stack
    over k2 in [-1/2, 1/2]); the square-root branches at v2 and v4 are
    then transported continuously along the edges joining them to v1 and
    v3, which makes the recipe gauge independent.  Without edge data the
    per-vertex principal branch is used, which is only reliable for
    frames whose obstruction phases stay within a principal branch along
    those edges.
    """
    if eps is None:
        eps = epsilon_form(family.rank)
    names = ("v1", "v2", "v3", "v4")
    obstructions = []
    compat = 0.0
    unit = 0.0
    for name, frame in zip(names, vertex_frames):
        u_obs = obstruction_unitary(family, frame, VERTEX_LAMBDA_2D[name], eps, tols)
        m = u_obs.shape[0]
        unit = max(unit, float(np.max(np.abs(u_obs.conj().T @ u_obs - np.eye(m)))))
        compat = max(compat, float(np.max(np.abs(u_obs.T @ eps.matrix - eps.matrix @ u_obs))))
        obstructions.append(u_obs)
    value, per_vertex = trim_recipe(obstructions)

    if edge_columns is not None:
        n2 = edge_columns["0"].shape[0] - 1
        half = n2 // 2
        dets = {}
        # det w along the edge v1 -> v2 (k1 = 0, k2: 0 .. -1/2) and along
        # v3 -> v4 (k1 = 1/2, k2: -1/2 .. 0), from the same input frame
        w0 = sewing_line(family, edge_columns["0"], (0, 0))
        w1 = sewing_line(family, edge_columns["0.5"], (1, 0))
        dets["E1"] = np.linalg.det(w0[half::-1])
        dets["E3"] = np.linalg.det(w1[: half + 1])
        signs = []
        for edge, (a_idx, b_idx) in (("E1", (0, 1)), ("E3", (2, 3))):
            vals = dets[edge] / np.abs(dets[edge])
            track = _tracked_arg(vals, tols.winding_margin)
            det_u_a = complex(*per_vertex[a_idx]["det_u"])
            det_u_b = complex(*per_vertex[b_idx]["det_u"])
            signs.append(_tracked_factor(track[0], 0.0, det_u_a))
            signs.append(_tracked_factor(track[0], track[-1] - track[0], det_u_b))
        order = [0, 1, 2, 3]
        for pos, sign in zip(order, signs):
            per_vertex[pos]["factor"] = sign
            per_vertex[pos]["branch"] = "edge-tracked"
        value = sum(1 for s in signs if s < 0) % 2

    rng_res = max(
        float(np.max(np.abs(spectral_projector(family, np.array(VERTICES_2D_ARR[name]))
                            @ frame - frame)))
        for name, frame in zip(names, vertex_frames)
    )
    return Z2Report(
        value=value,
        route="trim",
        winding=None,
        residuals={"unitary": unit, "symmetry": compat, "range": rng_res},
        grid=grid or {},
        per_vertex=per_vertex,
    )


VERTICES_2D_ARR = {name: np.array(v) for name, v in
                   {"v1": (0.0, 0.0), "v2": (0.0, -0.5),
                    "v3": (0.5, -0.5), "v4": (0.5, 0.0)}.items()}


# ---------------------------------------------------------------------------
# all routes from one transported frame
# ---------------------------------------------------------------------------

def z2_all_routes(
    family: ProjectorFamily,
    cell: EffectiveCell | int = 256,
    tols: Tolerances = Tolerances(),
) -> dict:
    """Degree, TRIM and Fu-Kane reports sharing a single transported frame."""
    if isinstance(cell, int):
        cell = EffectiveCell(edge_samples=cell)
    pipeline, used = winding_with_refinement(family, cell, tols=tols)
    degree = _degree_report(pipeline, used)
    frames_at_vertices = [pipeline.vertices[v]["frame"] for v in ("v1", "v2", "v3", "v4")]
    columns = {"0": pipeline.cylinder.values[0], "0.5": pipeline.cylinder.values[used.n]}
    trim = delta_trim(family, frames_at_vertices, eps=pipeline.eps, tols=tols,
                      edge_columns=columns, grid={"edge_samples": used.n})
    fu_kane = _fu_kane_from_cylinder(family, pipeline.cylinder, used, tols)
    return {"degree": degree, "trim": trim, "fu_kane": fu_kane}


# ---------------------------------------------------------------------------
# 3d: face invariants, strong/weak indices, orbit algebra
# ---------------------------------------------------------------------------

def z2_quadruple_3d(
    family: ProjectorFamily,
    cell: EffectiveCell | int = 128,
    tols: Tolerances = Tolerances(),
) -> Z2Quadruple:
    """Invariants of the four independent faces of a 3d family.

    The minus faces of axes 2 and 3 are always computed as well and
    compared with their plus partners as a built-in self check.
    """
    if isinstance(cell, int):
        cell = EffectiveCell(edge_samples=cell)
    if family.dimension != 3:
        raise ValueError("z2_quadruple_3d expects a 3d family")
    reports = {}
    for name, (axis, value) in FACE_DEFS.items():
        face_family = restrict_family(family, axis, value)
        try:
            reports[name] = delta_2d(face_family, cell, tols=tols)
        except (GapClosed, Aliasing) as exc:
            raise type(exc)(f"face {name}: {exc}") from exc
    deltas = tuple(reports[name].value for name in ("1,0", "1,+", "2,+", "3,+"))
    consistency = {
        "2": reports["2,+"].value == reports["2,-"].value,
        "3": reports["3,+"].value == reports["3,-"].value,
    }
    return Z2Quadruple(deltas=deltas, faces=reports, consistency=consistency)


def fkm_indices(deltas) -> tuple[int, tuple[int, int, int]]:
    """Strong and weak indices (nu0; nu1, nu2, nu3) of a quadruple."""
    d10, d1p, d2p, d3p = (int(d) % 2 for d in deltas)
    return (d10 + d1p) % 2, (d1p, d2p, d3p)


def gl3z_transform(deltas, generator: str):
    """Action of a lattice-basis relabeling generator on the quadruple."""
    d10, d1p, d2p, d3p = (int(d) % 2 for d in deltas)
    if generator == "s1":
        out = ((d10 + d1p + d2p) % 2, d2p, d3p, d1p)
    elif generator == "s2":
        out = ((d10 + d2p) % 2, (d1p + d2p) % 2, d2p, d3p)
    elif generator == "t":
        out = (d1p, d10, d2p, d3p)
    else:
        raise ValueError(f"unknown generator {generator!r}; use s1, s2 or t")
    return out


def classify_orbit(deltas) -> dict:
    """Orbit of the quadruple under relabelings, plus derived invariants.

    nu_tot = prod (1 + delta) mod 2 over all four entries; omega_hat =
    prod (1 + delta_{i,+}) mod 2 over the three plus faces (the factorized
    evaluation with the 0^0 = 1 convention).  Trivial quadruple iff
    nu0 = 0 and omega_hat = 1.
    """
    d = tuple(int(x) % 2 for x in deltas)
    nu0, _ = fkm_indices(d)
    nu_tot = int(np.prod([1 + x for x in d]) % 2)
    omega_hat = int(np.prod([1 + x for x in d[1:]]) % 2)
    if all(x == 0 for x in d):
        orbit = "O1"
    elif nu0 == 1:
        orbit = "O3"
    else:
        orbit = "O2"
    return {"orbit": orbit, "nu0": nu0, "nu_tot": nu_tot, "omega_hat": omega_hat,
            "trivial": nu0 == 0 and omega_hat == 1}


# ---------------------------------------------------------------------------
# homotopy invariance harness
# ---------------------------------------------------------------------------

def homotopy_invariance_check(
    families: list,
    cell: EffectiveCell | int = 128,
    tols: Tolerances = Tolerances(),
    n_norm_samples: int = 64,
    seed: int = 0,
    min_gap: float | None = None,
) -> dict:
    """Invariant along a path of gapped families, with step-size diagnostics.

    Computes the 2d invariant at every step and the largest operator-norm
    distance of consecutive projector families over random k; each
    consecutive pair is also fed to the Kato-Nagy construction, which
    raises TooFar if the step exceeds norm distance 1.  With ``min_gap``
    set, every family is first gap-scanned over a dense sample cloud and
    GapClosed (carrying the step index in its message) is raised when the
    observed gap dips below it.
    """
    if isinstance(cell, int):
        cell = EffectiveCell(edge_samples=cell)
    from .models import direct_gap  # local import to avoid a cycle at module load

    rng = np.random.default_rng(seed)
    dim = families[0].dimension
    ks = rng.uniform(-0.5, 0.5, size=(n_norm_samples, dim))
    gap_cloud = rng.uniform(-0.5, 0.5, size=(4096, dim))
    values = []
    gaps = []
    for step, fam in enumerate(families):
        gap = float(np.min(direct_gap(fam, gap_cloud)))
        gaps.append(gap)
        if min_gap is not None and gap < min_gap:
            raise GapClosed(f"gap {gap:.3e} below {min_gap:.1e} at path step {step}",
                            gap=gap)
        try:
            values.append(delta_2d(fam, cell, tols=tols).value)
        except GapClosed as exc:
            raise GapClosed(f"gap closed at path step {step}: {exc}",
                            k=exc.k, gap=exc.gap) from exc
    max_step_norm = 0.0
    for a, b in zip(families[:-1], families[1:]):
        pa = spectral_projector(a, ks)
        pb = spectral_projector(b, ks)
        norms = np.linalg.eigvalsh(pa - pb)
        max_step_norm = max(max_step_norm, float(np.max(np.abs(norms))))
        kato_nagy_intertwiner(pa[0], pb[0], tol_proj=tols.proj)
    return {
        "values": values,
        "constant": len(set(values)) == 1,
        "max_step_norm": max_step_norm,
        "min_gap": min(gaps),
    }


def runtime(fn, *args, **kwargs):
    """(result, seconds) of a call; used by the scan driver and tests."""
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0
