"""Constructive machinery for symmetric Bloch frames.

The pipeline on the half cell (k1 >= 0 part of the fundamental cell):
transport an input frame over a discretized cylinder, solve the
fixed-point conditions at the six time-reversal invariant momenta,
interpolate the resulting unitaries along three independent edges,
assemble the boundary frame by symmetry on the remaining three, read off
the boundary transition loop, and (when its determinant winding is even)
unwind and fill it to the interior.  Mirroring by time reversal and
translating by the lattice then yields a global symmetric frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    Aliasing,
    CompatibilityViolated,
    DegreeNonzero,
    ContractionFailure,
    LogBranch,
    NumericalFailure,
    Obstructed,
)
from .linalg import (
    LOG_MARGIN,
    EpsilonForm,
    PhaseLoop,
    Tolerances,
    epsilon_form,
    geodesic_unitary_path,
    loewdin_unitarize,
    random_unitary,
    symplectic_square_root,
    unitary_eig,
    winding_number,
)
from .models import ProjectorFamily, fix_eigenvector_phases, occupied_frame, spectral_projector

EDGE_NAMES = ("E1", "E2", "E3", "E4", "E5", "E6")

# vertices of the half cell and the lattice vectors fixing them under k -> -k
VERTICES_2D = {
    "v1": (0.0, 0.0),
    "v2": (0.0, -0.5),
    "v3": (0.5, -0.5),
    "v4": (0.5, 0.0),
    "v5": (0.5, 0.5),
    "v6": (0.0, 0.5),
}
VERTEX_LAMBDA_2D = {
    "v1": (0, 0),
    "v2": (0, -1),
    "v3": (1, -1),
    "v4": (1, 0),
    "v5": (1, 1),
    "v6": (0, 1),
}


@dataclass(frozen=True)
class EffectiveCell:
    """Discretization of the half cell, its vertices and oriented edges.

    ``edge_samples`` is the number of intervals per edge; the tensor grid
    over [0, 1/2] x [-1/2, 1/2] has (edge_samples + 1) x (2 edge_samples + 1)
    points with a square mesh of side 1 / (2 edge_samples).
    """

    edge_samples: int = 128
    dimension: int = 2

    def __post_init__(self):
        if self.edge_samples < 4:
            raise ValueError("edge_samples must be at least 4")

    @property
    def n(self) -> int:
        return self.edge_samples

    @property
    def step(self) -> float:
        return 0.5 / self.edge_samples

    @property
    def k1_axis(self) -> np.ndarray:
        return np.linspace(0.0, 0.5, self.n + 1)

    @property
    def k2_axis(self) -> np.ndarray:
        return np.linspace(-0.5, 0.5, 2 * self.n + 1)

    def grid_ks(self) -> np.ndarray:
        """All grid points, shape (n+1, 2n+1, 2)."""
        k1, k2 = np.meshgrid(self.k1_axis, self.k2_axis, indexing="ij")
        return np.stack([k1, k2], axis=-1)

    def full_cell_ks(self) -> np.ndarray:
        """Grid over the full cell [-1/2, 1/2]^2, shape (2n+1, 2n+1, 2)."""
        ax = self.k2_axis
        k1, k2 = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([k1, k2], axis=-1)

    def vertex_index(self, name: str) -> tuple[int, int]:
        n = self.n
        return {
            "v1": (0, n), "v2": (0, 0), "v3": (n, 0),
            "v4": (n, n), "v5": (n, 2 * n), "v6": (0, 2 * n),
        }[name]

    def edge_indices(self, edge: str) -> tuple[np.ndarray, np.ndarray]:
        """Grid indices along an oriented edge, both endpoints included."""
        n = self.n
        p = np.arange(n + 1)
        table = {
            "E1": (np.zeros(n + 1, int), n - p),
            "E2": (p, np.zeros(n + 1, int)),
            "E3": (np.full(n + 1, n), p),
            "E4": (np.full(n + 1, n), n + p),
            "E5": (n - p, np.full(n + 1, 2 * n)),
            "E6": (np.zeros(n + 1, int), 2 * n - p),
        }
        return table[edge]

    def edge_ks(self, edge: str) -> np.ndarray:
        ii, jj = self.edge_indices(edge)
        return np.stack([self.k1_axis[ii], self.k2_axis[jj]], axis=-1)

    def boundary_indices(self) -> tuple[np.ndarray, np.ndarray]:
        """Closed boundary walk v1 -> E1 -> ... -> E6 -> v1, last = first."""
        iis, jjs = [], []
        for edge in EDGE_NAMES:
            ii, jj = self.edge_indices(edge)
            iis.append(ii[:-1])
            jjs.append(jj[:-1])
        ii = np.concatenate(iis + [iis[0][:1]])
        jj = np.concatenate(jjs + [jjs[0][:1]])
        return ii, jj


@dataclass
class FrameField:
    """Orthonormal frames attached to a set of k points.

    ``ks`` has shape (..., d) and ``values`` shape (..., N, m) over the
    same leading axes.  ``meta`` carries grid/residual bookkeeping.
    """

    ks: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def orthonormality_residual(self) -> float:
        v = self.values
        m = v.shape[-1]
        gram = np.swapaxes(v.conj(), -1, -2) @ v
        return float(np.max(np.abs(gram - np.eye(m))))

    def range_residual(self, family: ProjectorFamily) -> float:
        p = spectral_projector(family, self.ks)
        return float(np.max(np.abs(p @ self.values - self.values)))


def frame_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Frobenius distance between stacked frames (leading axes kept)."""
    return np.linalg.norm(a - b, axis=(-2, -1))


def max_adjacent_distance(values: np.ndarray) -> float:
    """Largest frame distance between grid neighbours of a 2d grid field."""
    d1 = frame_distance(values[1:], values[:-1])
    d2 = frame_distance(values[:, 1:], values[:, :-1])
    return float(max(d1.max(), d2.max()))


# ---------------------------------------------------------------------------
# input frame transport (cylinder gauge)
# ---------------------------------------------------------------------------

def transport_line(family: ProjectorFamily, ks: np.ndarray, start: np.ndarray,
                   tol_rank: float = 1e-8) -> np.ndarray:
    """Discrete parallel transport of a frame along a 1d chain of k points."""
    out = np.empty(ks.shape[:-1] + start.shape, dtype=complex)
    out[0] = start
    projs = spectral_projector(family, ks)
    for step in range(1, ks.shape[0]):
        out[step] = loewdin_unitarize(projs[step] @ out[step - 1], tol_rank=tol_rank)
    return out


def transport_input_frame(
    family: ProjectorFamily,
    cell: EffectiveCell,
    tols: Tolerances = Tolerances(),
) -> FrameField:
    """Continuous input frame on the discretized cylinder [0,1/2] x [-1/2,1/2].

    The base frame at (0,-1/2) comes from sorted eigenvectors with a
    deterministic phase fix; the k2 column at k1 = 0 is parallel
    transported and then corrected by distributing the eigenphases of the
    translation holonomy, so that the top row equals tau(e2) applied to
    the bottom row; all rows are then transported in k1.
    """
    n = cell.n
    ks = cell.grid_ks()
    base = fix_eigenvector_phases(occupied_frame(family, ks[0, 0]))

    # transport up the k1 = 0 column, then enforce translation equivariance
    col = transport_line(family, ks[0], base, tol_rank=tols.rank)
    tau_e2 = family.tau((0, 1))
    target = tau_e2 @ col[0]
    mism = loewdin_unitarize(col[-1].conj().T @ target, tol_rank=tols.rank)
    phases, z = unitary_eig(mism)
    s_param = (cell.k2_axis + 0.5)  # 0 at the bottom, 1 at the top
    corr = np.einsum("ab,jb,cb->jac", z, np.exp(1j * np.outer(s_param, phases)), z.conj())
    col = col @ corr
    col[-1] = target  # exact seam so the top rows are exact tau translates

    values = np.empty((n + 1, 2 * n + 1) + base.shape, dtype=complex)
    values[0] = col
    range_resid = 0.0
    for i in range(1, n + 1):
        projs = spectral_projector(family, ks[i])
        values[i] = loewdin_unitarize(projs @ values[i - 1], tol_rank=tols.rank)
        range_resid = max(range_resid, float(np.max(np.abs(projs @ values[i] - values[i]))))

    seam = float(np.max(np.abs(values[:, -1] - np.einsum("ab,ibm->iam", tau_e2, values[:, 0]))))
    if seam > tols.sym:
        raise NumericalFailure(f"cylinder seam residual {seam:.3e} exceeds tolerance")

    meta = {
        "cell": cell,
        "seam_residual": seam,
        "range_residual": range_resid,
        "max_adjacent_distance": max_adjacent_distance(values),
    }
    return FrameField(ks=ks, values=values, meta=meta)


def apply_gauge(frame_field: FrameField, gauge_fn) -> FrameField:
    """Right-multiply a frame field by a k-dependent unitary gauge."""
    g = gauge_fn(frame_field.ks)
    return FrameField(ks=frame_field.ks, values=frame_field.values @ g,
                      meta=dict(frame_field.meta))


# ---------------------------------------------------------------------------
# vertex conditions
# ---------------------------------------------------------------------------

def obstruction_unitary(
    family: ProjectorFamily,
    frame: np.ndarray,
    lam,
    eps: EpsilonForm,
    tols: Tolerances = Tolerances(),
) -> np.ndarray:
    """Unitary relating a vertex frame to its time-reversal translate.

    Returns u with frame <| u = tau(lam) Theta(frame) <| eps, i.e.
    u = frame^dagger tau(lam) Theta(frame) eps.  The result must commute
    with the skew form as u^T eps = eps u.
    """
    tau = family.tau(lam)
    u = frame.conj().T @ (tau @ family.theta_frame(frame)) @ eps.matrix
    m = u.shape[0]
    if np.max(np.abs(u.conj().T @ u - np.eye(m))) > max(tols.unitary, 1e-12) * 1e3:
        raise CompatibilityViolated("obstruction matrix is not unitary; frame corrupted")
    if np.max(np.abs(u.T @ eps.matrix - eps.matrix @ u)) > tols.sym:
        raise CompatibilityViolated("obstruction matrix violates the skew-form relation")
    return u


def solve_vertex_conditions(
    family: ProjectorFamily,
    cylinder: FrameField,
    cell: EffectiveCell,
    eps: EpsilonForm,
    tols: Tolerances = Tolerances(),
) -> dict:
    """Obstruction unitaries and their symplectic square roots at v1..v4."""
    out = {}
    for name in ("v1", "v2", "v3", "v4"):
        i, j = cell.vertex_index(name)
        frame = cylinder.values[i, j]
        u_obs = obstruction_unitary(family, frame, VERTEX_LAMBDA_2D[name], eps, tols)
        u = symplectic_square_root(u_obs, eps, tol_sym=tols.sym)
        out[name] = {"frame": frame, "u_obs": u_obs, "u": u}
    return out


# ---------------------------------------------------------------------------
# edges and boundary
# ---------------------------------------------------------------------------

def interpolate_edges(vertex_unitaries, cell: EffectiveCell, detours=None) -> dict:
    """Geodesic interpolation of the vertex unitaries along E1, E2, E3.

    ``vertex_unitaries`` maps "v1".."v4" to unitary matrices.  ``detours``
    optionally maps edge names to callables s -> stack of unitaries equal
    to the identity at s = 0 and s = 1; they multiply the geodesic to
    realize a different choice of interpolation.
    """
    n = cell.n
    s = np.arange(n + 1) / n
    ends = {"E1": ("v1", "v2"), "E2": ("v2", "v3"), "E3": ("v3", "v4")}
    out = {}
    for edge, (a, b) in ends.items():
        path = geodesic_unitary_path(vertex_unitaries[a], vertex_unitaries[b], s)
        if detours and edge in detours:
            path = path @ detours[edge](s)
        out[edge] = path
    return out


def assemble_boundary_frame(
    cylinder: FrameField,
    u_tilde: dict,
    family: ProjectorFamily,
    cell: EffectiveCell,
    eps: EpsilonForm,
) -> dict:
    """Boundary frame on all six edges (path order).

    On E1, E2, E3 the interpolated unitaries act on the input frame; E4,
    E5, E6 are filled in by the time-reversal and translation images of
    E3, E2, E1 so every edge symmetry holds by construction.
    """
    psi = {edge: cylinder.values[cell.edge_indices(edge)] for edge in EDGE_NAMES}
    phi = {}
    for edge in ("E1", "E2", "E3"):
        phi[edge] = psi[edge] @ u_tilde[edge]

    tau_e1 = family.tau((1, 0))
    tau_e2 = family.tau((0, 1))
    rev = slice(None, None, -1)
    # E4(p) at (1/2, p h) is the tau_e1 Theta image of E3 at (1/2, -p h)
    src = phi["E3"][rev]
    phi["E4"] = np.einsum("ab,pbm->pam", tau_e1, family.theta_frame(src)) @ eps.matrix
    # E5(p) at (1/2 - p h, 1/2) is the tau_e2 translate of E2 at (1/2 - p h, -1/2)
    phi["E5"] = np.einsum("ab,pbm->pam", tau_e2, phi["E2"][rev])
    # E6(p) at (0, 1/2 - p h) is the Theta image of E1 at (0, p h - 1/2)
    phi["E6"] = family.theta_frame(phi["E1"][rev]) @ eps.matrix
    return phi


@dataclass
class TransitionLoop:
    """Unitary samples along the closed boundary of the half cell."""

    cell: EffectiveCell
    edges: dict

    def vertex_mismatch(self) -> float:
        """Largest jump between consecutive edges at their shared vertex."""
        worst = 0.0
        for idx, edge in enumerate(EDGE_NAMES):
            nxt = EDGE_NAMES[(idx + 1) % 6]
            worst = max(worst, float(np.max(np.abs(self.edges[edge][-1] - self.edges[nxt][0]))))
        return worst

    def loop_samples(self) -> np.ndarray:
        """Closed walk with shared vertices deduplicated, last = first."""
        parts = [self.edges[edge][:-1] for edge in EDGE_NAMES]
        parts.append(self.edges["E1"][:1])
        return np.concatenate(parts, axis=0)

    def det_loop(self) -> PhaseLoop:
        dets = np.linalg.det(self.loop_samples())
        return PhaseLoop(samples=dets / np.abs(dets))

    def winding(self, margin: float | None = None) -> int:
        kw = {} if margin is None else {"margin": margin}
        return winding_number(self.det_loop().samples, **kw)

    def __matmul__(self, other: "TransitionLoop") -> "TransitionLoop":
        if other.cell.n != self.cell.n:
            raise ValueError("loops live on different discretizations")
        edges = {edge: self.edges[edge] @ other.edges[edge] for edge in EDGE_NAMES}
        return TransitionLoop(cell=self.cell, edges=edges)


def boundary_transition(
    cylinder: FrameField,
    phi_hat: dict,
    cell: EffectiveCell,
    tols: Tolerances = Tolerances(),
) -> TransitionLoop:
    """Frame change from the input frame to the boundary frame, per edge."""
    edges = {}
    for edge in EDGE_NAMES:
        psi = cylinder.values[cell.edge_indices(edge)]
        u = np.swapaxes(psi.conj(), -1, -2) @ phi_hat[edge]
        m = u.shape[-1]
        resid = np.max(np.abs(np.swapaxes(u.conj(), -1, -2) @ u - np.eye(m)))
        if resid > max(tols.unitary, 1e-12) * 1e3:
            raise NumericalFailure(f"transition on {edge} not unitary ({resid:.2e})")
        edges[edge] = u
    return TransitionLoop(cell=cell, edges=edges)


def unwind_loop(s: int, cell: EffectiveCell, eps: EpsilonForm, m: int) -> TransitionLoop:
    """Symmetry-compatible loop whose determinant winds by -2 s.

    Identity except on E3 and E4, where the leading Kramers pair carries
    the phase exp(-2 pi i s (k2 + 1/2)); requires the block layout of the
    skew form and m >= 2.  Restricted to the vertices it is unimodular.
    """
    if eps.layout != "blocks":
        raise ValueError("unwinding requires the block-diagonal skew form")
    if m < 2:
        raise ValueError("unwinding needs at least one Kramers pair")
    n = cell.n
    eye = np.broadcast_to(np.eye(m, dtype=complex), (n + 1, m, m)).copy()
    edges = {edge: eye.copy() for edge in EDGE_NAMES}
    for edge, k2 in (("E3", -0.5 + np.arange(n + 1) / (2 * n)),
                     ("E4", np.arange(n + 1) / (2 * n))):
        z = np.exp(-2j * np.pi * s * (k2 + 0.5))
        block = eye.copy()
        block[:, 0, 0] = z
        block[:, 1, 1] = z
        edges[edge] = block
    return TransitionLoop(cell=cell, edges=edges)


# ---------------------------------------------------------------------------
# filling the interior of the half cell
# ---------------------------------------------------------------------------

_CORE_RADIUS = 0.5
"""Square radius below which the filled field is already constant."""


class _LoopInterpolant:
    """Geodesic interpolation between adjacent samples of a unitary loop.

    Provides point evaluation and the continuous (unwrapped) determinant
    phase at arbitrary loop parameter theta in [0, L], where L is the
    number of segments.
    """

    def __init__(self, samples: np.ndarray):
        self.samples = samples
        self.length = samples.shape[0] - 1
        self.m = samples.shape[-1]
        mus, zs = [], []
        for j in range(self.length):
            step = samples[j].conj().T @ samples[j + 1]
            mu, z = unitary_eig(step)
            mus.append(mu)
            zs.append(z)
        self.mu = np.array(mus)  # (L, m) principal phases of each step
        self.z = np.array(zs)    # (L, m, m)
        inc = self.mu.sum(axis=1)
        phi0 = float(np.angle(np.linalg.det(samples[0])))
        self.phi = np.concatenate([[phi0], phi0 + np.cumsum(inc)])
        self.winding = int(round((self.phi[-1] - self.phi[0]) / (2 * np.pi)))

    def _split(self, theta):
        theta = np.asarray(theta, dtype=float)
        j = np.clip(np.floor(theta).astype(int), 0, self.length - 1)
        return j, theta - j

    def value(self, theta) -> np.ndarray:
        j, t = self._split(theta)
        phase = np.exp(1j * t[..., None] * self.mu[j])
        rot = np.einsum("...ab,...b,...cb->...ac", self.z[j], phase, self.z[j].conj())
        return self.samples[j] @ rot

    def det_phase(self, theta) -> np.ndarray:
        j, t = self._split(theta)
        return self.phi[j] + t * self.mu[j].sum(axis=-1)


def _column_reduction_power(w: np.ndarray, s) -> np.ndarray:
    """Partial rotation G^s moving unit vectors w toward the last basis axis.

    G is the special-unitary plane rotation taking w to e_last inside
    span{w, e_last}; the power interpolates it from the identity.  Batched
    over the leading axes of ``w``; requires |<e_last, w>| bounded away
    from 1 unless w is already aligned with +e_last.
    """
    w = np.asarray(w, dtype=complex)
    mdim = w.shape[-1]
    alpha = w[..., -1]
    rvec = w.copy()
    rvec[..., -1] = 0.0
    rho = np.linalg.norm(rvec, axis=-1)
    safe = np.maximum(rho, 1e-300)
    p = rvec / safe[..., None]

    cosw = np.clip(alpha.real, -1.0, 1.0)
    omega = np.arccos(cosw)
    sinw = np.sin(omega)
    tiny = sinw < 1e-14
    sin_safe = np.where(tiny, 1.0, sinw)
    n2 = np.where(tiny, 0.0, rho / sin_safe)
    n3 = np.where(tiny, 0.0, -alpha.imag / sin_safe)

    ang = np.asarray(s, dtype=float) * omega
    g11 = np.cos(ang) + 1j * n3 * np.sin(ang)
    g12 = n2 * np.sin(ang)

    eye = np.broadcast_to(np.eye(mdim, dtype=complex), w.shape + (mdim,)).copy()
    e_outer_e = np.zeros_like(eye)
    e_outer_e[..., -1, -1] = 1.0
    e_outer_p = np.zeros_like(eye)
    e_outer_p[..., -1, :] = p.conj()
    p_outer_e = np.zeros_like(eye)
    p_outer_e[..., :, -1] = p
    p_outer_p = p[..., :, None] * p.conj()[..., None, :]
    return (
        eye
        + (g11 - 1.0)[..., None, None] * e_outer_e
        + g12[..., None, None] * e_outer_p
        - g12[..., None, None] * p_outer_e
        + (np.conj(g11) - 1.0)[..., None, None] * p_outer_p
    )


def _find_pre_rotations(interp: _LoopInterpolant, m: int, seed: int,
                        margin_min: float, tries: int):
    """Constant rotations, one per reduction level, keeping each column
    loop away from the circle of multiples of the target axis."""
    rng = np.random.default_rng(seed)
    thetas = np.concatenate([np.arange(interp.length), np.arange(interp.length) + 0.5])
    v_cur = np.exp(-1j * interp.det_phase(thetas) / m)[:, None, None] * interp.value(thetas)
    rotations = []
    for level in range(m, 1, -1):
        found = None
        for attempt in range(tries):
            cand = np.eye(level, dtype=complex) if attempt == 0 else random_unitary(level, rng)
            cand = cand / np.linalg.det(cand) ** (1.0 / level)
            margin = 1.0 - np.max(np.abs((cand @ v_cur)[..., -1, -1]))
            # the column loop is the last column of cand @ v_cur; its overlap
            # with the axis is the bottom-right entry
            if margin >= margin_min:
                found = cand
                break
        if found is None:
            raise ContractionFailure(
                f"no pre-rotation with margin >= {margin_min} at level {level}"
            )
        rotations.append(found)
        acted = found @ v_cur
        g_full = _column_reduction_power(acted[..., :, -1], 1.0)
        v_cur = (g_full @ acted)[..., : level - 1, : level - 1]
    return rotations


def _evaluate_fill(interp: _LoopInterpolant, rotations, m: int, phi_mean: float,
                   thetas: np.ndarray, u_params: np.ndarray) -> np.ndarray:
    """Evaluate the radial contraction at loop parameters and depths.

    ``u_params`` in [0, m]: 0 is the boundary, [0,1] contracts the
    determinant phase to its mean, and each following unit interval
    performs one column reduction.
    """
    out = np.empty(thetas.shape + (m, m), dtype=complex)
    stage = np.minimum(np.floor(u_params).astype(int), m - 1)
    s_local = u_params - stage

    for st in np.unique(stage):
        sel = stage == st
        th = thetas[sel]
        s = s_local[sel]
        u_val = interp.value(th)
        phi = interp.det_phase(th)
        if st == 0:
            target = (1.0 - s) * phi + s * phi_mean
            out[sel] = np.exp(1j * (target - phi) / m)[:, None, None] * u_val
            continue
        v = np.exp(-1j * phi / m)[:, None, None] * u_val
        applied = []
        x = None
        for idx, level in enumerate(range(m, 1, -1)):
            rot = rotations[idx]
            acted = rot @ v
            in_progress = level == m - st + 1
            power = s if in_progress else 1.0
            g = _column_reduction_power(acted[..., :, -1], power)
            res = g @ acted
            if in_progress:
                x = np.swapaxes(rot.conj(), -1, -2) @ res
                break
            applied.append(rot)
            v = res[..., : level - 1, : level - 1]
        for rot in reversed(applied):
            size = x.shape[-1] + 1
            emb = np.zeros(x.shape[:-2] + (size, size), dtype=complex)
            emb[..., : size - 1, : size - 1] = x
            emb[..., size - 1, size - 1] = 1.0
            x = np.swapaxes(rot.conj(), -1, -2) @ emb @ rot
        out[sel] = np.exp(1j * phi_mean / m) * x
    return out


def _grid_polar_params(cell: EffectiveCell):
    """Square-radial coordinates (u = 0 boundary ... center) per grid point.

    Returns (theta, rho) with theta the fractional boundary-walk index in
    [0, 6n) and rho in [0, 1]; the center maps to rho 0, theta 0.
    """
    n = cell.n
    x, y = np.meshgrid(np.arange(n + 1, dtype=float),
                       np.arange(2 * n + 1, dtype=float), indexing="ij")
    dx = (x - n / 2.0) / (n / 2.0)
    dy = (y - float(n)) / float(n)
    rho = np.maximum(np.abs(dx), np.abs(dy))
    safe = np.maximum(rho, 1e-300)
    xb = n / 2.0 + (x - n / 2.0) / safe
    yb = float(n) + (y - float(n)) / safe

    theta = np.zeros_like(rho)
    horizontal = np.abs(dx) >= np.abs(dy)
    left = horizontal & (dx < 0)
    right = horizontal & (dx >= 0)
    bottom = ~horizontal & (dy < 0)
    top = ~horizontal & (dy >= 0)
    theta[left & (yb <= n)] = (n - yb)[left & (yb <= n)]
    theta[left & (yb > n)] = (5 * n + (2 * n - yb))[left & (yb > n)]
    theta[bottom] = (n + xb)[bottom]
    theta[right & (yb <= n)] = (2 * n + yb)[right & (yb <= n)]
    theta[right & (yb > n)] = (3 * n + (yb - n))[right & (yb > n)]
    theta[top] = (4 * n + (n - xb))[top]
    theta[rho < 1e-12] = 0.0
    theta = np.mod(theta, 6 * n)
    return theta, rho


def fill_disc(
    loop: TransitionLoop,
    cell: EffectiveCell,
    seed: int = 0,
    margin_min: float = 0.02,
    tries: int = 64,
) -> np.ndarray:
    """Continuous unitary field on the half cell restricting to ``loop``.

    The loop (which must have zero determinant winding) is contracted
    radially toward the cell center: first the determinant phase is
    flattened to its mean, then one column at a time is rotated onto a
    fixed axis after a constant pre-rotation that keeps the column away
    from the axis' antipodal circle.  Returns the (n+1, 2n+1, m, m)
    unitary field over the tensor grid.

    Raises DegreeNonzero when the winding is not zero and
    ContractionFailure when no admissible pre-rotation is found.
    """
    samples = loop.loop_samples()
    m = samples.shape[-1]
    n = cell.n
    if np.max(np.abs(samples - samples[0])) < 1e-12:
        # constant loops extend by the constant field
        return np.broadcast_to(samples[0], (n + 1, 2 * n + 1, m, m)).copy()
    interp = _LoopInterpolant(samples)
    if interp.winding != 0:
        raise DegreeNonzero(f"loop determinant winds {interp.winding}, cannot fill")
    phi_mean = float(np.mean(interp.phi[:-1]))
    rotations = _find_pre_rotations(interp, m, seed, margin_min, tries)

    theta, rho = _grid_polar_params(cell)
    # the contraction lives in the outer radial band; inside it the field is
    # constant, which keeps the ray-projection drift of theta bounded
    u_params = m * np.clip((1.0 - rho) / (1.0 - _CORE_RADIUS), 0.0, 1.0)
    flat = _evaluate_fill(interp, rotations, m, phi_mean,
                          theta.ravel(), u_params.ravel())
    return flat.reshape(theta.shape + (m, m))


# ---------------------------------------------------------------------------
# full 2d pipeline
# ---------------------------------------------------------------------------

@dataclass
class BoundaryPipeline:
    """Everything produced on the way to the boundary transition loop."""

    family: ProjectorFamily
    cell: EffectiveCell
    eps: EpsilonForm
    cylinder: FrameField
    vertices: dict
    u_tilde: dict
    phi_hat: dict
    transition: TransitionLoop
    winding: int
    diagnostics: dict


def run_boundary_pipeline(
    family: ProjectorFamily,
    cell: EffectiveCell,
    eps: EpsilonForm | None = None,
    tols: Tolerances = Tolerances(),
    gauge=None,
    detours=None,
) -> BoundaryPipeline:
    """Transport, vertex solve, interpolation, boundary assembly, winding.

    ``gauge`` optionally right-multiplies the transported input frame by a
    periodic unitary field before the construction (used by the
    well-posedness tests); ``detours`` reshapes the edge interpolation.
    """
    if family.dimension != 2:
        raise ValueError("the boundary pipeline runs on 2d families")
    if eps is None:
        eps = epsilon_form(family.rank)
    cylinder = transport_input_frame(family, cell, tols=tols)
    if gauge is not None:
        cylinder = apply_gauge(cylinder, gauge)
    vertices = solve_vertex_conditions(family, cylinder, cell, eps, tols=tols)
    u_tilde = interpolate_edges({v: vertices[v]["u"] for v in vertices}, cell, detours=detours)
    phi_hat = assemble_boundary_frame(cylinder, u_tilde, family, cell, eps)
    transition = boundary_transition(cylinder, phi_hat, cell, tols=tols)
    winding = transition.winding(margin=tols.winding_margin)

    diagnostics = {
        "seam_residual": cylinder.meta.get("seam_residual", 0.0),
        "range_residual": cylinder.meta.get("range_residual", 0.0),
        "vertex_mismatch": transition.vertex_mismatch(),
        "edge_symmetry_residual": edge_symmetry_residuals(phi_hat, family, eps, cell),
        "vertex_condition_residual": _vertex_condition_residuals(
            phi_hat, family, cell, eps
        ),
    }
    return BoundaryPipeline(
        family=family, cell=cell, eps=eps, cylinder=cylinder, vertices=vertices,
        u_tilde=u_tilde, phi_hat=phi_hat, transition=transition, winding=winding,
        diagnostics=diagnostics,
    )


def edge_symmetry_residuals(phi_hat: dict, family: ProjectorFamily,
                            eps: EpsilonForm, cell: EffectiveCell) -> float:
    """Worst violation of the four boundary symmetry relations."""
    rev = slice(None, None, -1)
    tau_e1 = family.tau((1, 0))
    tau_e2 = family.tau((0, 1))
    th = family.theta_frame
    checks = [
        # E6 against E1 under k -> -k
        phi_hat["E6"] - th(phi_hat["E1"][rev]) @ eps.matrix,
        # E5 against E2 under translation by e2
        phi_hat["E5"] - np.einsum("ab,pbm->pam", tau_e2, phi_hat["E2"][rev]),
        # E4 against E3 under translation+inversion
        phi_hat["E4"] - np.einsum("ab,pbm->pam", tau_e1, th(phi_hat["E3"][rev])) @ eps.matrix,
        # E1 against E6 (inverse relation, exercises both orientations)
        phi_hat["E1"] - th(phi_hat["E6"][rev]) @ eps.matrix,
    ]
    return float(max(np.max(np.abs(c)) for c in checks))


def _vertex_condition_residuals(phi_hat: dict, family: ProjectorFamily,
                                cell: EffectiveCell, eps: EpsilonForm) -> float:
    """Worst violation of the fixed-point condition at the six vertices."""
    endpoint = {
        "v1": ("E1", 0), "v2": ("E2", 0), "v3": ("E3", 0),
        "v4": ("E4", 0), "v5": ("E5", 0), "v6": ("E6", 0),
    }
    worst = 0.0
    for name, (edge, pos) in endpoint.items():
        frame = phi_hat[edge][pos]
        tau = family.tau(VERTEX_LAMBDA_2D[name])
        image = tau @ family.theta_frame(frame) @ eps.matrix
        worst = max(worst, float(np.max(np.abs(frame - image))))
    return worst


def winding_with_refinement(
    family: ProjectorFamily,
    cell: EffectiveCell,
    eps: EpsilonForm | None = None,
    tols: Tolerances = Tolerances(),
    gauge=None,
    detours=None,
    max_edge_samples: int = 2 ** 14,
):
    """Run the boundary pipeline, doubling the resolution on aliasing.

    Returns (pipeline, cell_actually_used).  Re-raises Aliasing once the
    edge-sample cap is exceeded.
    """
    current = cell
    while True:
        try:
            return run_boundary_pipeline(family, current, eps=eps, tols=tols,
                                         gauge=gauge, detours=detours), current
        except Aliasing:
            if 2 * current.n > max_edge_samples:
                raise
            current = EffectiveCell(edge_samples=2 * current.n)


# ---------------------------------------------------------------------------
# symmetric frames in 1d and 2d
# ---------------------------------------------------------------------------

def symmetric_frame_1d(
    family: ProjectorFamily,
    n_samples: int = 128,
    eps: EpsilonForm | None = None,
    tols: Tolerances = Tolerances(),
) -> FrameField:
    """Global symmetric frame for a 1d family on [-1/2, 1/2].

    There is no obstruction in one dimension: transport on [-1/2, 0],
    solve the endpoint conditions, interpolate the correction, and mirror
    by time reversal.  The returned field satisfies the fixed-point
    conditions at both momenta and extends to the line by translates.
    """
    if family.dimension != 1:
        raise ValueError("symmetric_frame_1d expects a 1d family")
    if eps is None:
        eps = epsilon_form(family.rank)
    n = n_samples
    ks_full = np.linspace(-0.5, 0.5, 2 * n + 1)[:, None]
    ks_eff = ks_full[: n + 1]

    base = fix_eigenvector_phases(occupied_frame(family, ks_eff[0]))
    psi = transport_line(family, ks_eff, base, tol_rank=tols.rank)

    u_obs_l = obstruction_unitary(family, psi[0], (-1,), eps, tols)
    u_obs_r = obstruction_unitary(family, psi[-1], (0,), eps, tols)
    u_l = symplectic_square_root(u_obs_l, eps, tol_sym=tols.sym)
    u_r = symplectic_square_root(u_obs_r, eps, tol_sym=tols.sym)
    path = geodesic_unitary_path(u_l, u_r, np.arange(n + 1) / n)
    phi_eff = psi @ path

    values = np.empty((2 * n + 1,) + phi_eff.shape[1:], dtype=complex)
    values[: n + 1] = phi_eff
    for j in range(n + 1, 2 * n + 1):
        values[j] = family.theta_frame(values[2 * n - j]) @ eps.matrix

    field = FrameField(ks=ks_full, values=values, meta={})
    field.meta.update(_symmetric_frame_1d_report(field, family, eps))
    return field


def _symmetric_frame_1d_report(field: FrameField, family: ProjectorFamily,
                               eps: EpsilonForm) -> dict:
    values, n2 = field.values, field.values.shape[0] - 1
    trs = max(
        float(np.max(np.abs(values[n2 - j] - family.theta_frame(values[j]) @ eps.matrix)))
        for j in range(n2 + 1)
    )
    tau = family.tau((1,))
    per = float(np.max(np.abs(values[-1] - tau @ values[0])))
    d = frame_distance(values[1:], values[:-1])
    return {
        "trs_residual": trs,
        "periodicity_residual": per,
        "orthonormality_residual": field.orthonormality_residual(),
        "range_residual": field.range_residual(family),
        "max_adjacent_distance": float(d.max()),
    }


def symmetric_frame_2d(
    family: ProjectorFamily,
    cell: EffectiveCell,
    eps: EpsilonForm | None = None,
    tols: Tolerances = Tolerances(),
    fill_seed: int = 0,
) -> FrameField:
    """Global continuous symmetric frame on the full cell, if unobstructed.

    Runs the boundary pipeline; with even boundary winding 2 s, multiplies
    by the unwinding loop, fills the resulting degree-zero loop over the
    half cell, and mirrors through time reversal to the full cell
    [-1/2,1/2]^2.  Raises Obstructed when the invariant is 1.
    """
    pipeline, cell = winding_with_refinement(family, cell, eps=eps, tols=tols)
    eps = pipeline.eps
    if pipeline.winding % 2 != 0:
        raise Obstructed(
            "nonzero Z2 obstruction: boundary winding is odd",
            report={"winding": pipeline.winding, "delta": 1,
                    "diagnostics": pipeline.diagnostics},
        )
    s = pipeline.winding // 2
    loop = pipeline.transition @ unwind_loop(s, cell, eps, family.rank)
    u_fill = fill_disc(loop, cell, seed=fill_seed)
    phi_eff = pipeline.cylinder.values @ u_fill

    n = cell.n
    nn = 2 * n
    n_amb, m = phi_eff.shape[-2:]
    values = np.empty((nn + 1, nn + 1, n_amb, m), dtype=complex)
    values[n:] = phi_eff
    # left half: Phi(k) = Theta Phi(-k) <| eps with -k in the half cell
    for i in range(n):
        values[i] = family.theta_frame(phi_eff[n - i, ::-1]) @ eps.matrix

    field = FrameField(ks=cell.full_cell_ks(), values=values, meta={})
    field.meta.update(_symmetric_frame_2d_report(field, family, eps))
    field.meta["winding"] = pipeline.winding
    field.meta["cell"] = cell
    field.meta["pipeline_diagnostics"] = pipeline.diagnostics
    field.meta["boundary_residual"] = float(
        np.max(np.abs(u_fill[cell.boundary_indices()] - loop.loop_samples()))
    )
    return field


def _symmetric_frame_2d_report(field: FrameField, family: ProjectorFamily,
                               eps: EpsilonForm) -> dict:
    values = field.values
    nn = values.shape[0] - 1
    mirrored = family.theta_frame(values[::-1, ::-1]) @ eps.matrix
    trs = float(np.max(np.abs(values - mirrored)))
    tau_e1 = family.tau((1, 0))
    tau_e2 = family.tau((0, 1))
    per = max(
        float(np.max(np.abs(values[-1] - np.einsum("ab,jbm->jam", tau_e1, values[0])))),
        float(np.max(np.abs(values[:, -1] - np.einsum("ab,ibm->iam", tau_e2, values[:, 0])))),
    )
    return {
        "trs_residual": trs,
        "periodicity_residual": per,
        "orthonormality_residual": field.orthonormality_residual(),
        "range_residual": field.range_residual(family),
        "max_adjacent_distance": max_adjacent_distance(values),
    }


def extend_frame_value(field: FrameField, family: ProjectorFamily, k) -> np.ndarray:
    """Value of the global frame at any k on the extended grid.

    Reduces k to the fundamental cell by an integer translation and
    applies tau; k must land on a grid point of ``field``.
    """
    k = np.asarray(k, dtype=float)
    lam = np.round(k).astype(int)
    k_red = k - lam
    ks = field.ks
    flat = ks.reshape(-1, ks.shape[-1])
    idx = np.argmin(np.linalg.norm(flat - k_red, axis=1))
    if np.linalg.norm(flat[idx] - k_red) > 1e-9:
        raise ValueError(f"{k} does not reduce to a grid point")
    value = field.values.reshape((-1,) + field.values.shape[-2:])[idx]
    return family.tau(lam) @ value


# ---------------------------------------------------------------------------
# midpoint symmetrization
# ---------------------------------------------------------------------------

def frame_midpoint(a: np.ndarray, b: np.ndarray, log_margin: float = LOG_MARGIN
                   ) -> np.ndarray:
    """Midpoint of two nearby frames spanning the same space.

    With b = a <| u, returns a <| exp(log(u) / 2) using the principal
    logarithm; raises LogBranch when u has an eigenvalue within
    ``log_margin`` of -1.
    """
    u = loewdin_unitarize(a.conj().T @ b)
    phases, z = unitary_eig(u)
    if np.max(np.abs(phases)) > np.pi - log_margin:
        raise LogBranch("frames too far apart: eigenvalue near -1 in the midpoint")
    half = (z * np.exp(0.5j * phases)) @ z.conj().T
    return a @ half


def midpoint_symmetrize(
    field: FrameField,
    family: ProjectorFamily,
    eps: EpsilonForm,
    log_margin: float = LOG_MARGIN,
) -> FrameField:
    """Average a frame field with its time-reversal image.

    The grid must be stable under k -> -k.  The output satisfies the
    time-reversal compatibility exactly (up to floating point), moves each
    frame by at most its own symmetry defect, and preserves translation
    equivariance when the input has it.
    """
    ks = field.ks.reshape(-1, field.ks.shape[-1])
    vals = field.values.reshape((-1,) + field.values.shape[-2:])
    index = {tuple(np.round(k, 9)): i for i, k in enumerate(ks)}
    out = np.empty_like(vals)
    for i, k in enumerate(ks):
        j = index.get(tuple(np.round(-k, 9)))
        if j is None:
            raise ValueError("grid is not symmetric under k -> -k")
        partner = family.theta_frame(vals[j]) @ eps.matrix
        out[i] = frame_midpoint(vals[i], partner, log_margin=log_margin)
    return FrameField(ks=field.ks, values=out.reshape(field.values.shape),
                      meta=dict(field.meta))
