"""Projector families from tight-binding specifications.

A model is a list of hoppings on a lattice plus the antiunitary
time-reversal data; it yields a family of spectral projectors P(k) onto
the lowest ``rank`` bands of the Bloch Hamiltonian.  Built-in models:
the Kane-Mele honeycomb model, the Fu-Kane-Mele diamond-lattice model
(also stacked Kane-Mele layers), a constant family, and a "twisted"
generator of random smooth gapped time-reversal symmetric families used
for property tests.

All quasimomenta are expressed in lattice coordinates: k = sum_j k_j e_j
with integer translations acting as k -> k + lambda, lambda in Z^d.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import GapClosed, InvalidSpec

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class LatticeSpec:
    """Reciprocal lattice data: dimension and (dimensionless) generators."""

    dimension: int
    basis: np.ndarray | None = None

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise InvalidSpec(f"dimension must be 1, 2 or 3, got {self.dimension}")
        if self.basis is not None:
            b = np.asarray(self.basis, dtype=float)
            if b.shape != (self.dimension, self.dimension):
                raise InvalidSpec("basis must be d x d")
            if abs(np.linalg.det(b)) < 1e-12:
                raise InvalidSpec("basis vectors are linearly dependent")


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Tight-binding specification.

    ``hoppings`` is a list of (displacement, i, j, amplitude) with integer
    lattice displacement, ambient indices i, j and complex amplitude; the
    Hermitian partner (-displacement, j, i, conj(amplitude)) may be listed
    or is implied.  ``theta`` is the unitary part of the time-reversal
    operator, Theta = theta o (complex conjugation).  ``positions`` holds
    fractional orbital coordinates (one row per ambient index) and is only
    used by the canonical tau convention.
    """

    lattice: LatticeSpec
    ambient_dim: int
    hoppings: tuple
    rank: int
    theta: np.ndarray
    tau_convention: str = "periodic"
    positions: np.ndarray | None = None
    gap_threshold: float = 1e-6
    name: str = ""


@dataclass(frozen=True, eq=False)
class ProjectorFamily:
    """Evaluator bundle for a gapped time-reversal symmetric family.

    Either ``hamiltonian_fn`` (spectral projectors of its lowest ``rank``
    bands) or ``projector_fn`` (exact projectors, synthetic families) is
    set.  ``tau_fn`` maps an integer lattice vector to the N x N
    representation matrix; ``theta_unitary`` is the unitary part of the
    antiunitary time-reversal operator.  Immutable and reentrant.
    """

    dimension: int
    ambient_dim: int
    rank: int
    theta_unitary: np.ndarray
    tau_fn: Callable[[np.ndarray], np.ndarray]
    hamiltonian_fn: Callable | None = None
    projector_fn: Callable | None = None
    gap_threshold: float = 1e-6
    name: str = ""

    def tau(self, lam) -> np.ndarray:
        return self.tau_fn(np.asarray(lam, dtype=int))

    def theta_frame(self, frame: np.ndarray) -> np.ndarray:
        """Apply the antiunitary time-reversal operator column-wise."""
        return self.theta_unitary @ np.conj(frame)


def _tau_factory(convention: str, positions, ambient_dim: int, dimension: int = 1):
    if convention == "periodic":
        eye = np.eye(ambient_dim, dtype=complex)

        def tau(lam):
            return eye

        return tau
    if convention == "canonical":
        pos = (
            np.zeros((ambient_dim, dimension))
            if positions is None
            else np.asarray(positions, float)
        )

        def tau(lam):
            return np.diag(np.exp(-2j * np.pi * (pos @ np.asarray(lam, float))))

        return tau
    raise InvalidSpec(f"unknown tau convention {convention!r}")


def _closed_hoppings(spec: ModelSpec):
    """Accumulate hoppings and add implied Hermitian partners."""
    acc: dict[tuple, complex] = {}
    d = spec.lattice.dimension
    for disp, i, j, amp in spec.hoppings:
        disp = tuple(int(x) for x in disp)
        if len(disp) != d:
            raise InvalidSpec(f"displacement {disp} has wrong dimension")
        if not (0 <= i < spec.ambient_dim and 0 <= j < spec.ambient_dim):
            raise InvalidSpec(f"orbital index out of range in hopping ({disp},{i},{j})")
        acc[(disp, i, j)] = acc.get((disp, i, j), 0.0) + complex(amp)
    closed = dict(acc)
    for (disp, i, j), amp in acc.items():
        key = (tuple(-x for x in disp), j, i)
        if key not in acc:
            closed[key] = np.conj(amp)
        elif abs(acc[key] - np.conj(amp)) > 1e-12 * max(1.0, abs(amp)):
            raise InvalidSpec(f"hopping {key} inconsistent with Hermitian closure")
    return closed


def build_model(spec: ModelSpec) -> ProjectorFamily:
    """Construct the projector family of a tight-binding specification.

    Raises InvalidSpec with a description of any violated invariant
    (fermionic time-reversal, even rank, Hermitian closure, index ranges).
    """
    n = spec.ambient_dim
    theta = np.asarray(spec.theta, dtype=complex)
    if theta.shape != (n, n):
        raise InvalidSpec("theta must be N x N")
    if np.max(np.abs(theta.conj().T @ theta - np.eye(n))) > 1e-8:
        raise InvalidSpec("theta is not unitary")
    if np.max(np.abs(theta @ theta.conj() + np.eye(n))) > 1e-8:
        raise InvalidSpec("time reversal must be fermionic: theta conj(theta) = -1")
    if spec.rank % 2 == 1 or not (0 < spec.rank < n):
        raise InvalidSpec(f"rank must be even and in (0, {n}), got {spec.rank}")

    closed = _closed_hoppings(spec)
    disps = np.array([k[0] for k in closed], dtype=float)
    iis = np.array([k[1] for k in closed], dtype=int)
    jjs = np.array([k[2] for k in closed], dtype=int)
    amps = np.array(list(closed.values()), dtype=complex)

    canonical = spec.tau_convention == "canonical"
    pos = None
    if canonical:
        pos = (
            np.zeros((n, spec.lattice.dimension))
            if spec.positions is None
            else np.asarray(spec.positions, dtype=float)
        )
        if pos.shape != (n, spec.lattice.dimension):
            raise InvalidSpec("positions must be N x d")

    def hamiltonian(k):
        k = np.atleast_1d(np.asarray(k, dtype=float))
        phases = np.exp(2j * np.pi * (k @ disps.T))  # (..., n_hops)
        h = np.zeros(k.shape[:-1] + (n, n), dtype=complex)
        for hop in range(amps.size):
            h[..., iis[hop], jjs[hop]] += amps[hop] * phases[..., hop]
        if canonical:
            ph = np.exp(-2j * np.pi * (k @ pos.T))  # (..., N)
            h = h * ph[..., :, None] * np.conj(ph)[..., None, :]
        return h

    tau = _tau_factory(spec.tau_convention, pos, n, spec.lattice.dimension)
    return ProjectorFamily(
        dimension=spec.lattice.dimension,
        ambient_dim=n,
        rank=spec.rank,
        theta_unitary=theta,
        tau_fn=tau,
        hamiltonian_fn=hamiltonian,
        gap_threshold=spec.gap_threshold,
        name=spec.name,
    )


def bloch_hamiltonian(family: ProjectorFamily, k) -> np.ndarray:
    """Bloch Hamiltonian at k (batched over leading axes of k).

    Synthetic projector-only families report the flattened Hamiltonian
    1 - 2 P(k), whose spectrum is {-1, +1} with the occupied space at -1.
    """
    if family.hamiltonian_fn is not None:
        return family.hamiltonian_fn(k)
    p = family.projector_fn(k)
    return np.eye(family.ambient_dim) - 2.0 * p


def eigensystem(family: ProjectorFamily, k):
    """Ascending eigenvalues and eigenvectors of the Bloch Hamiltonian."""
    h = bloch_hamiltonian(family, k)
    return np.linalg.eigh(h)


def direct_gap(family: ProjectorFamily, k) -> np.ndarray:
    """Gap between the rank-th and (rank+1)-th eigenvalue at k."""
    ev = np.linalg.eigvalsh(bloch_hamiltonian(family, k))
    return ev[..., family.rank] - ev[..., family.rank - 1]


def spectral_projector(family: ProjectorFamily, k) -> np.ndarray:
    """Projector onto the lowest ``rank`` bands at k (batched).

    Raises GapClosed(k, gap) if the gap at some requested k does not
    exceed the family's gap threshold.
    """
    if family.projector_fn is not None:
        return family.projector_fn(k)
    ev, vec = eigensystem(family, k)
    gap = ev[..., family.rank] - ev[..., family.rank - 1]
    if np.min(gap) <= family.gap_threshold:
        idx = np.unravel_index(np.argmin(gap), np.shape(gap)) if np.ndim(gap) else ()
        bad_k = np.asarray(k, dtype=float)[idx] if np.ndim(gap) else np.asarray(k)
        raise GapClosed(
            f"gap {np.min(gap):.3e} <= threshold {family.gap_threshold:.1e} at k={bad_k}",
            k=bad_k,
            gap=float(np.min(gap)),
        )
    occ = vec[..., :, : family.rank]
    return occ @ np.swapaxes(occ.conj(), -1, -2)


def occupied_frame(family: ProjectorFamily, k) -> np.ndarray:
    """Orthonormal eigenvector frame of the occupied space at k (batched)."""
    if family.projector_fn is not None:
        p = family.projector_fn(k)
        _, vec = np.linalg.eigh(-p)  # occupied eigenvalues -1 sort first
        return vec[..., :, : family.rank]
    ev, vec = eigensystem(family, k)
    gap = ev[..., family.rank] - ev[..., family.rank - 1]
    if np.min(gap) <= family.gap_threshold:
        raise GapClosed(f"gap closed while sampling frame, min gap {np.min(gap):.3e}",
                        gap=float(np.min(gap)))
    return vec[..., :, : family.rank]


def fix_eigenvector_phases(frame: np.ndarray) -> np.ndarray:
    """Make each column's largest-magnitude entry real positive.

    Ties broken by lowest index (argmax does this); gives a reproducible
    base frame across runs and platforms.
    """
    frame = np.asarray(frame, dtype=complex).copy()
    for col in range(frame.shape[-1]):
        v = frame[..., :, col]
        idx = np.argmax(np.abs(v), axis=-1)
        lead = np.take_along_axis(v, idx[..., None], axis=-1)[..., 0]
        phase = np.where(np.abs(lead) > 0, lead / np.abs(lead), 1.0)
        frame[..., :, col] = v * np.conj(phase)[..., None]
    return frame


# ---------------------------------------------------------------------------
# assumption verification
# ---------------------------------------------------------------------------

@dataclass
class AssumptionReport:
    """Max residuals of the projector-family axioms over a sample set."""

    residuals: dict
    passed: dict
    tol: float
    continuity_bound: float

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def summary(self) -> str:
        lines = []
        for key in self.residuals:
            status = "pass" if self.passed[key] else "FAIL"
            lines.append(f"{key:14s} {self.residuals[key]:.3e}  {status}")
        return "\n".join(lines)


def verify_assumptions(
    family: ProjectorFamily,
    n_samples: int = 100,
    tol: float = 1e-9,
    continuity_bound: float = 1e3,
    seed: int = 0,
) -> AssumptionReport:
    """Numerically check the projector-family axioms at random k.

    Residuals reported: "projector" (hermiticity/idempotency/rank),
    "continuity" (max ||P(k+h)-P(k)||/|h| over adjacent samples, a finite
    continuity estimate gated by ``continuity_bound``), "tau_covariance",
    "time_reversal" and "theta_tau".  Failures are reported, not raised.
    """
    rng = np.random.default_rng(seed)
    d, n, m = family.dimension, family.ambient_dim, family.rank
    ks = rng.uniform(-0.5, 0.5, size=(n_samples, d))
    p = spectral_projector(family, ks)

    def maxnorm(x):
        return float(np.max(np.abs(x)))

    r_proj = max(
        maxnorm(p - np.swapaxes(p.conj(), -1, -2)),
        maxnorm(p @ p - p),
        maxnorm(np.trace(p, axis1=-2, axis2=-1) - m),
    )

    h = 1e-4
    dirs = rng.standard_normal((n_samples, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    p_shift = spectral_projector(family, ks + h * dirs)
    r_cont = maxnorm(p_shift - p) / h

    lams = rng.integers(-2, 3, size=(8, d))
    lams[0] = 0
    lams[0, 0] = 1
    r_tau = 0.0
    r_p4 = 0.0
    theta = family.theta_unitary
    for lam in lams:
        t_mat = family.tau(lam)
        p_trans = spectral_projector(family, ks + lam.astype(float))
        r_tau = max(r_tau, maxnorm(p_trans - t_mat @ p @ t_mat.conj().T))
        r_p4 = max(r_p4, maxnorm(theta @ np.conj(t_mat) - family.tau(-lam) @ theta))

    p_neg = spectral_projector(family, -ks)
    r_trs = maxnorm(p_neg - theta @ np.conj(p) @ theta.conj().T)

    residuals = {
        "projector": r_proj,
        "continuity": r_cont,
        "tau_covariance": r_tau,
        "time_reversal": r_trs,
        "theta_tau": r_p4,
    }
    passed = {key: val <= tol for key, val in residuals.items()}
    passed["continuity"] = residuals["continuity"] <= continuity_bound
    return AssumptionReport(residuals=residuals, passed=passed, tol=tol,
                            continuity_bound=continuity_bound)


# ---------------------------------------------------------------------------
# built-in models
# ---------------------------------------------------------------------------

THETA_SPIN_HALF = np.block(
    [[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]]
).astype(complex)
"""(i sigma_y acting on spin) x identity on two orbitals, spin-major ordering."""


def _spin_hops(hops, disp, oi, oj, mat2, n_orb=2):
    """Append ambient-index hoppings for a 2x2 spin matrix amplitude."""
    for s in range(2):
        for sp in range(2):
            amp = mat2[s, sp]
            if amp != 0:
                hops.append((tuple(disp), n_orb * s + oi, n_orb * sp + oj, complex(amp)))


def kane_mele_spec(t=1.0, lam_so=0.06, lam_v=0.1, lam_r=0.05) -> ModelSpec:
    """Kane-Mele honeycomb model; N = 4 (two sublattices x spin), rank 2.

    Terms: nearest-neighbour hopping ``t``, next-nearest spin-orbit
    ``lam_so`` (staggered i sigma_z), sublattice staggering ``lam_v``,
    Rashba ``lam_r``.  At lam_r = 0 the band gap closes on the line
    lam_v = 3 sqrt(3) lam_so.
    """
    hops: list = []
    # on-site staggering (A at +lam_v, B at -lam_v); self-partnered under closure
    _spin_hops(hops, (0, 0), 0, 0, lam_v * SIGMA_0)
    _spin_hops(hops, (0, 0), 1, 1, -lam_v * SIGMA_0)

    # nearest neighbours A -> B with Rashba spin flips; bond unit vectors in
    # cartesian coordinates for a1=(1,0), a2=(1/2, sqrt(3)/2)
    sqrt3 = np.sqrt(3.0)
    bonds = [
        ((0, 0), (sqrt3 / 2.0, 0.5)),
        ((0, -1), (0.0, -1.0)),
        ((-1, 0), (-sqrt3 / 2.0, 0.5)),
    ]
    for disp, (dx, dy) in bonds:
        mat = t * SIGMA_0 + 1j * lam_r * (dy * SIGMA_X - dx * SIGMA_Y)
        _spin_hops(hops, disp, 0, 1, mat)

    # next-nearest spin-orbit, opposite chirality on the two sublattices
    nnn = 1j * lam_so * SIGMA_Z
    for disp, sign in [((0, 1), -1), ((1, 0), 1), ((1, -1), -1)]:
        _spin_hops(hops, disp, 0, 0, sign * nnn)
        _spin_hops(hops, disp, 1, 1, -sign * nnn)

    return ModelSpec(
        lattice=LatticeSpec(dimension=2),
        ambient_dim=4,
        hoppings=tuple(hops),
        rank=2,
        theta=THETA_SPIN_HALF,
        gap_threshold=1e-6 * max(abs(t), 1.0),
        name="kane_mele",
    )


def kane_mele(t=1.0, lam_so=0.06, lam_v=0.1, lam_r=0.05) -> ProjectorFamily:
    return build_model(kane_mele_spec(t=t, lam_so=lam_so, lam_v=lam_v, lam_r=lam_r))


def stacked_kane_mele_spec(t=1.0, lam_so=0.06, lam_v=0.1, lam_r=0.05) -> ModelSpec:
    """Kane-Mele layers stacked along e3 with no interlayer coupling."""
    km = kane_mele_spec(t=t, lam_so=lam_so, lam_v=lam_v, lam_r=lam_r)
    hops = tuple(((d[0], d[1], 0), i, j, amp) for d, i, j, amp in km.hoppings)
    return ModelSpec(
        lattice=LatticeSpec(dimension=3),
        ambient_dim=4,
        hoppings=hops,
        rank=2,
        theta=THETA_SPIN_HALF,
        gap_threshold=km.gap_threshold,
        name="stacked_kane_mele",
    )


def stacked_kane_mele(**params) -> ProjectorFamily:
    return build_model(stacked_kane_mele_spec(**params))


def fkm_diamond_spec(t=1.0, dt1=0.4, lam_so=0.125) -> ModelSpec:
    """Diamond-lattice model with bond distortion dt1; N = 4, rank 2.

    Nearest-neighbour bonds carry ``t`` except the intracell bond at
    ``t + dt1``; second neighbours carry the spin-orbit amplitude
    i (8 lam_so) s . (d1 x d2) built from the traversed bond vectors.
    dt1 > 0 puts the model in the strong topological phase.
    """
    # fcc generators and the four bond vectors from sublattice A, cartesian
    avec = 0.5 * np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]], dtype=float)
    d0 = 0.25 * np.array([1.0, 1.0, 1.0])
    dvec = [d0, d0 - avec[0], d0 - avec[1], d0 - avec[2]]

    hops: list = []
    nn = [((0, 0, 0), t + dt1), ((-1, 0, 0), t), ((0, -1, 0), t), ((0, 0, -1), t)]
    for disp, amp in nn:
        _spin_hops(hops, disp, 0, 1, amp * SIGMA_0)

    # every directed second-neighbour bond is the two-step path d_mu then -d_nu
    evec = np.vstack([np.zeros(3, dtype=int), np.eye(3, dtype=int)])
    for mu in range(4):
        for nu in range(4):
            if mu == nu:
                continue
            disp = tuple(int(x) for x in (evec[nu] - evec[mu]))
            v = 8.0 * lam_so * np.cross(dvec[mu], dvec[nu])
            spin = 1j * (v[0] * SIGMA_X + v[1] * SIGMA_Y + v[2] * SIGMA_Z)
            _spin_hops(hops, disp, 0, 0, -spin)
            _spin_hops(hops, disp, 1, 1, spin)

    return ModelSpec(
        lattice=LatticeSpec(dimension=3),
        ambient_dim=4,
        hoppings=tuple(hops),
        rank=2,
        theta=THETA_SPIN_HALF,
        gap_threshold=1e-6 * max(abs(t), 1.0),
        name="fkm_diamond",
    )


def fkm_diamond(**params) -> ProjectorFamily:
    return build_model(fkm_diamond_spec(**params))


def _random_trs_hermitian(n: int, theta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    b = 0.5 * (b + b.conj().T)
    return b + theta @ b.conj() @ theta.conj().T


def constant_family(dimension=2, ambient_dim=4, rank=2, seed=0) -> ProjectorFamily:
    """Constant gapped TRS family: P(k) = P(0) for all k."""
    rng = np.random.default_rng(seed)
    theta = THETA_SPIN_HALF if ambient_dim == 4 else _default_theta(ambient_dim)
    for _ in range(64):
        h0 = _random_trs_hermitian(ambient_dim, theta, rng)
        ev = np.linalg.eigvalsh(h0)
        if ev[rank] - ev[rank - 1] > 0.5:
            break
    else:
        raise InvalidSpec("could not draw a gapped constant Hamiltonian")

    def hamiltonian(k):
        k = np.asarray(k, dtype=float)
        if k.ndim == 1:
            return h0.copy()
        return np.broadcast_to(h0, k.shape[:-1] + h0.shape).copy()

    return ProjectorFamily(
        dimension=dimension,
        ambient_dim=ambient_dim,
        rank=rank,
        theta_unitary=theta,
        tau_fn=_tau_factory("periodic", None, ambient_dim),
        hamiltonian_fn=hamiltonian,
        name="constant",
    )


def _default_theta(n: int) -> np.ndarray:
    if n % 2:
        raise InvalidSpec("fermionic time reversal needs even ambient dimension")
    half = n // 2
    return np.block(
        [[np.zeros((half, half)), np.eye(half)], [-np.eye(half), np.zeros((half, half))]]
    ).astype(complex)


def twisted_family(
    dimension=2,
    ambient_dim=4,
    rank=2,
    seed=0,
    n_modes=2,
    strength=0.8,
    base: ProjectorFamily | None = None,
) -> ProjectorFamily:
    """Random smooth gapped TRS family Q(k) H_base(k) Q(k)^dagger.

    Q(k) = exp(i A(k)) with A a Hermitian trigonometric polynomial built to
    satisfy A(-k) = -Theta A(k) Theta^{-1} and A(k + lambda) = A(k), so the
    twisted family keeps all axioms of the base (default: a constant
    family with the same seed).
    """
    rng = np.random.default_rng(seed)
    if base is None:
        base = constant_family(dimension, ambient_dim, rank, seed=seed)
    theta = base.theta_unitary
    n = base.ambient_dim

    modes = []
    for _ in range(n_modes):
        while True:
            lam = rng.integers(-1, 2, size=base.dimension)
            if np.any(lam):
                break
        m_rand = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        c = m_rand - theta @ m_rand.conj() @ theta.conj().T
        c *= strength / (2.0 * n_modes * max(1.0, np.linalg.norm(c, 2)))
        modes.append((lam.astype(float), c))

    def twist(k):
        k = np.asarray(k, dtype=float)
        shape = k.shape[:-1]
        a = np.zeros(shape + (n, n), dtype=complex)
        for lam, c in modes:
            ph = np.exp(2j * np.pi * (k @ lam))
            a = a + ph[..., None, None] * c + np.conj(ph)[..., None, None] * c.conj().swapaxes(-1, -2)
        ev, vec = np.linalg.eigh(a)
        return (vec * np.exp(1j * ev)[..., None, :]) @ np.swapaxes(vec.conj(), -1, -2)

    def hamiltonian(k):
        q = twist(k)
        return q @ bloch_hamiltonian(base, k) @ np.swapaxes(q.conj(), -1, -2)

    return ProjectorFamily(
        dimension=base.dimension,
        ambient_dim=n,
        rank=base.rank,
        theta_unitary=theta,
        tau_fn=base.tau_fn,
        hamiltonian_fn=hamiltonian,
        gap_threshold=base.gap_threshold,
        name=f"twisted[{base.name}]",
    )


# ---------------------------------------------------------------------------
# restrictions to lines and faces
# ---------------------------------------------------------------------------

def restrict_family(family: ProjectorFamily, axis: int, value: float) -> ProjectorFamily:
    """Family induced on the plane/line {k_axis = value}, value in {0, +-1/2}.

    The remaining axes keep their order.  The induced time-reversal
    operator is tau(2 * value * e_axis) Theta, which squares to -1 by the
    commutation axiom, and the induced tau acts through the embedding.
    """
    if not 0 <= axis < family.dimension:
        raise InvalidSpec(f"axis {axis} out of range")
    if 2.0 * value != round(2.0 * value):
        raise InvalidSpec("restriction value must be half-integer")
    keep = [ax for ax in range(family.dimension) if ax != axis]
    lam_star = np.zeros(family.dimension, dtype=int)
    lam_star[axis] = int(round(2.0 * value))
    theta_new = family.tau(lam_star) @ family.theta_unitary

    def embed(k):
        k = np.asarray(k, dtype=float)
        full = np.zeros(k.shape[:-1] + (family.dimension,), dtype=float)
        for new_ax, old_ax in enumerate(keep):
            full[..., old_ax] = k[..., new_ax]
        full[..., axis] = value
        return full

    def embed_int(lam):
        lam = np.asarray(lam, dtype=int)
        full = np.zeros(family.dimension, dtype=int)
        for new_ax, old_ax in enumerate(keep):
            full[old_ax] = lam[new_ax]
        return full

    ham = None
    proj = None
    if family.hamiltonian_fn is not None:
        ham = lambda k: family.hamiltonian_fn(embed(k))  # noqa: E731
    if family.projector_fn is not None:
        proj = lambda k: family.projector_fn(embed(k))  # noqa: E731

    return ProjectorFamily(
        dimension=family.dimension - 1,
        ambient_dim=family.ambient_dim,
        rank=family.rank,
        theta_unitary=theta_new,
        tau_fn=lambda lam: family.tau_fn(embed_int(lam)),
        hamiltonian_fn=ham,
        projector_fn=proj,
        gap_threshold=family.gap_threshold,
        name=f"{family.name}|k{axis + 1}={value:+.1f}",
    )


# ---------------------------------------------------------------------------
# model files
# ---------------------------------------------------------------------------

BUILTIN_MODELS: dict[str, Callable[..., ProjectorFamily]] = {
    "kane_mele": kane_mele,
    "fkm_diamond": fkm_diamond,
    "constant": constant_family,
    "stacked_kane_mele": stacked_kane_mele,
    "twisted": twisted_family,
}


def builtin_family(name: str, **params) -> ProjectorFamily:
    if name not in BUILTIN_MODELS:
        raise InvalidSpec(f"unknown builtin {name!r}; have {sorted(BUILTIN_MODELS)}")
    return BUILTIN_MODELS[name](**params)


def _complex_entry(pair) -> complex:
    re, im = pair
    return complex(float(re), float(im))


def load_model_file(path) -> ProjectorFamily:
    """Load a model from a TOML or JSON file (by extension).

    Keys: ``dimension``, ``ambient_dim``, ``rank``, ``tau_convention``,
    ``theta`` (N x N complex as nested [re, im] pairs), ``hoppings`` (list
    of {displacement, i, j, amplitude}), optional ``positions``; or
    ``builtin`` (overrides the rest) with a ``parameters`` table.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if path.suffix.lower() == ".json":
        data = json.loads(path.read_text())
    elif path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # python < 3.11
            import tomli as tomllib
        data = tomllib.loads(path.read_text())
    else:
        raise InvalidSpec(f"unsupported model file extension {path.suffix!r}")

    if "builtin" in data:
        params = data.get("parameters", {})
        return builtin_family(data["builtin"], **params)

    try:
        theta = np.array(
            [[_complex_entry(entry) for entry in row] for row in data["theta"]],
            dtype=complex,
        )
        hops = tuple(
            (tuple(h["displacement"]), int(h["i"]), int(h["j"]), _complex_entry(h["amplitude"]))
            for h in data["hoppings"]
        )
        spec = ModelSpec(
            lattice=LatticeSpec(dimension=int(data["dimension"])),
            ambient_dim=int(data["ambient_dim"]),
            hoppings=hops,
            rank=int(data["rank"]),
            theta=theta,
            tau_convention=data.get("tau_convention", "periodic"),
            positions=np.asarray(data["positions"], float) if "positions" in data else None,
            gap_threshold=float(data.get("gap_threshold", 1e-6)),
            name=data.get("name", path.stem),
        )
    except KeyError as exc:
        raise InvalidSpec(f"model file missing key {exc}") from exc
    return build_model(spec)
