"""Dense complex matrix primitives used throughout the package.

Everything here is a pure function of its inputs: Loewdin (polar)
orthonormalization, the Pfaffian of a complex skew-symmetric matrix,
winding numbers of discretized phase loops, geodesic paths in the unitary
group, the symplectic square root of a compatible unitary, and the
Kato-Nagy unitary intertwining two nearby projectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    Aliasing,
    CompatibilityViolated,
    LogBranch,
    NonInteger,
    NotSkew,
    NumericalFailure,
    OddDimension,
    RankDeficient,
    TooFar,
)

TOL_UNITARY = 1e-10
TOL_PROJ = 1e-10
TOL_SKEW = 1e-8
TOL_SYM = 1e-8
TOL_RANK = 1e-8
WINDING_MARGIN = np.pi / 2
LOG_MARGIN = 1e-3


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances; the defaults are used everywhere unless overridden."""

    unitary: float = TOL_UNITARY
    proj: float = TOL_PROJ
    skew: float = TOL_SKEW
    sym: float = TOL_SYM
    rank: float = TOL_RANK
    winding_margin: float = WINDING_MARGIN
    log_margin: float = LOG_MARGIN


def loewdin_unitarize(a: np.ndarray, tol_rank: float = TOL_RANK) -> np.ndarray:
    """Closest matrix with orthonormal columns (polar factor) to ``a``.

    Accepts a single N x m matrix or a stack (..., N, m); the SVD is
    batched over leading axes.  The result R spans the same columns as
    ``a`` and R^dagger a is Hermitian positive definite.

    Raises
    ------
    RankDeficient
        If any singular value is <= ``tol_rank``; during frame transport
        this means the step was too large or the gap is closing.
    """
    a = np.asarray(a, dtype=complex)
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    if np.min(s) <= tol_rank:
        raise RankDeficient(f"smallest singular value {np.min(s):.3e} <= {tol_rank:.1e}")
    return u @ vh


def pfaffian(a: np.ndarray, tol_skew: float = TOL_SKEW) -> complex:
    """Pfaffian of a complex skew-symmetric matrix.

    Parlett-Reid tridiagonalization with partial pivoting; the permutation
    sign is tracked through the row/column swaps.  O(m^3), and satisfies
    pfaffian(a)^2 = det(a).

    Raises
    ------
    NotSkew
        If ``||a + a^T||`` exceeds ``tol_skew`` (relative to the matrix scale).
    OddDimension
        If the matrix dimension is odd.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSkew("pfaffian requires a square matrix")
    n = a.shape[0]
    if n % 2 == 1:
        raise OddDimension(f"pfaffian undefined for odd dimension {n}")
    scale = max(1.0, np.max(np.abs(a))) if n else 1.0
    if n and np.max(np.abs(a + a.T)) > tol_skew * scale:
        raise NotSkew("matrix is not skew-symmetric within tolerance")
    if n == 0:
        return 1.0 + 0.0j

    a = a.copy()
    val = 1.0 + 0.0j
    for k in range(0, n - 1, 2):
        # pivot the largest entry of column k below the diagonal into row k+1
        kp = k + 1 + int(np.argmax(np.abs(a[k + 1:, k])))
        if a[kp, k] == 0.0:
            return 0.0 + 0.0j
        if kp != k + 1:
            a[[k + 1, kp], k:] = a[[kp, k + 1], k:]
            a[k:, [k + 1, kp]] = a[k:, [kp, k + 1]]
            val = -val
        val *= a[k, k + 1]
        if k + 2 < n:
            tau = a[k, k + 2:] / a[k, k + 1]
            col = a[k + 2:, k + 1]
            a[k + 2:, k + 2:] += np.outer(tau, col) - np.outer(col, tau)
    return complex(val)


def winding_number(samples, margin: float = WINDING_MARGIN) -> int:
    """Degree of a closed discretized loop of unit-modulus complex numbers.

    ``samples`` must be ordered along the loop with the first point
    repeated at the end (closed loop).  The winding is the sum of
    principal-argument increments divided by 2*pi.

    Raises
    ------
    Aliasing
        If any increment has magnitude >= pi - margin; the loop must be
        sampled more finely.
    NonInteger
        If the accumulated sum is farther than 1e-6 from an integer.
    """
    z = np.asarray(getattr(samples, "samples", samples), dtype=complex).ravel()
    if z.size < 2:
        raise NonInteger("a closed loop needs at least two samples")
    mod = np.abs(z)
    if np.any(np.abs(mod - 1.0) > 1e-6):
        raise NonInteger("loop samples are not unit modulus")
    inc = np.angle(z[1:] / z[:-1])
    if np.max(np.abs(inc)) >= np.pi - margin:
        raise Aliasing(
            f"phase increment {np.max(np.abs(inc)):.3f} >= pi - margin; refine the loop"
        )
    total = float(np.sum(inc)) / (2.0 * np.pi)
    rounded = round(total)
    if abs(total - rounded) > 1e-6:
        raise NonInteger(f"winding {total} is not an integer within 1e-6")
    return int(rounded)


def unitary_eig(u: np.ndarray):
    """Eigen-decomposition of a unitary matrix via a complex Schur form.

    Returns (phases, z) with phases the principal arguments in (-pi, pi],
    sorted ascending, and z unitary with u = z diag(exp(i phases)) z^dagger.
    The Schur route keeps z unitary even for degenerate eigenvalues.
    """
    u = np.asarray(u, dtype=complex)
    t, z = scipy.linalg.schur(u, output="complex")
    d = np.diagonal(t)
    if np.max(np.abs(np.abs(d) - 1.0)) > 1e-8:
        raise NumericalFailure("matrix passed to unitary_eig is not unitary")
    phases = np.angle(d)
    order = np.argsort(phases, kind="stable")
    return phases[order], z[:, order]


def unitary_log(u: np.ndarray, log_margin: float | None = None) -> np.ndarray:
    """Principal logarithm of a unitary matrix (skew-Hermitian result).

    Raises
    ------
    LogBranch
        If ``log_margin`` is given and some eigenphase lies within it
        of +-pi (eigenvalue too close to -1 for a principal branch).
    """
    phases, z = unitary_eig(u)
    if log_margin is not None and np.max(np.abs(phases)) > np.pi - log_margin:
        raise LogBranch("eigenvalue within log_margin of -1; frames not close enough")
    return (z * (1j * phases)) @ z.conj().T


def geodesic_unitary_path(u1: np.ndarray, u2: np.ndarray, t) -> np.ndarray:
    """Point(s) on the geodesic from u1 (t=0) to u2 (t=1) in the unitary group.

    With u1^{-1} u2 = P diag(exp(i mu_j)) P^dagger and principal arguments
    mu_j, the path is u1 P diag(exp(i t mu_j)) P^dagger.  ``t`` may be a
    scalar or an array; an array returns a stack over its shape.
    """
    u1 = np.asarray(u1, dtype=complex)
    u2 = np.asarray(u2, dtype=complex)
    mu, p = unitary_eig(u1.conj().T @ u2)
    t_arr = np.asarray(t, dtype=float)
    phase = np.exp(1j * np.multiply.outer(t_arr, mu))  # (..., m)
    path = np.einsum("ab,...b,cb->...ac", u1 @ p, phase, p.conj())
    return path if t_arr.ndim else path.reshape(u1.shape)


@dataclass(frozen=True)
class EpsilonForm:
    """Fixed unitary, skew-symmetric reshuffling matrix for Kramers pairs.

    ``layout`` is "blocks" for the 2x2 block-diagonal form
    [[0,1],[-1,0]] + ... + [[0,1],[-1,0]] or "symplectic" for
    [[0, 1_n], [-1_n, 0]].
    """

    matrix: np.ndarray
    layout: str = "blocks"

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def inverse(self) -> np.ndarray:
        return self.matrix.conj().T

    def validate(self, tol: float = TOL_UNITARY) -> None:
        e = self.matrix
        m = self.m
        if np.max(np.abs(e.conj().T @ e - np.eye(m))) > tol:
            raise NumericalFailure("epsilon is not unitary")
        if np.max(np.abs(e.T + e)) > tol:
            raise NotSkew("epsilon is not skew-symmetric")
        if np.max(np.abs(e @ e.conj() + np.eye(m))) > tol:
            raise NumericalFailure("epsilon * conj(epsilon) != -1")
        if self.layout == "blocks":
            if abs(np.linalg.det(e) - 1.0) > 1e-8 or abs(pfaffian(e) - 1.0) > 1e-8:
                raise NumericalFailure("block layout must have det = Pf = 1")


def epsilon_form(m: int, layout: str = "blocks") -> EpsilonForm:
    """Build the reshuffling matrix for ``m`` (even) states in the given layout."""
    if m % 2 == 1:
        raise OddDimension("epsilon needs an even dimension")
    n = m // 2
    if layout == "blocks":
        j2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
        mat = np.kron(np.eye(n), j2)
    elif layout == "symplectic":
        mat = np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])
    else:
        raise ValueError(f"unknown epsilon layout {layout!r}")
    eps = EpsilonForm(matrix=mat.astype(complex), layout=layout)
    eps.validate()
    return eps


def symplectic_square_root(
    v: np.ndarray, eps: EpsilonForm, tol_sym: float = TOL_SYM
) -> np.ndarray:
    """Unitary u with u eps^{-1} u^T eps = v, for v satisfying v^T eps = eps v.

    Eigenphases of v are normalized to [0, 2*pi) (with values within 1e-8
    below 2*pi snapped to 0) and halved; the half-phase matrix is a
    spectral function of v, so the result does not depend on the choice of
    eigenbasis in degenerate subspaces.  Deterministic for identical input.

    Raises
    ------
    CompatibilityViolated
        If ``v^T eps - eps v`` exceeds ``tol_sym``.
    """
    v = np.asarray(v, dtype=complex)
    e = eps.matrix
    if np.max(np.abs(v.T @ e - e @ v)) > tol_sym:
        raise CompatibilityViolated("v^T eps != eps v; input frame or symmetry corrupted")
    phases, z = unitary_eig(v)
    lam = np.mod(phases, 2.0 * np.pi)
    lam[lam > 2.0 * np.pi - 1e-8] = 0.0  # snap phases indistinguishable from 2*pi
    order = np.argsort(lam, kind="stable")
    lam, z = lam[order], z[:, order]
    u = (z * np.exp(0.5j * lam)) @ z.conj().T
    if np.max(np.abs(u @ eps.inverse @ u.T @ e - v)) > max(tol_sym, 1e-10) * 10:
        raise NumericalFailure("symplectic square root lost the defining relation")
    return u


def kato_nagy_intertwiner(
    p0: np.ndarray, p1: np.ndarray, tol_proj: float = TOL_PROJ
) -> np.ndarray:
    """Unitary w with w p0 w^{-1} = p1 for projectors at distance < 1.

    Implements w = (1 - (p0 - p1)^2)^{-1/2} (p1 p0 + (1-p1)(1-p0)).

    Raises
    ------
    TooFar
        If ``||p0 - p1||`` (operator norm) >= 1.
    """
    p0 = np.asarray(p0, dtype=complex)
    p1 = np.asarray(p1, dtype=complex)
    for name, p in (("p0", p0), ("p1", p1)):
        if np.max(np.abs(p - p.conj().T)) > tol_proj * 100:
            raise NumericalFailure(f"{name} is not Hermitian")
        if np.max(np.abs(p @ p - p)) > tol_proj * 100:
            raise NumericalFailure(f"{name} is not idempotent")
    diff = p0 - p1
    dist = float(np.max(np.abs(np.linalg.eigvalsh(diff))))
    if dist >= 1.0:
        raise TooFar(f"||p0 - p1|| = {dist:.6f} >= 1; homotopy step too coarse")
    n = p0.shape[0]
    m = np.eye(n) - diff @ diff
    w_eig, q = np.linalg.eigh(m)
    inv_sqrt = (q * (1.0 / np.sqrt(w_eig))) @ q.conj().T
    return inv_sqrt @ (p1 @ p0 + (np.eye(n) - p1) @ (np.eye(n) - p0))


def principal_sqrt(z: complex) -> complex:
    """Principal square root exp(Log(z)/2) with arg in (-pi, pi]."""
    return complex(np.exp(0.5 * np.log(complex(z))))


def random_unitary(m: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-ish random unitary from the QR of a complex Gaussian matrix."""
    a = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    q, r = np.linalg.qr(a)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


@dataclass
class PhaseLoop:
    """Unit-modulus samples on a closed curve, first point repeated last."""

    samples: np.ndarray = field(default_factory=lambda: np.ones(1, dtype=complex))

    def winding(self, margin: float = WINDING_MARGIN) -> int:
        return winding_number(self.samples, margin=margin)
