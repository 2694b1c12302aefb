"""Two-qubit polarization states and the entanglement metrics computed from them.

All 4x4 operators use the basis order ``(HH, VH, HV, VV)`` where the first
letter is the signal photon and the second the idler.  With that order the
signal qubit is the *least* significant index, so a product operator
``A_signal (x) B_idler`` is ``np.kron(B_idler, A_signal)``; use
:func:`two_photon_operator` rather than calling ``np.kron`` directly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import InvalidStateError, PhaseUndefinedError

BASIS = ("HH", "VH", "HV", "VV")
LABELS = ("H", "V", "D", "A", "R", "L")

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
EIGEN_CLIP = 1e-10

_S2 = 1.0 / np.sqrt(2.0)
# D is -45 deg and A is +45 deg in the lab frame; R = (H - iV)/sqrt2.
JONES = {
    "H": np.array([1.0, 0.0], dtype=complex),
    "V": np.array([0.0, 1.0], dtype=complex),
    "D": np.array([_S2, -_S2], dtype=complex),
    "A": np.array([_S2, _S2], dtype=complex),
    "R": np.array([_S2, -1j * _S2], dtype=complex),
    "L": np.array([_S2, 1j * _S2], dtype=complex),
}

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
_SY_SY = np.kron(PAULI[1], PAULI[1])


def two_photon_operator(signal_op: np.ndarray, idler_op: np.ndarray) -> np.ndarray:
    """Tensor product of a signal and an idler operator in (HH, VH, HV, VV) order."""
    return np.kron(idler_op, signal_op)


def projector(label: str) -> np.ndarray:
    """Return ``|x><x|`` for one of the six tomography polarizations."""
    try:
        v = JONES[label]
    except KeyError:
        raise ValueError(f"unknown polarization label {label!r}") from None
    return np.outer(v, v.conj())


def bloch_projector(theta: float, phi: float) -> np.ndarray:
    """Projector onto the Bloch-sphere direction (theta, phi) in the H/V basis.

    theta = 0 is H, theta = pi is V.
    """
    n = np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])
    return 0.5 * (np.eye(2) + n[0] * PAULI[0] + n[1] * PAULI[1] + n[2] * PAULI[2])


def pure_state(a: float, b: float, theta: float = 0.0) -> np.ndarray:
    """State vector ``a|HH> + b e^{i theta}|VV>``, normalized."""
    psi = np.array([a, 0.0, 0.0, b * np.exp(1j * theta)], dtype=complex)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("a and b cannot both be zero")
    return psi / norm


def bell_state(sign: str = "+") -> np.ndarray:
    """Normalized ``(|HH> +/- |VV>)/sqrt(2)``."""
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    return pure_state(1.0, 1.0, 0.0 if sign == "+" else np.pi)


def density_from_state(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(4)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-12:
        psi = psi / norm
    return np.outer(psi, psi.conj())


def werner_state(p: float) -> np.ndarray:
    """``p |Phi+><Phi+| + (1-p) I/4``."""
    return p * density_from_state(bell_state("+")) + (1.0 - p) * np.eye(4) / 4.0


def validate_density_matrix(rho: np.ndarray) -> np.ndarray:
    """Check the density-matrix invariants and return a cleaned copy.

    Eigenvalues in ``[-1e-10, 0)`` are clipped to zero; anything more negative
    raises :class:`InvalidStateError`.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise InvalidStateError(f"expected a 4x4 matrix, got shape {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise InvalidStateError("density matrix contains non-finite entries")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
        raise InvalidStateError("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > TRACE_TOL:
        raise InvalidStateError(f"density matrix trace is {tr.real:.3e}, expected 1")
    rho = 0.5 * (rho + rho.conj().T)
    w, v = np.linalg.eigh(rho)
    if w[0] < -EIGEN_CLIP:
        raise InvalidStateError(f"density matrix has negative eigenvalue {w[0]:.3e}")
    if w[0] < 0:
        w = np.clip(w, 0.0, None)
        rho = (v * w) @ v.conj().T
    return rho


def concurrence(rho: np.ndarray) -> float:
    """Wootters concurrence.

    The square roots of the eigenvalues of ``rho (sy sy) rho* (sy sy)`` are the
    singular values of ``sqrt(rho) (sy sy) sqrt(rho)*``, which is what is
    computed here (it avoids the non-Hermitian eigenproblem).
    """
    rho = validate_density_matrix(rho)
    w, v = np.linalg.eigh(rho)
    sqrt_rho = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    lam = np.linalg.svd(sqrt_rho @ _SY_SY @ sqrt_rho.conj(), compute_uv=False)
    c = lam[0] - lam[1] - lam[2] - lam[3]
    return float(min(max(c, 0.0), 1.0))


def purity(rho: np.ndarray) -> float:
    rho = validate_density_matrix(rho)
    return float(np.real(np.vdot(rho, rho)))


def fidelity_to_pure(rho: np.ndarray, target: np.ndarray) -> float:
    """``<psi|rho|psi>`` for a pure target state vector."""
    rho = validate_density_matrix(rho)
    psi = np.asarray(target, dtype=complex).reshape(4)
    psi = psi / np.linalg.norm(psi)
    f = np.real(psi.conj() @ rho @ psi)
    return float(min(max(f, 0.0), 1.0))


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    # eigenvalues at the round-off floor are zero; their square roots (~1e-8)
    # would otherwise leak into fidelities of rank-deficient states
    w = np.where(w > 64 * np.finfo(float).eps * max(w[-1], 0.0), w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def uhlmann_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Mixed-state fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``.

    Evaluated as the squared nuclear norm of ``sqrt(rho) sqrt(sigma)``, which
    stays accurate when either state is rank deficient.
    """
    sv = np.linalg.svd(_psd_sqrt(np.asarray(rho)) @ _psd_sqrt(np.asarray(sigma)), compute_uv=False)
    return float(min(np.sum(sv) ** 2, 1.0))


def relative_phase(rho: np.ndarray, threshold: float = 1e-6) -> float:
    """Phase of the |VV><HH| coherence, in (-pi, pi]."""
    rho = validate_density_matrix(rho)
    coh = rho[3, 0]
    if abs(coh) <= threshold:
        raise PhaseUndefinedError(
            f"|rho_VV,HH| = {abs(coh):.3e} is below the threshold {threshold:.1e}"
        )
    theta = float(np.angle(coh))
    # np.angle maps the negative real axis to +pi or -pi depending on the sign of zero
    return np.pi if theta <= -np.pi + 1e-15 else theta


def correlation_tensor(rho: np.ndarray) -> np.ndarray:
    """``T_ij = Tr[rho sigma_i (x) sigma_j]`` with i on the signal photon."""
    rho = validate_density_matrix(rho)
    t = np.empty((3, 3))
    for i, j in itertools.product(range(3), range(3)):
        t[i, j] = np.real(np.trace(rho @ two_photon_operator(PAULI[i], PAULI[j])))
    return t


def chsh_correlation(rho: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """E(a, b) with the +/-1 observables ``2 m - I`` built from projectors a, b."""
    return _correlation(validate_density_matrix(rho), a, b)


def _correlation(rho: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    oa = 2.0 * np.asarray(a) - np.eye(2)
    ob = 2.0 * np.asarray(b) - np.eye(2)
    return float(np.real(np.vdot(two_photon_operator(oa, ob).conj().T, rho)))


def horodecki_s(rho: np.ndarray) -> float:
    """Maximal CHSH value ``2 sqrt(u1 + u2)`` from the correlation tensor."""
    t = correlation_tensor(rho)
    u = np.sort(np.linalg.eigvalsh(t.T @ t))[::-1]
    return float(2.0 * np.sqrt(max(u[0] + u[1], 0.0)))


@dataclass(frozen=True)
class CHSHSearchConfig:
    n_theta: int = 12
    n_phi: int = 12
    n_starts: int = 3
    xatol: float = 1e-8
    fatol: float = 1e-11
    maxiter: int = 8000


@dataclass(frozen=True)
class CHSHResult:
    s: float
    a: np.ndarray
    a_prime: np.ndarray
    b: np.ndarray
    b_prime: np.ndarray
    angles: np.ndarray


def _chsh_value(rho: np.ndarray, angles: np.ndarray) -> float:
    a, ap, b, bp = (bloch_projector(angles[2 * k], angles[2 * k + 1]) for k in range(4))
    e = _correlation
    return abs(e(rho, a, b) + e(rho, ap, b) + e(rho, a, bp) - e(rho, ap, bp))


def _directions(angles: np.ndarray) -> np.ndarray:
    th, ph = angles[0::2], angles[1::2]
    return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1)


def _signed_s(t: np.ndarray, angles: np.ndarray) -> float:
    # E(a, b) = n_a . T n_b for the observables 2 m - I
    na, nap, nb, nbp = _directions(angles)
    return float(na @ t @ (nb + nbp) + nap @ t @ (nb - nbp))


def _bloch_grid(n_theta: int, n_phi: int) -> tuple[np.ndarray, np.ndarray]:
    th = (np.arange(n_theta) + 0.5) * np.pi / n_theta
    ph = np.arange(n_phi) * 2.0 * np.pi / n_phi
    th, ph = (x.ravel() for x in np.meshgrid(th, ph, indexing="ij"))
    dirs = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1)
    return np.stack([th, ph], axis=1), dirs


def chsh_maximize(rho: np.ndarray, config: CHSHSearchConfig | None = None) -> CHSHResult:
    """Search the four measurement directions that maximize S.

    The coarse stage is an exhaustive search over a ``n_theta x n_phi`` grid for
    every one of the four directions.  For fixed (b, b') the sum separates as
    ``a.T(b+b') + a'.T(b-b')``, so the full product grid is scanned without
    enumerating all four-tuples.  The best few grid points seed a Nelder-Mead
    refinement of the eight angles that evaluates S through
    :func:`chsh_correlation`.
    """
    cfg = config or CHSHSearchConfig()
    rho = validate_density_matrix(rho)
    t = correlation_tensor(rho)
    angles, dirs = _bloch_grid(cfg.n_theta, cfg.n_phi)
    n = len(dirs)

    tb = dirs @ t.T  # tb[k] = T n_k
    plus = tb[:, None, :] + tb[None, :, :]
    minus = tb[:, None, :] - tb[None, :, :]
    proj_plus = np.einsum("abk,ck->abc", plus, dirs)
    proj_minus = np.einsum("abk,ck->abc", minus, dirs)
    signed_hi = proj_plus.max(axis=2) + proj_minus.max(axis=2)
    signed_lo = -(proj_plus.min(axis=2) + proj_minus.min(axis=2))
    best = np.maximum(signed_hi, signed_lo)

    order = np.argsort(best, axis=None)[::-1][: cfg.n_starts]
    starts, signs = [], []
    for flat in order:
        ib, ibp = np.unravel_index(flat, (n, n))
        if signed_hi[ib, ibp] >= signed_lo[ib, ibp]:
            ia, iap = proj_plus[ib, ibp].argmax(), proj_minus[ib, ibp].argmax()
        else:
            ia, iap = proj_plus[ib, ibp].argmin(), proj_minus[ib, ibp].argmin()
        signs.append(1.0 if signed_hi[ib, ibp] >= signed_lo[ib, ibp] else -1.0)
        starts.append(np.concatenate([angles[ia], angles[iap], angles[ib], angles[ibp]]))

    best_x, best_s = starts[0], abs(_signed_s(t, starts[0]))
    for x0, sign in zip(starts, signs):
        res = minimize(
            lambda x: -sign * _signed_s(t, x),
            x0,
            method="Nelder-Mead",
            options={
                "xatol": cfg.xatol,
                "fatol": cfg.fatol,
                "maxiter": cfg.maxiter,
                "maxfev": 2 * cfg.maxiter,
                "adaptive": True,
            },
        )
        if -res.fun > best_s:
            best_x, best_s = res.x, -res.fun

    a, ap, b, bp = (bloch_projector(best_x[2 * k], best_x[2 * k + 1]) for k in range(4))
    return CHSHResult(_chsh_value(rho, best_x), a, ap, b, bp, np.asarray(best_x))


def density_to_json(rho: np.ndarray) -> dict:
    rho = np.asarray(rho, dtype=complex)
    return {
        "basis": list(BASIS),
        "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in rho],
    }


def density_from_json(obj: dict) -> np.ndarray:
    if list(obj.get("basis", [])) != list(BASIS):
        raise ValueError(f"basis must be {list(BASIS)}, got {obj.get('basis')!r}")
    m = np.asarray(obj["matrix"], dtype=float)
    if m.shape != (4, 4, 2):
        raise ValueError(f"matrix must be 4x4 [re, im] pairs, got shape {m.shape}")
    return validate_density_matrix(m[..., 0] + 1j * m[..., 1])


def bell_fidelities(rho: np.ndarray) -> tuple[float, float]:
    """Fidelities to the normalized Bell states (|HH> +/- |VV>)/sqrt(2)."""
    return fidelity_to_pure(rho, bell_state("+")), fidelity_to_pure(rho, bell_state("-"))


def state_metrics(
    rho: np.ndarray, chsh: CHSHSearchConfig | None = None, s_method: str = "search"
) -> dict[str, float]:
    """Concurrence, S, purity, HH/VV phase and Bell fidelities of one state.

    ``theta`` is NaN when the coherence is too small for a phase.  ``s_method``
    is ``"search"`` (numerical maximization) or ``"horodecki"`` (closed form).
    """
    rho = validate_density_matrix(rho)
    if s_method == "search":
        s = chsh_maximize(rho, chsh).s
    elif s_method == "horodecki":
        s = horodecki_s(rho)
    else:
        raise ValueError(f"unknown s_method {s_method!r}")
    try:
        theta = relative_phase(rho)
    except PhaseUndefinedError:
        theta = float("nan")
    f_plus, f_minus = bell_fidelities(rho)
    return {
        "concurrence": concurrence(rho),
        "s": s,
        "purity": purity(rho),
        "theta": theta,
        "f_phi_plus": f_plus,
        "f_phi_minus": f_minus,
    }


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    d = np.asarray(rho) - np.asarray(sigma)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T)))))
