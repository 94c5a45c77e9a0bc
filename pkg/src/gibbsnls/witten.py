"""Finite-mode Hessian pencil for the mode-space form of the generator.

Everything here lives in the hard-coded normalization beta = m = 1,
L = 2 pi, modes n = -N..N with weights n^2 + 1, and the doubled mode
Hamiltonian

    E2(a) = sum_n (n^2+1) |a_n|^2
            - (lam/2) sum_{n1-n2+n3-n4=0} a_{n1} conj(a_{n2}) a_{n3} conj(a_{n4})
            + kappa/(r+1) (sum_n |a_n|^2)^(r+1),

whose exp(-E2/2) is the ground state of the associated Schroedinger
operator.  The object of interest is the sandwich A * Hess(E2) * A with the
diagonal metric A(n) = (n^2+1)^(-s): a uniform lower bound c on the pencil

    <conj(A w), Hess(E2) A w> >= c <conj(A w), w>

bounds the smallest positive eigenvalue of the degree-0 operator from
below via the degree-0/1 intertwining of the spectra.  The blocks are the
exact second derivatives of E2 (validated against finite differences);
they differ from a commonly quoted variant whose quartic entries carry an
extra factor (4 for the mixed block, 2 for the anomalous one).  The scalar
bound of `bounds.witten_gap_bound` is calibrated to that smaller variant;
its Hessian-calibrated counterpart replaces lam by 3 lam.

The pencil sits on the scale where the free gap at s = 1 equals 1; the
relaxation rate of the time-domain generator is exactly half of it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import next_fast_len

from .field import SpectralField
from .hamiltonian import ModelParams

__all__ = [
    "WittenHessian",
    "MinEigReport",
    "mode_params_from_model",
    "phi_truncated",
    "quartic_mode_sum",
    "quartic_mode_sum_direct",
    "hessian_blocks",
    "hessian_quadform_mode",
    "pencil_min_eig",
    "min_eig_margin",
]

MAX_DENSE_N = 64  # dense eigensolves up to dimension 2(2N+1) = 258


def mode_params_from_model(mp: ModelParams):
    """(lam_mode, kappa, r_mode) for which exp(-E2) is exactly the
    coordinate density of the sampled equilibrium measure.

    Requires beta = m = 1 and L = 2 pi; then lam_mode = lam/(2 pi) (the
    quartic integral contributes 1/L in mode variables) and
    r_mode = r - 1 (the mode form uses the exponent r+1)."""
    if abs(mp.beta - 1.0) > 1e-12 or abs(mp.m - 1.0) > 1e-12:
        raise ValueError("mode normalization needs beta = m = 1")
    if abs(mp.L - 2.0 * np.pi) > 1e-12:
        raise ValueError("mode normalization needs L = 2 pi")
    return mp.lam / (2.0 * np.pi), mp.kappa, mp.r - 1.0


def _mode_weights(N: int) -> np.ndarray:
    n = np.arange(-N, N + 1)
    return n.astype(float) ** 2 + 1.0


def quartic_mode_sum(coeffs: np.ndarray) -> float:
    """sum over n1-n2+n3-n4 = 0 of a1 conj(a2) a3 conj(a4), evaluated on a
    dealiased grid as the mean of |sum_n a_n e^{i n x}|^4."""
    coeffs = np.asarray(coeffs, dtype=complex)
    N = (coeffs.shape[-1] - 1) // 2
    M = int(next_fast_len(4 * N + 1))
    padded = np.zeros(coeffs.shape[:-1] + (M,), dtype=complex)
    ks = np.arange(-N, N + 1)
    padded[..., ks % M] = coeffs
    grid = M * np.fft.ifft(padded, axis=-1)
    return np.mean(np.abs(grid) ** 4, axis=-1)


def quartic_mode_sum_direct(coeffs: np.ndarray) -> complex:
    """O(N^3) convolution evaluation of the same sum (test oracle)."""
    a = np.asarray(coeffs, dtype=complex)
    conv = np.convolve(a, a)  # sum_{i+j=p} a_i a_j over array indices
    corr_sq = np.sum(np.abs(conv) ** 2)
    # sum_{n1+n3 = n2+n4} a1 a3 conj(a2 a4) = sum_p |conv(p)|^2
    return corr_sq


def phi_truncated(coeffs: np.ndarray, lam: float, kappa: float, r: float) -> float:
    """The doubled mode Hamiltonian E2(a) (see module docstring)."""
    a = np.asarray(coeffs, dtype=complex)
    N = (a.shape[-1] - 1) // 2
    w = _mode_weights(N)
    t = np.sum(np.abs(a) ** 2, axis=-1)
    out = np.sum(w * np.abs(a) ** 2, axis=-1)
    if lam != 0.0:
        out = out - 0.5 * lam * quartic_mode_sum(a)
    if kappa != 0.0:
        out = out + kappa / (r + 1.0) * t ** (r + 1.0)
    return out if out.ndim else float(out)


@dataclass
class WittenHessian:
    """Metric-sandwiched Hessian blocks at one configuration.

    M11 is Hermitian, M12 symmetric; the associated real quadratic form on
    w = (u, conj(u)) is Q(w) = 2 <conj(u), M11 u> + 2 Re <conj(u), M12 conj(u)>,
    equal to the second derivative of E2 along the direction A u."""

    N: int
    M11: np.ndarray
    M12: np.ndarray
    s: float

    def metric_diag(self) -> np.ndarray:
        return _mode_weights(self.N) ** (-self.s)

    def real_form(self) -> np.ndarray:
        """Symmetric matrix F on R^(2(2N+1)) with Q(w) = 2 z^T F z for
        z = (Re u, Im u)."""
        hr, hi = self.M11.real, self.M11.imag
        sr, si = self.M12.real, self.M12.imag
        top = np.hstack([hr + sr, si - hi])
        bot = np.hstack([(si - hi).T, hr - sr])
        return np.vstack([top, bot])


def hessian_blocks(
    coeffs: np.ndarray, lam: float, kappa: float, r: float, s: float
) -> WittenHessian:
    """Exact second-derivative blocks of E2, sandwiched by the metric.

    With sig(n) = (n^2+1)^(-s), T = sum |a|^2, R(d) = sum_l a_l conj(a_{l+d})
    and S(p) = sum_{k+l=p} a_k a_l:

        D_n    = (n^2+1)^(1-2s) + (n^2+1)^(-2s) kappa T^r
        B_nm   = 2 lam sig(n) sig(m) R(m - n)
        C_nm   = sig(n) sig(m) kappa r T^(r-1) a_n conj(a_m)
        B'_nm  = lam sig(n) sig(m) S(n + m)
        C'_nm  = sig(n) sig(m) kappa r T^(r-1) a_n a_m

        M11 = diag(D) - B + C,   M12 = -B' + C'.
    """
    a = np.asarray(coeffs, dtype=complex)
    N = (a.shape[0] - 1) // 2
    size = 2 * N + 1
    w = _mode_weights(N)
    sig = w ** (-s)
    t = float(np.sum(np.abs(a) ** 2))

    d = w ** (1.0 - 2.0 * s)
    if kappa != 0.0:
        d = d + w ** (-2.0 * s) * kappa * t**r
    m11 = np.diag(d).astype(complex)
    m12 = np.zeros((size, size), dtype=complex)

    if lam != 0.0:
        corr = np.zeros(2 * size - 1, dtype=complex)  # R(d), d = -(size-1)..size-1
        for dd in range(-(size - 1), size):
            if dd >= 0:
                corr[dd + size - 1] = np.sum(a[: size - dd] * np.conj(a[dd:]))
            else:
                corr[dd + size - 1] = np.sum(a[-dd:] * np.conj(a[: size + dd]))
        idx = np.arange(size)
        diff = idx[None, :] - idx[:, None] + (size - 1)  # m - n
        outer_sig = np.outer(sig, sig)
        m11 = m11 - 2.0 * lam * outer_sig * corr[diff]
        conv = np.convolve(a, a)  # S(n+m) at array index n_idx + m_idx
        m12 = m12 - lam * outer_sig * conv[idx[None, :] + idx[:, None]]

    if kappa != 0.0 and t > 0.0:
        fac = kappa * r * t ** (r - 1.0)
        sa = sig * a
        m11 = m11 + fac * np.outer(sa, np.conj(sa))
        m12 = m12 + fac * np.outer(sa, sa)

    return WittenHessian(N=N, M11=m11, M12=m12, s=s)


def hessian_quadform_mode(wh: WittenHessian, u: np.ndarray) -> float:
    """Q(w) for w = (u, conj(u)): equals d^2/dt^2 E2(a + t A u) at t = 0."""
    u = np.asarray(u, dtype=complex)
    q = 2.0 * np.real(np.vdot(u, wh.M11 @ u)) + 2.0 * np.real(
        np.dot(np.conj(u), wh.M12 @ np.conj(u))
    )
    return float(q)


def pencil_min_eig(wh: WittenHessian) -> float:
    """Largest c with Q(w) >= c <conj(A w), w>: the smallest eigenvalue of
    the symmetric pencil (F, diag(A)), solved through the square root of
    the diagonal metric."""
    if wh.N > MAX_DENSE_N:
        raise ValueError(f"dense solve capped at N = {MAX_DENSE_N}")
    f = wh.real_form()
    g = np.concatenate([wh.metric_diag(), wh.metric_diag()])
    scale = 1.0 / np.sqrt(g)
    fh = f * np.outer(scale, scale)
    vals = np.linalg.eigvalsh(fh)
    return float(vals[0])


@dataclass
class MinEigReport:
    c_hat: float
    worst_index: int
    worst_coeffs: np.ndarray
    values: np.ndarray
    n_rejected: int
    rejected_indices: list


def min_eig_margin(samples, lam: float, kappa: float, r: float, s: float):
    """Minimum pencil eigenvalue over sampled configurations.

    A uniformly positive value over the visited region is empirical
    evidence (not proof) for a spectral gap of at least c_hat there.
    Samples with non-finite eigenvalues are rejected and reported."""
    values = []
    rejected = []
    coeff_list = []
    for i, sample in enumerate(samples):
        a = sample.coeffs if isinstance(sample, SpectralField) else np.asarray(sample)
        coeff_list.append(np.asarray(a, dtype=complex))
        wh = hessian_blocks(coeff_list[-1], lam, kappa, r, s)
        try:
            val = pencil_min_eig(wh)
        except np.linalg.LinAlgError:
            val = np.nan
        if not np.isfinite(val):
            rejected.append(i)
            values.append(np.nan)
            continue
        values.append(val)
    if not coeff_list:
        raise ValueError("samples must be nonempty")
    arr = np.asarray(values)
    finite = np.where(np.isfinite(arr))[0]
    if finite.size == 0:
        raise ValueError("all samples rejected (non-finite eigenvalues)")
    worst = int(finite[np.argmin(arr[finite])])
    return MinEigReport(
        c_hat=float(arr[worst]),
        worst_index=worst,
        worst_coeffs=coeff_list[worst],
        values=arr,
        n_rejected=len(rejected),
        rejected_indices=rejected,
    )
