"""Energy functional of the stabilized focusing NLS and its derivatives.

    H(phi) = 1/2 int (m^2 |phi|^2 + |phi'|^2) dx
             - (lam/4) int |phi|^4 dx + (kappa/(2r)) ||phi||_2^(2r)

All gradients are real gradients in coefficient space: for a mode value
z = x + i*y the gradient of c*|z|^2 is 2*c*z.  This convention is shared by
the Langevin drift and the finite-mode Hessian machinery, so the damping
term of the dynamics is exactly -(beta/2) sigma^2 grad(H).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import (
    SpectralField,
    analyze_samples,
    dealias_grid_size,
    synthesize_coeffs,
    wavenumbers,
)

__all__ = [
    "ModelParams",
    "omega",
    "noise_metric",
    "h0",
    "v1",
    "v2",
    "hamiltonian",
    "hamiltonian_batch",
    "gradient",
    "gradient_coeffs",
    "hessian_quadform",
]


@dataclass(frozen=True)
class ModelParams:
    """Couplings and geometry: (lam, kappa, r, m, beta, L, s), quartic focusing."""

    lam: float
    kappa: float
    r: float
    m: float = 1.0
    beta: float = 1.0
    L: float = 2.0 * np.pi
    s: float = 1.0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0 (defocusing sign unsupported)")
        if self.lam > 0:
            # normalizability of the equilibrium measure needs the stabilizer
            if self.kappa <= 0:
                raise ValueError("kappa must be > 0 when lam > 0")
            if self.r <= 5:
                raise ValueError("r must be > 5 when lam > 0")
        else:
            if self.kappa < 0:
                raise ValueError("kappa must be >= 0")
        if self.m <= 0 or self.beta <= 0 or self.L <= 0:
            raise ValueError("m, beta, L must be positive")
        if not (0 < self.s <= 1):
            raise ValueError("s must lie in (0, 1]")


def omega(mp: ModelParams, N: int) -> np.ndarray:
    """Dispersion weights m^2 + (2 pi k / L)^2 for k = -N..N."""
    return mp.m**2 + wavenumbers(N, mp.L) ** 2


def noise_metric(mp: ModelParams, N: int) -> np.ndarray:
    """Diagonal noise metric sigma^2(k) = (beta * omega_k)^(-s): the s-th
    power of the free covariance, weighting both damping and forcing."""
    return (mp.beta * omega(mp, N)) ** (-mp.s)


def h0(f: SpectralField, mp: ModelParams) -> float:
    """Free energy 1/2 sum_k (m^2 + (2 pi k/L)^2) |phi_hat(k)|^2."""
    return 0.5 * float(np.sum(omega(mp, f.N) * np.abs(f.coeffs) ** 2))


def hamiltonian_batch(coeffs: np.ndarray, N: int, mp: ModelParams) -> np.ndarray:
    """H evaluated over leading batch axes of a coefficient array."""
    coeffs = np.asarray(coeffs, dtype=complex)
    w = omega(mp, N)
    out = 0.5 * np.sum(w * np.abs(coeffs) ** 2, axis=-1)
    if mp.lam != 0.0:
        M = dealias_grid_size(N)
        g = synthesize_coeffs(coeffs, N, mp.L, M)
        out = out - mp.lam * 0.25 * (mp.L / M) * np.sum(np.abs(g) ** 4, axis=-1)
    if mp.kappa != 0.0:
        t = np.sum(np.abs(coeffs) ** 2, axis=-1)
        out = out + mp.kappa * t**mp.r / (2.0 * mp.r)
    return out


def _quartic_integral(coeffs: np.ndarray, N: int, L: float) -> float:
    """int |phi|^4 dx via dealiased quadrature (exact for M >= 4N+1)."""
    M = dealias_grid_size(N)
    g = synthesize_coeffs(coeffs, N, L, M)
    return float(L / M * np.sum(np.abs(g) ** 4))


def v1(f: SpectralField) -> float:
    """Quartic interaction 1/4 int |phi|^4 dx."""
    return 0.25 * _quartic_integral(f.coeffs, f.N, f.L)


def v2(f: SpectralField, r: float) -> float:
    """Stabilizer 1/(2r) ||phi||_2^(2r)."""
    t = float(np.sum(np.abs(f.coeffs) ** 2))
    return t**r / (2.0 * r)


def hamiltonian(f: SpectralField, mp: ModelParams) -> float:
    return h0(f, mp) - mp.lam * v1(f) + mp.kappa * v2(f, mp.r)


def gradient_coeffs(coeffs: np.ndarray, N: int, mp: ModelParams) -> np.ndarray:
    """Real gradient of H in coefficient space, batched over leading axes.

    grad_k = omega_k phi_k - lam (|phi|^2 phi)_k + kappa ||phi||^(2r-2) phi_k
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    out = omega(mp, N) * coeffs
    if mp.lam != 0.0:
        M = dealias_grid_size(N)
        g = synthesize_coeffs(coeffs, N, mp.L, M)
        cubic = analyze_samples(np.abs(g) ** 2 * g, N, mp.L)
        out = out - mp.lam * cubic
    if mp.kappa != 0.0:
        t = np.sum(np.abs(coeffs) ** 2, axis=-1)[..., None]
        out = out + mp.kappa * t ** (mp.r - 1) * coeffs
    return out


def gradient(f: SpectralField, mp: ModelParams) -> SpectralField:
    return f.with_coeffs(gradient_coeffs(f.coeffs, f.N, mp))


def hessian_quadform(
    f: SpectralField, eta: SpectralField, mp: ModelParams, term: str = "full"
) -> float:
    """Analytic <eta, Hess_term(phi) eta> for term in {h0, v1, v2, full}.

    h0:   sum_k omega_k |eta_k|^2  (= 2 h0(eta))
    v1:   int (2|phi|^2 |eta|^2 + Re(conj(phi)^2 eta^2)) dx,
          which obeys 0 <= . <= 3 int |phi|^2 |eta|^2 dx
    v2:   2(r-1) T^(r-2) (Re<phi,eta>)^2 + T^(r-1) ||eta||^2,  T = ||phi||^2
    full: h0 - lam*v1 + kappa*v2
    """
    if f.N != eta.N or f.L != eta.L:
        raise ValueError("phi and eta must share (N, L)")
    term = term.lower()
    if term == "h0":
        return float(np.sum(omega(mp, f.N) * np.abs(eta.coeffs) ** 2))
    if term == "v1":
        M = dealias_grid_size(f.N)
        gp = synthesize_coeffs(f.coeffs, f.N, f.L, M)
        ge = synthesize_coeffs(eta.coeffs, eta.N, eta.L, M)
        integrand = 2.0 * np.abs(gp) ** 2 * np.abs(ge) ** 2 + np.real(
            np.conj(gp) ** 2 * ge**2
        )
        return float(f.L / M * np.sum(integrand))
    if term == "v2":
        t = float(np.sum(np.abs(f.coeffs) ** 2))
        e2 = float(np.sum(np.abs(eta.coeffs) ** 2))
        cross = float(np.real(np.sum(f.coeffs * np.conj(eta.coeffs))))
        r = mp.r
        quad = t ** (r - 1) * e2
        if r != 1 and t > 0:
            quad += 2.0 * (r - 1) * t ** (r - 2) * cross**2
        return quad
    if term == "full":
        out = hessian_quadform(f, eta, mp, "h0")
        if mp.lam != 0.0:
            out -= mp.lam * hessian_quadform(f, eta, mp, "v1")
        if mp.kappa != 0.0:
            out += mp.kappa * hessian_quadform(f, eta, mp, "v2")
        return out
    raise ValueError(f"unknown term {term!r}")
