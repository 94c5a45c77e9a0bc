"""Truncated-Fourier representation of complex fields on a circle.

A field phi on the circle of circumference L is stored through its Fourier
coefficients phi_hat(k), k = -N..N, with the normalization

    phi(x) = L**(-1/2) * sum_k phi_hat(k) * exp(2j*pi*k*x/L),

so that the L2 norm satisfies Parseval exactly:
int |phi|^2 dx = sum_k |phi_hat(k)|^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

__all__ = [
    "SpectralField",
    "GridField",
    "zero_field",
    "synthesize",
    "analyze",
    "norms",
    "project",
    "dealias_grid_size",
    "wavenumbers",
    "field_to_json_dict",
    "field_from_json_dict",
]


@dataclass(frozen=True)
class SpectralField:
    """Immutable spectral field: 2N+1 complex coefficients for modes -N..N."""

    N: int
    L: float
    coeffs: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        if self.N < 0:
            raise ValueError("mode cutoff N must be nonnegative")
        if self.L <= 0:
            raise ValueError("circumference L must be positive")
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (2 * self.N + 1,):
            raise ValueError(
                f"expected {2 * self.N + 1} coefficients, got shape {c.shape}"
            )
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    def coeff(self, k: int) -> complex:
        """Coefficient of mode k, k in [-N, N]."""
        if abs(k) > self.N:
            raise IndexError(f"mode {k} outside [-{self.N}, {self.N}]")
        return complex(self.coeffs[k + self.N])

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.N, self.L, coeffs)

    def l2(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))


@dataclass(frozen=True)
class GridField:
    """Equispaced real-space samples of a field on the circle."""

    samples: np.ndarray
    L: float

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex).copy()
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)

    @property
    def M(self) -> int:
        return self.samples.shape[0]


def zero_field(N: int, L: float) -> SpectralField:
    return SpectralField(N, L, np.zeros(2 * N + 1, dtype=complex))


def wavenumbers(N: int, L: float) -> np.ndarray:
    """Physical wavenumbers 2*pi*k/L for k = -N..N."""
    return 2.0 * np.pi * np.arange(-N, N + 1) / L


def dealias_grid_size(N: int) -> int:
    """Smallest grid size that integrates degree-4 products of degree-N
    trigonometric polynomials exactly (M >= 4N+1, padded to M >= 2(2N+1)
    for headroom), rounded up to a fast FFT length."""
    from scipy.fft import next_fast_len

    return int(next_fast_len(4 * N + 2))


def _coeffs_batch(fields) -> np.ndarray:
    return np.stack([f.coeffs for f in fields])


def synthesize_coeffs(coeffs: np.ndarray, N: int, L: float, M: int) -> np.ndarray:
    """Sample batched coefficient arrays (..., 2N+1) on the M-point grid."""
    if M < 2 * N + 1:
        raise ValueError(f"grid size {M} < 2N+1 = {2 * N + 1}: aliasing")
    coeffs = np.asarray(coeffs, dtype=complex)
    shape = coeffs.shape[:-1] + (M,)
    padded = np.zeros(shape, dtype=complex)
    ks = np.arange(-N, N + 1)
    padded[..., ks % M] = coeffs
    return M * np.fft.ifft(padded, axis=-1) / np.sqrt(L)


def analyze_samples(samples: np.ndarray, N: int, L: float) -> np.ndarray:
    """Inverse of synthesize_coeffs on band-limited data (batched)."""
    samples = np.asarray(samples, dtype=complex)
    M = samples.shape[-1]
    if M < 2 * N + 1:
        raise ValueError(f"grid size {M} < 2N+1 = {2 * N + 1}: aliasing")
    spec = np.fft.fft(samples, axis=-1) * (np.sqrt(L) / M)
    ks = np.arange(-N, N + 1)
    return spec[..., ks % M]


def synthesize(f: SpectralField, M: int) -> GridField:
    """Evaluate the field at x_j = j*L/M, j = 0..M-1."""
    return GridField(synthesize_coeffs(f.coeffs, f.N, f.L, M), f.L)


def analyze(g: GridField, N: int) -> SpectralField:
    """Project grid samples back onto modes -N..N (exact if band-limited)."""
    return SpectralField(N, g.L, analyze_samples(g.samples, N, g.L))


def norms(f: SpectralField, M: int | None = None, sup_refine: int = 8):
    """Return (l2, l4, sup, h1_seminorm).

    l2 and the H1 seminorm come from the coefficients (exact); l4 from the
    M-point quadrature (exact for M >= 4N+1); sup is a lower estimate from a
    sup_refine-times finer grid.
    """
    if M is None:
        M = dealias_grid_size(f.N)
    if M < 2 * (2 * f.N + 1):
        raise ValueError(f"need M >= 2(2N+1) = {2 * (2 * f.N + 1)} for l4/sup")
    l2 = f.l2()
    g = synthesize(f, M)
    l4 = float((f.L / M * np.sum(np.abs(g.samples) ** 4)) ** 0.25)
    g_fine = synthesize(f, sup_refine * M)
    sup = float(np.max(np.abs(g_fine.samples)))
    h1 = float(np.sqrt(np.sum((wavenumbers(f.N, f.L) * np.abs(f.coeffs)) ** 2)))
    return l2, l4, sup, h1


def project(f: SpectralField, n: int, part: str = "low") -> SpectralField:
    """Keep modes |k| <= n ("low") or the complement ("high")."""
    if n < 0:
        raise ValueError("projection cutoff must be nonnegative")
    if n > f.N:
        raise ValueError(f"projection cutoff {n} exceeds field cutoff {f.N}")
    mask = np.abs(np.arange(-f.N, f.N + 1)) <= n
    out = np.array(f.coeffs)
    if part == "low":
        out[~mask] = 0.0
    elif part == "high":
        out[mask] = 0.0
    else:
        raise ValueError("part must be 'low' or 'high'")
    return f.with_coeffs(out)


def field_to_json_dict(f: SpectralField) -> dict:
    return {
        "N": f.N,
        "L": f.L,
        "re": [float(v) for v in f.coeffs.real],
        "im": [float(v) for v in f.coeffs.imag],
    }


def field_from_json_dict(d: dict) -> SpectralField:
    coeffs = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
    return SpectralField(int(d["N"]), float(d["L"]), coeffs)
