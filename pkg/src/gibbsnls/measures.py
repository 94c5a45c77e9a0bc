"""Sampling of the free Gaussian measure and the interacting equilibrium.

The free measure mu0 makes the modes independent complex Gaussians with

    E |phi_hat(k)|^2 = 1 / (beta * omega_k),   omega_k = m^2 + (2 pi k/L)^2,

real and imaginary parts independent with half that variance each.  In
coefficient coordinates mu0 has density proportional to exp(-2 beta H0);
the factor 2 is the complex-coordinate counterpart of the covariance
(beta (m^2 - Laplace))^(-1) and is shared by the Langevin dynamics, which
preserves exp(-2 beta H).  The equilibrium measure mu is sampled by a
Metropolis-adjusted Langevin chain whose proposal is the Euler step of the
reversible part of the dynamics (preconditioner sigma^2 = C^s), so sampler
and integrator share drift code and mu is invariant by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import SpectralField
from .hamiltonian import (
    ModelParams,
    gradient_coeffs,
    hamiltonian_batch,
    noise_metric,
    omega,
)

__all__ = [
    "ChainConfig",
    "ChainStats",
    "free_mode_variance",
    "sample_free",
    "sample_free_coeffs",
    "log_density_ratio",
    "gibbs_log_density",
    "mala_propose",
    "mala_sweep",
    "sample_gibbs",
    "sample_gibbs_coeffs",
]


@dataclass(frozen=True)
class ChainConfig:
    """MALA chain controls: proposal time step, burn-in, thinning, seed."""

    step: float = 0.1
    burn_in: int = 1000
    thin: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.burn_in < 1 or self.thin < 1:
            raise ValueError("burn_in and thin must be >= 1")


@dataclass
class ChainStats:
    acceptance_rate: float
    step: float
    warning: str | None = None


def free_mode_variance(mp: ModelParams, N: int) -> np.ndarray:
    """E |phi_hat(k)|^2 under mu0, for k = -N..N."""
    return 1.0 / (mp.beta * omega(mp, N))


def sample_free_coeffs(
    mp: ModelParams, N: int, rng: np.random.Generator, count: int | None = None
) -> np.ndarray:
    """Draw coefficients from mu0; shape (count, 2N+1) or (2N+1,)."""
    shape = (2 * N + 1,) if count is None else (count, 2 * N + 1)
    v = free_mode_variance(mp, N)
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return np.sqrt(v / 2.0) * z


def sample_free(mp: ModelParams, N: int, rng: np.random.Generator) -> SpectralField:
    return SpectralField(N, mp.L, sample_free_coeffs(mp, N, rng))


def gibbs_log_density(coeffs: np.ndarray, N: int, mp: ModelParams) -> np.ndarray:
    """log density of mu in coefficient coordinates, up to a constant:
    -2 beta H(phi)."""
    return -2.0 * mp.beta * hamiltonian_batch(coeffs, N, mp)


def log_density_ratio(f: SpectralField, mp: ModelParams) -> float:
    """log d(mu)/d(mu0) up to the normalizing constant:

        -2 beta (H(phi) - H0(phi))
        = -2 beta (-(lam/4)||phi||_4^4 + (kappa/2r)||phi||_2^(2r)).

    The prefactor matches the coordinate densities above, so importance
    weights exp(log_density_ratio) reweight mu0 samples to mu exactly.
    """
    free = ModelParams(0.0, 0.0, 1.0, mp.m, mp.beta, mp.L, mp.s)
    coeffs = f.coeffs[None, :]
    val = gibbs_log_density(coeffs, f.N, mp) - gibbs_log_density(coeffs, f.N, free)
    return float(val[0])


def _proposal_terms(coeffs, N, mp, step):
    """Mean of the MALA proposal: one tamed Euler step of the reversible
    drift.  The taming 1/(1 + ||move||) caps the deterministic move norm at
    one; without it, states in the steep stabilizer region propose huge
    overshoots that are always rejected and freeze their chain.  The
    Metropolis correction uses the same mean, so the target is unaffected.
    """
    sig2 = noise_metric(mp, N)
    grad = gradient_coeffs(coeffs, N, mp)
    move = 0.5 * step * mp.beta * sig2 * grad
    norm = np.sqrt(np.sum(np.abs(move) ** 2, axis=-1))[..., None]
    return coeffs - move / (1.0 + norm), sig2


def mala_propose(coeffs, N, mp, step, rng):
    """Propose new states and return (proposal, log q(x->y), mean(x))."""
    mean, sig2 = _proposal_terms(coeffs, N, mp, step)
    var = step * sig2
    noise = np.sqrt(var / 2.0) * (
        rng.standard_normal(coeffs.shape) + 1j * rng.standard_normal(coeffs.shape)
    )
    prop = mean + noise
    logq = -np.sum(np.abs(prop - mean) ** 2 / var, axis=-1)
    return prop, logq, mean


def _log_q(coeffs_from, coeffs_to, N, mp, step):
    mean, sig2 = _proposal_terms(coeffs_from, N, mp, step)
    var = step * sig2
    return -np.sum(np.abs(coeffs_to - mean) ** 2 / var, axis=-1)


def mala_log_accept_ratio(x, y, N, mp, step):
    """log of the Metropolis ratio for the move x -> y (batched);
    antisymmetric under swapping x and y."""
    lx = gibbs_log_density(x, N, mp)
    ly = gibbs_log_density(y, N, mp)
    return (ly + _log_q(y, x, N, mp, step)) - (lx + _log_q(x, y, N, mp, step))


def mala_sweep(coeffs, N, mp, step, rng):
    """One Metropolis-adjusted Langevin update of a batch of states.

    Returns (new_coeffs, accepted_mask)."""
    prop, logq_fwd, _ = mala_propose(coeffs, N, mp, step, rng)
    logq_rev = _log_q(prop, coeffs, N, mp, step)
    log_alpha = (
        gibbs_log_density(prop, N, mp)
        - gibbs_log_density(coeffs, N, mp)
        + logq_rev
        - logq_fwd
    )
    u = rng.random(log_alpha.shape)
    accept = np.log(u) < log_alpha
    out = np.where(accept[..., None], prop, coeffs)
    return out, accept


def sample_gibbs_coeffs(
    mp: ModelParams,
    N: int,
    cc: ChainConfig,
    count: int,
    chains: int | None = None,
):
    """Run parallel MALA chains targeting mu; return (coeffs, ChainStats).

    coeffs has shape (count, 2N+1).  The step is tuned toward ~55%
    acceptance by repeated doubling/halving (with shrinking factors) during
    burn-in and frozen afterwards, so the post-burn-in kernel is exactly
    mu-invariant.  Fully reproducible from cc.seed.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if chains is None:
        chains = min(count, 64)
    rng = np.random.default_rng(np.random.SeedSequence(cc.seed))
    # cold-ish start inside the stabilizer wall shortens burn-in for large r
    state = 0.5 * sample_free_coeffs(mp, N, rng, chains)

    step = cc.step
    factor = 2.0
    adapt_every = max(20, cc.burn_in // 25)
    acc_window = []
    for it in range(cc.burn_in):
        state, acc = mala_sweep(state, N, mp, step, rng)
        acc_window.append(np.mean(acc))
        if (it + 1) % adapt_every == 0:
            rate = float(np.mean(acc_window))
            acc_window = []
            if rate > 0.575:
                step *= factor
            elif rate < 0.525:
                step /= factor
            factor = max(1.05, factor**0.75)

    per_chain = -(-count // chains)  # ceil
    kept = []
    n_acc = 0
    n_tot = 0
    for _ in range(per_chain):
        for _ in range(cc.thin):
            state, acc = mala_sweep(state, N, mp, step, rng)
            n_acc += int(np.sum(acc))
            n_tot += acc.size
        kept.append(state.copy())
    coeffs = np.concatenate(kept, axis=0)[:count]
    rate = n_acc / max(n_tot, 1)
    warning = None
    if rate < 0.05:
        warning = f"acceptance rate {rate:.3f} < 5%: chain looks mis-tuned"
    return coeffs, ChainStats(acceptance_rate=rate, step=step, warning=warning)


def sample_gibbs(
    mp: ModelParams, N: int, cc: ChainConfig, count: int, chains: int | None = None
):
    """Like sample_gibbs_coeffs but returning SpectralField objects."""
    coeffs, stats = sample_gibbs_coeffs(mp, N, cc, count, chains)
    return [SpectralField(N, mp.L, c) for c in coeffs], stats
