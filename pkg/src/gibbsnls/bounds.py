"""Certified log-Sobolev / spectral-gap lower bounds.

Pipeline, for the measure with density exp(-2 beta H) and Dirichlet metric
sigma^2 = C^s:

  1. Sobolev embedding constant C_{a,g}^2 = sum_k (a^2 + (2 pi k)^2)^(-2g),
     evaluated as a rigorous upper bound (partial sum + alternating
     zeta-series tail).
  2. Convexity margins for the low and high frequency blocks of
     Hess(H) - alpha Hess(H0), reduced by a Young inequality to explicit
     scalars; negative low-mode margin fixes the strength c of a bounded
     compensating perturbation W supported on the lowest 2n+1 modes.
  3. W(phi) = (c/2) T chi(T/R), T = ||P_n phi||_2^2, with the explicit
     quintic cutoff chi; ||W||_inf <= c R rigorously.
  4. Gaussian log-Sobolev constant C0 for the free measure and metric,
     degraded by the bounded change of density: the certified constant is
     alpha * C0 * exp(-2 beta ||W||_inf), which is also the certified gap.

Every scalar step can be replayed in 128-bit arithmetic (precision="quad")
for golden-value checks; the double pipeline is asserted against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .field import SpectralField, project, wavenumbers
from .hamiltonian import ModelParams, hessian_quadform

__all__ = [
    "BoundConfig",
    "PerturbationSpec",
    "GapCertificate",
    "WittenGapBound",
    "sobolev_constant",
    "sobolev_constant_sq",
    "mode_split_bound",
    "low_mode_margin",
    "high_mode_margin",
    "lambda_zero_threshold",
    "select_parameters",
    "chi",
    "chi_d1",
    "chi_d2",
    "w_value",
    "w_sup",
    "hessian_w_quadform",
    "hessian_lower_bound_check",
    "gaussian_lsi_constant",
    "certify",
    "witten_gap_bound",
    "default_gamma",
    "default_eps",
    "mode_gap_metadata",
]


# ----------------------------------------------------------------------
# precision contexts


class _DoubleCtx:
    """Plain float arithmetic plus the special functions the pipeline needs."""

    name = "double"
    tail_tol = 1e-18
    bisect_tol = 1e-15

    def c(self, x):
        return float(x)

    @property
    def pi(self):
        return math.pi

    def exp(self, x):
        return math.exp(x)

    def log(self, x):
        return math.log(x)

    def sqrt(self, x):
        return math.sqrt(x)

    def zeta(self, s, q):
        from scipy.special import zeta as _hz

        return float(_hz(float(s), float(q)))

    def to_float(self, x):
        return float(x)


class _QuadCtx:
    """mpmath arithmetic at 34 significant digits (IEEE quad scale)."""

    name = "quad"
    tail_tol = 1e-40
    bisect_tol = 1e-32

    def __init__(self):
        import mpmath

        self._mp = mpmath

    def c(self, x):
        return self._mp.mpf(x)

    @property
    def pi(self):
        return +self._mp.pi

    def exp(self, x):
        return self._mp.exp(x)

    def log(self, x):
        return self._mp.log(x)

    def sqrt(self, x):
        return self._mp.sqrt(x)

    def zeta(self, s, q):
        return self._mp.zeta(s, q)

    def to_float(self, x):
        return float(x)


def _make_ctx(precision: str):
    if precision == "double":
        return _DoubleCtx()
    if precision == "quad":
        return _QuadCtx()
    raise ValueError("precision must be 'double' or 'quad'")


# ----------------------------------------------------------------------
# configuration types


def default_gamma(r: float) -> float:
    """Midpoint of the gamma interval on which both interpolation exponents
    stay admissible under the default eps rule: (1/4, 1/2 - 1/(r-1)).
    Nonempty exactly when r > 5."""
    hi = 0.5 - 1.0 / (r - 1.0)
    if hi <= 0.25:
        raise ValueError(f"r = {r} too small: no admissible gamma")
    return 0.5 * (0.25 + hi)


def default_eps(gamma: float) -> float:
    """Half the remaining room below 1/2: keeps gamma + eps < 1/2."""
    return 0.5 * (0.5 - gamma)


@dataclass(frozen=True)
class BoundConfig:
    """Free parameters of the certification: convexity retention alpha,
    mass split a, interpolation exponents gamma and epsilon."""

    alpha: float
    a: float
    gamma: float
    epsilon: float
    r: float  # stabilizer exponent the exponents were validated against
    m: float
    L: float

    def __post_init__(self):
        if not (0 < self.alpha < 1):
            raise ValueError("alpha must lie in (0, 1)")
        if self.a <= 0 or self.a >= self.m * self.L:
            raise ValueError("need 0 < a < m L so the split mass stays positive")
        if not (0.25 < self.gamma < 0.5):
            raise ValueError("gamma must lie in (1/4, 1/2)")
        if self.q <= 0:
            raise ValueError("(1 - 2 gamma)(r - 1) must exceed 1")
        if self.epsilon <= 0 or self.gamma + self.epsilon >= 0.5:
            raise ValueError("need eps > 0 and gamma + eps < 1/2")
        if self.qprime <= 0:
            raise ValueError("(1 - 2(gamma + eps))(r - 1) must exceed 1")

    @property
    def q(self) -> float:
        return (1.0 - 2.0 * self.gamma) * (self.r - 1.0) - 1.0

    @property
    def qprime(self) -> float:
        return (1.0 - 2.0 * (self.gamma + self.epsilon)) * (self.r - 1.0) - 1.0

    @property
    def m_a_sq(self) -> float:
        return self.m**2 - (self.a / self.L) ** 2

    @classmethod
    def for_model(
        cls,
        mp: ModelParams,
        alpha: float,
        gamma: float | None = None,
        a: float | None = None,
        eps: float | None = None,
    ) -> "BoundConfig":
        if gamma is None:
            gamma = default_gamma(mp.r)
        if a is None:
            a = 0.5 * mp.m * mp.L
        if eps is None:
            eps = default_eps(gamma)
        return cls(alpha=alpha, a=a, gamma=gamma, epsilon=eps, r=mp.r, m=mp.m, L=mp.L)


@dataclass(frozen=True)
class PerturbationSpec:
    """Compensating perturbation: strength c, mode cutoff n (None when no
    perturbation is needed), cutoff radius R in units of ||P_n phi||_2^2."""

    c: float
    n: int | None
    R: float | None

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("c must be >= 0")
        if (self.c == 0) != (self.n is None):
            raise ValueError("c == 0 exactly when n is None")
        if self.n is not None and (self.R is None or self.R <= 0):
            raise ValueError("active perturbation needs R > 0")


@dataclass
class GapCertificate:
    """Certified constants with every intermediate of the pipeline."""

    c0: float
    w_sup: float
    c_final: float
    gap: float
    log_c0_over_c_final: float
    low_margin: float
    high_margin: float | None
    config: BoundConfig
    perturbation: PerturbationSpec
    c_a_gamma_sq: float
    q: float
    qprime: float
    m_a_sq: float
    lambda0: float
    witten_e1: dict | None
    precision: str
    model: ModelParams

    def to_dict(self) -> dict:
        d = {
            "C0": self.c0,
            "w_sup": self.w_sup,
            "C_final": self.c_final,
            "gap": self.gap,
            "log_C0_over_C_final": self.log_c0_over_c_final,
            "low_mode_margin": self.low_margin,
            "high_mode_margin": self.high_margin,
            "C_a_gamma_sq": self.c_a_gamma_sq,
            "q": self.q,
            "q_prime": self.qprime,
            "m_a_sq": self.m_a_sq,
            "lambda0": self.lambda0,
            "alpha": self.config.alpha,
            "gamma": self.config.gamma,
            "a": self.config.a,
            "eps": self.config.epsilon,
            "c": self.perturbation.c,
            "n": self.perturbation.n,
            "R": self.perturbation.R,
            "witten_e1": self.witten_e1,
            "precision": self.precision,
            "model": {
                "lambda": self.model.lam,
                "kappa": self.model.kappa,
                "r": self.model.r,
                "m": self.model.m,
                "beta": self.model.beta,
                "L": self.model.L,
                "s": self.model.s,
            },
        }
        return d


# ----------------------------------------------------------------------
# Sobolev embedding constant


def sobolev_constant_sq(a: float, gamma: float, ctx=None):
    """Upper bound on C_{a,gamma}^2 = sum_{k in Z} (a^2 + (2 pi k)^2)^(-2 gamma).

    Partial sum over |k| <= K0, then the tail in the alternating series

        2 (2 pi)^(-4g) sum_j binom(-2g, j) A^j zeta(4g + 2j, K0+1),
        A = (a / 2 pi)^2,

    truncated after a nonnegative term so the result stays an upper bound;
    the truncation error is below 1e-12 relative.
    """
    if gamma <= 0.25:
        raise ValueError("gamma must exceed 1/4 (series diverges otherwise)")
    if a <= 0:
        raise ValueError("a must be positive")
    if ctx is None:
        ctx = _DoubleCtx()
    a = ctx.c(a)
    g = ctx.c(gamma)
    two_pi = 2 * ctx.pi
    K0 = max(8, int(math.ceil(2.0 * ctx.to_float(a) / (2.0 * math.pi))) + 4)

    total = a ** (-4 * g)
    for k in range(1, K0 + 1):
        total += 2 * (a**2 + (two_pi * k) ** 2) ** (-2 * g)

    # tail via Hurwitz zeta; pairs of terms keep the upper-bound property
    A = (a / two_pi) ** 2
    pref = 2 * two_pi ** (-4 * g)
    s0 = 4 * g
    tail = ctx.zeta(s0, K0 + 1)
    b = ctx.c(1.0)
    j = 0
    while True:
        b1 = b * (-2 * g - j) / (j + 1)
        t1 = b1 * A ** (j + 1) * ctx.zeta(s0 + 2 * (j + 1), K0 + 1)
        b2 = b1 * (-2 * g - (j + 1)) / (j + 2)
        t2 = b2 * A ** (j + 2) * ctx.zeta(s0 + 2 * (j + 2), K0 + 1)
        tail += t1 + t2
        b = b2
        j += 2
        if abs(t1) + abs(t2) < ctx.c(ctx.tail_tol) * tail or j > 200:
            break
    return total + pref * tail


def sobolev_constant(a: float, gamma: float) -> float:
    """C_{a,gamma}: the constant in ||psi||_inf <= C L^(2g - 1/2) ||A_a^g psi||."""
    return math.sqrt(float(sobolev_constant_sq(a, gamma)))


# ----------------------------------------------------------------------
# mode-split sup-norm bound (field-level check of the interpolation lemma)


def _split_norms(f: SpectralField, a: float, n: int):
    """(||P psi||, ||A^(1/2) P psi||) for the low and high blocks."""
    n_eff = min(n, f.N)
    low = project(f, n_eff, "low")
    high = project(f, n_eff, "high")
    sym = (a**2 + (2.0 * np.pi * np.arange(-f.N, f.N + 1)) ** 2) / f.L**2
    out = []
    for part in (low, high):
        l2 = float(np.sqrt(np.sum(np.abs(part.coeffs) ** 2)))
        ah = float(np.sqrt(np.sum(sym * np.abs(part.coeffs) ** 2)))
        out.append((l2, ah))
    return out


def mode_split_bound(f: SpectralField, bc: BoundConfig, n: int) -> float:
    """Right-hand side of the interpolated sup-norm inequality

        ||psi||_inf^2 <= C^2 L^(4g-1) ( ||P_n psi||^(2-4g) ||A^(1/2) P_n psi||^(4g)
          + (2 pi n/L)^(-4e) ||Q_n psi||^(2-4(g+e)) ||A^(1/2) Q_n psi||^(4(g+e)) )
    """
    if n < 1:
        raise ValueError("mode split needs n >= 1")
    g, e = bc.gamma, bc.epsilon
    c_sq = float(sobolev_constant_sq(bc.a, g))
    (low_l2, low_ah), (high_l2, high_ah) = _split_norms(f, bc.a, n)

    def _pw(base, expo):
        return base**expo if base > 0 else 0.0

    term_low = _pw(low_l2, 2 - 4 * g) * _pw(low_ah, 4 * g)
    term_high = (2.0 * np.pi * n / f.L) ** (-4 * e) * _pw(
        high_l2, 2 - 4 * (g + e)
    ) * _pw(high_ah, 4 * (g + e))
    return c_sq * f.L ** (4 * g - 1) * (term_low + term_high)


# ----------------------------------------------------------------------
# convexity margins


def _margin_terms(mp: ModelParams, bc: BoundConfig, ctx, q, one_minus, extra=None):
    """Common Young-reduced loss term: (q/(1+q)) ((1+q) kappa r)^(-1/q) *
    (3 lam C^2 L^(4g-1) * extra)^((q+1)/(q * one_minus))."""
    if mp.lam == 0.0:
        return ctx.c(0.0)
    c_sq = sobolev_constant_sq(bc.a, bc.gamma, ctx)
    L = ctx.c(mp.L)
    base = 3 * ctx.c(mp.lam) * c_sq * L ** (4 * ctx.c(bc.gamma) - 1)
    if extra is not None:
        base = base * extra
    expo = (q + 1) / (q * one_minus)
    return (q / (1 + q)) * ((1 + q) * ctx.c(mp.kappa) * ctx.c(mp.r)) ** (-1 / q) * (
        base
    ) ** expo


def low_mode_margin(mp: ModelParams, bc: BoundConfig, ctx=None):
    """(1-alpha) m_a^2 minus the worst-case low-mode loss; nonnegative means
    no perturbation is needed."""
    if ctx is None:
        ctx = _DoubleCtx()
    q = ctx.c(bc.q)
    loss = _margin_terms(mp, bc, ctx, q, 1 - 2 * ctx.c(bc.gamma))
    return (1 - ctx.c(bc.alpha)) * ctx.c(bc.m_a_sq) - loss


def high_mode_margin(mp: ModelParams, bc: BoundConfig, n: int, ctx=None):
    """Same shape with q', gamma+eps, and the suppression (2 pi n/L)^(-4 eps);
    strictly increasing in n and eventually positive for any lam."""
    if ctx is None:
        ctx = _DoubleCtx()
    if n < 1:
        raise ValueError("high-mode margin needs n >= 1")
    qp = ctx.c(bc.qprime)
    ge = ctx.c(bc.gamma) + ctx.c(bc.epsilon)
    extra = (2 * ctx.pi * n / ctx.c(mp.L)) ** (-4 * ctx.c(bc.epsilon))
    loss = _margin_terms(mp, bc, ctx, qp, 1 - 2 * ge, extra)
    return (1 - ctx.c(bc.alpha)) * ctx.c(bc.m_a_sq) - loss


def lambda_zero_threshold(mp: ModelParams, bc: BoundConfig, ctx=None):
    """Largest lam for which the low-mode margin is still nonnegative (at
    the given alpha, a, gamma); below it the perturbation is skipped."""
    if ctx is None:
        ctx = _DoubleCtx()
    q = ctx.c(bc.q)
    one_minus = 1 - 2 * ctx.c(bc.gamma)
    expo = (q + 1) / (q * one_minus)
    c_sq = sobolev_constant_sq(bc.a, bc.gamma, ctx)
    L = ctx.c(mp.L)
    unit = 3 * c_sq * L ** (4 * ctx.c(bc.gamma) - 1)
    y = (q / (1 + q)) * ((1 + q) * ctx.c(mp.kappa) * ctx.c(mp.r)) ** (-1 / q)
    target = (1 - ctx.c(bc.alpha)) * ctx.c(bc.m_a_sq)
    return (target / y) ** (1 / expo) / unit


# ----------------------------------------------------------------------
# parameter selection


def _select_n(mp, bc, ctx):
    """Smallest integer n with nonnegative high-mode margin."""
    qp = ctx.c(bc.qprime)
    ge = ctx.c(bc.gamma) + ctx.c(bc.epsilon)
    one_minus = 1 - 2 * ge
    expo = (qp + 1) / (qp * one_minus)
    c_sq = sobolev_constant_sq(bc.a, bc.gamma, ctx)
    L = ctx.c(mp.L)
    base = 3 * ctx.c(mp.lam) * c_sq * L ** (4 * ctx.c(bc.gamma) - 1)
    y = (qp / (1 + qp)) * ((1 + qp) * ctx.c(mp.kappa) * ctx.c(mp.r)) ** (-1 / qp)
    target = (1 - ctx.c(bc.alpha)) * ctx.c(bc.m_a_sq)
    # need y * (base * (2 pi n/L)^(-4e))^expo <= target
    log_n = (
        ctx.log(base)
        - (ctx.log(target / y)) / expo
    ) / (4 * ctx.c(bc.epsilon)) + ctx.log(L / (2 * ctx.pi))
    n = max(1, int(math.ceil(ctx.to_float(ctx.exp(log_n)) - 1e-12)))
    while ctx.to_float(high_mode_margin(mp, bc, n, ctx)) < 0:
        n += 1
    while n > 1 and ctx.to_float(high_mode_margin(mp, bc, n - 1, ctx)) >= 0:
        n -= 1
    return n


def _select_R(mp, bc, c, ctx):
    """Smallest R (in ||.||_2^2 units) on the monotone tail with

        kappa r R^(r-1) - (3 lam C^2 L^(4g-1))^(1/(1-2g)) R^(1/(1-2g)) >= 35 c.

    In terms of rho = sqrt(R) this is the selection display
    kappa r rho^(2r-2) - (...)^(1/(1-2g)) rho^(2/(1-2g)) >= 35 c.
    """
    g = ctx.c(bc.gamma)
    p = 1 / (1 - 2 * g)
    rexp = ctx.c(mp.r) - 1
    c_sq = sobolev_constant_sq(bc.a, bc.gamma, ctx)
    ay = (3 * ctx.c(mp.lam) * c_sq * ctx.c(mp.L) ** (4 * g - 1)) ** p
    kr = ctx.c(mp.kappa) * ctx.c(mp.r)
    target = 35 * c

    def val(R):
        return kr * R**rexp - ay * R**p

    # start of the rising branch
    r_crit = (ay * p / (kr * rexp)) ** (1 / (rexp - p))
    hi = r_crit if val(r_crit) >= target else r_crit
    while val(hi) < target:
        hi = 2 * hi
    lo = hi / 2 if hi > r_crit else r_crit
    if val(lo) >= target:
        lo = r_crit
    for _ in range(300):
        mid = (lo + hi) / 2
        if val(mid) >= target:
            hi = mid
        else:
            lo = mid
        if (hi - lo) < ctx.c(ctx.bisect_tol) * hi:
            break
    return hi


def select_parameters(
    mp: ModelParams,
    alpha: float,
    gamma: float | None = None,
    a: float | None = None,
    eps: float | None = None,
    ctx=None,
):
    """Run the printed selection: c = 0 when the low-mode margin is already
    nonnegative, otherwise c = -margin, then the smallest admissible n and
    the smallest cutoff radius R."""
    if ctx is None:
        ctx = _DoubleCtx()
    bc = BoundConfig.for_model(mp, alpha, gamma, a, eps)
    low = low_mode_margin(mp, bc, ctx)
    if ctx.to_float(low) >= 0.0:
        return bc, PerturbationSpec(c=0.0, n=None, R=None)
    c = -low
    n = _select_n(mp, bc, ctx)
    R = _select_R(mp, bc, c, ctx)
    return bc, PerturbationSpec(c=ctx.to_float(c), n=n, R=ctx.to_float(R))


# ----------------------------------------------------------------------
# cutoff and perturbation


def chi(t: float, R: float = 1.0) -> float:
    """Quintic cutoff: 1 for t <= R, 0 for t >= 2R, and on (R, 2R)

        chi(u) = 1 - 30 int_1^(t/R) (1-x)^2 (2-x)^2 dx,

    which is C^1 with |chi'| <= 30/16 and |chi''| <= 60 * 0.0962."""
    u = t / R
    if u <= 1.0:
        return 1.0
    if u >= 2.0:
        return 0.0
    p = (
        u**5 / 5.0
        - 1.5 * u**4
        + (13.0 / 3.0) * u**3
        - 6.0 * u**2
        + 4.0 * u
    )
    p1 = 1.0 / 5.0 - 1.5 + 13.0 / 3.0 - 6.0 + 4.0
    return 1.0 - 30.0 * (p - p1)


def chi_d1(t: float, R: float = 1.0) -> float:
    """d/dt chi(t/R)."""
    u = t / R
    if u <= 1.0 or u >= 2.0:
        return 0.0
    return -30.0 * (1.0 - u) ** 2 * (2.0 - u) ** 2 / R


def chi_d2(t: float, R: float = 1.0) -> float:
    """d^2/dt^2 chi(t/R)."""
    u = t / R
    if u <= 1.0 or u >= 2.0:
        return 0.0
    return -60.0 * (u - 1.0) * (2.0 - u) * (3.0 - 2.0 * u) / R**2


def _low_mode_mass(f: SpectralField, n: int) -> float:
    n_eff = min(n, f.N)
    ks = np.arange(-f.N, f.N + 1)
    return float(np.sum(np.abs(f.coeffs[np.abs(ks) <= n_eff]) ** 2))


def w_value(f: SpectralField, ps: PerturbationSpec) -> float:
    """W(phi) = (c/2) T chi(T/R) with T the mass of the lowest 2n+1 modes."""
    if ps.n is None:
        return 0.0
    t = _low_mode_mass(f, ps.n)
    return 0.5 * ps.c * t * chi(t, ps.R)


def w_sup(ps: PerturbationSpec) -> float:
    """Rigorous upper bound on ||W||_inf: the cutoff support ends at 2R and
    chi <= 1, so sup (c/2) T chi(T/R) <= c R (and >= c R / 2 at T = R)."""
    if ps.n is None:
        return 0.0
    return ps.c * ps.R


def hessian_w_quadform(
    f: SpectralField, eta: SpectralField, ps: PerturbationSpec
) -> float:
    """<eta, Hess_W(phi) eta> for the cutoff perturbation:

        c (chi_R(T) + T chi_R'(T)) ||P_n eta||^2
        + 2 c (2 chi_R'(T) + T chi_R''(T)) (Re <P_n phi, eta>)^2.
    """
    if ps.n is None:
        return 0.0
    n_eff = min(ps.n, f.N)
    pf = project(f, n_eff, "low")
    pe = project(eta, n_eff, "low")
    t = float(np.sum(np.abs(pf.coeffs) ** 2))
    e2 = float(np.sum(np.abs(pe.coeffs) ** 2))
    cross = float(np.real(np.sum(pf.coeffs * np.conj(pe.coeffs))))
    g1 = chi(t, ps.R) + t * chi_d1(t, ps.R)
    g2 = 2.0 * chi_d1(t, ps.R) + t * chi_d2(t, ps.R)
    return ps.c * g1 * e2 + 2.0 * ps.c * g2 * cross**2


def hessian_lower_bound_check(
    f: SpectralField,
    eta: SpectralField,
    mp: ModelParams,
    bc: BoundConfig,
    ps: PerturbationSpec,
) -> float:
    """Pointwise margin <eta, (Hess_{H+W} - alpha Hess_{H0}) eta> from the
    analytic quadratic forms; a Monte-Carlo verifier of the convexity
    comparison under the selected parameters."""
    full = hessian_quadform(f, eta, mp, "full")
    wq = hessian_w_quadform(f, eta, ps)
    free = hessian_quadform(f, eta, mp, "h0")
    return full + wq - bc.alpha * free


# ----------------------------------------------------------------------
# Gaussian constant, mode-space bound, assembly


def gaussian_lsi_constant(mp: ModelParams) -> float:
    """Sharp log-Sobolev constant of the free Gaussian with metric C^s:
    per mode sigma^2(k)/C(k) = beta^(1-s) omega_k^(1-s), minimized at k = 0
    (s <= 1), giving beta^(1-s) m^(2(1-s))."""
    return mp.beta ** (1.0 - mp.s) * mp.m ** (2.0 * (1.0 - mp.s))


@dataclass
class WittenGapBound:
    """Lower bound on the smallest positive mode-space generator eigenvalue."""

    value: float
    k_opt: float
    certified: bool


def witten_gap_bound(lam: float, kappa: float, r: float, eps: float) -> WittenGapBound:
    """1 - (lam/eps)^(r/(r-1)) ((r-1)/r) (kappa r)^(-1/(r-1)), the minimum
    over K > 0 of X(K) = 1 - (lam/eps) K + kappa K^r; K_opt ships for
    diagnostics.  Nonpositive values are returned flagged (bound vacuous)."""
    if not (0 < eps < 1):
        raise ValueError("eps must lie in (0, 1)")
    if r < 2.0 / (1.0 - eps):
        raise ValueError("need r >= 2/(1-eps)")
    if kappa <= 0 or lam < 0:
        raise ValueError("need kappa > 0 and lam >= 0")
    if lam == 0.0:
        return WittenGapBound(value=1.0, k_opt=0.0, certified=True)
    value = 1.0 - (lam / eps) ** (r / (r - 1.0)) * ((r - 1.0) / r) * (
        kappa * r
    ) ** (-1.0 / (r - 1.0))
    k_opt = (lam / (kappa * r * eps)) ** (1.0 / (r - 1.0))
    return WittenGapBound(value=value, k_opt=k_opt, certified=value > 0)


def mode_gap_metadata(mp: ModelParams, eps_grid=None) -> dict | None:
    """Best mode-space gap bound for a model matching the hard-coded
    finite-mode normalization (beta = m = 1, L = 2 pi).

    The quartic coupling maps to lam/(2 pi) and the stabilizer exponent to
    r - 1.  Two calibrations ship: "printed" uses the quartic coefficient
    lam/2 of the block displays; "hessian" triples it, matching the
    assembled Hessian of the actual mode Hamiltonian.  Values live on the
    scale where the free gap at s = 1 equals 1, i.e. twice the generator
    relaxation rate; rate_scale records the conversion."""
    if abs(mp.beta - 1.0) > 1e-12 or abs(mp.m - 1.0) > 1e-12:
        return None
    if abs(mp.L - 2.0 * math.pi) > 1e-12:
        return None
    r_mode = mp.r - 1.0
    if r_mode <= 2.0:
        return None
    lam_mode = mp.lam / (2.0 * math.pi)
    eps_max = 1.0 - 2.0 / r_mode
    if eps_grid is None:
        eps_grid = np.linspace(0.02, eps_max, 60)
    best_printed, best_strict, eps_star = -np.inf, -np.inf, None
    for eps in eps_grid:
        if not (0 < eps <= eps_max):
            continue
        printed = witten_gap_bound(lam_mode, mp.kappa, r_mode, eps).value
        strict = witten_gap_bound(3.0 * lam_mode, mp.kappa, r_mode, eps).value
        if strict > best_strict:
            best_strict, eps_star = strict, float(eps)
        best_printed = max(best_printed, printed)
    if best_strict <= 0:
        return None
    return {
        "value": best_printed,
        "value_hessian_calibrated": best_strict,
        "eps": eps_star,
        "lambda_mode": lam_mode,
        "r_mode": r_mode,
        "rate_scale": 0.5,
        "rate_bound": 0.5 * best_strict,
    }


def certify(
    mp: ModelParams,
    alpha: float,
    gamma: float | None = None,
    a: float | None = None,
    eps: float | None = None,
    precision: str = "double",
) -> GapCertificate:
    """Assemble the full certificate.

    C_final = alpha * C0 * exp(-2 beta ||W||_inf): the comparison against
    alpha H0 contributes the factor alpha, and the bounded density change
    exp(-2 beta W) costs the Holley-Stroock factor.  The certified gap
    equals C_final.  log(C0/C_final) is also stored exactly in log space
    (C_final itself may underflow for large lam)."""
    ctx = _make_ctx(precision)
    if precision == "quad":
        import mpmath

        with mpmath.workdps(34):
            return _certify_impl(mp, alpha, gamma, a, eps, ctx)
    return _certify_impl(mp, alpha, gamma, a, eps, ctx)


def _certify_impl(mp, alpha, gamma, a, eps, ctx):
    bc, ps = select_parameters(mp, alpha, gamma, a, eps, ctx)
    low = low_mode_margin(mp, bc, ctx)
    high = (
        high_mode_margin(mp, bc, ps.n, ctx) if ps.n is not None else None
    )
    c_sq = sobolev_constant_sq(bc.a, bc.gamma, ctx)
    lam0 = lambda_zero_threshold(mp, bc, ctx)

    wsup = ctx.c(ps.c) * ctx.c(ps.R) if ps.n is not None else ctx.c(0.0)
    beta = ctx.c(mp.beta)
    c0 = ctx.c(mp.beta) ** (1 - ctx.c(mp.s)) * ctx.c(mp.m) ** (2 * (1 - ctx.c(mp.s)))
    log_ratio = 2 * beta * wsup - ctx.log(ctx.c(alpha))
    # C_final in linear space; may underflow to 0.0 for large ||W||_inf
    exponent = ctx.log(c0) - log_ratio
    try:
        c_final = ctx.exp(exponent)
    except OverflowError:
        c_final = ctx.c(0.0)

    return GapCertificate(
        c0=ctx.to_float(c0),
        w_sup=ctx.to_float(wsup),
        c_final=ctx.to_float(c_final),
        gap=ctx.to_float(c_final),
        log_c0_over_c_final=ctx.to_float(log_ratio),
        low_margin=ctx.to_float(low),
        high_margin=None if high is None else ctx.to_float(high),
        config=bc,
        perturbation=ps,
        c_a_gamma_sq=ctx.to_float(c_sq),
        q=bc.q,
        qprime=bc.qprime,
        m_a_sq=bc.m_a_sq,
        lambda0=ctx.to_float(lam0),
        witten_e1=mode_gap_metadata(mp),
        precision=ctx.name,
        model=mp,
    )
