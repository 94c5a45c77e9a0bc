"""Experiment orchestration: relaxation-rate measurement vs certified bounds.

Distance to equilibrium is proxied by ensemble-mean observable deviations:
for a mode k the modulus |E phi_hat(k)(t)| (the real part alone rotates at
omega_k and would cross zero), for scalar observables |E f(t) - mu(f)| with
mu(f) estimated from an equilibrium chain.  Rates come from weighted least
squares on the log deviation over a fixed, recorded window (skip the first
10% of the horizon, fit two e-foldings), with standard errors from a
trajectory bootstrap.  All artifacts (CSV series, JSON summaries) are
byte-reproducible from the experiment seed.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .bounds import certify
from .dynamics import SimConfig, evolve_ensemble, gamma_rates, make_observable
from .hamiltonian import ModelParams
from .measures import ChainConfig, sample_free_coeffs, sample_gibbs_coeffs

__all__ = [
    "ExperimentConfig",
    "DecayFit",
    "estimate_decay_rate",
    "run_experiment",
    "gibbs_reference",
    "write_series_csv",
    "to_jsonable",
    "SCHEMA_VERSION",
]

SCHEMA_VERSION = 1

_MODE_OBS = ("mode_re", "mode_im")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a model, an ensemble, and a protocol kind."""

    kind: str  # stationarity | relaxation | bound_comparison | lambda_scaling
    model: ModelParams
    n_modes: int = 8
    ensemble: int = 1024
    dt: float = 0.01
    t_final: float = 6.0
    observables: tuple = ("mode_re(0)", "mode_re(1)", "l2sq", "hamiltonian")
    initial: str = "point"  # free | gibbs | point
    seed: int = 0
    alpha: float = 0.5
    record_every: int = 2
    n_boot: int = 200
    chain: ChainConfig = dc_field(
        default_factory=lambda: ChainConfig(step=0.3, burn_in=3000, thin=10, seed=1)
    )
    reference_samples: int = 8192
    lambda_grid: tuple = (10.0, 100.0, 1000.0, 10000.0)
    r_values: tuple = (6.0, 20.0)
    max_csv_trajectories: int = 128

    def __post_init__(self):
        if self.kind not in {
            "stationarity",
            "relaxation",
            "bound_comparison",
            "lambda_scaling",
        }:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.ensemble < 2:
            raise ValueError("ensemble must be >= 2 for variance estimates")
        if self.initial not in {"free", "gibbs", "point"}:
            raise ValueError("initial must be free, gibbs, or point")


@dataclass
class DecayFit:
    """Fitted exponential rate of an ensemble-mean deviation."""

    rate: float
    rate_stderr: float
    window: tuple
    r_squared: float
    status: str = "ok"  # ok | indeterminate

    def to_dict(self):
        return {
            "rate": self.rate,
            "rate_stderr": self.rate_stderr,
            "window": list(self.window),
            "r_squared": self.r_squared,
            "status": self.status,
        }


def _fit_window(t, dev, skip_frac=0.1, efolds=2.0, min_points=5):
    """Select the fit window and run weighted least squares on log(dev).

    Window: from the first index past skip_frac * horizon until dev has
    dropped by efolds e-foldings or becomes nonpositive.  Weights are
    dev^2 (delta log dev ~ delta dev / dev).  Returns (rate, r2, window)
    or None when no valid window exists."""
    t = np.asarray(t, dtype=float)
    dev = np.asarray(dev, dtype=float)
    horizon = t[-1]
    start = int(np.searchsorted(t, skip_frac * horizon))
    if start >= len(t) - min_points:
        return None
    d0 = dev[start]
    if not (d0 > 0):
        return None
    end = len(t)
    target = d0 * math.exp(-efolds)
    for i in range(start, len(t)):
        if not (dev[i] > 0):
            end = i
            break
        if dev[i] <= target:
            end = i + 1
            break
    if end - start < min_points:
        return None
    ts = t[start:end]
    ys = np.log(dev[start:end])
    w = dev[start:end] ** 2
    wsum = np.sum(w)
    tbar = np.sum(w * ts) / wsum
    ybar = np.sum(w * ys) / wsum
    stt = np.sum(w * (ts - tbar) ** 2)
    if stt <= 0:
        return None
    slope = np.sum(w * (ts - tbar) * (ys - ybar)) / stt
    resid = ys - (ybar + slope * (ts - tbar))
    sst = np.sum(w * (ys - ybar) ** 2)
    r2 = 1.0 - np.sum(w * resid**2) / sst if sst > 0 else 1.0
    return -slope, float(r2), (float(ts[0]), float(ts[-1]))


def estimate_decay_rate(
    t, deviation_of, n_traj: int, n_boot: int = 200, seed: int = 0
) -> DecayFit:
    """Fit the decay rate of an ensemble-mean deviation series.

    deviation_of(None) must return the full-ensemble deviation (as an array
    over t); deviation_of(indices) the same for a bootstrap resample of
    trajectories.  The window is fixed by the full-ensemble fit and reused
    for the resamples; the stderr is the bootstrap standard deviation."""
    dev = np.asarray(deviation_of(None), dtype=float)
    fit = _fit_window(t, dev)
    if fit is None:
        return DecayFit(
            rate=float("nan"),
            rate_stderr=float("nan"),
            window=(float("nan"), float("nan")),
            r_squared=float("nan"),
            status="indeterminate",
        )
    rate, r2, window = fit
    t = np.asarray(t, dtype=float)
    in_win = (t >= window[0]) & (t <= window[1])
    rng = np.random.default_rng(seed)
    rates = []
    for _ in range(n_boot):
        idx = rng.integers(0, n_traj, n_traj)
        d = np.asarray(deviation_of(idx), dtype=float)
        sub = _fit_window(
            t[in_win] - 0.0, np.clip(d[in_win], 1e-300, None), skip_frac=0.0,
            efolds=np.inf, min_points=3,
        )
        if sub is not None:
            rates.append(sub[0])
    stderr = float(np.std(rates, ddof=1)) if len(rates) > 1 else float("nan")
    return DecayFit(
        rate=float(rate), rate_stderr=stderr, window=window, r_squared=float(r2)
    )


# ----------------------------------------------------------------------
# experiment machinery


def _mode_pairs(observables):
    """Mode observables fitted through the modulus of the complex mean need
    both components recorded."""
    extra = []
    for name in observables:
        for part, other in (("mode_re", "mode_im"), ("mode_im", "mode_re")):
            if name.startswith(part + "("):
                partner = other + name[len(part):]
                if partner not in observables and partner not in extra:
                    extra.append(partner)
    return tuple(observables) + tuple(extra)


def _point_coeffs(N: int, scale: float = 1.0) -> np.ndarray:
    """Deterministic out-of-equilibrium start: unit zero mode plus a
    quadrature-phase first mode."""
    c = np.zeros(2 * N + 1, dtype=complex)
    c[N] = scale
    if N >= 1:
        c[N + 1] = 0.6j * scale
    return c


def _initial_ensemble(cfg: ExperimentConfig, rng) -> np.ndarray:
    mp, N, B = cfg.model, cfg.n_modes, cfg.ensemble
    if cfg.initial == "free":
        return sample_free_coeffs(mp, N, rng, B)
    if cfg.initial == "point":
        return np.tile(_point_coeffs(N), (B, 1))
    coeffs, stats = sample_gibbs_coeffs(mp, N, cfg.chain, B)
    if stats.warning:
        raise RuntimeError(f"equilibrium chain mis-tuned: {stats.warning}")
    return coeffs


def gibbs_reference(
    mp: ModelParams, N: int, observables, cc: ChainConfig, count: int
) -> dict:
    """Equilibrium means and standard errors from a MALA ensemble."""
    coeffs, stats = sample_gibbs_coeffs(mp, N, cc, count)
    out = {"_chain": {"acceptance_rate": stats.acceptance_rate, "step": stats.step}}
    for name in observables:
        vals = make_observable(name, N, mp)(coeffs)
        out[name] = {
            "mean": float(np.mean(vals)),
            "stderr": float(np.std(vals, ddof=1) / math.sqrt(len(vals))),
        }
    return out


def _deviation_builder(name, values, reference):
    """Callable idx -> deviation series for one fitted observable."""
    if name.startswith("mode_re(") or name.startswith("mode_im("):
        suffix = name[name.index("(") :]
        re = values["mode_re" + suffix]
        im = values["mode_im" + suffix]

        def dev(idx):
            if idx is None:
                return np.hypot(np.mean(re, axis=1), np.mean(im, axis=1))
            return np.hypot(
                np.mean(re[:, idx], axis=1), np.mean(im[:, idx], axis=1)
            )

        return dev
    mu = reference[name]["mean"]
    arr = values[name]

    def dev(idx):
        if idx is None:
            return np.abs(np.mean(arr, axis=1) - mu)
        return np.abs(np.mean(arr[:, idx], axis=1) - mu)

    return dev


def _fitted_names(observables):
    """Fit one rate per mode (through the modulus) and per scalar."""
    seen = []
    for name in observables:
        if name.startswith("mode_im("):
            partner = "mode_re" + name[len("mode_im"):]
            if partner in observables:
                continue
        seen.append(name)
    return seen


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> dict:
    """Execute one experiment; returns the summary dict and, when out_dir
    is given, writes series.csv and summary.json there."""
    if cfg.kind == "lambda_scaling":
        summary = _run_lambda_scaling(cfg)
    else:
        summary = _run_dynamic(cfg)
    summary["schema_version"] = SCHEMA_VERSION
    summary["config"] = {
        **{k: v for k, v in asdict(cfg).items() if k not in ("model", "chain")},
        "model": asdict(cfg.model),
        "chain": asdict(cfg.chain),
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if "_series" in summary:
            t, values = summary["_series"]
            write_series_csv(
                out / "series.csv", cfg.kind, t, values, cfg.max_csv_trajectories
            )
        with open(out / "summary.json", "w") as fh:
            json.dump(to_jsonable(summary), fh, sort_keys=True, indent=2)
            fh.write("\n")
    return summary


def _run_dynamic(cfg: ExperimentConfig) -> dict:
    mp, N = cfg.model, cfg.n_modes
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0xD1)))
    observables = _mode_pairs(cfg.observables)
    coeffs0 = _initial_ensemble(cfg, rng)
    sc = SimConfig(
        dt=cfg.dt,
        t_final=cfg.t_final,
        seed=cfg.seed,
        observables=observables,
        record_every=cfg.record_every,
    )
    t, values, _ = evolve_ensemble(coeffs0, mp, sc, rng)

    summary = {"kind": cfg.kind, "t_final": cfg.t_final, "dt": cfg.dt}
    scalar_names = [n for n in cfg.observables if not n.startswith("mode_")]

    if cfg.kind == "stationarity":
        drifts = {}
        ok = True
        for name in cfg.observables:
            arr = values[name]
            diff = arr[-1] - arr[0]
            se = float(np.std(diff, ddof=1) / math.sqrt(arr.shape[1]))
            d = float(np.mean(diff))
            passed = abs(d) <= 3.0 * se
            ok = ok and passed
            drifts[name] = {
                "drift": d,
                "three_sigma": 3.0 * se,
                "passed": passed,
                "start_mean": float(np.mean(arr[0])),
            }
        summary["drifts"] = drifts
        summary["passed"] = ok
        summary["_series"] = (t, values)
        return summary

    # relaxation / bound_comparison need an equilibrium reference
    reference = {}
    if scalar_names:
        reference = gibbs_reference(
            mp, N, scalar_names, cfg.chain, cfg.reference_samples
        )
    fits = {}
    for name in _fitted_names(cfg.observables):
        builder = _deviation_builder(name, values, reference)
        fit = estimate_decay_rate(
            t, builder, cfg.ensemble, n_boot=cfg.n_boot, seed=cfg.seed + 1
        )
        fits[name] = fit
    summary["fits"] = {k: f.to_dict() for k, f in fits.items()}
    summary["reference"] = reference

    if cfg.kind == "bound_comparison":
        cert = certify(mp, alpha=cfg.alpha)
        gap = cert.gap
        n_efold = cfg.t_final * gap
        if gap > 0 and n_efold < 3.0:
            raise ValueError(
                f"t_final = {cfg.t_final} covers only {n_efold:.2f} e-foldings "
                f"of the certified gap {gap:.4f}; need >= 3"
            )
        bounds_used = {"certified_gap": gap}
        if cert.witten_e1 is not None:
            bounds_used["mode_rate_bound"] = cert.witten_e1["rate_bound"]
            bounds_used["mode_pencil_bound"] = cert.witten_e1[
                "value_hessian_calibrated"
            ]
        comparisons = {}
        ok = True
        for name, fit in fits.items():
            entry = {"fit": fit.to_dict(), "checks": {}}
            if fit.status != "ok":
                entry["checks"]["valid_fit"] = False
                ok = False
            else:
                for bname, bval in bounds_used.items():
                    if bname == "mode_pencil_bound":
                        continue
                    passed = fit.rate + 3.0 * fit.rate_stderr >= bval
                    entry["checks"][bname] = {
                        "bound": bval,
                        "margin": fit.rate + 3.0 * fit.rate_stderr - bval,
                        "passed": passed,
                    }
                    ok = ok and passed
            comparisons[name] = entry
        summary["certificate"] = cert.to_dict()
        summary["bounds"] = bounds_used
        summary["comparisons"] = comparisons
        summary["passed"] = ok
    summary["_series"] = (t, values)
    return summary


def _run_lambda_scaling(cfg: ExperimentConfig) -> dict:
    """Sweep the certificate over lam and fit the growth exponent of
    log(C0/C_final): log(-log ratio) vs log lam."""
    results = {}
    slopes = {}
    for r in cfg.r_values:
        pts = []
        for lam in cfg.lambda_grid:
            mp = ModelParams(
                lam=lam,
                kappa=cfg.model.kappa,
                r=r,
                m=cfg.model.m,
                beta=cfg.model.beta,
                L=cfg.model.L,
                s=cfg.model.s,
            )
            cert = certify(mp, alpha=cfg.alpha)
            pts.append(
                {
                    "lambda": lam,
                    "log_C0_over_C_final": cert.log_c0_over_c_final,
                    "w_sup": cert.w_sup,
                    "c": cert.perturbation.c,
                    "n": cert.perturbation.n,
                    "R": cert.perturbation.R,
                }
            )
        xs = np.log([p["lambda"] for p in pts])
        ys = np.log([p["log_C0_over_C_final"] for p in pts])
        slope = float(np.polyfit(xs, ys, 1)[0])
        results[str(r)] = pts
        slopes[str(r)] = slope
    return {"kind": "lambda_scaling", "points": results, "slopes": slopes}


# ----------------------------------------------------------------------
# artifact writers


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays for json.dump."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items() if k != "_series"}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and math.isnan(obj):
        return None
    return obj


def write_series_csv(
    path, experiment_id: str, t, values: dict, max_trajectories: int = 128
):
    """Long-format series: (experiment_id, t, observable, trajectory_id,
    value).  trajectory_id -1 holds the ensemble mean; individual
    trajectories are capped at max_trajectories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["experiment_id", "t", "observable", "trajectory_id", "value"])
        for name in sorted(values):
            arr = values[name]
            mean = np.mean(arr, axis=1)
            for i, ti in enumerate(t):
                wr.writerow([experiment_id, repr(float(ti)), name, -1, repr(float(mean[i]))])
            for j in range(min(arr.shape[1], max_trajectories)):
                for i, ti in enumerate(t):
                    wr.writerow(
                        [experiment_id, repr(float(ti)), name, j, repr(float(arr[i, j]))]
                    )
