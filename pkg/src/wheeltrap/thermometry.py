"""Motional-state observables: sideband thermometry, thermal Rabi
oscillations with Debye-Waller damping, and heating-rate regressions.

Rabi models average sin^2(Omega_n t / 2) over a thermal Fock
distribution with the standard Lamb-Dicke dependent coupling strengths;
the truncation keeps the neglected thermal tail below 1e-6.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit
from scipy.special import eval_genlaguerre

from .errors import FitError, ParameterError, RegimeError, UnderResolvedError

CARRIER = "carrier"
BLUE_SIDEBAND = "blue"
RED_SIDEBAND = "red"

#: relative thermal population allowed above the Fock-space truncation
TAIL_TOLERANCE = 1e-6


@dataclass(frozen=True)
class RabiTrace:
    """Measured or synthetic excitation probabilities versus pulse time."""

    times_us: np.ndarray
    probabilities: np.ndarray
    shots: int
    kind: str = CARRIER

    def __post_init__(self):
        t = np.asarray(self.times_us, dtype=float)
        p = np.asarray(self.probabilities, dtype=float)
        if len(t) != len(p):
            raise ParameterError("times and probabilities must have equal length")
        if np.any(t < 0.0) or np.any(np.diff(t) <= 0.0):
            raise ParameterError("times must be non-negative and strictly increasing")
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise ParameterError("probabilities must lie in [0, 1]")
        if self.shots < 1:
            raise ParameterError("shot count must be at least 1")
        object.__setattr__(self, "times_us", t)
        object.__setattr__(self, "probabilities", p)


@dataclass(frozen=True)
class HeatingSeries:
    """Mean phonon number versus waiting time, with per-point scatter."""

    wait_times_ms: np.ndarray
    nbar: np.ndarray
    sigma: np.ndarray
    mode_label: str = "z"

    def __post_init__(self):
        t = np.asarray(self.wait_times_ms, dtype=float)
        n = np.asarray(self.nbar, dtype=float)
        s = np.asarray(self.sigma, dtype=float)
        if not (len(t) == len(n) == len(s)):
            raise ParameterError("waiting times, nbar, sigma must have equal length")
        if len(np.unique(t)) < 3:
            raise ParameterError("need at least 3 distinct waiting times")
        if np.any(n < 0.0):
            raise ParameterError("nbar must be non-negative")
        object.__setattr__(self, "wait_times_ms", t)
        object.__setattr__(self, "nbar", n)
        object.__setattr__(self, "sigma", s)


def sideband_ratio_to_nbar(ratio: float) -> float:
    """Mean phonon number from the red/blue sideband excitation ratio.

    nbar = R / (1 - R) for 0 <= R < 1.
    """
    if ratio < 0.0 or ratio >= 1.0:
        raise ParameterError(
            f"sideband ratio must be in [0, 1), got {ratio} (R -> 1 is infinite "
            "temperature)"
        )
    return ratio / (1.0 - ratio)


def _fock_cutoff(nbar: float) -> int:
    if nbar <= 0.0:
        return 1
    # tail mass (nbar/(nbar+1))^(N+1) < TAIL_TOLERANCE
    n = int(np.ceil(np.log(TAIL_TOLERANCE) / np.log(nbar / (nbar + 1.0))))
    return max(n, 5)


def _rabi_frequencies(omega0: float, eta: float, n_levels: int, order: str):
    """Omega_n for n = 0..n_levels-1 on the requested transition order."""
    n = np.arange(n_levels, dtype=float)
    dw = np.exp(-(eta**2) / 2.0)
    if order == CARRIER:
        return omega0 * dw * np.abs(eval_genlaguerre(n, 0, eta**2))
    if order == BLUE_SIDEBAND:
        return (
            omega0
            * dw
            * eta
            / np.sqrt(n + 1.0)
            * np.abs(eval_genlaguerre(n, 1, eta**2))
        )
    if order == RED_SIDEBAND:
        out = np.zeros(n_levels)
        if n_levels > 1:
            m = n[1:]
            out[1:] = (
                omega0
                * dw
                * eta
                / np.sqrt(m)
                * np.abs(eval_genlaguerre(m - 1.0, 1, eta**2))
            )
        return out
    raise ParameterError(f"unknown transition order {order!r}")


def thermal_rabi(
    t_s,
    omega0: float,
    nbar: float,
    eta: float,
    order: str = CARRIER,
) -> np.ndarray:
    """Thermal-averaged excitation probability at times ``t_s`` (seconds).

    Lamb-Dicke regime only (eta < 1); nbar >= 0.  The red sideband from
    the motional ground state gives zero excitation.
    """
    if not 0.0 <= eta < 1.0:
        raise RegimeError(f"Lamb-Dicke parameter must satisfy 0 <= eta < 1, got {eta}")
    if nbar < 0.0:
        raise ParameterError(f"nbar must be non-negative, got {nbar}")
    t = np.atleast_1d(np.asarray(t_s, dtype=float))
    n_levels = _fock_cutoff(nbar)
    weights = (nbar / (nbar + 1.0)) ** np.arange(n_levels) / (nbar + 1.0)
    freqs = _rabi_frequencies(omega0, eta, n_levels, order)
    prob = np.sin(np.outer(t, freqs) / 2.0) ** 2 @ weights
    return prob if np.ndim(t_s) else float(prob[0])


@dataclass(frozen=True)
class ThermalRabiFit:
    omega0: float  # rad/s
    nbar: float
    omega0_std: float
    nbar_std: float
    chi2_reduced: float


def fit_thermal_rabi(trace: RabiTrace, eta: float) -> ThermalRabiFit:
    """Weighted least squares of a trace against the thermal Rabi model.

    Binomial error bars follow from the shot count.  Requires at least
    10 points spanning one resolvable oscillation; refuses sub-kHz style
    under-resolved traces with UnderResolvedError.
    """
    if len(trace.times_us) < 10:
        raise ParameterError(
            f"need at least 10 points to fit, got {len(trace.times_us)}"
        )
    t_s = trace.times_us * 1e-6
    p = trace.probabilities
    sigma = np.sqrt(np.clip(p * (1.0 - p), 0.0625, None) / trace.shots)

    # frequency guess from the dominant Fourier component
    dt = np.median(np.diff(t_s))
    spectrum = np.fft.rfft(p - p.mean())
    freqs = np.fft.rfftfreq(len(p), dt)
    omega_guess = 2.0 * np.pi * freqs[np.argmax(np.abs(spectrum[1:])) + 1]
    if omega_guess * t_s[-1] < 2.0 * np.pi:
        raise UnderResolvedError(
            "trace spans less than one oscillation; Rabi frequency cannot be fit"
        )

    def model(t, omega0, nbar):
        return thermal_rabi(t, abs(omega0), abs(nbar), eta, trace.kind)

    best = None
    for nbar_seed in (0.1, 1.0, 5.0, 20.0):
        try:
            popt, pcov = curve_fit(
                model,
                t_s,
                p,
                p0=[omega_guess, nbar_seed],
                sigma=sigma,
                absolute_sigma=True,
                maxfev=20000,
            )
        except RuntimeError:
            continue
        resid = (p - model(t_s, *popt)) / sigma
        chi2 = float(np.sum(resid**2)) / max(len(p) - 2, 1)
        if best is None or chi2 < best[2]:
            best = (popt, pcov, chi2)
    if best is None:
        raise FitError("thermal Rabi fit did not converge for any seed")
    popt, pcov, chi2 = best
    stds = np.sqrt(np.diag(pcov))
    return ThermalRabiFit(
        omega0=abs(popt[0]),
        nbar=abs(popt[1]),
        omega0_std=stds[0],
        nbar_std=stds[1],
        chi2_reduced=chi2,
    )


@dataclass(frozen=True)
class HeatingRateFit:
    rate_per_s: float  # phonons per second
    intercept: float
    rate_std: float
    intercept_std: float
    chi2_reduced: float


def fit_heating_rate(series: HeatingSeries) -> HeatingRateFit:
    """Weighted linear regression of nbar versus waiting time.

    Weights are 1/sigma^2 with the given per-point uncertainties; the
    slope is converted to phonons/s.  Reports the reduced chi-square.
    """
    s = np.asarray(series.sigma, dtype=float)
    if np.any(s <= 0.0):
        raise ParameterError("heating-rate weights need positive uncertainties")
    t = series.wait_times_ms
    y = series.nbar
    w = 1.0 / s**2
    design = np.column_stack([t, np.ones_like(t)])
    wd = design * w[:, None]
    cov = np.linalg.inv(design.T @ wd)
    params = cov @ (wd.T @ y)
    resid = (y - design @ params) / s
    chi2 = float(np.sum(resid**2)) / max(len(t) - 2, 1)
    stds = np.sqrt(np.diag(cov))
    return HeatingRateFit(
        rate_per_s=params[0] * 1e3,  # per ms -> per s
        intercept=params[1],
        rate_std=stds[0] * 1e3,
        intercept_std=stds[1],
        chi2_reduced=chi2,
    )


def modulation_index_from_rabi(omega_m: float, omega_q: float) -> float:
    """beta = 2 * Omega_M / Omega_Q from carrier and micromotion-sideband
    Rabi frequencies."""
    if not omega_q > 0.0:
        raise ParameterError(f"carrier Rabi frequency must be positive, got {omega_q}")
    return 2.0 * omega_m / omega_q


def synthesize_rabi_trace(
    times_us,
    omega0: float,
    nbar: float,
    eta: float,
    shots: int,
    rng: np.random.Generator,
    kind: str = CARRIER,
) -> RabiTrace:
    """Binomially sampled synthetic trace from the thermal Rabi model."""
    t = np.asarray(times_us, dtype=float)
    p_true = thermal_rabi(t * 1e-6, omega0, nbar, eta, kind)
    counts = rng.binomial(shots, np.clip(p_true, 0.0, 1.0))
    return RabiTrace(t, counts / shots, shots, kind)


def synthesize_heating_series(
    wait_times_ms,
    rate_per_s: float,
    nbar0: float,
    noise: float,
    rng: np.random.Generator,
    mode_label: str = "z",
) -> HeatingSeries:
    """Linear heating with Gaussian scatter, mimicking 20-sample means."""
    t = np.asarray(wait_times_ms, dtype=float)
    n_true = nbar0 + rate_per_s * 1e-3 * t
    scatter = np.full_like(t, noise)
    nbar = np.clip(n_true + rng.normal(0.0, noise, len(t)), 0.0, None)
    return HeatingSeries(t, nbar, scatter, mode_label)
