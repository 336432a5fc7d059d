"""Unbiased MMSE-DFE design and its residual-ISI summaries.

The feedforward filter a_{-M}..a_{M} weights the observations y_{-k}
around the decision instant; past symbols are assumed perfectly fed back,
so their contribution is removed before the error is measured. With the
lag-0 coefficient pinned to 1, the design minimizes the residual power

    E (sum_{k>=1} alpha_k x_k + m)^2,
    alpha_k = sum_l a_l h_{-l-k},   E m^2 = N_0 sum_l a_l^2,

a strictly convex quadratic solved through its normal equations. The
half-length M doubles until the solution is stable at tap level and the
unbiased output SNR agrees with the infinite-length value
exp<log(1 + rho |H|^2)> - 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .channel import ChannelResponse, spectral_summary
from .errors import DomainError, NotConverged, SingularSystem
from .scalar import InputDistribution

# Relative-amplitude cut; implies a tail energy far below 1e-10 of the total.
_TRUNCATION_REL_AMPLITUDE = 1e-10
_SNR_GAP_TOL = 1e-6
_TAP_STABLE_TOL = 1e-8
_M_MAX = 4096


@dataclass(frozen=True)
class DfeDesign:
    """Designed unbiased MMSE-DFE for one channel, input power and SNR.

    feedforward : taps a_{-M}..a_{M}; a[j] weights y_{t-(j-M)} at decision
        time t (negative lags read future observations).
    residual    : truncated residual-ISI taps alpha_1..alpha_N; alpha_0 = 1
        by construction and is not stored.
    residual_full : all M residual taps of the solution, untruncated.
    noise_var   : E m^2 of the Gaussian noise at the unbiased output.
    scale       : lag-0 gain of the unnormalized solution.
    """

    feedforward: np.ndarray
    residual: np.ndarray
    residual_full: np.ndarray
    noise_var: float
    scale: float
    rho: float
    x_power: float
    ff_half_len: int

    @property
    def snr_unbiased(self) -> float:
        """P_x / (beta_1^2 P_x + E m^2), the unbiased output SNR."""
        beta1_sq = float(self.residual @ self.residual)
        return self.x_power / (beta1_sq * self.x_power + self.noise_var)


@dataclass(frozen=True)
class DfeSummary:
    """Scalar summaries of the residual-ISI sequence (alpha_0 = 1 included
    in the index-0 sums: beta0_sq = 1 + beta1_sq)."""

    beta0_sq: float
    beta1_sq: float
    gamma1_cu: float | None  # sum alpha_k^3, signed; None when closed-form only
    delta1_4: float | None  # sum alpha_k^4; None when closed-form only
    eps0: float
    eps1: float
    S: float  # P_x / E m^2


def _solve_ff(taps: np.ndarray, px: float, n0: float, m: int):
    """Solve the pinned-gain quadratic program at half-length m.

    Returns (a, alpha_full, em2, c) with alpha_full of length m.
    """
    L = taps.size
    n_ff = 2 * m + 1
    # U[k-1, j] = h_{-(j-m)-k} = h[m-j-k], rows k = 1..m
    j = np.arange(n_ff)
    k = np.arange(1, m + 1)
    idx = m - j[None, :] - k[:, None]
    valid = (idx >= 0) & (idx < L)
    U = np.zeros((m, n_ff))
    U[valid] = taps[idx[valid]]
    B = px * (U.T @ U)
    B[np.diag_indices_from(B)] += n0
    v = np.zeros(n_ff)
    vi = m - np.arange(L)
    v[vi] = taps
    try:
        a_raw = scipy.linalg.solve(B, v, assume_a="pos")
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    c = float(v @ a_raw)
    if not np.isfinite(c) or c <= 0.0:
        raise SingularSystem("pinned-gain system produced a nonpositive gain")
    a = a_raw / c
    alpha = U @ a
    em2 = n0 * float(a @ a)
    return a, alpha, em2, c


def _truncate(alpha: np.ndarray) -> np.ndarray:
    """Shortest prefix alpha_1..alpha_N whose dropped tail is negligible.

    Cuts where the remaining absolute-tap sum falls below 1e-10 of the
    whole; the dropped tail energy is then far below 1e-10 of the total.
    """
    total = float(np.abs(alpha).sum())
    if total == 0.0:
        return alpha[:0]
    tail = np.cumsum(np.abs(alpha)[::-1])[::-1]  # tail[k] = sum_{i >= k} |alpha_i|
    keep = np.nonzero(tail >= _TRUNCATION_REL_AMPLITUDE * total)[0]
    return alpha[: keep[-1] + 1] if keep.size else alpha[:0]


def design_mmse_dfe(
    channel: ChannelResponse,
    x: InputDistribution,
    rho: float,
    ff_half_len: int | None = None,
) -> DfeDesign:
    """Design the unbiased MMSE-DFE at input SNR rho = P_x/N_0.

    With ff_half_len=None the half-length starts at max(8L, 64) and doubles
    until the residual summaries are stable and the unbiased SNR is within
    1e-6 relative of the infinite-length value; an explicit ff_half_len is
    used as given with no convergence enforcement.
    """
    if rho <= 0.0:
        raise DomainError("rho must be positive")
    taps = np.asarray(channel.taps, dtype=float)
    px = x.power
    n0 = px / rho
    if ff_half_len is not None:
        if ff_half_len < channel.length:
            raise DomainError("ff_half_len must be at least the channel length")
        a, alpha, em2, c = _solve_ff(taps, px, n0, ff_half_len)
        return DfeDesign(a, _truncate(alpha), alpha, em2, c, rho, px, ff_half_len)

    target = spectral_summary(channel, rho).snr_dfe - 1.0
    m = max(8 * channel.length, 64)
    prev = None
    while m <= _M_MAX:
        a, alpha, em2, c = _solve_ff(taps, px, n0, m)
        beta1_sq = float(alpha @ alpha)
        snr_u = px / (beta1_sq * px + em2)
        gap = abs(snr_u / target - 1.0)
        if prev is not None:
            stable = max(
                abs(beta1_sq - prev[0]) / max(prev[0], 1e-30),
                abs(em2 - prev[1]) / prev[1],
                abs(snr_u - prev[2]) / prev[2],
            )
            if stable <= _TAP_STABLE_TOL and gap <= _SNR_GAP_TOL:
                return DfeDesign(a, _truncate(alpha), alpha, em2, c, rho, px, m)
        prev = (beta1_sq, em2, snr_u)
        m *= 2
    raise NotConverged(
        f"feedforward length capped at {_M_MAX} with SNR gap {gap:.3e}"
    )


def summarize(design: DfeDesign, x: InputDistribution) -> DfeSummary:
    """Tap-domain residual summaries of a design."""
    r = design.residual
    beta1_sq = float(r @ r)
    s = x.power / design.noise_var
    return DfeSummary(
        beta0_sq=1.0 + beta1_sq,
        beta1_sq=beta1_sq,
        gamma1_cu=float((r**3).sum()),
        delta1_4=float((r**4).sum()),
        eps0=(1.0 + beta1_sq) * s,
        eps1=beta1_sq * s,
        S=s,
    )


def closed_form_summary(channel: ChannelResponse, rho: float) -> DfeSummary:
    """Residual summaries from the equalizer output SNRs alone.

    No closed form exists for the third/fourth-power tap sums, so
    gamma1_cu and delta1_4 are left unset. Below snr_le - 1 = 1e-9 the
    quadrature cannot resolve snr_dfe - snr_le and the flat-channel
    limits (beta1_sq = 0, S = snr_dfe - 1) are returned.
    """
    ss = spectral_summary(channel, rho)
    d, e = ss.snr_dfe, ss.snr_le
    if e - 1.0 <= 1e-9:
        s = d - 1.0
        return DfeSummary(1.0, 0.0, None, None, eps0=s, eps1=0.0, S=s)
    beta1_sq = (d / e - 1.0) / (d - 1.0) ** 2
    s = (d - 1.0) ** 2 * e / (d * (e - 1.0))
    eps0 = e * (d - 1.0) / (e - 1.0) - 1.0
    eps1 = (1.0 - e / d) / (e - 1.0)
    return DfeSummary(
        beta0_sq=1.0 + beta1_sq,
        beta1_sq=beta1_sq,
        gamma1_cu=None,
        delta1_4=None,
        eps0=eps0,
        eps1=eps1,
        S=s,
    )


def two_tap_residual(q: float, rho: float, n_taps: int) -> np.ndarray:
    """Closed-form residual taps for the channel [sqrt(1-q^2), q].

    alpha_i = (-1)^{i+1} r^i / (0.5 (1 + sqrt(1 - 1/a^2)) (1 + rho) - 1)
    with a = (1 + 1/rho) / (2 q sqrt(1-q^2)) and r = a - sqrt(a^2 - 1).
    """
    if not 0.0 < q < 1.0:
        raise DomainError("q must be in (0, 1)")
    a = (1.0 + 1.0 / rho) / (2.0 * q * np.sqrt(1.0 - q * q))
    r = a - np.sqrt(a * a - 1.0)
    denom = 0.5 * (1.0 + np.sqrt(1.0 - 1.0 / (a * a))) * (1.0 + rho) - 1.0
    i = np.arange(1, n_taps + 1)
    return (-1.0) ** (i + 1) * r**i / denom
