"""FIR channel model and its spectral summaries.

The channel is y_k = sum_i h_i x_{k-i} + n_k with real taps h_0..h_{L-1}.
All frequency-domain averages <.> are over theta in [-pi, pi]. Periodic
integrands are averaged with a midpoint rule under grid doubling, which
converges spectrally for the analytic integrands used here. The mean of
log|H|^2 alone is evaluated exactly from the channel roots (Jensen), so
spectral nulls stay finite.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonConvergent, RootFindingFailure

_THETA_N0 = 512
_THETA_NMAX = 2**21
_DIVERGENCE_LIMIT = 1e12


@dataclass(frozen=True)
class ChannelResponse:
    """Real FIR channel taps h_0..h_{L-1}."""

    taps: tuple[float, ...]

    def __post_init__(self):
        if len(self.taps) < 1:
            raise DomainError("channel needs at least one tap")
        taps = tuple(float(t) for t in self.taps)
        if not all(np.isfinite(taps)):
            raise DomainError("channel taps must be finite")
        if not any(t != 0.0 for t in taps):
            raise DomainError("channel must have a nonzero tap")
        object.__setattr__(self, "taps", taps)

    @property
    def length(self) -> int:
        return len(self.taps)

    def energy(self) -> float:
        return float(np.dot(self.taps, self.taps))

    def normalized(self) -> "ChannelResponse":
        """Rescale to unit energy (sum h_k^2 = 1)."""
        return ChannelResponse(tuple(np.asarray(self.taps) / np.sqrt(self.energy())))

    @staticmethod
    def from_json(text: str, normalize: bool = False) -> "ChannelResponse":
        ch = ChannelResponse(tuple(json.loads(text)))
        return ch.normalized() if normalize else ch


@dataclass(frozen=True)
class SpectralSummary:
    """Equalizer output SNRs and gain factors of a channel at input SNR rho."""

    rho: float
    snr_le: float
    snr_dfe: float
    snr_zf_dfe: float
    g_zf_dfe: float
    g_zf_le: float
    gaussian_rate: float  # <log(1 + rho |H|^2)> in nats


def channel_b() -> ChannelResponse:
    """Three-tap moderate-ISI reference channel."""
    return ChannelResponse((0.408, 0.817, 0.408))


def jeong() -> ChannelResponse:
    """Seven-tap severe-ISI reference channel."""
    return ChannelResponse((0.19, 0.35, 0.46, 0.5, 0.46, 0.35, 0.19))


def jeong_spaced() -> ChannelResponse:
    """The severe-ISI channel with 3 and 5 zero taps around the main tap."""
    return ChannelResponse(
        (0.19, 0.35, 0.46, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.46, 0.35, 0.19)
    )


CHANNEL_PRESETS = {
    "channel_b": channel_b,
    "jeong": jeong,
    "jeong_spaced": jeong_spaced,
}


def transfer_power(channel: ChannelResponse, theta) -> np.ndarray | float:
    """|H(theta)|^2 with H(theta) = sum_k h_k e^{-jk theta}."""
    th = np.asarray(theta, dtype=float)
    k = np.arange(channel.length)
    h = np.asarray(channel.taps)
    phase = th[..., None] * k
    re = np.cos(phase) @ h
    im = np.sin(phase) @ h
    out = re * re + im * im
    return float(out) if np.isscalar(theta) or th.ndim == 0 else out


def _mean_over_theta(
    f, rel_tol: float = 1e-10, n0: int = _THETA_N0, n_max: int = _THETA_NMAX
) -> float:
    """Mean of f(theta) over [-pi, pi] by midpoint-rule grid doubling.

    Returns inf if the estimates grow past the divergence limit (used to
    detect non-integrable integrands such as 1/|H|^2 at a spectral null).
    """
    prev = None
    n = n0
    while n <= n_max:
        theta = -np.pi + (np.arange(n) + 0.5) * (2.0 * np.pi / n)
        vals = f(theta)
        if not np.all(np.isfinite(vals)):
            # a sample collided with a spectral null; shift the grid
            theta = theta + 0.5 * np.pi / n
            vals = f(theta)
        est = float(np.mean(vals))
        if not np.isfinite(est) or abs(est) > _DIVERGENCE_LIMIT:
            return np.inf
        if prev is not None and abs(est - prev) <= rel_tol * max(abs(est), 1e-300):
            return est
        prev = est
        n *= 2
    raise NonConvergent("theta quadrature did not reach tolerance")


def _roots(channel: ChannelResponse) -> tuple[float, np.ndarray]:
    """Leading coefficient and zeros of H as a polynomial in z^{-1}.

    Leading zero taps are a pure delay and are stripped; they do not
    change |H(theta)|.
    """
    taps = np.asarray(channel.taps, dtype=float)
    nz = np.nonzero(taps)[0]
    taps = taps[nz[0] :]
    if taps.size == 1:
        return float(taps[0]), np.zeros(0, dtype=complex)
    try:
        roots = np.roots(taps)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - numpy rarely fails
        raise RootFindingFailure(str(exc)) from exc
    if not np.all(np.isfinite(roots)):
        raise RootFindingFailure("non-finite channel roots")
    return float(taps[0]), roots


def log_mean_spectrum(channel: ChannelResponse) -> float:
    """<log |H(theta)|^2>, exact via Jensen's formula on the channel roots."""
    lead, roots = _roots(channel)
    mags = np.abs(roots)
    return float(2.0 * np.log(abs(lead)) + 2.0 * np.log(mags[mags > 1.0]).sum())


def to_minimum_phase(channel: ChannelResponse) -> ChannelResponse:
    """Equivalent-magnitude channel with all roots inside or on the unit circle.

    Roots within 1e-9 of the circle are left in place. The result is
    rescaled so its energy matches the input exactly (guards root-finding
    round-off); leading zero taps (pure delay) are dropped.
    """
    lead, roots = _roots(channel)
    if roots.size == 0:
        return ChannelResponse((abs(lead),)) if lead < 0 else ChannelResponse((lead,))
    mags = np.abs(roots)
    outside = mags > 1.0 + 1e-9
    scale = float(np.prod(mags[outside])) if outside.any() else 1.0
    new_roots = np.where(outside, 1.0 / np.conj(roots), roots)
    coeffs = np.atleast_1d(np.poly(new_roots)) * lead * scale
    taps = np.real(coeffs)
    taps = taps * np.sqrt(channel.energy() / np.dot(taps, taps))
    if taps[0] < 0:
        taps = -taps
    return ChannelResponse(tuple(taps))


def spectral_summary(channel: ChannelResponse, rho: float) -> SpectralSummary:
    """Equalizer SNRs and gain factors at input SNR rho = P_x/N_0.

    snr_le   = [<1/(1 + rho |H|^2)>]^-1          (biased MMSE-LE)
    snr_dfe  = exp <log(1 + rho |H|^2)>          (biased MMSE-DFE)
    g_zf_dfe = exp <log |H|^2>
    g_zf_le  = [<1/|H|^2>]^-1, 0 for channels with a spectral null
    """
    if rho <= 0.0:
        raise DomainError("rho must be positive")
    power = lambda th: transfer_power(channel, th)
    gaussian_rate = _mean_over_theta(lambda th: np.log1p(rho * power(th)))
    snr_dfe = float(np.exp(gaussian_rate))
    snr_le = 1.0 / _mean_over_theta(lambda th: 1.0 / (1.0 + rho * power(th)))
    g_zf_dfe = float(np.exp(log_mean_spectrum(channel)))
    _, roots = _roots(channel)
    if roots.size and np.min(np.abs(np.abs(roots) - 1.0)) <= 1e-9:
        # spectral null: <1/|H|^2> diverges
        g_zf_le = 0.0
    else:
        try:
            g_zf_le = 1.0 / _mean_over_theta(lambda th: 1.0 / power(th))
        except NonConvergent:
            # near-null spectrum; the mean is beyond the grid budget and the
            # gain is indistinguishable from the null case
            g_zf_le = 0.0
    return SpectralSummary(
        rho=rho,
        snr_le=snr_le,
        snr_dfe=snr_dfe,
        snr_zf_dfe=rho * g_zf_dfe,
        g_zf_dfe=g_zf_dfe,
        g_zf_le=g_zf_le,
        gaussian_rate=gaussian_rate,
    )
