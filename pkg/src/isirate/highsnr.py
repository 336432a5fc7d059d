"""High-SNR machinery: error-event distance search and exponent bounds.

delta_min_sq is the minimum weighted normalized distance over error
events, found by uniform-cost search on the finite error-state graph
(state = last L-1 normalized error symbols). Accumulated distance is an
admissible bound since every step cost is nonnegative, so the first
settled goal is globally optimal; the result is certified whenever the
search completes within its expansion guard. fano_forney_upper and
sl_gap_lower evaluate the two sides of the high-SNR comparison: an upper
bound on H(x_0) - achievable rate and a lower bound on H(x_0) - I_SL.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx

from .channel import (
    ChannelResponse,
    _mean_over_theta,
    spectral_summary,
    to_minimum_phase,
    transfer_power,
)
from .errors import DomainError, InconclusiveSearch, SnrTooLow
from .scalar import InputDistribution, binary_entropy, log_q_integral, q_integral, q_tail

_NODE_GUARD = 2_000_000


def _log_q_tail(z: float) -> float:
    """log Q(z) without underflow (z >= 0)."""
    return -0.5 * z * z + math.log(0.5 * erfcx(z / math.sqrt(2.0)))


@dataclass(frozen=True)
class ErrorEventSearch:
    """Result of the minimum-distance error-event search."""

    delta_min_sq: float
    witness: tuple[float, ...]  # normalized error symbols, nonzero endpoints
    certified: bool
    nodes_explored: int
    error_alphabet: tuple[float, ...]


@dataclass(frozen=True)
class ExponentGap:
    """delta_min^2 against the ZF-DFE gain (equal iff the channel is flat)."""

    delta_min_sq: float
    g_zf_dfe: float
    strict: bool
    witness: tuple[float, ...]


def error_alphabet(x: InputDistribution) -> np.ndarray:
    """Normalized differences (x - x')/d_min of all atom pairs, 0 included."""
    atoms = np.asarray(x.atoms)
    diffs = (atoms[:, None] - atoms[None, :]).ravel() / x.d_min
    vals = np.unique(np.round(diffs, 12))
    return vals


def event_distance_sq(channel: ChannelResponse, errors) -> float:
    """delta^2 of one normalized error sequence: ||e * h||^2."""
    conv = np.convolve(np.asarray(errors, dtype=float), np.asarray(channel.taps))
    return float(conv @ conv)


def delta_min_sq(
    channel: ChannelResponse,
    x: InputDistribution,
    max_len: int | None = None,
) -> ErrorEventSearch:
    """Minimum normalized weighted distance over all error events.

    The channel must carry unit energy. Ties between equal-distance events
    resolve to the lexicographically smallest witness. ``max_len`` caps the
    event length explored (default 8L + 50); the certified flag is cleared
    only if that cap or the node guard discarded a cheaper frontier node.
    """
    if abs(channel.energy() - 1.0) > 1e-9:
        raise DomainError("delta_min_sq expects a unit-energy channel")
    taps = np.asarray(channel.taps)
    L = channel.length
    alphabet = error_alphabet(x)
    nonzero = alphabet[alphabet != 0.0]
    if max_len is None:
        max_len = 8 * L + 50
    max_path = max_len + L - 1
    if L == 1:
        e = float(np.min(np.abs(nonzero)))
        return ErrorEventSearch(
            delta_min_sq=e * e * float(taps[0] ** 2),
            witness=(-e if -e in nonzero else e,),
            certified=True,
            nodes_explored=1,
            error_alphabet=tuple(alphabet),
        )
    zero_state = (0.0,) * (L - 1)
    # heap entries (cost, path, state); path ordering breaks cost ties
    heap = []
    rev_taps = taps[::-1]
    for e in nonzero:
        window = np.zeros(L)
        window[-1] = e
        cost = float((window @ rev_taps) ** 2)
        heapq.heappush(heap, (cost, (float(e),), tuple(window[1:])))
    closed: set[tuple[float, ...]] = set()
    explored = 0
    min_discarded = math.inf
    while heap:
        cost, path, state = heapq.heappop(heap)
        if state == zero_state:
            witness = path[: len(path) - (L - 1)]
            return ErrorEventSearch(
                delta_min_sq=cost,
                witness=witness,
                certified=cost <= min_discarded,
                nodes_explored=explored,
                error_alphabet=tuple(alphabet),
            )
        if state in closed:
            continue
        closed.add(state)
        explored += 1
        if len(path) >= max_path or explored > _NODE_GUARD:
            min_discarded = min(min_discarded, cost)
            continue
        window = np.empty(L)
        window[:-1] = state
        for e in alphabet:
            window[-1] = e
            step = float((window @ rev_taps) ** 2)
            nxt = tuple(window[1:])
            if nxt not in closed:
                heapq.heappush(heap, (cost + step, path + (float(e),), nxt))
    raise InconclusiveSearch("error-event search exhausted without a goal")


def exponent_gap(
    channel: ChannelResponse, x: InputDistribution, max_len: int | None = None
) -> ExponentGap:
    """Compare delta_min^2 with g_zf_dfe on the normalized min-phase channel.

    strict requires a certified search and a margin above 1e-9.
    """
    ch = to_minimum_phase(channel.normalized())
    search = delta_min_sq(ch, x, max_len=max_len)
    if not search.certified:
        raise InconclusiveSearch("search not certified; raise max_len")
    g = float(ch.taps[0] ** 2)
    return ExponentGap(
        delta_min_sq=search.delta_min_sq,
        g_zf_dfe=g,
        strict=search.delta_min_sq - g > 1e-9,
        witness=search.witness,
    )


def _normalized_d_min(x: InputDistribution) -> float:
    return x.d_min / math.sqrt(x.power)


def fano_forney_upper(
    channel: ChannelResponse,
    x: InputDistribution,
    rho: float,
    k_prime: float,
    search: ErrorEventSearch | None = None,
) -> float:
    """Upper bound on H(x_0) - achievable rate, in nats, given the
    sequence-detector error constant K'.

    h2(P) + P log|X| with P = min(1/2, K' Q(sqrt(rho (d/2)^2 delta_min^2))).
    """
    if k_prime <= 0.0:
        raise DomainError("k_prime must be positive")
    ch = to_minimum_phase(channel.normalized())
    if search is None:
        search = delta_min_sq(ch, x)
    if not search.certified:
        raise InconclusiveSearch("delta_min_sq is not certified")
    d_half_sq = (_normalized_d_min(x) / 2.0) ** 2
    p_err = min(0.5, k_prime * q_tail(math.sqrt(rho * d_half_sq * search.delta_min_sq)))
    return binary_entropy(p_err) + p_err * math.log(len(x.atoms))


def log_fano_forney_upper(
    channel: ChannelResponse,
    x: InputDistribution,
    rho: float,
    k_prime: float,
    search: ErrorEventSearch | None = None,
) -> float:
    """log of fano_forney_upper, finite far past double-precision underflow."""
    if k_prime <= 0.0:
        raise DomainError("k_prime must be positive")
    ch = to_minimum_phase(channel.normalized())
    if search is None:
        search = delta_min_sq(ch, x)
    if not search.certified:
        raise InconclusiveSearch("delta_min_sq is not certified")
    d_half_sq = (_normalized_d_min(x) / 2.0) ** 2
    log_p = math.log(k_prime) + _log_q_tail(
        math.sqrt(rho * d_half_sq * search.delta_min_sq)
    )
    if log_p >= math.log(1e-12):
        return math.log(fano_forney_upper(channel, x, rho, k_prime, search=search))
    # h2(p) + p log|X| = p (1 - log p + log|X|) + O(p^2)
    return log_p + math.log(1.0 - log_p + math.log(len(x.atoms)))


def _min_distance_pair_prob(x: InputDistribution) -> float:
    """Largest min-probability among atom pairs achieving d_min."""
    atoms = np.asarray(x.atoms)
    probs = np.asarray(x.probs)
    best = 0.0
    for i in range(atoms.size):
        for j in range(i + 1, atoms.size):
            if abs(abs(atoms[i] - atoms[j]) - x.d_min) <= 1e-12 * x.d_min:
                best = max(best, float(min(probs[i], probs[j])))
    return best


def snr_dfe_upper_bound(channel: ChannelResponse, rho: float) -> float:
    """Upper bound on the biased MMSE-DFE output SNR at high input SNR.

    For strictly positive spectra: rho g_zf_dfe + g_zf_dfe/g_zf_le. With
    spectral nulls: rho g_zf_dfe (1 + sqrt(1/rho)) e^{c1 sqrt(|Omega|/2pi)}
    with c1^2 = <log^2|H|^2> and Omega the set where |H|^2 < sqrt(1/rho).
    Requires the unit-energy normalization and 2 sqrt(1/rho) < 1.
    """
    if abs(channel.energy() - 1.0) > 1e-9:
        raise DomainError("snr_dfe_upper_bound expects a unit-energy channel")
    if 2.0 * math.sqrt(1.0 / rho) >= 1.0:
        raise SnrTooLow("need 2 sqrt(N_0/P_x) < 1, i.e. rho > 4")
    ss = spectral_summary(channel, rho)
    g = ss.g_zf_dfe
    if ss.g_zf_le > 0.0:
        return rho * g + g / ss.g_zf_le
    # null-bearing spectrum: Cauchy-Schwarz on the low-|H| set. The log^2
    # mean has an integrable singularity, so it converges slowly; evaluate
    # at a looser tolerance and inflate, keeping the bound an upper bound.
    c1_sq = _mean_over_theta(
        lambda th: np.log(np.maximum(transfer_power(channel, th), 1e-280)) ** 2,
        rel_tol=1e-4,
    )
    c1 = math.sqrt(c1_sq) * (1.0 + 1e-2)
    threshold = math.sqrt(1.0 / rho)
    omega_frac = _mean_over_theta(
        lambda th: (transfer_power(channel, th) < threshold).astype(float),
        rel_tol=1e-4,
    )
    # inflate the measured fraction so the bound stays an upper bound
    omega_frac = min(1.0, omega_frac * 1.05 + 1e-6)
    return rho * g * (1.0 + threshold) * math.exp(c1 * math.sqrt(omega_frac))


def sl_gap_lower(channel: ChannelResponse, x: InputDistribution, rho: float) -> float:
    """Lower bound on H(x_0) - I_SL, in nats, valid for rho > 4.

    Chains the MMSE genie bound through the equiprobable-pair reduction
    and the Gaussian-tail integral, evaluated at an upper bound on the
    unbiased DFE SNR.
    """
    ch = channel.normalized()
    snr_u = snr_dfe_upper_bound(ch, rho) - 1.0
    d_half_sq = (_normalized_d_min(x) / 2.0) ** 2
    return 2.0 * _min_distance_pair_prob(x) * q_integral(d_half_sq * snr_u)


def log_sl_gap_lower(
    channel: ChannelResponse, x: InputDistribution, rho: float
) -> float:
    """log of sl_gap_lower, finite far past double-precision underflow."""
    ch = channel.normalized()
    snr_u = snr_dfe_upper_bound(ch, rho) - 1.0
    d_half_sq = (_normalized_d_min(x) / 2.0) ** 2
    return math.log(2.0 * _min_distance_pair_prob(x)) + log_q_integral(
        d_half_sq * snr_u
    )


@dataclass(frozen=True)
class CrossoverRow:
    rho: float
    log_upper: float | None  # log fano_forney_upper on H - rate
    log_lower: float | None  # log sl_gap_lower on H - I_SL
    certifies: bool


@dataclass(frozen=True)
class CrossoverTable:
    rows: tuple[CrossoverRow, ...]
    crossing_rho: float | None  # smallest grid rho with upper < lower


def crossover_probe(
    channel: ChannelResponse,
    x: InputDistribution,
    rho_grid,
    k_prime: float = 1.0,
) -> CrossoverTable:
    """Evaluate both exponent bounds on a grid of input SNRs.

    A row certifies the rate >= I_SL comparison when the upper bound on
    H - rate falls below the lower bound on H - I_SL. Grid points with
    rho <= 4 are reported as None (outside the bound's validity).
    """
    ch = to_minimum_phase(channel.normalized())
    search = delta_min_sq(ch, x)
    rows = []
    crossing = None
    for rho in rho_grid:
        if 2.0 * math.sqrt(1.0 / rho) >= 1.0:
            rows.append(
                CrossoverRow(rho=float(rho), log_upper=None, log_lower=None, certifies=False)
            )
            continue
        log_upper = log_fano_forney_upper(channel, x, rho, k_prime, search=search)
        log_lower = log_sl_gap_lower(channel, x, rho)
        certifies = log_upper < log_lower
        if certifies and crossing is None:
            crossing = float(rho)
        rows.append(
            CrossoverRow(
                rho=float(rho), log_upper=log_upper, log_lower=log_lower, certifies=certifies
            )
        )
    return CrossoverTable(rows=tuple(rows), crossing_rho=crossing)
