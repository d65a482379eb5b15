"""Optimum spectrum balancing over the cable's space-frequency grid.

Each tone is solved by exhaustive search over per-pair constellation tuples.
For a tuple the powers that meet every target SINR with equality come from
the linear system ``(D - G A) p = G sigma``, where ``D`` holds the direct
gains, ``A`` the crosstalk gains and ``G`` the target SINRs. Per-line power
budgets are coupled across tones with one Lagrange multiplier per line,
tuned by round-robin bisection.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .band_plan import DEFAULT_PROFILE, DEFAULT_TONE_BW_HZ, McsProfile
from .cable_model import (
    DEFAULT_MASK_PSD_DBM_HZ,
    ChannelMatrixSet,
    dbm_to_w,
    w_to_dbm,
)

log = logging.getLogger(__name__)

BUDGET_TOL_DB = 0.01
LAMBDA_REL_TOL = 1e-12
MAX_BISECTION_ITERS = 100
MAX_SWEEPS = 50
DUAL_REL_TOL = 1e-6


@dataclass(frozen=True)
class PowerConstraints:
    """Per-line total power and per-tone mask, both in dBm.

    ``per_line_total_dbm`` may be a scalar or one value per pair.
    """

    per_line_total_dbm: float | tuple[float, ...] = 4.0
    per_tone_mask_dbm: float = DEFAULT_MASK_PSD_DBM_HZ + 10.0 * math.log10(DEFAULT_TONE_BW_HZ)

    def __post_init__(self):
        totals = np.atleast_1d(np.asarray(self.per_line_total_dbm, dtype=float))
        if np.any(np.isnan(totals)) or math.isnan(self.per_tone_mask_dbm):
            raise ValueError("power constraints must not be NaN")
        if not math.isfinite(self.per_tone_mask_dbm):
            raise ValueError("per-tone mask must be finite")

    @classmethod
    def from_psd(cls, per_line_total_dbm=4.0, mask_psd_dbm_hz=DEFAULT_MASK_PSD_DBM_HZ,
                 tone_bw_hz=DEFAULT_TONE_BW_HZ) -> "PowerConstraints":
        return cls(per_line_total_dbm, mask_psd_dbm_hz + 10.0 * math.log10(tone_bw_hz))

    @property
    def mask_w(self) -> float:
        return float(dbm_to_w(self.per_tone_mask_dbm))

    def totals_w(self, n_pairs: int) -> np.ndarray:
        totals = np.atleast_1d(np.asarray(self.per_line_total_dbm, dtype=float))
        if totals.size == 1:
            totals = np.repeat(totals, n_pairs)
        if totals.size != n_pairs:
            raise ValueError(f"{totals.size} line budgets given for {n_pairs} pairs")
        return dbm_to_w(totals)


@dataclass
class PowerAllocation:
    tones_hz: np.ndarray
    tone_bandwidth_hz: float
    bits: np.ndarray            # (n_tones, n_pairs) int
    powers_w: np.ndarray        # (n_tones, n_pairs)
    lambdas: np.ndarray         # final per-line prices, bps per watt
    converged: bool = True
    n_evaluations: int = 0
    budget_w: np.ndarray = field(default=None, repr=False)

    @property
    def n_tones(self) -> int:
        return self.bits.shape[0]

    @property
    def n_pairs(self) -> int:
        return self.bits.shape[1]

    @property
    def gain_matrix(self) -> np.ndarray:
        """Amplifier gains ``B_k = diag(sqrt(p_k))``, shape (n_tones, n_pairs, n_pairs)."""
        n = self.n_pairs
        b = np.zeros((self.n_tones, n, n))
        idx = np.arange(n)
        b[:, idx, idx] = np.sqrt(self.powers_w)
        return b

    @property
    def line_power_w(self) -> np.ndarray:
        return self.powers_w.sum(axis=0)

    @property
    def line_power_dbm(self) -> np.ndarray:
        return w_to_dbm(self.line_power_w)

    @property
    def mean_line_power_dbm(self) -> float:
        return float(w_to_dbm(self.line_power_w.mean()))

    @property
    def rates_bps(self) -> np.ndarray:
        return self.tone_bandwidth_hz * self.bits.sum(axis=0).astype(float)

    @property
    def total_rate_bps(self) -> float:
        return float(self.rates_bps.sum())


def sinr(h_k, p, noise, n: int) -> float:
    h_k = np.asarray(h_k, dtype=float)
    p = np.asarray(p, dtype=float)
    noise = np.broadcast_to(np.asarray(noise, dtype=float), p.shape)
    signal = h_k[n, n] * p[n]
    interference = h_k[n] @ p - signal
    denom = interference + noise[n]
    if signal == 0.0:
        return 0.0
    return float(signal / denom)


def sinr_vector(h_k, p, noise) -> np.ndarray:
    h_k = np.asarray(h_k, dtype=float)
    p = np.asarray(p, dtype=float)
    signal = np.diagonal(h_k) * p
    denom = h_k @ p - signal + noise
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(signal > 0, signal / denom, 0.0)
    return out


def _system(h_k, targets):
    """Matrices ``D - G A`` and diag(G) for a batch of target vectors (T, N)."""
    h_k = np.asarray(h_k, dtype=float)
    n = h_k.shape[0]
    diag = np.diagonal(h_k)
    cross = h_k - np.diag(diag)
    m = np.diag(diag)[None, :, :] - targets[:, :, None] * cross[None, :, :]
    return m, targets


def solve_powers(h_k, targets, noise, mask_w: float = math.inf):
    """Powers meeting ``targets`` (linear SINR) exactly, or ``None`` if infeasible.

    Pairs with a zero target are off and get zero power.
    """
    targets = np.asarray(targets, dtype=float)
    if np.any(~np.isfinite(targets)) or np.any(targets < 0):
        raise ValueError(f"targets must be finite and nonnegative, got {targets}")
    noise = np.broadcast_to(np.asarray(noise, dtype=float), targets.shape)
    active = targets > 0
    p = np.zeros_like(targets)
    if not active.any():
        return p
    h = np.asarray(h_k, dtype=float)[np.ix_(active, active)]
    m, g = _system(h, targets[active][None, :])
    try:
        sol = np.linalg.solve(m[0], g[0] * noise[active])
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(sol)) or np.any(sol <= 0) or np.any(sol > mask_w):
        return None
    p[active] = sol
    return p


def bit_tuples(profile: McsProfile, n_pairs: int) -> np.ndarray:
    """All profile index tuples in lexicographic order, shape (|profile|**n_pairs, n_pairs)."""
    return np.array(list(itertools.product(range(len(profile)), repeat=n_pairs)), dtype=int)


def tone_table(h_k, noise, profile: McsProfile, mask_w: float, index_tuples=None):
    """Solve every constellation tuple on one tone.

    Returns ``(bits, powers, feasible)`` with bits and powers of shape (T, N).
    Infeasible rows carry NaN powers.
    """
    h_k = np.asarray(h_k, dtype=float)
    n = h_k.shape[0]
    if index_tuples is None:
        index_tuples = bit_tuples(profile, n)
    bits = np.asarray(profile.bits)[index_tuples]
    targets = profile.targets_linear[index_tuples]
    noise = np.broadcast_to(np.asarray(noise, dtype=float), (n,))
    m, g = _system(h_k, targets)
    rhs = g * noise[None, :]
    try:
        powers = np.linalg.solve(m, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        powers = np.full(targets.shape, np.nan)
        for i in range(len(targets)):
            try:
                powers[i] = np.linalg.solve(m[i], rhs[i])
            except np.linalg.LinAlgError:
                pass
    active = targets > 0
    with np.errstate(invalid="ignore"):
        ok_active = np.where(active, (powers > 0) & (powers <= mask_w), True)
    feasible = np.all(ok_active & np.isfinite(powers), axis=1)
    powers = np.where(active, powers, 0.0)
    powers[~feasible] = np.nan
    return bits, powers, feasible


def _select(objective, total_power, rate_scale):
    """Index of the best row per tone with tie-breaking.

    ``objective`` and ``total_power`` are (K, T); rows are in lexicographic order
    so the first surviving candidate is the lexicographically smallest tuple.
    """
    first = np.argmax(objective, axis=1)
    if objective.shape[0] == 0:
        return first
    best = np.take_along_axis(objective, first[:, None], axis=1)
    scale = np.maximum(np.abs(best), rate_scale)
    cand = objective >= best - 1e-12 * scale
    tied = np.count_nonzero(cand, axis=1) > 1
    if not tied.any():
        return first
    cand = cand[tied]
    pw = np.where(cand, total_power[tied], np.inf)
    pmin = pw.min(axis=1, keepdims=True)
    cand &= pw <= pmin + 1e-12 * np.maximum(pmin, 1e-30)
    first[tied] = np.argmax(cand, axis=1)
    return first


def per_tone_search(h_k, noise, lambdas, profile: McsProfile = DEFAULT_PROFILE,
                    constraints: PowerConstraints | None = None,
                    tone_bw_hz: float = DEFAULT_TONE_BW_HZ):
    """Best ``(bits, powers)`` on one tone for the Lagrangian
    ``sum_n (tone_bw_hz * b_n - lambdas[n] * p_n)``."""
    constraints = constraints or PowerConstraints()
    lambdas = np.asarray(lambdas, dtype=float)
    if np.any(lambdas < 0):
        raise ValueError("dual prices must be nonnegative")
    bits, powers, feasible = tone_table(h_k, noise, profile, constraints.mask_w)
    obj, ptot = _objective(bits[None], powers[None], feasible[None], lambdas, tone_bw_hz)
    i = _select(obj, ptot, tone_bw_hz)[0]
    return tuple(int(b) for b in bits[i]), powers[i].copy()


def _objective(bits, powers, feasible, lambdas, tone_bw_hz):
    p = np.where(feasible[..., None], powers, 0.0)
    obj = tone_bw_hz * bits.sum(axis=-1) - p @ lambdas
    obj = np.where(feasible, obj, -np.inf)
    return obj, np.where(feasible, p.sum(axis=-1), np.inf)


class _ToneTables:
    """Cached per-tone tuple tables for a whole channel set (independent of the duals).

    Every evaluation that satisfies all line budgets is remembered, so the
    search can fall back on the best feasible point it has visited.
    """

    def __init__(self, channels: ChannelMatrixSet, profile: McsProfile, mask_w: float,
                 tone_bw_hz: float, budget_w: np.ndarray):
        n = channels.n_pairs
        idx = bit_tuples(profile, n)
        k = channels.n_tones
        t = len(idx)
        self.bits = np.asarray(profile.bits)[idx]
        self.powers = np.zeros((k, t, n))
        self.feasible = np.zeros((k, t), dtype=bool)
        for tone in range(k):
            _, p, f = tone_table(channels.gains[tone], channels.noise_w[tone], profile,
                                 mask_w, idx)
            self.powers[tone] = np.where(f[:, None], p, 0.0)
            self.feasible[tone] = f
        self.rate = tone_bw_hz * self.bits.sum(axis=1).astype(float)
        self.tone_bw_hz = tone_bw_hz
        self.ptot = np.where(self.feasible, self.powers.sum(axis=2), np.inf)
        self.budget = budget_w
        self.k_idx = np.arange(k)
        self.n_evaluations = 0
        self.best = None  # (rate, power, choice, lambdas)

    def choose(self, lambdas) -> np.ndarray:
        self.n_evaluations += 1
        obj = self.rate[None, :] - self.powers @ lambdas
        obj = np.where(self.feasible, obj, -np.inf)
        choice = _select(obj, self.ptot, self.tone_bw_hz)
        if np.all(self.line_power(choice) <= self.budget):
            rate = self.rate[choice].sum()
            power = self.ptot[self.k_idx, choice].sum()
            b = self.best
            if b is None or rate > b[0] or (rate == b[0] and power < b[1]):
                self.best = (rate, power, choice, np.array(lambdas, dtype=float))
        return choice

    def line_power(self, choice) -> np.ndarray:
        return self.powers[self.k_idx, choice].sum(axis=0)


def _min_feasible_lambda(tables, lambdas, n, budget, start=0.0):
    """Smallest price for line ``n`` (others fixed) that keeps its power within budget.

    ``start`` seeds the bracket search; the result does not depend on it
    beyond the bisection tolerance.
    """
    lam = lambdas.copy()

    def fits(x):
        lam[n] = x
        return tables.line_power(tables.choose(lam))[n] <= budget

    if fits(0.0):
        return 0.0
    guess = start if start > 0 else 1.0
    step = 1e-9
    if fits(guess):
        hi = guess
        lo = guess / (1.0 + step)
        while fits(lo):
            hi, step = lo, step * 16.0
            lo = hi / (1.0 + step)
    else:
        lo = guess
        hi = guess * (1.0 + step)
        while not fits(hi):
            lo, step = hi, min(step * 16.0, 1.0)
            hi = lo * (1.0 + step)
    floor = budget * 10.0 ** (-BUDGET_TOL_DB / 10.0)
    for _ in range(MAX_BISECTION_ITERS):
        if hi - lo <= LAMBDA_REL_TOL * hi:
            break
        mid = 0.5 * (lo + hi)
        lam[n] = mid
        pn = tables.line_power(tables.choose(lam))[n]
        if pn <= budget:
            hi = mid
            if pn >= floor:
                break
        else:
            lo = mid
    return hi


def _greedy_fill(tables, choice, n_levels):
    """Spend leftover budget: apply single-pair constellation steps while they fit.

    The dual search stops on the feasible side of a price breakpoint, which can
    leave budget unused. Each round takes the step with the most bits per extra
    watt (ties: lower tone, then lower pair) that keeps every tone within the
    mask and every line within budget.
    """
    choice = choice.copy()
    n = tables.bits.shape[1]
    strides = n_levels ** np.arange(n - 1, -1, -1)
    k_idx = tables.k_idx
    while len(choice):
        digits = (choice[:, None] // strides[None, :]) % n_levels
        cand = np.where(digits < n_levels - 1, choice[:, None] + strides[None, :], -1)
        ok = cand >= 0
        safe = np.where(ok, cand, 0)
        ok &= tables.feasible[k_idx[:, None], safe]
        if not ok.any():
            break
        # (K, N, N): line powers after each candidate step
        delta = tables.powers[k_idx[:, None], safe] - tables.powers[k_idx, choice][:, None, :]
        after = tables.line_power(choice)[None, None, :] + delta
        ok &= np.all(after <= tables.budget, axis=2)
        if not ok.any():
            break
        gain = tables.rate[safe] - tables.rate[choice][:, None]
        cost = np.maximum(delta.sum(axis=2), 0.0)
        with np.errstate(divide="ignore"):
            eff = np.where(ok, gain / cost, -np.inf)
        k, pair = np.unravel_index(np.argmax(eff), eff.shape)
        choice[k] = cand[k, pair]
    return choice


def run_osb(channels: ChannelMatrixSet, profile: McsProfile = DEFAULT_PROFILE,
            constraints: PowerConstraints | None = None) -> PowerAllocation:
    """Rate-maximising allocation under the per-tone mask and per-line budgets.

    Takes the best budget-feasible per-tone optimum visited by the dual
    search, tops it up with single-step upgrades that still fit, and reports
    the prices of that optimum. ``converged`` is False when
    the prices were still moving after ``MAX_SWEEPS`` round-robin sweeps.
    """
    constraints = constraints or PowerConstraints()
    tone_bw = channels.tone_bandwidth_hz
    if not tone_bw > 0:
        raise ValueError("channel set lacks a tone bandwidth")
    n = channels.n_pairs
    budget = constraints.totals_w(n)
    tables = _ToneTables(channels, profile, constraints.mask_w, tone_bw, budget)

    lambdas = np.zeros(n)
    converged = False
    tables.choose(lambdas)
    if tables.best is not None:
        converged = True
    else:
        for _ in range(MAX_SWEEPS):
            old = lambdas.copy()
            for line in range(n):
                start = lambdas[line] if lambdas[line] > 0 else lambdas.max()
                lambdas[line] = _min_feasible_lambda(tables, lambdas, line, budget[line], start)
            tables.choose(lambdas)
            if np.all(np.abs(lambdas - old) <= DUAL_REL_TOL * np.maximum(lambdas, old)):
                converged = True
                break
    if not converged:
        log.warning("dual price search did not converge after %d sweeps", MAX_SWEEPS)
    scale = max(float(lambdas.max()), 1.0)
    while tables.best is None:
        # prices high enough switch every tone off, which always fits the budget
        scale *= 2.0
        tables.choose(np.full(n, scale))
    _, _, choice, lambdas = tables.best
    choice = _greedy_fill(tables, choice, len(profile))
    k_idx = tables.k_idx
    return PowerAllocation(
        tones_hz=channels.tones_hz.copy(),
        tone_bandwidth_hz=tone_bw,
        bits=tables.bits[choice].reshape(-1, n).copy(),
        powers_w=tables.powers[k_idx, choice].reshape(-1, n).copy(),
        lambdas=lambdas,
        converged=converged,
        n_evaluations=tables.n_evaluations,
        budget_w=budget,
    )
