"""Two-player TrueSkill rating with draws, win rates, and leaderboards.

Implements the standard two-player Gaussian update (moment matching against
the single- or double-truncated Gaussian), with the usual defaults: fresh
ratings start at mu=25, sigma=25/3; beta=25/6, tau=25/300, draw
probability 0.10.  The Gaussian CDF goes through math.erf, no tables.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

DEFAULT_MU = 25.0
DEFAULT_SIGMA = 25.0 / 3.0

OUTCOMES = ("A_WINS", "B_WINS", "TIE")
RAW_VOTES = ("A", "B", "TIE", "BOTH_BAD")

_SQRT2 = math.sqrt(2.0)


def _pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / _SQRT2))


def _ppf(p: float) -> float:
    """Inverse normal CDF by bisection on erf; ample accuracy for the draw
    margin (the CDF itself is accurate to ~1e-16)."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if _cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


@dataclass(frozen=True)
class Rating:
    mu: float = DEFAULT_MU
    sigma: float = DEFAULT_SIGMA

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)):
            raise ValueError("rating must be finite")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


@dataclass(frozen=True)
class RatingParams:
    beta: float = 25.0 / 6.0
    tau: float = 25.0 / 300.0
    draw_probability: float = 0.10

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        if not 0.0 <= self.draw_probability < 1.0:
            raise ValueError("draw probability must be in [0, 1)")

    def draw_margin(self) -> float:
        # epsilon such that P(|perf diff| < eps) = draw probability for two
        # fresh performances with noise sqrt(2)*beta
        return _ppf((self.draw_probability + 1.0) / 2.0) * _SQRT2 * self.beta


def _v_win(t: float, eps: float) -> float:
    x = t - eps
    denom = _cdf(x)
    if denom < 1e-300:
        return -x
    return _pdf(x) / denom


def _w_win(t: float, eps: float) -> float:
    v = _v_win(t, eps)
    return v * (v + t - eps)


def _v_draw(t: float, eps: float) -> float:
    abs_t = abs(t)
    a, b = eps - abs_t, -eps - abs_t
    denom = _cdf(a) - _cdf(b)
    if denom < 1e-300:
        return (-abs_t if t >= 0 else abs_t)
    v = (_pdf(b) - _pdf(a)) / denom
    return -v if t < 0 else v

def _w_draw(t: float, eps: float) -> float:
    abs_t = abs(t)
    a, b = eps - abs_t, -eps - abs_t
    denom = _cdf(a) - _cdf(b)
    if denom < 1e-300:
        return 1.0
    v = _v_draw(abs_t, eps)
    return v * v + (a * _pdf(a) - b * _pdf(b)) / denom


def trueskill_update(
    a: Rating, b: Rating, outcome: str, params: RatingParams = RatingParams()
) -> tuple[Rating, Rating]:
    """One pairwise update; outcome is from A's perspective."""
    if outcome not in OUTCOMES:
        raise ValueError(f"unknown outcome {outcome!r}")
    if outcome == "B_WINS":
        b2, a2 = trueskill_update(b, a, "A_WINS", params)
        return a2, b2

    # dynamics: inflate both priors by tau before the update
    va = a.sigma**2 + params.tau**2
    vb = b.sigma**2 + params.tau**2
    c2 = va + vb + 2.0 * params.beta**2
    c = math.sqrt(c2)
    eps = params.draw_margin() / c
    t = (a.mu - b.mu) / c

    if outcome == "A_WINS":
        v, w = _v_win(t, eps), _w_win(t, eps)
    else:
        v, w = _v_draw(t, eps), _w_draw(t, eps)

    mu_a = a.mu + (va / c) * v
    mu_b = b.mu - (vb / c) * v
    sig_a = math.sqrt(va * max(1.0 - (va / c2) * w, 1e-12))
    sig_b = math.sqrt(vb * max(1.0 - (vb / c2) * w, 1e-12))
    return Rating(mu_a, sig_a), Rating(mu_b, sig_b)


@dataclass(frozen=True)
class MatchRecord:
    match_id: str
    task_id: str
    method_a: str
    method_b: str
    raw_vote: str
    outcome: str = ""

    def __post_init__(self):
        if self.raw_vote not in RAW_VOTES:
            raise ValueError(f"unknown raw vote {self.raw_vote!r}")
        expected = outcome_for_vote(self.raw_vote)
        resolved = self.outcome or expected
        if resolved != expected:
            raise ValueError(f"vote {self.raw_vote} must map to outcome {expected}")
        object.__setattr__(self, "outcome", resolved)


def outcome_for_vote(raw_vote: str) -> str:
    # "Both are bad" counts as a tie
    if raw_vote == "A":
        return "A_WINS"
    if raw_vote == "B":
        return "B_WINS"
    return "TIE"


def win_rate(matches: Sequence[MatchRecord], method: str) -> float:
    """100 * wins / (wins + losses); ties are excluded as non-decisive."""
    wins = losses = 0
    for m in matches:
        if m.outcome == "TIE":
            continue
        winner = m.method_a if m.outcome == "A_WINS" else m.method_b
        loser = m.method_b if m.outcome == "A_WINS" else m.method_a
        if winner == method:
            wins += 1
        elif loser == method:
            losses += 1
    if wins + losses == 0:
        raise ValueError(f"no decisive matches for method {method!r}")
    return 100.0 * wins / (wins + losses)


def leaderboard(
    events: Iterable[MatchRecord],
    params: RatingParams = RatingParams(),
    methods: Sequence[str] = (),
) -> dict[str, tuple[Rating, int]]:
    """Fold the update over events in order; unseen methods stay at the
    default rating with zero matches."""
    board: dict[str, tuple[Rating, int]] = {m: (Rating(), 0) for m in methods}
    for ev in events:
        ra, na = board.get(ev.method_a, (Rating(), 0))
        rb, nb = board.get(ev.method_b, (Rating(), 0))
        ra2, rb2 = trueskill_update(ra, rb, ev.outcome, params)
        board[ev.method_a] = (ra2, na + 1)
        board[ev.method_b] = (rb2, nb + 1)
    return board


def export_leaderboard_csv(
    events: Sequence[MatchRecord],
    params: RatingParams = RatingParams(),
    methods: Sequence[str] = (),
) -> str:
    """CSV export: method, mu, sigma (the Uncertainty column), win rate,
    match count.  Rows sorted by mu descending then method name."""
    board = leaderboard(events, params, methods)
    lines = ["method,mu,sigma,win_rate,matches"]
    ordered = sorted(board.items(), key=lambda kv: (-kv[1][0].mu, kv[0]))
    for method, (rating, count) in ordered:
        try:
            wr = f"{win_rate(events, method):.2f}"
        except ValueError:
            wr = ""
        lines.append(f"{method},{rating.mu:.6f},{rating.sigma:.6f},{wr},{count}")
    return "\n".join(lines) + "\n"
