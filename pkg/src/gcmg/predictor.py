"""Run a game as a one-step-ahead sign predictor and score it.

The history is seeded with the first ``m`` realized signs of the source (the
delay line), then each step the game forecasts the next sign, is scored, and
learns from the realized one.  Correctness is the running hit rate.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .game import GameConfig, GameState, fair_sign, init_game, step_exogenous
from .sources import SourceExhausted, UnsupportedSourceError
from .strategy_space import shift_history


class TruncatedRunError(RuntimeError):
    def __init__(self, completed: int, requested: int, cause: Exception | None = None):
        super().__init__(f"source ran out after {completed} of {requested} steps")
        self.completed = completed
        self.requested = requested
        self.__cause__ = cause


@dataclass(frozen=True)
class PredictionRecord:
    t: int
    predicted: int
    realized: int
    psi_running: float
    utilities_snapshot: np.ndarray | None = None


@dataclass
class RunResult:
    """Per-step arrays of one prediction run.

    ``realized`` holds 0 on skipped steps (zero-valued samples); those steps
    are excluded from ``hits`` bookkeeping, so ``psi`` is the running hit rate
    over scored steps only.
    """

    cfg: GameConfig
    seed: int
    predicted: np.ndarray
    realized: np.ndarray
    scored: np.ndarray
    hits: np.ndarray
    psi: np.ndarray
    utilities: np.ndarray | None = field(default=None, repr=False)
    warmup: int = 0

    @property
    def psi_final(self) -> float:
        valid = self.psi[~np.isnan(self.psi)]
        return float(valid[-1]) if len(valid) else float("nan")

    @property
    def n_scored(self) -> int:
        return int(self.scored.sum())

    @property
    def records(self) -> list[PredictionRecord]:
        snaps = self.utilities if self.utilities is not None else [None] * len(self.predicted)
        return [
            PredictionRecord(t + 1, int(p), int(r), float(s), u)
            for t, (p, r, s, u) in enumerate(zip(self.predicted, self.realized, self.psi, snaps))
        ]


def psi_running(hits) -> float:
    hits = np.asarray(hits, dtype=float)
    if hits.size == 0:
        raise ValueError("psi of an empty hit sequence is undefined")
    return float(hits.mean())


def psi_windowed(hits, window: int) -> np.ndarray:
    """Trailing-window mean of ``hits``; the first ``window - 1`` entries use what is available."""
    if window < 1:
        raise ValueError("window must be >= 1")
    hits = np.asarray(hits, dtype=float)
    csum = np.concatenate([[0.0], np.cumsum(hits)])
    idx = np.arange(1, len(hits) + 1)
    lo = np.maximum(idx - window, 0)
    return (csum[idx] - csum[lo]) / (idx - lo)


def _initial_history(signs: np.ndarray, m: int, rng: np.random.Generator) -> tuple[int, int]:
    """History index from the first m signs; zeros repeat the previous sign."""
    history = 0
    last = 0
    for s in signs[:m]:
        s = int(s) or last or fair_sign(rng)
        history = shift_history(history, s, m)
        last = s
    return history, last


def run_prediction(cfg: GameConfig, source, T: int, warmup: int = 0,
                   record_utilities: bool = False) -> RunResult:
    """Feed ``T`` steps of ``source`` to a game built from ``cfg``.

    Zero-valued samples are not scored and leave the utilities untouched; the
    previous sign is pushed into the history in their place.  ``warmup``
    excludes the first steps from the running correctness.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    try:
        y = np.asarray(source.samples(T + cfg.m), dtype=float)
    except SourceExhausted as exc:
        raise TruncatedRunError(max(exc.available - cfg.m, 0), T, exc) from exc
    signs = np.sign(y).astype(np.int8)

    state: GameState = init_game(cfg, history=0)
    state.history, last = _initial_history(signs, cfg.m, state.rng)

    predicted = np.zeros(T, dtype=np.int8)
    realized = signs[cfg.m:].copy()
    scored = realized != 0
    hits = np.zeros(T, dtype=bool)
    utilities = np.empty((T,) + state.utilities.shape) if record_utilities else None

    for i in range(T):
        s = int(realized[i])
        if s == 0:
            state.history = shift_history(state.history, last, cfg.m)
        else:
            predicted[i] = step_exogenous(state, s)
            hits[i] = predicted[i] == s
            last = s
        if record_utilities:
            utilities[i] = state.utilities

    counted = scored.copy()
    counted[:warmup] = False
    n = np.cumsum(counted)
    with np.errstate(invalid="ignore", divide="ignore"):
        psi = np.where(n > 0, np.cumsum(hits & counted) / np.maximum(n, 1), np.nan)
    if utilities is not None and cfg.N == 1:
        utilities = utilities[:, 0]
    return RunResult(cfg, cfg.seed, predicted, realized, scored, hits, psi, utilities, warmup)


def psi_max_oracle(source, y, rng: np.random.Generator | int | None = None) -> float:
    """Hit rate of sgn(E[y(n) | past]) against sgn(y(n)) along realization ``y``.

    ``source`` must know its generating coefficients (expose
    ``conditional_mean``).  A zero conditional mean is resolved by a fair coin.
    """
    if not hasattr(source, "conditional_mean"):
        raise UnsupportedSourceError(f"{type(source).__name__} has no known conditional mean")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    y = np.asarray(y, dtype=float)
    mean = source.conditional_mean(y)
    guess = np.sign(mean)
    ties = guess == 0
    if ties.any():
        guess[ties] = np.where(rng.random(int(ties.sum())) < 0.5, 1.0, -1.0)
    target = np.sign(y)
    keep = target != 0
    return float(np.mean(guess[keep] == target[keep]))
