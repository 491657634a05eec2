"""Signal sources: AR processes, regime switches, probes and price files.

Every source exposes ``samples(n)`` which is a pure function of the source's
parameters and seed: calling it twice gives identical arrays.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

AR3_COEFFS = (0.7, -0.5, -0.2)
AR3_SWITCHED_COEFFS = (-0.3, -0.2, 0.6)
SWITCH_T = 1500


class SourceExhausted(RuntimeError):
    def __init__(self, requested: int, available: int):
        super().__init__(f"source has {available} samples, {requested} requested")
        self.requested = requested
        self.available = available


class UnsupportedSourceError(TypeError):
    pass


class PriceFileError(ValueError):
    pass


class InsufficientDataError(ValueError):
    pass


def _recursion(coeffs: np.ndarray, noise: np.ndarray, history: np.ndarray) -> np.ndarray:
    """y(t) = sum_i c_i y(t-i) + noise(t); ``history`` holds the p values before t=0, oldest first."""
    p = len(coeffs)
    buf = np.concatenate([history, np.zeros(len(noise))])
    c = [float(x) for x in coeffs]
    for t in range(len(noise)):
        acc = noise[t]
        for i in range(p):
            acc += c[i] * buf[p + t - 1 - i]
        buf[p + t] = acc
    return buf[p:]


def _conditional_means(coeffs: np.ndarray, y: np.ndarray, history: np.ndarray) -> np.ndarray:
    p = len(coeffs)
    buf = np.concatenate([history, y])
    out = np.zeros(len(y))
    for i in range(p):
        out += coeffs[i] * buf[p - 1 - i: p - 1 - i + len(y)]
    return out


@dataclass(frozen=True)
class ARProcess:
    """y(t) = sum_i coeffs[i-1] * y(t-i) + noise_sd * xi(t) with standard Gaussian xi."""

    coeffs: tuple[float, ...] = AR3_COEFFS
    noise_sd: float = 1.0
    seed: int = 0
    initial: tuple[float, ...] | None = None  # most recent first
    burn_in: int = 0

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.coeffs:
            raise ValueError("an AR process needs at least one coefficient")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be non-negative")
        if self.initial is not None and len(self.initial) != self.order:
            raise ValueError(f"initial state needs {self.order} values")

    @property
    def order(self) -> int:
        return len(self.coeffs)

    def _start(self) -> np.ndarray:
        if self.initial is None:
            return np.zeros(self.order)
        return np.asarray(self.initial, dtype=float)[::-1]

    def _generate_with_start(self, T: int) -> tuple[np.ndarray, np.ndarray]:
        """Samples after burn-in plus the ``p`` values preceding them (oldest first)."""
        rng = np.random.default_rng(self.seed)
        noise = self.noise_sd * rng.standard_normal(T + self.burn_in)
        full = np.concatenate([self._start(), _recursion(np.asarray(self.coeffs), noise, self._start())])
        return full[self.order + self.burn_in:], full[self.burn_in: self.burn_in + self.order]

    def samples(self, n: int) -> np.ndarray:
        return ar_generate(self, n)

    def conditional_mean(self, y: np.ndarray) -> np.ndarray:
        """One-step conditional mean E[y(n) | past] along a realization of this process."""
        start = self._start() if self.burn_in == 0 else self._generate_with_start(0)[1]
        return _conditional_means(np.asarray(self.coeffs), np.asarray(y, dtype=float), start)


def ar_generate(p: ARProcess, T: int) -> np.ndarray:
    if T < 0:
        raise ValueError("T must be non-negative")
    return p._generate_with_start(T)[0]


def ar_is_stable(coeffs: Sequence[float], rtol: float = 1e-9, max_doublings: int = 80) -> bool:
    """Spectral radius of the companion matrix < 1.

    The radius is estimated as ||C^k||^(1/k) with k doubled by repeated
    squaring (a power iteration on the matrix itself), rescaling each square
    so nothing overflows, until successive estimates agree to ``rtol``.
    """
    c = np.asarray(coeffs, dtype=float)
    p = len(c)
    if p < 1:
        raise ValueError("need at least one coefficient")
    if not np.any(c):
        return True
    C = np.zeros((p, p))
    C[0] = c
    C[1:, :-1] = np.eye(p - 1)
    log_scale = 0.0  # log of the factor divided out so far, per unit power
    k = 1
    prev = None
    M = C
    for _ in range(max_doublings):
        norm = np.linalg.norm(M)
        if norm == 0.0:
            return True  # nilpotent
        log_scale += math.log(norm) / k
        M = M / norm
        estimate = log_scale + math.log(np.linalg.norm(M)) / k
        if prev is not None and abs(math.expm1(estimate - prev)) < rtol:
            break
        prev = estimate
        M = M @ M
        k *= 2
    return math.exp(estimate) < 1.0


@dataclass(frozen=True)
class RegimeSwitchSource:
    """``first`` for samples 1..switch_t, then ``second`` continuing from first's state.

    One noise stream (seeded by ``first.seed``) drives both regimes.
    """

    first: ARProcess = field(default_factory=lambda: ARProcess(AR3_COEFFS))
    second: ARProcess = field(default_factory=lambda: ARProcess(AR3_SWITCHED_COEFFS))
    switch_t: int = SWITCH_T

    @property
    def seed(self) -> int:
        return self.first.seed

    def samples(self, n: int) -> np.ndarray:
        rng = np.random.default_rng(self.first.seed)
        k = min(n, self.switch_t)
        y1 = _recursion(np.asarray(self.first.coeffs), self.first.noise_sd * rng.standard_normal(k),
                        self.first._start())
        if n <= self.switch_t:
            return y1
        p2 = self.second.order
        tail = np.concatenate([self.first._start(), y1])[-p2:] if p2 > len(y1) else y1[-p2:]
        noise2 = self.second.noise_sd * rng.standard_normal(n - k)
        y2 = _recursion(np.asarray(self.second.coeffs), noise2, tail)
        return np.concatenate([y1, y2])

    def conditional_mean(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        k = min(len(y), self.switch_t)
        out = np.empty(len(y))
        out[:k] = _conditional_means(np.asarray(self.first.coeffs), y[:k], self.first._start())
        if len(y) > k:
            p2 = self.second.order
            tail = np.concatenate([self.first._start(), y[:k]])[-p2:]
            out[k:] = _conditional_means(np.asarray(self.second.coeffs), y[k:], tail)
        return out


@dataclass(frozen=True)
class IIDNoise:
    seed: int = 0
    sd: float = 1.0

    def samples(self, n: int) -> np.ndarray:
        return self.sd * np.random.default_rng(self.seed).standard_normal(n)

    def conditional_mean(self, y: np.ndarray) -> np.ndarray:
        return np.zeros(len(y))


@dataclass(frozen=True)
class PeriodicSource:
    pattern: tuple[float, ...] = (1.0, -1.0)

    def samples(self, n: int) -> np.ndarray:
        reps = -(-n // len(self.pattern))
        return np.tile(np.asarray(self.pattern, dtype=float), reps)[:n]


@dataclass(frozen=True)
class ReturnSeries:
    returns: np.ndarray
    signs: np.ndarray
    instrument: str = ""
    note: str = ""

    def __len__(self) -> int:
        return len(self.returns)

    def samples(self, n: int) -> np.ndarray:
        if n > len(self.returns):
            raise SourceExhausted(n, len(self.returns))
        return self.returns[:n]

    @classmethod
    def from_prices(cls, prices, instrument: str = "", note: str = "") -> "ReturnSeries":
        prices = np.asarray(prices, dtype=float)
        if np.any(prices <= 0) or not np.all(np.isfinite(prices)):
            raise PriceFileError("prices must be positive and finite")
        r = np.diff(prices) / prices[:-1]
        return cls(r, np.sign(r).astype(np.int8), instrument, note)


def load_prices(path, column: str = "price", delimiter: str = ",", min_prices: int = 2,
                instrument: str | None = None) -> ReturnSeries:
    """Read a header-led CSV of chronological prices and convert to simple returns.

    Line numbers in errors count the header as line 1.
    """
    path = Path(path)
    prices: list[float] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise PriceFileError(f"{path}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        if column not in header:
            raise PriceFileError(f"{path}:1: no column {column!r} in header {header}")
        col = header.index(column)
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                raise PriceFileError(f"{path}:{line_no}: blank row")
            if col >= len(row) or not row[col].strip():
                raise PriceFileError(f"{path}:{line_no}: missing price")
            raw = row[col].strip()
            try:
                value = float(raw)
            except ValueError:
                raise PriceFileError(f"{path}:{line_no}: cannot parse price {raw!r}") from None
            if not math.isfinite(value) or value <= 0:
                raise PriceFileError(f"{path}:{line_no}: price must be positive, got {raw!r}")
            prices.append(value)
    if len(prices) < max(min_prices, 2):
        raise InsufficientDataError(
            f"{path}: {len(prices)} prices, need at least {max(min_prices, 2)}"
        )
    return ReturnSeries.from_prices(
        prices, instrument=instrument or path.stem, note=f"simple returns of column {column!r}"
    )
