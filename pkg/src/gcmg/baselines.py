"""FIR Wiener linear predictor used as a baseline for the game predictor."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import fair_sign


class DegenerateInputError(ValueError):
    pass


@dataclass(frozen=True)
class WienerFilter:
    order: int
    weights: np.ndarray | None = None
    mean: float = 0.0

    @property
    def fitted(self) -> bool:
        return self.weights is not None

    def predict(self, recent) -> float:
        if not self.fitted:
            raise RuntimeError("Wiener filter is not fitted")
        recent = np.asarray(recent, dtype=float)
        if recent.shape != (self.order,):
            raise ValueError(f"expected {self.order} recent values, got shape {recent.shape}")
        return self.mean + float(self.weights @ (recent - self.mean))


def autocovariance(x, max_lag: int) -> np.ndarray:
    """Biased estimates (divide by len(x)) at lags 0..max_lag."""
    x = np.asarray(x, dtype=float)
    x = x - x.mean()
    n = len(x)
    return np.array([x[: n - k] @ x[k:] / n for k in range(max_lag + 1)])


def fit_wiener(series, order: int) -> WienerFilter:
    """Solve the Toeplitz normal equations R w = r for a one-step predictor."""
    series = np.asarray(series, dtype=float)
    if order < 1:
        raise ValueError("order must be >= 1")
    if len(series) < 10 * order:
        raise ValueError(f"need at least {10 * order} samples for order {order}, got {len(series)}")
    gamma = autocovariance(series, order)
    if gamma[0] <= np.finfo(float).tiny:
        raise DegenerateInputError("series has zero variance")
    idx = np.arange(order)
    R = gamma[np.abs(idx[:, None] - idx[None, :])]
    try:
        # LU with partial pivoting
        w = np.linalg.solve(R, gamma[1:])
    except np.linalg.LinAlgError as exc:
        raise DegenerateInputError(f"singular autocovariance matrix: {exc}") from exc
    if np.linalg.cond(R) > 1e12:
        raise DegenerateInputError("autocovariance matrix is numerically singular")
    return WienerFilter(order, w, float(series.mean()))


def predict_sign_wiener(f: WienerFilter, recent, rng: np.random.Generator) -> int:
    """Sign of the one-step prediction; ``recent`` is most-recent-first."""
    value = f.predict(recent)
    if value > 0:
        return 1
    if value < 0:
        return -1
    return fair_sign(rng)


def wiener_sign_predictions(f: WienerFilter, series, start: int, rng: np.random.Generator) -> np.ndarray:
    """Predicted signs for ``series[start:]`` using the preceding ``order`` samples."""
    series = np.asarray(series, dtype=float)
    if start < f.order:
        raise ValueError(f"start must be >= order ({f.order})")
    n = len(series) - start
    # lagged[k, i] = series[start + k - 1 - i]
    lagged = np.stack([series[start - 1 - i: start - 1 - i + n] for i in range(f.order)], axis=1)
    values = f.mean + (lagged - f.mean) @ f.weights
    out = np.sign(values).astype(np.int8)
    ties = out == 0
    if ties.any():
        out[ties] = np.where(rng.random(int(ties.sum())) < 0.5, 1, -1)
    return out


def wiener_psi(series, order: int, rng: np.random.Generator, train_fraction: float = 0.5) -> tuple[float, WienerFilter]:
    """Fit on the first part of ``series`` and score sign hits on the rest.

    Steps whose realized value is exactly zero are not scored.
    """
    series = np.asarray(series, dtype=float)
    split = int(len(series) * train_fraction)
    f = fit_wiener(series[:split], order)
    predicted = wiener_sign_predictions(f, series, max(split, order), rng)
    realized = np.sign(series[max(split, order):])
    keep = realized != 0
    if not keep.any():
        return float("nan"), f
    return float(np.mean(predicted[keep] == realized[keep])), f
