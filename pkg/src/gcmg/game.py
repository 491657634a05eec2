"""Grand canonical minority / majority game.

Agents hold strategy tables and utilities.  Every step each agent plays its
highest-utility strategy (random tie break), the aggregate demand is formed,
and *all* strategies are rescored, with optional exponential discounting.

Two driving modes exist.  In exogenous mode an external sign series feeds the
history and is the outcome every strategy is scored against; in endogenous
mode the game's own winning decision is appended to the history.

State is held as dense arrays (``tables`` of shape ``(N, S', P)`` and
``utilities`` of shape ``(N, S')``) so a step is a handful of numpy calls.
When the grand canonical zero strategy is enabled it occupies the last slot.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .strategy_space import (
    DEFAULT_FSS_MAX_M,
    Strategy,
    draw_tables,
    fss_tables,
    rss_tables,
    shift_history,
)

GAME_STREAM = 0x6D67  # separates the game rng stream from a source sharing its seed


class ConfigError(ValueError):
    pass


class GameKind(enum.Enum):
    MINORITY = "minority"
    MAJORITY = "majority"


class PayoffKind(enum.Enum):
    STEP = "step"
    PROPORTIONAL = "prop"
    SCALED = "scaled"

    def g(self, x, N: int):
        if self is PayoffKind.STEP:
            return np.sign(x)
        if self is PayoffKind.PROPORTIONAL:
            return x
        return x / N


class SpaceMode(enum.Enum):
    DRAW = "draw"
    RSS = "rss"
    FSS = "fss"


@dataclass(frozen=True)
class GameConfig:
    N: int = 1
    S: int = 2
    m: int = 3
    lam: float = 1.0
    payoff: PayoffKind = PayoffKind.STEP
    kind: GameKind = GameKind.MINORITY
    grand_canonical: bool = False
    space: SpaceMode = SpaceMode.DRAW
    seed: int = 0
    fss_max_m: int = DEFAULT_FSS_MAX_M

    def __post_init__(self):
        # accept plain strings for the enum fields
        for name, enum_cls in (("payoff", PayoffKind), ("kind", GameKind), ("space", SpaceMode)):
            value = getattr(self, name)
            if not isinstance(value, enum_cls):
                try:
                    object.__setattr__(self, name, enum_cls(value))
                except ValueError:
                    raise ConfigError(f"{name}: unknown value {value!r}") from None
        self.validate()

    def validate(self):
        if self.N < 1:
            raise ConfigError(f"N must be >= 1, got {self.N}")
        if self.m < 1:
            raise ConfigError(f"m must be >= 1, got {self.m}")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"lam must lie in [0, 1], got {self.lam}")
        if self.space is SpaceMode.DRAW:
            if self.S < 1:
                raise ConfigError(f"S must be >= 1, got {self.S}")
            if self.m <= 4 and self.S > 1 << (1 << self.m):
                raise ConfigError(f"S={self.S} exceeds the {1 << (1 << self.m)} strategies for m={self.m}")
        elif self.N != 1:
            raise ConfigError(f"N must be 1 when space={self.space.value}, got {self.N}")
        if self.space is SpaceMode.FSS and self.m > self.fss_max_m:
            raise ConfigError(f"m={self.m} exceeds the full-space limit m <= {self.fss_max_m}")

    @property
    def strategies_per_agent(self) -> int:
        """S as actually used (derived from the space size for RSS/FSS)."""
        if self.space is SpaceMode.RSS:
            return 2 << self.m
        if self.space is SpaceMode.FSS:
            return 1 << (1 << self.m)
        return self.S

    @property
    def sign(self) -> int:
        return 1 if self.kind is GameKind.MAJORITY else -1


@dataclass
class Agent:
    """View onto one agent's slice of the game arrays."""

    tables: np.ndarray
    utilities: np.ndarray
    has_zero: bool = False

    @property
    def strategies(self) -> list[Strategy]:
        out = [Strategy.from_array(row) for row in self.tables[: len(self.tables) - self.has_zero]]
        if self.has_zero:
            out.append(Strategy.zero(self.tables.shape[1].bit_length() - 1))
        return out


@dataclass
class GameState:
    cfg: GameConfig
    tables: np.ndarray
    utilities: np.ndarray
    history: int
    rng: np.random.Generator
    t: int = 0
    last_A: float = 0.0
    last_actions: np.ndarray | None = field(default=None, repr=False)
    last_choice: np.ndarray | None = field(default=None, repr=False)

    @property
    def agents(self) -> list[Agent]:
        return [
            Agent(self.tables[n], self.utilities[n], self.cfg.grand_canonical)
            for n in range(self.cfg.N)
        ]

    @property
    def zero_index(self) -> int | None:
        return self.tables.shape[1] - 1 if self.cfg.grand_canonical else None


def build_tables(cfg: GameConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg.space is SpaceMode.RSS:
        return rss_tables(cfg.m)[None]
    if cfg.space is SpaceMode.FSS:
        return fss_tables(cfg.m, cfg.fss_max_m)[None]
    return np.stack([draw_tables(cfg.m, cfg.S, rng) for _ in range(cfg.N)])


def init_game(cfg: GameConfig, tables: np.ndarray | None = None,
              history: int | None = None) -> GameState:
    """Build agents and a fresh state.

    ``tables`` overrides the strategy assignment (shape ``(N, S, 2**m)``);
    ``history`` overrides the random initial history index.
    """
    cfg.validate()
    rng = np.random.default_rng([cfg.seed, GAME_STREAM])
    if tables is None:
        tables = build_tables(cfg, rng)
    tables = np.asarray(tables, dtype=np.int8)
    if tables.ndim != 3 or tables.shape[0] != cfg.N or tables.shape[2] != 1 << cfg.m:
        raise ConfigError(f"tables must have shape (N={cfg.N}, S, {1 << cfg.m}), got {tables.shape}")
    if cfg.grand_canonical:
        zero = np.zeros((cfg.N, 1, tables.shape[2]), dtype=np.int8)
        tables = np.concatenate([tables, zero], axis=1)
    if history is None:
        signs = 2 * rng.integers(0, 2, size=cfg.m) - 1
        history = 0
        for s in signs[::-1]:
            history = shift_history(history, int(s), cfg.m)
    return GameState(
        cfg=cfg,
        tables=np.ascontiguousarray(tables),
        utilities=np.zeros(tables.shape[:2]),
        history=int(history),
        rng=rng,
    )


def choose_strategy(utilities, rng: np.random.Generator) -> np.ndarray | int:
    """Index of the max-utility strategy, ties broken uniformly at random.

    Works on one agent's vector or on an ``(N, S)`` matrix (one index per row).
    """
    U = np.asarray(utilities, dtype=float)
    single = U.ndim == 1
    U = np.atleast_2d(U)
    keys = rng.random(U.shape)
    best = U == U.max(axis=1, keepdims=True)
    choice = np.argmax(np.where(best, keys, -1.0), axis=1)
    return int(choice[0]) if single else choice


def aggregate_demand(actions) -> int:
    return int(np.sum(actions))


def fair_sign(rng: np.random.Generator) -> int:
    return 1 if rng.random() < 0.5 else -1


def sign_or_coin(x, rng: np.random.Generator) -> int:
    if x > 0:
        return 1
    if x < 0:
        return -1
    return fair_sign(rng)


def minority_action(A, rng: np.random.Generator) -> int:
    return -sign_or_coin(A, rng)


def payoff(action, A, cfg: GameConfig):
    """Payoff of ``action`` given demand ``A``: -a*g(A) (minority) or +a*g(A) (majority)."""
    return cfg.sign * np.asarray(action) * cfg.payoff.g(A, cfg.N)


def update_utilities(state: GameState, outcome, cfg: GameConfig | None = None,
                     actions: np.ndarray | None = None):
    """U <- lam*U + payoff for every strategy, evaluated on the current history."""
    cfg = cfg or state.cfg
    if actions is None:
        actions = state.tables[:, :, state.history]
    phi = payoff(actions, outcome, cfg)
    if cfg.lam == 1.0:
        state.utilities += phi
    else:
        state.utilities *= cfg.lam
        state.utilities += phi


def _play(state: GameState):
    actions = state.tables[:, :, state.history]
    choice = choose_strategy(state.utilities, state.rng)
    played = actions[np.arange(actions.shape[0]), choice]
    A = int(played.sum(dtype=np.int64))
    state.last_actions = played
    state.last_choice = choice
    state.last_A = A
    return actions, A


def forecast(A, cfg: GameConfig, rng: np.random.Generator) -> int:
    """The game's call for the next sign: sgn(A) for majority, -sgn(A) for minority."""
    return cfg.sign * sign_or_coin(A, rng)


def step_exogenous(state: GameState, next_true_sign: int) -> int:
    """Forecast the next sign, then score every strategy against the realized one."""
    if state is None or state.tables is None:
        raise RuntimeError("game state is not initialized")
    cfg = state.cfg
    actions, A = _play(state)
    predicted = forecast(A, cfg, state.rng)
    # the realized sign stands in for A, scaled to the demand range
    outcome = next_true_sign if cfg.payoff is PayoffKind.STEP else cfg.N * next_true_sign
    update_utilities(state, outcome, cfg, actions)
    state.history = shift_history(state.history, next_true_sign, cfg.m)
    state.t += 1
    return predicted


def step_endogenous(state: GameState) -> tuple[int, int]:
    """Play one self-fed round; returns ``(A, winning decision)``."""
    cfg = state.cfg
    actions, A = _play(state)
    decision = forecast(A, cfg, state.rng)
    update_utilities(state, A, cfg, actions)
    state.history = shift_history(state.history, decision, cfg.m)
    state.t += 1
    return A, decision
