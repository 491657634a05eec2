"""Grand canonical minority game used as a one-step sign predictor."""
from .baselines import WienerFilter, fit_wiener, predict_sign_wiener, wiener_psi
from .game import (
    ConfigError,
    GameConfig,
    GameKind,
    GameState,
    PayoffKind,
    SpaceMode,
    aggregate_demand,
    choose_strategy,
    init_game,
    minority_action,
    payoff,
    step_endogenous,
    step_exogenous,
    update_utilities,
)
from .predictor import PredictionRecord, RunResult, psi_max_oracle, psi_running, psi_windowed, run_prediction
from .sources import ARProcess, RegimeSwitchSource, ReturnSeries, ar_generate, ar_is_stable, load_prices
from .strategy_space import (
    History,
    Strategy,
    decode_history,
    draw_strategies,
    encode_history,
    generate_fss,
    generate_rss,
    strategy_action,
)

__version__ = "0.1.0"
