"""Cultural-market simulation with popularity bias.

Items carry an intrinsic quality in [0, 1].  Each selection is made, with
probability ``beta``, by rank-biased popularity (``P ~ rank ** -alpha``) and
otherwise in proportion to quality.  The package measures how ``alpha`` and
``beta`` shape the average quality of what gets consumed and how faithfully
popularity ranks reflect quality.
"""

__version__ = "0.1.0"

from .exceptions import (
    ConfigError,
    DegenerateQualityError,
    InvalidInputError,
    NoTraceError,
    PopMarketError,
    SweepError,
    UndefinedCorrelationError,
)
from .ranking import MAX_RANK, MIN_RANK, RankIndex, build, naive_ranks
from .metrics import (
    CellSummary,
    TraceSchedule,
    TraceSummary,
    average_quality,
    kendall_tau,
    summarize_runs,
    trace_schedule,
)
from .market import (
    Branch,
    MarketState,
    ModelParams,
    RealizationResult,
    SelectionRecord,
    init_market,
    run_realization,
    select_by_popularity,
    select_by_quality,
    step,
)
from .experiment import (
    GridResult,
    SweepConfig,
    TraceSpec,
    argmax_beta,
    derive_seed,
    run_cell,
    run_grid,
    run_realizations,
)
