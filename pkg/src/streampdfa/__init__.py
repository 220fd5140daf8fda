"""streampdfa: probabilistic DFA learning from sequence streams.

Per-state count-min sketches summarize the futures observed after each
state; a red-blue merge loop folds states whose future distributions pass a
Hoeffding consistency test, scored by cosine similarity. An exact-count
Alergia baseline and a perplexity evaluation harness ride along.
"""

from .alergia import AlergiaHeuristic, alergia_check, alergia_score
from .bench import (
    RunConfig,
    Scenario,
    default_configs,
    discover_scenarios,
    learn,
    parse_config,
    run_bench,
    write_csv,
)
from .automaton import (
    Edge,
    Pdfa,
    SmoothingPolicy,
    State,
    StateColor,
    export_dot,
    final_prob,
    freeze,
    probability,
    symbol_prob,
)
from .cms import CmsConfig, CountMinSketch, SketchSet, record_futures
from .dataio import (
    AbbadingoStream,
    Dataset,
    SolutionFile,
    iter_abbadingo,
    read_abbadingo,
    read_solution,
    write_abbadingo,
)
from .errors import (
    InputDataError,
    InvariantViolation,
    ParseError,
    StreamPdfaError,
    UndefinedDistributionError,
    UsageError,
)
from .evaluation import PerplexityReport, evaluate_scenario, perplexity
from .merging import (
    Heuristic,
    MergeCandidate,
    MergeJournal,
    best_merge,
    build_apta,
    commit_merges,
    merge,
    merge_until_fixpoint,
    promote,
    undo,
)
from .model_io import load_model, model_from_bytes, model_to_bytes, save_model
from .sketch_heuristic import (
    SketchHeuristic,
    assign_score,
    consistency_check,
    hoeffding_bound,
    hoeffding_row_check,
)
from .streaming import StatsRecord, StreamParams, ingest, live_stats, run_stream
from .synthetic import make_scenario, random_target, sample_sequence, write_scenario_dir

__version__ = "0.1.0"
