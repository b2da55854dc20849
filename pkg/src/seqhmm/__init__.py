"""Paired sequence/structure modeling: discrete HMMs, profile HMMs, and
window-based feed-forward networks, with a cross-validation harness."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    AllPathsZero,
    CorpusError,
    CorpusWarning,
    DegenerateColumnWarning,
    DegenerateModelWarning,
    EmptyTrainingSet,
    IllegalSymbol,
    InstanceTooLarge,
    InvalidFoldCount,
    LengthMismatch,
    MissingPartner,
    SeqHmmError,
    SymbolNotInAlphabet,
    ZeroProbabilityObservation,
    ZeroSequenceProbability,
)
from .dataset import (  # noqa: F401
    Alphabet,
    Corpus,
    FoldSpec,
    LabeledPair,
    RESIDUE_ALPHABET,
    STRUCTURE_ALPHABET,
    load_bundled_corpus,
    make_folds,
    parse_corpus,
)
from .hmm import (  # noqa: F401
    DiscreteHmm,
    EmReport,
    PosteriorTable,
    ViterbiResult,
    backward,
    baum_welch,
    brute_force_prob,
    decode_posterior,
    forward,
    init_model,
    posterior,
    sample,
    viterbi,
)
from .seqstruct import (  # noqa: F401
    CountingEstimate,
    EvalReport,
    ModelDirection,
    estimate_by_counting,
    evaluate_fold,
    predict_hidden,
    q3_score,
)
from .profile import (  # noqa: F401
    ProfileHmm,
    profile_backward,
    profile_baum_welch,
    profile_expected_counts,
    profile_forward,
)
from .ann import (  # noqa: F401
    FeedForwardNet,
    TrainConfig,
    WindowConfig,
    backprop_step,
    build_windows,
    net_forward,
    predict_ann,
    train_ann,
)
from .harness import (  # noqa: F401
    ComparisonReport,
    ExperimentConfig,
    emit_csv,
    emit_svg_comparison,
    run_experiment,
)
