"""Exception and warning types shared across the package."""


class SeqHmmError(Exception):
    """Base class for all package-specific errors."""


class CorpusError(SeqHmmError):
    """Base class for corpus parsing failures."""


class MissingPartner(CorpusError):
    """A record id has a sequence without a structure string, or vice versa."""


class LengthMismatch(CorpusError):
    """Sequence and structure strings of one record differ in length."""


class IllegalSymbol(CorpusError):
    """A string contains a character outside its alphabet."""


class SymbolNotInAlphabet(IllegalSymbol):
    """Lookup of a single symbol failed against an alphabet."""


class InvalidFoldCount(SeqHmmError):
    """Requested cross-validation folds cannot partition the corpus."""


class EmptyTrainingSet(SeqHmmError):
    """A model fit was requested over zero labeled pairs."""


class ShapeMismatch(SeqHmmError):
    """A vector fed to a network does not match the layer it targets."""


class ZeroProbabilityObservation(SeqHmmError):
    """Forward mass vanished at some position; posteriors are undefined.

    Carries the first offending position index in ``position``.
    """

    def __init__(self, position: int):
        self.position = position
        super().__init__(f"observation layer has zero probability at t={position}")


class ZeroSequenceProbability(SeqHmmError):
    """A sequence has probability zero under a profile, so posterior
    expected counts are undefined."""


class AllPathsZero(SeqHmmError):
    """Every hidden path assigns probability zero to the observations."""


class InstanceTooLarge(SeqHmmError):
    """Exhaustive path enumeration was refused (state count ** length too big)."""


class CorpusWarning(UserWarning):
    """A record was skipped during lenient parsing."""


class DegenerateModelWarning(UserWarning):
    """A state received no expected mass during re-estimation; row reset to uniform."""


class DegenerateColumnWarning(UserWarning):
    """A profile column received no expected mass; its rows were reset to uniform."""
