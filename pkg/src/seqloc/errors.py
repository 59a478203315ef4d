"""Exception hierarchy shared by every module of the package."""


class SeqLocError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SeqLocError, ValueError):
    """Invalid geometry, counts, or parameter values."""


class SequenceDomainError(SeqLocError, ValueError):
    """Two sequences are not permutations of the same id set."""


class InsufficientOverlapError(SeqLocError):
    """Fewer than two APs in common between a scan and a reference."""


class UndefinedSimilarityError(SeqLocError, ArithmeticError):
    """Cosine similarity over a zero-magnitude vector."""


class MalformedLogError(SeqLocError, ValueError):
    """Out-of-order, negative-step, or schema-violating measurement input."""


class ScanSkipped(SeqLocError):
    """A Wifi scan carries too little information to be used."""
