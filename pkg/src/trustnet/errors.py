"""Exception hierarchy shared by every module."""


class TrustnetError(Exception):
    """Base class for all package errors."""


class ConfigError(TrustnetError, ValueError):
    """Invalid counts, probabilities, intervals or spec-file content."""


class TopologyError(TrustnetError):
    """A graph violates a structural requirement (index, connectivity, empty neighborhood)."""


class ProtocolError(TrustnetError):
    """Inputs supplied out of order or incomplete (ledger times, traces, neighborhoods)."""


class ModelViolation(TrustnetError):
    """Model preconditions fail, e.g. the nominal matrix has no rank-one limit."""


class InvariantError(TrustnetError):
    """An internal invariant broke during simulation (row sums, value bounds)."""
