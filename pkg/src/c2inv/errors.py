"""Exception types; the CLI maps each to its own exit code."""


class C2Error(Exception):
    exit_code = 1


class PreconditionError(C2Error, ValueError):
    """Input violates an operation's stated precondition."""

    exit_code = 2


class OracleRangeError(C2Error):
    """A brute-force computation would exceed its configured ceiling."""

    exit_code = 3


class VerificationError(C2Error):
    """An internal consistency check failed (e.g. p^2 does not divide [Psi]_p)."""

    exit_code = 4


class CheckpointError(C2Error):
    """Unreadable, corrupt or mismatched checkpoint file."""

    exit_code = 2
