"""Failure signals shared across the certification modules."""

from __future__ import annotations


class NumericSignal(RuntimeError):
    """A computation could not certify its result numerically.

    Raised instead of returning a value whenever a grid protocol detects
    divergence or a bracketing search walks out of its admissible range.
    The CLI maps this to its own exit code so scripted callers can tell
    "the certificate failed" apart from "the computation blew up".
    """


class UnboundedConstant(NumericSignal):
    """A sampled supremum kept growing across every refinement round."""

    def __init__(self, what: str, history):
        self.what = what
        self.history = [float(s) for s in history]
        pretty = ", ".join(f"{s:.6g}" for s in self.history)
        super().__init__(
            f"{what}: supremum grew across all refinement rounds ({pretty}); "
            "treating as unbounded"
        )


class BracketError(NumericSignal):
    """A doubling/halving bracket search left the range 2**-64 .. 2**64."""
