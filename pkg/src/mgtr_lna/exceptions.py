"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, the numerical
failures (NotInTriodeError, ConvergenceError, SingularTermError,
SweepRangeError, NoFeasibleCancellationError) -> 3.
"""


class MgtrError(Exception):
    """Base class for all package errors."""


class ConfigError(MgtrError):
    """Invalid configuration document. Carries every problem found, not just the first."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class NotInTriodeError(MgtrError):
    """A control transistor left (or cannot reach) the triode region."""

    def __init__(self, branch, detail=""):
        self.branch = branch
        msg = f"CT for branch '{branch}' is not in triode"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class ConvergenceError(MgtrError):
    """A fixed-point / root solve failed to converge."""

    def __init__(self, branch, detail=""):
        self.branch = branch
        msg = f"bias solve did not converge for branch '{branch}'"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class SingularTermError(MgtrError):
    """A denominator in the distortion formulas vanished."""

    def __init__(self, term):
        self.term = term
        super().__init__(f"singular denominator in {term}")


class SweepRangeError(MgtrError):
    """A power sweep has too few usable points for intercept extraction."""


class NoFeasibleCancellationError(MgtrError):
    """No candidate in the search domain produced a solvable bias point."""
