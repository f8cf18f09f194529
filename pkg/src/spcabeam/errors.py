"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A configuration value violates its documented constraints."""


class AssignmentError(ValueError):
    """Subcarrier assignment is impossible for the given dimensions."""


class ShapeError(ValueError):
    """Array dimensions are inconsistent with the network dimensions."""


class StateError(ValueError):
    """An iterate state violates its invariants (e.g. nonpositive slope)."""


class MapError(KeyError):
    """A named variable handle is missing from a variable map."""


class ProgramError(ValueError):
    """A cone program is structurally invalid."""


class SolverError(RuntimeError):
    """The conic solver could not produce a usable result."""


class SubproblemError(RuntimeError):
    """A per-iteration subproblem solve failed inside the outer loop."""
