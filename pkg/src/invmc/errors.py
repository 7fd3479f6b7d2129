"""Exception types shared across the package."""


class InventoryControlError(Exception):
    """Base class for all invmc errors."""


class EmptyFeasibleSet(InventoryControlError):
    """No admissible control exists at the queried state (inconsistent problem)."""


class InadmissibleControl(InventoryControlError):
    """A control drives the inventory outside its bounds beyond tolerance."""


class DimensionMismatch(InventoryControlError):
    """Array arguments do not match the declared problem dimensions."""


class UnsupportedMoment(InventoryControlError):
    """The process variant has no closed form for the requested moment."""


class NonFiniteInput(InventoryControlError):
    """NaN or infinity encountered where finite values are required."""


class ClosureViolation(InventoryControlError):
    """Transition leaves the finite node set of the exact DP oracle."""


class ProblemMismatch(InventoryControlError):
    """Policy was fitted on a different problem than the one supplied."""


class UnknownBenchmark(InventoryControlError):
    """Benchmark name not in the shipped catalogue."""


class ConfigError(InventoryControlError):
    """Experiment configuration failed schema validation."""
