"""Exception types shared across the package."""


class QltError(Exception):
    """Base class for all package errors."""


class ContractError(QltError):
    """Inputs that are individually valid but mutually inconsistent
    (e.g. moments computed at a different input power than the plan's)."""


class FeasibilityError(QltError):
    """A requested power-fraction vector lies outside the linear feasible set.

    Carries the first violated band index, its feasibility floor and the
    offending value.
    """

    def __init__(self, band: int, floor: float, value: float):
        self.band = band
        self.floor = floor
        self.value = value
        super().__init__(
            f"band {band}: share {value:.6g} below feasibility floor {floor:.6g}"
        )


class InfiniteRateError(QltError):
    """Signals a noiseless identity chain whose rate formula diverges."""


class NumericalFailureError(QltError):
    """An expectation or internal cross-check produced a non-finite or
    inconsistent result."""


class UnboundedConstellationError(QltError):
    """The identity quantizer has no finite output constellation."""


class InfeasibleEnergyError(QltError):
    """Target energy lies outside the constellation's achievable range."""


class BoundaryEnergyError(QltError):
    """Target energy sits exactly on the achievable boundary where the
    tilt diverges."""


class ConfigError(QltError):
    """Malformed or schema-violating experiment configuration."""
