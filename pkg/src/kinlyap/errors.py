"""Exception types raised across the package."""


class KinlyapError(Exception):
    """Base class for all kinlyap errors."""


class DimensionMismatch(KinlyapError):
    pass


class ZeroVelocityRow(KinlyapError):
    """A discrete velocity is the zero vector (static particles are excluded)."""

    def __init__(self, row: int):
        self.row = row
        super().__init__(f"velocity row {row} is entirely zero")


class SteadyStateViolation(KinlyapError):
    pass


class NotSymmetric(KinlyapError):
    pass


class PositiveEigenvalue(KinlyapError):
    pass


class DegenerateRank(KinlyapError):
    pass


class NonPositiveDamping(KinlyapError):
    pass


class RankZero(KinlyapError):
    pass


class CflViolation(KinlyapError):
    def __init__(self, dt: float, dt_cfl: float):
        self.dt = dt
        self.dt_cfl = dt_cfl
        super().__init__(f"dt={dt!r} exceeds the CFL bound dt_cfl={dt_cfl!r}")


class UncertifiedTimeStep(KinlyapError):
    """dt is CFL-admissible but exceeds the certified source bound."""

    def __init__(self, dt: float, dt_source: float):
        self.dt = dt
        self.dt_source = dt_source
        super().__init__(
            f"dt={dt!r} exceeds the certified source bound dt_source={dt_source!r}"
            " (pass force=True / --force to run anyway)"
        )


class SingularMatrix(KinlyapError):
    pass


class NotCoplanar(KinlyapError):
    pass


class NonFiniteSample(KinlyapError):
    pass


class InsufficientData(KinlyapError):
    pass


class NonPositiveNorm(KinlyapError):
    pass


class ConfigError(KinlyapError):
    pass
