"""Exception types shared across the package."""


class KerrSHGError(Exception):
    pass


class DomainError(KerrSHGError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class UnstableSystem(KerrSHGError):
    """The fixed point is not asymptotically stable, so the linearized
    noise spectrum does not exist (the request is above the Hopf point)."""


class SingularMatrix(KerrSHGError):
    pass


class ConfigTooCoarse(KerrSHGError, ValueError):
    """Monte Carlo settings cannot resolve the dynamics of the system."""
