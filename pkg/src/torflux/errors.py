"""Exception hierarchy shared by all torflux modules."""


class TorfluxError(Exception):
    """Base class for every error raised by the library."""


class DimensionError(TorfluxError, ValueError):
    """Operands live on tori of different dimension, or an axis is out of range."""


class BandwidthError(TorfluxError, ValueError):
    """A product would exceed the bandwidth cap and truncation was not requested."""


class AliasingError(TorfluxError):
    """A grid is too coarse for the requested band-limited representation."""


class NotClosedError(TorfluxError, ValueError):
    """A one-form that must be closed has a nonzero exterior derivative."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (|d theta| = {residual:.3e})")
        self.residual = residual


class NotPoissonError(TorfluxError, ValueError):
    """A bivector failed the Jacobi gate."""

    def __init__(self, residual, tol):
        super().__init__(f"tensor is not Poisson on the tested span: residual {residual:.3e} > {tol:.1e}")
        self.residual = residual


class DegenerateFormError(TorfluxError, ValueError):
    """A symplectic matrix is singular, not antisymmetric, or in odd dimension."""


class LagrangianGateError(TorfluxError, ValueError):
    """A lift fails the symplectomorphism (lagrangian bisection) gate."""

    def __init__(self, residual, tol):
        super().__init__(f"lift is not symplectic: residual {residual:.3e} > {tol:.1e}")
        self.residual = residual


class QuadratureError(TorfluxError):
    """Step halving disagreed by more than the requested tolerance."""


class EndpointMismatchError(TorfluxError, ValueError):
    """Two isotopies cannot be concatenated because their endpoints differ."""
