"""Exception types shared across the package."""


class DomainError(ValueError):
    """Evaluation or restriction outside a function's domain."""


class SharedDiscontinuityError(ValueError):
    """An atom of the integrator sits on a jump of the integrand."""

    def __init__(self, location, message=None):
        self.location = float(location)
        super().__init__(message or f"integrator atom coincides with an integrand jump at {self.location:g}")


class UndefinedPointError(ValueError):
    """A function defined only almost everywhere was evaluated on its exceptional set."""

    def __init__(self, location, message=None):
        self.location = float(location)
        super().__init__(message or f"value undefined at {self.location:g} (a.e. class)")


class SolverConfigError(ValueError):
    pass


class PicardError(RuntimeError):
    """Fixed-point iteration failed to converge within a step."""

    def __init__(self, step, time, residual):
        self.step, self.time, self.residual = step, time, residual
        super().__init__(f"Picard iteration did not converge at step {step} (t={time:g}), residual {residual:.3e}")


class StepRejection(RuntimeError):
    """An integrator atom crossed the truncation boundary inside a step."""
