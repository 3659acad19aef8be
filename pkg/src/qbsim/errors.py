"""Exception types shared by the simulation modules."""


class QBSimError(Exception):
    pass


class ValidationError(QBSimError, ValueError):
    """Inputs violate a documented precondition."""


class SizeError(QBSimError):
    """Requested Hilbert or Liouville dimension exceeds the dense budget."""


class IntegrationError(QBSimError):
    """Adaptive integrator could not reach the requested time."""

    def __init__(self, message, t_reached=None):
        super().__init__(message)
        self.t_reached = t_reached


class PositivityError(IntegrationError):
    """State left the positive cone beyond the monitoring threshold."""


class SingularError(QBSimError, ZeroDivisionError):
    pass
