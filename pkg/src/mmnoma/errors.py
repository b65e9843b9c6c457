class ConfigurationError(ValueError):
    """Invalid scenario or experiment configuration.

    ``problems`` holds one ``"field.path: message"`` string per defect.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class GeometryError(ValueError):
    """Degenerate blockage geometry (AP inside a body disk, etc.)."""


class ModelError(ValueError):
    """Inputs outside the physical model's domain."""


class ConstraintViolation(ValueError):
    """A resource allocation breaks a hard model constraint."""


class CapacityError(ConstraintViolation):
    """More users than the APs' NOMA groups can hold."""


class EnumerationLimitError(RuntimeError):
    def __init__(self, count, cap):
        self.count = count
        self.cap = cap
        super().__init__(f"enumeration would visit {count} states (cap {cap})")


class InfeasibleError(RuntimeError):
    """Convex subproblem constraint set is empty."""
