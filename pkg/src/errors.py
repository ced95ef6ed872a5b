"""Typed failures raised by the hyperbolicity toolkit"""


class HyperbolicityError(Exception):
    """Base class for every fatal condition reported by the toolkit"""


class NotAGerm(HyperbolicityError):
    def __init__(self, offset: float):
        self.offset = offset
        super().__init__(f"Map does not fix the origin (nearest fixed point at distance {offset:.3e})")


class DomainExit(HyperbolicityError):
    def __init__(self, at: int):
        self.at = at
        super().__init__(f"Orbit left the domain of the germ at index {at}")


class ConeEscape(HyperbolicityError):
    def __init__(self, at: int):
        self.at = at
        super().__init__(f"Iterated subspace left its cone at index {at}")


class ConeInvarianceFail(HyperbolicityError):
    def __init__(self, step: int):
        self.step = step
        super().__init__(f"Cones are not carried into each other at step {step}")


class RateOverflow(HyperbolicityError):
    def __init__(self, at: int, eps_f: float, bound: float):
        self.at = at
        self.eps_f = eps_f
        self.bound = bound
        super().__init__(
            f"Nonlinear error {eps_f:.3e} exceeds expansion budget {bound:.3e} at index {at}"
        )


class SeedTooLarge(HyperbolicityError):
    def __init__(self, condition: str, at=None):
        self.condition = condition
        self.at = at
        where = '' if at is None else f" at index {at}"
        super().__init__(f"Parameter seeds violate '{condition}'{where}")


class OutOfDomain(HyperbolicityError):
    def __init__(self, norm: float, radius: float):
        self.norm = norm
        self.radius = radius
        super().__init__(f"Point of norm {norm:.6g} outside ball of radius {radius:.6g}")


class NewtonFail(HyperbolicityError):
    def __init__(self, node: int, residual: float):
        self.node = node
        self.residual = residual
        super().__init__(f"Implicit solve stalled at node {node} (residual {residual:.3e})")


class ClassEscape(HyperbolicityError):
    def __init__(self, at, failed):
        self.at = at
        self.failed = list(failed)
        super().__init__(f"Transformed manifold at index {at} violates {', '.join(self.failed)}")


class NoConvergence(HyperbolicityError):
    def __init__(self, k_max: int, last_distance: float):
        self.k_max = k_max
        self.last_distance = last_distance
        super().__init__(
            f"Backward window reached {k_max} without convergence (last distance {last_distance:.3e})"
        )


class ContractionFail(HyperbolicityError):
    def __init__(self, iterations: int, distance: float):
        self.iterations = iterations
        self.distance = distance
        super().__init__(
            f"Graph iteration not contracting after {iterations} steps (distance {distance:.3e})"
        )


class IntersectionFail(HyperbolicityError):
    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(f"Newton on the invariant graphs diverged (residual {residual:.3e})")


class OrbitMismatch(HyperbolicityError):
    def __init__(self, at: int, error: float):
        self.at = at
        self.error = error
        super().__init__(f"Orbit point {at + 1} is not the image of point {at} (error {error:.3e})")


class UnknownBuiltin(HyperbolicityError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"Unknown builtin system '{name}'")


class PreconditionViolated(HyperbolicityError):
    pass
