"""Exception taxonomy shared by all hetq modules."""


class HetqError(Exception):
    """Base class for all hetq errors."""


class ParamError(HetqError, ValueError):
    """Invalid system parameter; ``field`` names the offender."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class NonPositiveRate(ParamError):
    pass


class ProbabilityOutOfRange(ParamError):
    pass


class ZeroK(ParamError):
    pass


class Unstable(HetqError):
    """A queueing system referenced by the computation has no steady state.

    ``system`` identifies which one when several are involved (e.g. the
    "lower"/"upper" sandwich systems).
    """

    def __init__(self, message: str, system: str | None = None):
        self.system = system
        super().__init__(message)


class Infeasible(HetqError):
    """Requested operating point violates the feasibility inequality."""


class TargetUnreachable(HetqError):
    """Target blocking probability below the policy's floor at p=1.

    ``p_block_floor`` reports that floor so callers can raise K.
    """

    def __init__(self, target: float, p_block_floor: float):
        self.target = target
        self.p_block_floor = p_block_floor
        super().__init__(
            f"target p_block {target:.6g} below reachable floor "
            f"{p_block_floor:.6g} (raise k)"
        )


class DivergenceDetected(HetqError):
    """Simulated tolerant queue exceeded its divergence cap."""

    def __init__(self, message: str, replication: int | None = None):
        self.replication = replication
        super().__init__(message)


class TruncationInsufficient(HetqError):
    """Tolerant-count truncation left too much tail mass after auto-growth."""

    def __init__(self, tail_mass: float, t_cap: int):
        self.tail_mass = tail_mass
        self.t_cap = t_cap
        super().__init__(
            f"tail mass {tail_mass:.3e} above tolerance at t_cap={t_cap}"
        )


class DegenerateRecursion(HetqError):
    """A backward-recursion denominator collapsed to (near) zero."""
