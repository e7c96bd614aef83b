"""Exceptions raised by the heavytail_async package."""

from typing import Optional


class HeavyTailError(Exception):
    """Base class for every error raised by the simulator."""


class ConfigError(HeavyTailError, ValueError):
    """An experiment description violates one of its constraints."""


class PolicyViolationError(HeavyTailError, ValueError):
    """The aggregation policy received updates it cannot consume."""


class StalenessOverflowError(HeavyTailError, LookupError):
    """An update references a global round already evicted from the history ring."""

    def __init__(self, round_idx: int, oldest: Optional[int] = None):
        self.round = round_idx
        self.oldest = oldest
        msg = f"round {round_idx} is no longer in the model history"
        if oldest is not None:
            msg += f" (oldest kept round: {oldest})"
        super().__init__(msg)

    def __reduce__(self):
        return self.__class__, (self.round, self.oldest)


class DivergenceError(HeavyTailError, ArithmeticError):
    """A model or model delta stopped being finite."""


class NonFiniteGradientError(DivergenceError):
    """A client drew a non-finite stochastic gradient."""

    def __init__(self, client_id: int, k: int):
        self.client_id = client_id
        self.k = k
        super().__init__(f"non-finite gradient on client {client_id} at local step {k}")

    def __reduce__(self):
        return self.__class__, (self.client_id, self.k)
