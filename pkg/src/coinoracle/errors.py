"""Exception types shared across the package."""


class CoinOracleError(Exception):
    """Base class for all package errors."""


class BudgetRefused(CoinOracleError):
    """An operation's up-front toss demand exceeds the configured cap."""

    def __init__(self, demanded: int, budget: int):
        self.demanded = demanded
        self.budget = budget
        super().__init__(f"toss demand {demanded} exceeds budget {budget}")


class BudgetExhausted(CoinOracleError):
    """A bit extraction ran out of tosses before the run condition passed."""

    def __init__(self, index: int, tosses: int, budget: int):
        self.index = index
        self.tosses = tosses
        self.budget = budget
        super().__init__(
            f"bit {index} undetermined after {tosses} tosses (budget {budget})"
        )


class MeasureZeroCap(CoinOracleError):
    """A bit-race flip tied on every compared bit up to the cap."""

    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"bit race tied on {cap} consecutive bits")


class OracleUnavailable(CoinOracleError):
    """The coin-backed oracle could not determine membership of ``n``."""

    def __init__(self, n: int, reason: str = ""):
        self.n = n
        super().__init__(f"oracle cannot answer n={n}" + (f": {reason}" if reason else ""))


class DyadicEncodingError(CoinOracleError):
    """A provably dyadic bias was attached to a coin oracle."""


class MachineSyntaxError(CoinOracleError):
    def __init__(self, lineno: int, message: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


class MachineSemanticError(CoinOracleError):
    pass


class MalformedQuery(CoinOracleError):
    """The tape did not hold a valid pair of query markers."""


class ScenarioError(CoinOracleError):
    pass
