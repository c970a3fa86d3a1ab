"""Exception types shared across the toolkit."""


class DomainError(ValueError):
    """Input lies outside the mathematical domain of an operation."""


class InfeasibleResonanceError(DomainError):
    """No rotating torus with the requested rotation direction exists at this energy."""


class ConfigError(ValueError):
    """A scenario configuration file is malformed or inconsistent."""
