"""Exception types shared across the package.

The CLI maps ConfigurationError to exit code 2 and NumericalError to exit
code 3, so library code should raise these (not bare ValueError/RuntimeError)
for conditions a user can hit through the config file or through
ill-conditioned data.
"""


class ConfigurationError(ValueError):
    """Invalid configuration value, unknown key, or inconsistent request."""


class NumericalError(RuntimeError):
    """A solver or factorization failed to converge or produced non-finite
    values. The message should name the stage and the offending quantity."""
