"""Exceptions for the soft Dice volumetric bias laboratory."""


class DiceBiasError(Exception):
    """Generic dicebias exception."""


class DiceBiasDomainError(DiceBiasError, ValueError):
    """A parameter lies outside its mathematical domain."""


class DiceBiasContractError(DiceBiasError, ValueError):
    """A call-site contract is violated.

    Raised on length mismatches, an exceeded enumeration cap, a model that
    does not have the grouped layout an estimator needs, or an undefined
    soft Dice gradient.
    """


class DiceBiasNumericalError(DiceBiasError):
    """Training produced a non-finite loss or gradient."""
