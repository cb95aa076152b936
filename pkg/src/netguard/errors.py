"""Exception types shared across the package."""


class NetguardError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(NetguardError):
    """A file or dataset does not match the expected feature schema."""


class VocabularyError(SchemaError):
    """A categorical value or class label is outside its vocabulary."""


class EmptyDatasetError(NetguardError):
    """An operation received a dataset with no records."""


class ContractError(NetguardError):
    """An operation was called with arguments violating its preconditions."""


class InfeasibleFitError(NetguardError):
    """A model fit cannot proceed (e.g. fewer samples than mixture components)."""
