"""Exception hierarchy shared by every divlab module."""


class DivlabError(Exception):
    """Base class; ``code`` is the CLI exit status for this error family."""

    code = 1


class ConfigError(DivlabError):
    code = 2


class BudgetExceeded(DivlabError):
    code = 3


class UnsupportedLevel(DivlabError):
    code = 2


class UnsupportedBase(DivlabError):
    code = 2


class ModelMismatch(DivlabError):
    pass


class InvalidWord(DivlabError):
    code = 2


class LevelMismatch(DivlabError):
    pass


class InvalidQuery(DivlabError):
    code = 2


class InvalidSphere(DivlabError):
    code = 2


class NotAvoidant(DivlabError):
    pass


class MalformedEndpoints(DivlabError):
    code = 2


class InsufficientData(DivlabError):
    code = 2


class VersionMismatch(DivlabError):
    code = 2


class ChecksumMismatch(DivlabError):
    code = 2


class NoGeodesicSpelling(DivlabError):
    pass
