"""Exception hierarchy shared by all chainscope modules."""


class ChainscopeError(Exception):
    """Base class for every error raised by this package."""


class MalformedRow(ChainscopeError):
    def __init__(self, file: str, line: int, reason: str):
        super().__init__(f"{file}:{line}: {reason}")
        self.file = file
        self.line = line
        self.reason = reason


class DuplicateAccount(ChainscopeError):
    pass


class EmptyDataset(ChainscopeError):
    pass


class HttpError(ChainscopeError):
    def __init__(self, status: int, message: str = ""):
        super().__init__(f"HTTP {status} {message}".strip())
        self.status = status


class RateLimited(HttpError):
    pass


class MultipleCreators(ChainscopeError):
    pass


class NoSource(ChainscopeError):
    pass


class OrphanFinding(ChainscopeError):
    pass


class DuplicateName(ChainscopeError):
    pass


class UnknownSeverityLetter(ChainscopeError):
    pass


class EmptyCandidates(ChainscopeError):
    pass


class UnmappedVulnerability(ChainscopeError):
    def __init__(self, tool: str, raw_name: str):
        super().__init__(f"no vocabulary entry for {tool!r} finding {raw_name!r}")
        self.tool = tool
        self.raw_name = raw_name


class InactiveAccount(ChainscopeError):
    pass


class TooFewPoints(ChainscopeError):
    pass


class SingleCluster(ChainscopeError):
    pass


class NoMaliciousPoints(ChainscopeError):
    pass


class NoMaliciousMembers(NoMaliciousPoints):
    pass


class DimensionMismatch(ChainscopeError):
    pass


class ConfigError(ChainscopeError):
    """Invalid configuration; maps to CLI exit code 2."""


class StageError(ChainscopeError):
    """A pipeline stage failed; maps to CLI exit code 3."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
