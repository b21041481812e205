"""Exception hierarchy shared across the runtime."""

from __future__ import annotations


class CradleError(Exception):
    """Base class for every error raised by this package."""


# --- io ---------------------------------------------------------------------


class IOEnvError(CradleError):
    pass


class InvalidPrimitive(IOEnvError, ValueError):
    pass


class InvalidKey(InvalidPrimitive):
    pass


class DurationOutOfRange(InvalidPrimitive):
    pass


class CoordinateOutOfBounds(IOEnvError, ValueError):
    pass


class ReleaseNotHeld(IOEnvError):
    pass


class AlreadyHeld(IOEnvError):
    pass


class BackendFailure(IOEnvError):
    pass


# --- observation ------------------------------------------------------------


class ObservationError(CradleError):
    pass


class InvalidConfig(ObservationError, ValueError):
    pass


class SourceUnavailable(ObservationError):
    pass


class EmptyClip(ObservationError):
    pass


class RegionOutOfBounds(ObservationError, ValueError):
    pass


class InvalidTarget(ObservationError, ValueError):
    pass


# --- augmentation -----------------------------------------------------------


class AugmentationError(CradleError):
    pass


class FrameTooNarrow(AugmentationError, ValueError):
    pass


class SegmenterFailure(AugmentationError):
    pass


class TemplateLargerThanFrame(AugmentationError, ValueError):
    pass


class InvalidTemplate(AugmentationError, ValueError):
    pass


# --- skills -----------------------------------------------------------------


class SkillError(CradleError):
    pass


class SkillSyntaxError(SkillError):
    def __init__(self, message: str, line: int, col: int, expected: str = ""):
        self.line = line
        self.col = col
        self.expected = expected
        loc = f"{line}:{col}"
        super().__init__(f"{loc}: {message}" + (f" (expected {expected})" if expected else ""))


class CompileError(SkillError):
    pass


class UnknownCallee(CompileError):
    pass


class ArgumentMismatch(CompileError):
    pass


class LabelNotFound(CompileError):
    pass


class ExpressionOverflow(CompileError):
    pass


class ProgramTooLarge(CompileError):
    pass


# --- memory -----------------------------------------------------------------


class MemoryStoreError(CradleError):
    pass


class DuplicateName(MemoryStoreError):
    pass


class DimensionMismatch(MemoryStoreError, ValueError):
    pass


class NotFound(MemoryStoreError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return Exception.__str__(self)


class FormatVersionMismatch(MemoryStoreError):
    pass


class CorruptEntry(MemoryStoreError):
    pass


class NonMonotoneIteration(MemoryStoreError, ValueError):
    pass


# --- provider ---------------------------------------------------------------


class ProviderFailure(CradleError):
    pass


class RateLimited(ProviderFailure):
    pass


class ProviderTimeout(ProviderFailure):
    pass


class CassetteMiss(ProviderFailure):
    pass


class MalformedResponse(ProviderFailure):
    pass


class ProviderExhausted(ProviderFailure):
    pass


class ProviderConfigError(CradleError):
    pass


class SectionError(CradleError):
    pass


class MissingField(SectionError):
    pass


class UnparsableBool(SectionError):
    pass


# --- pipeline ---------------------------------------------------------------


class PipelineError(CradleError):
    pass


class UnknownSkillChosen(PipelineError):
    pass


class MalformedCall(PipelineError):
    pass


# --- simenv / harness / cli -------------------------------------------------


class ScenarioParseError(CradleError):
    pass


class HarnessError(CradleError):
    pass


class EmptyLedger(HarnessError, ValueError):
    pass


class ZeroDenominator(HarnessError, ZeroDivisionError):
    pass


class TrajectoryParseError(HarnessError):
    pass


class ConfigError(CradleError):
    pass


class DigestMismatch(CradleError):
    pass
