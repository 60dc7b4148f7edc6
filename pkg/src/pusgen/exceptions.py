"""Error hierarchy.

Every error raised on bad user input or data derives from :class:`PusError`
(itself a ``ValueError``), so the CLI can map all of them to exit code 1.
The ``module`` attribute names the pipeline stage that raised it.
"""


class PusError(ValueError):
    module = "pusgen"


class DimensionMismatch(PusError):
    pass


# dataset
class DatasetError(PusError):
    module = "dataset"


class MissingHours(DatasetError):
    pass


class NonMonotoneTimestamps(DatasetError):
    pass


class NonNumericCell(DatasetError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class SchemaMismatch(DatasetError):
    pass


class TooFewDays(DatasetError):
    pass


class DegenerateBoundary(DatasetError):
    pass


# grouping
class GroupingError(PusError):
    module = "grouping"


class DegenerateAttribute(GroupingError):
    pass


class UnknownAttribute(GroupingError):
    pass


class DuplicateAttribute(GroupingError):
    pass


class UncoveredAttribute(GroupingError):
    pass


# reduction
class ReductionError(PusError):
    module = "reduction"


class NumericalFailure(ReductionError):
    pass


class RankOutOfRange(ReductionError):
    pass


# clustering
class ClusteringError(PusError):
    module = "clustering"


class KTooLarge(ClusteringError):
    pass


# density
class DensityError(PusError):
    module = "density"


class DegenerateSample(DensityError):
    pass


class QOutOfRange(DensityError):
    pass


# scenarios
class ScenarioError(PusError):
    module = "scenarios"


class InconsistentDayCounts(ScenarioError):
    pass


class EmptyScenarioSet(ScenarioError):
    pass


class UnknownCluster(ScenarioError):
    pass


# multiday
class ChainSamplingExhausted(PusError):
    module = "multiday"

    def __init__(self, message, day=None, stats=None):
        super().__init__(message)
        self.day = day
        self.stats = stats or {}


# cli / model file
class ConfigError(PusError):
    module = "cli"


class VersionMismatch(PusError):
    module = "cli"
