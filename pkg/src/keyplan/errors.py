"""Exception types raised across the package."""


class KeyplanError(Exception):
    """Base class for every error raised by keyplan."""


class DegenerateWorkspace(KeyplanError):
    pass


class InvalidGeometry(KeyplanError):
    pass


class EvenResolution(KeyplanError):
    pass


class StartOrGoalInCollision(KeyplanError):
    pass


class NoPath(KeyplanError):
    pass


class DimensionMismatch(KeyplanError):
    pass


class Unreachable(KeyplanError):
    pass


class InvalidParams(KeyplanError):
    pass


class NoForwardRecorded(KeyplanError):
    pass


class EmptyDataset(KeyplanError):
    pass


class TrainingDiverged(KeyplanError):
    pass


class NoTermination(KeyplanError):
    """Keypoint prediction hit ``max_steps`` without reaching the target."""

    def __init__(self, message, keypoints=None):
        super().__init__(message)
        self.keypoints = keypoints


class PointOutOfBounds(KeyplanError):
    pass


class GenerationFailed(KeyplanError):
    pass


class Infeasible(KeyplanError):
    pass


class InsufficientData(KeyplanError):
    pass


class BadWeights(KeyplanError):
    pass


class MissingModel(KeyplanError):
    pass


class IoFailure(KeyplanError):
    pass
