"""Exception hierarchy shared by every recstack module."""


class StackError(Exception):
    """Base class for all errors raised by recstack."""


# -- data ---------------------------------------------------------------------


class DatasetError(StackError, ValueError):
    pass


class MissingLabelColumn(DatasetError):
    def __init__(self, column):
        super().__init__(f"label column {column!r} not found in header")
        self.column = column


class UnparseableCell(DatasetError):
    def __init__(self, row, col, value=None):
        super().__init__(f"cannot parse cell at row {row}, column {col!r}: {value!r}")
        self.row = row
        self.col = col
        self.value = value


class SingleClassDataset(DatasetError):
    pass


class ClassTooSmall(DatasetError):
    def __init__(self, class_id, count, k):
        super().__init__(
            f"class {class_id} has {count} members, fewer than the {k} folds requested"
        )
        self.class_id = class_id
        self.count = count
        self.k = k


# -- learners -----------------------------------------------------------------


class LearnerError(StackError, ValueError):
    pass


class DegenerateTraining(LearnerError):
    pass


class NonFiniteInput(LearnerError):
    pass


class WidthMismatch(LearnerError):
    pass


# -- metrics ------------------------------------------------------------------


class MetricError(StackError, ValueError):
    pass


class LengthMismatch(MetricError):
    pass


class EmptyInput(MetricError):
    pass


class SingleClassPresent(MetricError):
    pass


# -- compression / pruning / engine ---------------------------------------------


class EmptyMatrix(StackError, ValueError):
    pass


class WidthTooSmall(StackError, ValueError):
    pass


class EmptyScores(StackError, ValueError):
    pass


class ShapeMismatch(StackError, ValueError):
    pass


class ConfigInvalid(StackError, ValueError):
    pass
