"""Exception types shared across the package."""


class QclassError(Exception):
    """Base class for all errors raised by this package."""


class EmbeddingFormatError(QclassError):
    """A pretrained-vector file violates the expected text layout."""


class DatasetFormatError(QclassError):
    """A question file line cannot be parsed or carries an unknown label."""


class ModelFormatError(QclassError):
    """A saved model container fails a structural check on load."""


class ConfigError(QclassError):
    """A configuration file or option set is invalid."""


class TrainingDiverged(QclassError):
    """Training hit a non-finite loss and was aborted."""

    def __init__(self, epoch: int, batch: int, loss: float):
        self.epoch = epoch
        self.batch = batch
        self.loss = loss
        super().__init__(
            f"non-finite training loss {loss!r} at epoch {epoch}, batch {batch}"
        )
