"""Exception types shared across the package."""


class DocAuthError(Exception):
    """Base class for all domain errors raised by this package."""


class DegenerateInputError(DocAuthError):
    """Input is structurally valid but numerically degenerate (e.g. constant patch)."""


class QuadNotFoundError(DocAuthError):
    """Contour analysis could not recover a convex document quadrilateral."""


class DegenerateQuadError(DocAuthError):
    """Quad corners are collinear or otherwise do not define an invertible mapping."""


class ModelNotReadyError(DocAuthError):
    """A document model is registered but has no trained classifier for a requested ROI."""


class InsufficientDataError(DocAuthError):
    """Dataset does not meet the minimum size/label requirements for training."""


class NotFoundError(DocAuthError):
    """A referenced entity (document, model, job) does not exist."""
