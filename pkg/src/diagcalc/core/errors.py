"""Exceptions raised by the diagram core."""


class DiagramError(ValueError):
    pass


class IllFormed(DiagramError):
    """A constructor invariant does not hold (dangling port, dimension clash, ...)."""


class BoundaryMismatch(DiagramError):
    pass


class NotEndomorphism(DiagramError):
    pass


class ParseError(DiagramError):
    """Malformed diagram document; ``location`` is a path into the document."""

    def __init__(self, message, location=""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)
