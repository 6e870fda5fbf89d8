"""Exception types shared across the package."""


class WamiError(Exception):
    """Base class for all errors raised by wamipost."""


class ParameterError(WamiError, ValueError):
    """An operator received an invalid parameter (bad threshold, even window...)."""


class ContextError(WamiError, ValueError):
    """A scheme needs ground-truth statistics that were not supplied."""


class DimensionError(WamiError, ValueError):
    """Masks or components come from images of different sizes."""


class ComponentError(WamiError, ValueError):
    """Component data is inconsistent with the image it is rendered into."""


class FormatError(WamiError, ValueError):
    """A file could not be parsed.

    ``offset`` is the byte offset (binary formats) or ``line`` the 1-based
    line number (text formats) where parsing failed, when known.
    """

    def __init__(self, message, *, path=None, offset=None, line=None):
        where = []
        if path is not None:
            where.append(str(path))
        if offset is not None:
            where.append(f"byte {offset}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{': '.join(where)}: {message}" if where else message)
        self.path = path
        self.offset = offset
        self.line = line


class PackingError(WamiError, RuntimeError):
    """Scene generation could not place all vehicles."""
