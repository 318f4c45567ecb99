"""Exception types shared across the toolkit.

The CLI maps these onto process exit codes: validation failures exit 2,
a failed lumen separation exits 3, file I/O problems exit 4.
"""


class ValidationError(ValueError):
    """A precondition on an operation's inputs does not hold."""


class DisconnectedError(RuntimeError):
    """No path exists between the requested endpoints inside the mask."""


class LumensNotSeparatedError(RuntimeError):
    """Subtracting the tear surfaces left fewer than two lumen components."""


class VolumeIOError(Exception):
    """A volume file could not be read or written (bad magic, truncation,
    unknown voxel kind, or an underlying OS error)."""
