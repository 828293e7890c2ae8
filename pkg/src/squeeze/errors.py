class SqueezeError(Exception):
    pass


class UnknownFractal(SqueezeError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class LevelOverflow(SqueezeError, OverflowError):
    pass


class OutOfBounds(SqueezeError, IndexError):
    pass


class HoleCoordinate(SqueezeError, ValueError):
    pass


class InvalidLevel(SqueezeError, ValueError):
    pass


class InvalidBlockSize(SqueezeError, ValueError):
    pass


class InvalidSpec(SqueezeError, ValueError):
    pass


class BatchTooLarge(SqueezeError, ValueError):
    pass


class LevelTooDeep(SqueezeError, ValueError):
    pass


class ConfigError(SqueezeError, ValueError):
    pass


class AllocationError(SqueezeError, MemoryError):
    def __init__(self, message, nbytes):
        super().__init__(message)
        self.nbytes = nbytes
