"""Exception types shared across the library."""


class DimensionError(ValueError):
    """Two objects that must agree in size (e.g. config vs. instance) do not."""


class SizeError(ValueError):
    """Problem too large for the requested method."""


class TopologyError(ValueError):
    """Operation called on an instance with an unsupported topology."""


class RangeError(ValueError):
    """A coupling, field or parameter lies outside its legal range."""


class StructureError(ValueError):
    """Graph structure violates the topology contract (duplicate or bad edges)."""


class ParseError(ValueError):
    """Malformed instance or schedule text.  Carries the offending line number."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class NumericalBlowupError(RuntimeError):
    """NaN or norm collapse during time evolution.  Carries step/bond context."""

    def __init__(self, message: str, step: int | None = None, bond: int | None = None):
        self.step = step
        self.bond = bond
        parts = [message]
        if step is not None:
            parts.append(f"step {step}")
        if bond is not None:
            parts.append(f"bond {bond}")
        super().__init__(" @ ".join(parts))
