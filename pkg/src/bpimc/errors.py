"""Exception hierarchy shared by the simulator, models and CLI."""


class IMCError(Exception):
    """Base class for every error raised by :mod:`bpimc`."""


class ConfigError(IMCError, ValueError):
    """Invalid macro geometry or model parameter."""


class AddressOutOfRange(IMCError, IndexError):
    pass


class HazardViolation(IMCError):
    """An operation breaks a wordline / write-back legality rule.

    ``op_index`` is filled in by the sequencer when the violation aborts a
    program, so the CLI can name the offending statement.
    """

    def __init__(self, reason, op_index=None):
        self.reason = reason
        self.op_index = op_index
        msg = reason if op_index is None else f"op {op_index}: {reason}"
        super().__init__(msg)


class NoFreeDummyRow(HazardViolation):
    pass


class RouteMismatch(IMCError):
    pass


class ShapeMismatch(IMCError, ValueError):
    pass


class UnknownEntry(IMCError, KeyError):
    pass


class VddOutOfRange(IMCError, ValueError):
    pass


class GeometryTooSmall(IMCError, ValueError):
    pass


class ParseError(IMCError):
    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", col {column}" if column is not None else "") + ": "
        super().__init__(where + message)


class ConfigConflict(ParseError):
    pass
