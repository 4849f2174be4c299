"""Exception types.  Every error carries a stable machine-readable ``code``."""


class SynkitError(Exception):
    code = "E_INTERNAL"
    exit_status = 4


class ParseError(SynkitError):
    """Base for text-format errors with a source location."""

    code = "E_PARSE"
    exit_status = 2

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        loc = f"{line}:{col}: " if line is not None else ""
        super().__init__(f"{loc}{message}")


class SyntaxError_(ParseError):
    code = "E_SYNTAX"

    def __init__(self, message, line=None, col=None, expected=None):
        self.expected = expected
        if expected:
            message = f"{message} (expected {expected})"
        super().__init__(message, line, col)


class SemanticError(ParseError):
    code = "E_SEMANTIC"


class NonCanonicalEntry(ParseError):
    code = "E_NONCANONICAL"


class CombinationalLoop(SynkitError):
    code = "E_COMB_LOOP"
    exit_status = 2

    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("combinational loop through " + " -> ".join(self.cycle))


class UnmappedCell(SynkitError):
    code = "E_UNMAPPED"
    exit_status = 2

    def __init__(self, cell, kind):
        self.cell = cell
        self.kind = kind
        super().__init__(f"cell {cell} of kind {kind} must be lowered first")


class SignatureMismatch(SynkitError):
    code = "E_SIGNATURE"
    exit_status = 2


class SlewOutOfRange(SynkitError):
    code = "E_SLEW_RANGE"
    exit_status = 2


class UnmatchableFunction(SynkitError):
    code = "E_UNMATCHABLE"
    exit_status = 2


class MissingNand2(SynkitError):
    code = "E_NO_NAND2"
    exit_status = 2


class UsageError(SynkitError):
    code = "E_USAGE"
    exit_status = 2


class UnknownPass(UsageError):
    code = "E_UNKNOWN_PASS"


class EmptyReport(UsageError):
    code = "E_EMPTY_REPORT"


class EquivalenceFailure(SynkitError):
    """A checked stage changed behaviour; ``path`` names the counterexample file."""

    code = "E_EQUIV_FAIL"
    exit_status = 3

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(message)
