"""Exception hierarchy for specforge.

Static faults (syntax, typing) are reported as Diagnostics, not exceptions;
these classes cover dynamic/runtime faults and contract violations.
"""


class SpecForgeError(Exception):
    """Base class for all specforge runtime errors."""


class UnknownVariableError(SpecForgeError):
    def __init__(self, name: str):
        super().__init__(f"unknown variable '{name}'")
        self.name = name


class UnboundNameError(SpecForgeError):
    def __init__(self, name: str):
        super().__init__(f"unbound name '{name}'")
        self.name = name


class EvalTypeError(SpecForgeError):
    """Value kind mismatch during evaluation (e.g. arithmetic on a symbol)."""


class TypeMismatchError(SpecForgeError):
    """Assigned value does not match the variable's declared type."""


class BoundsViolationError(SpecForgeError):
    """Integer written outside its declared inclusive bounds."""

    def __init__(self, name: str, value: int, lo: int, hi: int):
        super().__init__(f"'{name}' = {value} outside declared bounds {lo}..{hi}")
        self.name = name
        self.value = value
        self.lo = lo
        self.hi = hi


class EventNotEnabledError(SpecForgeError):
    def __init__(self, event: str, reason: str = ""):
        msg = f"event '{event}' is not enabled"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)
        self.event = event


class EmptyTraceError(SpecForgeError):
    """Undo requested on a session with an empty trace."""


class MissingVariantError(SpecForgeError):
    def __init__(self, machine: str, event: str):
        super().__init__(
            f"machine '{machine}' has convergent event '{event}' but no variant"
        )
        self.machine = machine
        self.event = event


class NotInSubsetError(SpecForgeError):
    """Machine rejected by the code-generation subset check."""

    def __init__(self, machine: str, violations):
        super().__init__(
            f"machine '{machine}' is not in the generatable subset "
            f"({len(violations)} violation(s))"
        )
        self.machine = machine
        self.violations = list(violations)


class GluingUnderspecifiedError(SpecForgeError):
    """A reachable concrete state whose gluing invariant does not determine a
    unique abstract state."""

    def __init__(self, machine: str, state_text: str, candidates: int):
        super().__init__(
            f"gluing invariant of '{machine}' determines {candidates} abstract "
            f"state(s) (expected exactly 1) for concrete state {state_text}"
        )
        self.machine = machine
        self.state_text = state_text
        self.candidates = candidates


class ManifestMismatchError(SpecForgeError):
    """Corpus manifest disagrees with the shipped files or checker verdicts."""

