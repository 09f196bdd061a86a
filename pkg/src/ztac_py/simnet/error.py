from typing import List, Tuple


class SimnetException(Exception):
    """
    Generic exception for the simulator and its command line
    """


class ConfigError(SimnetException):
    """
    A scenario file failed validation. Carries every (field, message)
    diagnostic found, not just the first.
    """

    def __init__(self, diagnostics: List[Tuple[str, str]]):
        self.diagnostics = list(diagnostics)
        lines = "; ".join(f"{field}: {message}" for field, message in self.diagnostics)
        super().__init__(f"Invalid scenario ({len(self.diagnostics)} problems): {lines}")


class AdversaryScriptError(SimnetException):
    """
    An adversary script line could not be parsed
    """

    def __init__(self, line_number: int, detail: str):
        message = f"Adversary script line {line_number}: {detail}"
        super().__init__(message)
        self.line_number = line_number


class InvariantViolation(SimnetException):
    """
    A finished run broke a property every run must hold
    """

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__(f"{len(self.violations)} invariant violations: {'; '.join(self.violations)}")
