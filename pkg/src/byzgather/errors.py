"""Exception hierarchy. Each class maps to one failure class of the CLI."""

from __future__ import annotations


class ByzGatherError(Exception):
    exit_code = 1


class InvalidParameter(ByzGatherError, ValueError):
    exit_code = 2


class ValidationError(ByzGatherError):
    exit_code = 2

    def __init__(self, report: list[str]):
        super().__init__("; ".join(report))
        self.report = report


class CorpusTooLarge(ByzGatherError):
    exit_code = 2


class ConfigurationTooLarge(ByzGatherError):
    exit_code = 3


class NoSequenceFound(ByzGatherError):
    exit_code = 3


class ProtocolFault(ByzGatherError):
    exit_code = 5

    def __init__(self, agent: int, round_: int, message: str):
        super().__init__(f"agent {agent} at round {round_}: {message}")
        self.agent = agent
        self.round = round_


class CompressionContractViolation(ByzGatherError):
    exit_code = 6


class MirrorInfeasible(ByzGatherError):
    exit_code = 7


class BudgetExceeded(ByzGatherError):
    exit_code = 7
