"""Experiment configuration and result records."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, asdict

from ..pauli import Hamiltonian, hamiltonian_parse
from ..shadows import ObservableSpec, observable_from_config

TASKS = ("dynamics-trotter-lcu", "dynamics-pqs", "eigenfilter", "validate",
         "audit-eigenfilter", "audit-trotter")
VARIANTS = ("instrument", "always-on", "common-unitary")


class ConfigError(ValueError):
    """Raised for malformed or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    task: str
    hamiltonian: str | None = None          # path to the text format
    hamiltonian_text: str | None = None     # inline alternative
    interaction: str | None = None          # decomposed part for the pqs task (path)
    interaction_text: str | None = None
    initial_state: str = "plus-all"
    observables: list = field(default_factory=list)
    t_total: float | None = None
    dt: float | None = None
    nu: int | None = None
    mu_max: float = 2.0
    grouping: list | None = None            # list of term-index lists
    tau: float | None = None
    omega: float | str | None = None        # number or "ground"
    epsilon: float | None = None            # optional formula truncation
    shots: int = 10000
    mom_batches: int = 10
    seed: int = 0
    variant: str | None = None
    workers: int = 1
    correlated_chains: bool = False
    log_snapshots: bool = False
    log_shots: bool = False
    sweep: list | None = None               # parameter values for audit tasks

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if self.shots < 1:
            raise ConfigError(f"shots must be >= 1, got {self.shots}")
        if self.dt is not None and self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.variant is not None and self.variant not in VARIANTS:
            raise ConfigError(f"unknown circuit variant {self.variant!r}")
        if self.mom_batches < 1:
            raise ConfigError("mom_batches must be >= 1")
        for path in (self.hamiltonian, self.interaction):
            if path is not None and not os.path.exists(path):
                raise ConfigError(f"file not found: {path}")

    @classmethod
    def from_json(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        base = os.path.dirname(os.path.abspath(path))
        cfg = cls(**raw)
        for attr in ("hamiltonian", "interaction"):
            val = getattr(cfg, attr)
            if val is not None and not os.path.isabs(val):
                resolved = os.path.join(base, val)
                if not os.path.exists(resolved):
                    raise ConfigError(f"file not found: {resolved}")
                setattr(cfg, attr, resolved)
        return cfg

    def resolved_variant(self) -> str:
        if self.variant is not None:
            return self.variant
        return "always-on" if self.task == "eigenfilter" else "instrument"

    def load_hamiltonian(self) -> Hamiltonian:
        if self.hamiltonian_text is not None:
            return hamiltonian_parse(self.hamiltonian_text)
        if self.hamiltonian is None:
            raise ConfigError("no hamiltonian given (need 'hamiltonian' or 'hamiltonian_text')")
        with open(self.hamiltonian) as fh:
            return hamiltonian_parse(fh.read())

    def load_interaction(self) -> Hamiltonian:
        if self.interaction_text is not None:
            return hamiltonian_parse(self.interaction_text)
        if self.interaction is None:
            raise ConfigError("pqs task needs 'interaction' or 'interaction_text'")
        with open(self.interaction) as fh:
            return hamiltonian_parse(fh.read())

    def load_observables(self) -> list[ObservableSpec]:
        if not self.observables:
            raise ConfigError("config lists no observables")
        return [observable_from_config(entry) for entry in self.observables]

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ResultRecord:
    """Per-observable outcome next to the dense oracle value when available."""

    observable: str
    estimate: complex
    std_error: float
    exact: float | None
    shots: int
    mu_T: float
    wall_clock_s: float
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if self.shots > 1 and not self.std_error > 0:
            raise ValueError("standard error must be positive for shots > 1")

    def to_dict(self) -> dict:
        return {
            "observable": self.observable,
            "estimate": [self.estimate.real, self.estimate.imag],
            "std_error": self.std_error,
            "exact": self.exact,
            "shots": self.shots,
            "mu_T": self.mu_T,
            "wall_clock_s": self.wall_clock_s,
            "warnings": list(self.warnings),
        }


def summary_json(payload: dict) -> str:
    """Deterministic JSON for persisted summaries (timing fields included but
    isolated under the 'timing' key so comparisons can strip them)."""
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"
