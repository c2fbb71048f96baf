"""Run configuration: every hyperparameter with its default, INI round trip,
and builders for the per-layer parameter objects."""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .asom import BANK_RULES, FEEDBACK_MODES, AsomParams
from .classifier import SIGN_CORRECTED, SIGN_STRICT
from .datasets import N_FOLDS  # noqa: F401  (re-exported for the pipeline)
from .skeleton import PreprocessConfig
from .som import DECAY_MODES, DecaySchedule, GridShape
from .som2 import Som2Config

ADAPTER_SCHEMAS = {"msr1": "msr20", "msr2": "msr20", "florence": "florence15",
                   "canonical": None}


@dataclass(frozen=True)
class RunConfig:
    # [data]
    dataset: str = ""
    adapter: str = "canonical"
    schema: str = "msr20"
    stratify: bool = False
    # [preprocess]
    attention_k: int = 0  # 0 keeps every joint
    egocentric: bool = True
    scale: bool = True
    # [asom]
    asom_neurons: int = 900
    asom_sigma: float = 1.0
    asom_softmax_exp: float = 10.0
    asom_epochs: int = 300
    asom_alpha_i: float = 0.1
    asom_alpha_d: float = 0.99
    asom_alpha_f: float = 0.01
    asom_rho_i: float = 30.0
    asom_rho_d: float = 0.999
    asom_rho_f: float = 1.0
    asom_beta_i: float = 0.35
    asom_beta_d: float = 1.0
    asom_beta_f: float = 0.01
    asom_decay_per: str = "sample"
    asom_constant_beta: bool = True
    asom_bank_rule: str = "delta"
    asom_feedback: str = "total"
    asom_normalize_feedback: bool = True
    asom_zero_native: bool = False
    # [som]
    som_neurons: int = 1600
    som_sigma: float = 1.0
    som_softmax_exp: float = 10.0
    som_epochs: int = 1500
    som_alpha_i: float = 0.1
    som_alpha_d: float = 0.99
    som_alpha_f: float = 0.01
    som_rho_i: float = 30.0
    som_rho_d: float = 0.999
    som_rho_f: float = 1.0
    som_decay_per: str = "sample"
    # [output]
    output_gamma: float = 0.35
    output_epochs: int = 200
    output_patience: int = 20
    output_sign: str = SIGN_CORRECTED
    # [run]
    run_seed: int = 0
    run_out: str = "out"
    run_jobs: int = 1

    def __post_init__(self):
        if self.adapter not in ADAPTER_SCHEMAS:
            raise ValueError(f"unknown adapter {self.adapter!r}; known: {sorted(ADAPTER_SCHEMAS)}")
        for name in ("asom_decay_per", "som_decay_per"):
            if getattr(self, name) not in DECAY_MODES:
                raise ValueError(f"{name} must be one of {DECAY_MODES}")
        if self.asom_bank_rule not in BANK_RULES:
            raise ValueError(f"asom bank_rule must be one of {BANK_RULES}")
        if self.asom_feedback not in FEEDBACK_MODES:
            raise ValueError(f"asom feedback must be one of {FEEDBACK_MODES}")
        if self.output_sign not in (SIGN_CORRECTED, SIGN_STRICT):
            raise ValueError(f"output sign must be {SIGN_CORRECTED!r} or {SIGN_STRICT!r}")
        if self.run_jobs < 1:
            raise ValueError("jobs must be >= 1")
        if not 0 <= self.run_seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        GridShape.square(self.asom_neurons)
        GridShape.square(self.som_neurons)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    # layer parameter objects

    def preprocess(self) -> PreprocessConfig:
        return PreprocessConfig(self.schema, self.attention_k or None, self.egocentric, self.scale)

    def asom_shape(self) -> GridShape:
        return GridShape.square(self.asom_neurons)

    def asom_params(self, seed: int) -> AsomParams:
        return AsomParams(
            sigma=self.asom_sigma, softmax_exponent=self.asom_softmax_exp,
            alpha=DecaySchedule(self.asom_alpha_i, self.asom_alpha_d, self.asom_alpha_f),
            rho=DecaySchedule(self.asom_rho_i, self.asom_rho_d, self.asom_rho_f),
            beta=DecaySchedule(self.asom_beta_i, self.asom_beta_d, self.asom_beta_f),
            epochs=self.asom_epochs, seed=seed, decay_per=self.asom_decay_per,
            constant_beta=self.asom_constant_beta, feedback=self.asom_feedback,
            normalize_feedback=self.asom_normalize_feedback, bank_rule=self.asom_bank_rule)

    def som2(self) -> Som2Config:
        return Som2Config(
            GridShape.square(self.som_neurons), self.som_sigma, self.som_softmax_exp,
            self.som_epochs,
            DecaySchedule(self.som_alpha_i, self.som_alpha_d, self.som_alpha_f),
            DecaySchedule(self.som_rho_i, self.som_rho_d, self.som_rho_f),
            self.som_decay_per)

    # serialisation

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**{k: _coerce(cls, k, v) for k, v in d.items()})

    def to_ini(self) -> str:
        parser = configparser.ConfigParser()
        for f in fields(self):
            section, key = _split(f.name)
            if not parser.has_section(section):
                parser.add_section(section)
            v = getattr(self, f.name)
            parser.set(section, key, str(v).lower() if isinstance(v, bool) else repr(v)
                       if isinstance(v, float) else str(v))
        lines = []
        for section in parser.sections():
            lines.append(f"[{section}]")
            lines.extend(f"{k} = {v}" for k, v in parser.items(section))
            lines.append("")
        return "\n".join(lines)

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        parser = configparser.ConfigParser()
        parser.read_string(text)
        values = {}
        for section in parser.sections():
            for key, raw in parser.items(section):
                name = key if section in _UNPREFIXED else f"{section}_{key}"
                values[name] = raw
        return cls.from_dict(values)

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_ini(Path(path).read_text(encoding="utf-8"))


_UNPREFIXED = ("data", "preprocess")
_SECTION_OF = {"dataset": "data", "adapter": "data", "schema": "data", "stratify": "data",
               "attention_k": "preprocess", "egocentric": "preprocess", "scale": "preprocess"}


def _split(name: str) -> tuple[str, str]:
    if name in _SECTION_OF:
        return _SECTION_OF[name], name
    section, key = name.split("_", 1)
    return section, key


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(cls, name: str, value):
    kind = _TYPES[name]
    if not isinstance(value, str):
        return value
    if kind == "bool":
        low = value.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {value!r}")
    if kind == "int":
        return int(value)
    if kind == "float":
        return float(value)
    return value
