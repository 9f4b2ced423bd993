"""JSON configuration: solver settings, design defaults and the varactor model.

Every section and key is optional; unknown keys are rejected so typos surface::

    {
      "solver":   {"k_harmonics": 7, "step_db": 1.0,
                   "p_start_dbm": -10.0, "p_stop_dbm": 28.0},
      "design":   {"f_opt": 2.1e9, "z_tx": 31.0, "l_a_seed": 11e-9, "v_dc": 1.1,
                   "z0": 50.0, "q_l": 2000.0, "q_a": 300.0},
      "varactor": {"c_j0": 4.1433e-12, "v_j": 0.8, "gamma": 1.1, "q_v": 15.0,
                   "v_bi": 0.7, "i_s": 1e-14, "n_ideality": 1.0, "c_pkg": 0.4e-12,
                   "fc": 0.5, "v_breakdown": 15.0}
    }
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .core import VaractorModel
from .errors import ConfigError, PfslError
from .hb import K_DEFAULT
from .synthesis import PROTO_F, PROTO_LA, PROTO_QA, PROTO_QL, PROTO_VDC, PROTO_ZTX


@dataclass(frozen=True)
class SolverConfig:
    k_harmonics: int = K_DEFAULT
    step_db: float = 1.0
    p_start_dbm: float = -10.0
    p_stop_dbm: float = 28.0

    def __post_init__(self):
        if not isinstance(self.k_harmonics, int) or self.k_harmonics < 4:
            raise ConfigError("solver.k_harmonics must be an integer >= 4")
        if not self.step_db > 0:
            raise ConfigError("solver.step_db must be positive")
        if not self.p_start_dbm < self.p_stop_dbm:
            raise ConfigError("solver.p_start_dbm must be below p_stop_dbm")


@dataclass(frozen=True)
class DesignConfig:
    f_opt: float = PROTO_F
    z_tx: float = PROTO_ZTX
    l_a_seed: float = PROTO_LA
    v_dc: float = PROTO_VDC
    z0: float = 50.0
    q_l: float = PROTO_QL
    q_a: float | None = PROTO_QA


@dataclass(frozen=True)
class Config:
    solver: SolverConfig = field(default_factory=SolverConfig)
    design: DesignConfig = field(default_factory=DesignConfig)
    varactor: VaractorModel = field(default_factory=VaractorModel)
    varactor_given: bool = False


def _section(cls, data, name):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{name} must be a JSON object")
    known = {f.name for f in dataclasses.fields(cls)}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown key(s) in {name}: {', '.join(sorted(extra))}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{name}: {exc}") from None
    except PfslError as exc:
        raise ConfigError(f"{name}: {exc}") from None


def config_from_dict(data: dict) -> Config:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    extra = set(data) - {"solver", "design", "varactor"}
    if extra:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(extra))}")
    return Config(solver=_section(SolverConfig, data.get("solver"), "solver"),
                  design=_section(DesignConfig, data.get("design"), "design"),
                  varactor=_section(VaractorModel, data.get("varactor"), "varactor"),
                  varactor_given="varactor" in data)


def load_config(path) -> Config:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}, col {exc.colno}: {exc.msg}") from None
    return config_from_dict(data)


def config_to_dict(cfg: Config) -> dict:
    return {"solver": dataclasses.asdict(cfg.solver), "design": dataclasses.asdict(cfg.design),
            "varactor": dataclasses.asdict(cfg.varactor)}
