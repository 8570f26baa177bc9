"""Run specifications read from JSON or YAML files."""

import json
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import InvalidParameter
from .flow import FlowKind, FlowState
from .lie_algebra import NormalizedContactData, normalize_frame, validate
from .solver import IntegratorOptions, Method, preset


class PresetSource(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    name: str
    K: Optional[float] = None
    t: Optional[float] = None

    @property
    def parameter(self) -> Optional[float]:
        if self.K is not None and self.t is not None:
            raise InvalidParameter("Give either K or t for a preset, not both")
        return self.K if self.K is not None else self.t


class FreeConstants(BaseModel):
    """Normalized form; c1_23 = 1 is implied."""

    model_config = ConfigDict(extra="forbid")

    c2_13: float = 0.0
    c2_23: float = 0.0
    c3_12: float = 0.0
    c3_23: float = 0.0


class RawConstants(BaseModel):
    """A full 3×3×3 array and the coefficients of θ on the same frame."""

    model_config = ConfigDict(extra="forbid")

    constants: List[List[List[float]]]
    theta: Tuple[float, float, float] = (1.0, 0.0, 0.0)


class InitialState(BaseModel):
    model_config = ConfigDict(extra="forbid")

    a: Optional[float] = None
    c: Optional[float] = None
    B: Optional[float] = None
    phi: Optional[float] = None
    tau: Optional[float] = None


class OptionsModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    method: Method = Method.RK45
    dt: Optional[float] = Field(default=None, gt=0)
    rtol: Optional[float] = Field(default=None, gt=0)
    atol: Optional[float] = Field(default=None, gt=0)
    blowup_threshold: Optional[float] = Field(default=None, gt=0)
    convergence_radius: Optional[float] = Field(default=None, gt=0)
    dt_min: Optional[float] = Field(default=None, gt=0)
    samples: Optional[int] = Field(default=None, ge=2)
    tau_min: Optional[float] = Field(default=None, gt=0)

    def build(self) -> IntegratorOptions:
        given = {k: v for k, v in self.model_dump().items() if v is not None}
        return IntegratorOptions(**given)


class RunSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    preset: Optional[PresetSource] = None
    structure_constants: Optional[FreeConstants] = None
    raw_constants: Optional[RawConstants] = None
    initial: InitialState = Field(default_factory=InitialState)
    kind: FlowKind = FlowKind.UNNORMALIZED
    t_end: float = Field(default=1.0, gt=0)
    options: OptionsModel = Field(default_factory=OptionsModel)
    output: Optional[Path] = None

    @model_validator(mode="after")
    def _one_source(self) -> "RunSpec":
        given = [
            name
            for name in ("preset", "structure_constants", "raw_constants")
            if getattr(self, name) is not None
        ]
        if len(given) != 1:
            raise ValueError(
                "exactly one of preset, structure_constants, raw_constants is required"
                f" (got {given or 'none'})"
            )
        return self

    def structure(self) -> Tuple[NormalizedContactData, FlowState]:
        """Normalized constants and the initial state with overrides applied."""
        if self.preset is not None:
            nd, default = preset(self.preset.name, self.preset.parameter)
        elif self.structure_constants is not None:
            nd = NormalizedContactData.from_free(**self.structure_constants.model_dump())
            default = FlowState(0.0, 1.0, 1.0)
        else:
            raw = self.raw_constants
            nd, _ = normalize_frame(validate(np.array(raw.constants)), raw.theta)
            default = FlowState(0.0, 1.0, 1.0)
        overrides = {k: v for k, v in self.initial.model_dump().items() if v is not None}
        return nd, default.with_fields(**overrides)


def load_document(path: Path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    if Path(path).suffix.lower() in (".yaml", ".yml"):
        data = yaml.safe_load(text)
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise InvalidParameter(f"{path}: expected a mapping at the top level")
    return data
