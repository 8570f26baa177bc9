"""Preset registry - named homogeneous structures with default initial states."""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .errors import InvalidParameter, UnknownPreset
from .flow import FlowState
from .lie_algebra import NormalizedContactData

PresetBuild = Tuple[NormalizedContactData, FlowState]


class PresetFamily(Enum):
    """Geometric origin of a preset."""

    CIRCLE_BUNDLE = "circle_bundle"
    UNIMODULAR_GROUP = "unimodular_group"
    NILPOTENT = "nilpotent"
    DEFORMATION = "deformation"


@dataclass(frozen=True)
class PresetDefinition:
    """A named structure, optionally with one real parameter."""

    name: str
    family: PresetFamily
    purpose: str
    builder: Callable[[Optional[float]], PresetBuild]
    parameter: Optional[str] = None

    @property
    def signature(self) -> str:
        return f"{self.name}({self.parameter})" if self.parameter else self.name

    def __str__(self) -> str:
        return f"{self.signature} ({self.family.value}) - {self.purpose}"


def _require(name: str, symbol: str, value: Optional[float]) -> float:
    if value is None:
        raise InvalidParameter(f"Preset '{name}' requires parameter {symbol}")
    value = float(value)
    if not np.isfinite(value):
        raise InvalidParameter(f"Preset '{name}' parameter {symbol} must be finite")
    return value


def _pdq(K: Optional[float]) -> PresetBuild:
    K = _require("pdq", "K", K)
    return NormalizedContactData.from_free(c2_13=-K, c3_12=1.0), FlowState(0.0, 1.0, 1.0)


def _prequant(K: Optional[float]) -> PresetBuild:
    K = _require("prequant", "K", K)
    if K == 0:
        raise InvalidParameter("Preset 'prequant' needs K != 0")
    return NormalizedContactData.from_free(c2_13=-K, c3_12=1.0 / K), FlowState(0.0, 1.0, 1.0)


def _heisenberg(_: Optional[float]) -> PresetBuild:
    return NormalizedContactData.from_free(), FlowState(0.0, 1.0, 1.0)


def _su2(_: Optional[float]) -> PresetBuild:
    return NormalizedContactData.from_free(c2_13=-1.0, c3_12=1.0), FlowState(0.0, 2.0, 1.0)


def _sl2_hyperbolic(_: Optional[float]) -> PresetBuild:
    return NormalizedContactData.from_free(c2_13=1.0, c3_12=-1.0), FlowState(0.0, 1.0, 1.0)


def _rossi(t: Optional[float]) -> PresetBuild:
    t = _require("rossi", "t", t)
    if not 0.0 <= t < 1.0:
        raise InvalidParameter(f"Preset 'rossi' needs t in [0, 1), got {t}")
    nd, _ = _su2(None)
    return nd, FlowState(a=0.0, c=(1.0 - t) / (1.0 + t), B=0.5)


class PresetRegistry:
    """Central registry of named structures."""

    def __init__(self) -> None:
        self._presets: Dict[str, PresetDefinition] = {}
        self._initialize_core_presets()

    def _initialize_core_presets(self) -> None:
        core = [
            PresetDefinition(
                "pdq",
                PresetFamily.CIRCLE_BUNDLE,
                "Circle bundle over a surface of curvature K: (1, -K, 1)",
                _pdq,
                parameter="K",
            ),
            PresetDefinition(
                "prequant",
                PresetFamily.CIRCLE_BUNDLE,
                "Prequantization bundle, K != 0: (1, -K, 1/K)",
                _prequant,
                parameter="K",
            ),
            PresetDefinition(
                "heisenberg",
                PresetFamily.NILPOTENT,
                "Heisenberg group, torsion-free for every J: (1, 0, 0)",
                _heisenberg,
            ),
            PresetDefinition(
                "rossi",
                PresetFamily.DEFORMATION,
                "Deformed sphere, t in [0,1): su2 with a=0, c=(1-t)/(1+t), b=1/sqrt(2)",
                _rossi,
                parameter="t",
            ),
            PresetDefinition(
                "su2",
                PresetFamily.UNIMODULAR_GROUP,
                "SU(2): (1, -1, 1), attracting normalized flow",
                _su2,
            ),
            PresetDefinition(
                "sl2_hyperbolic",
                PresetFamily.UNIMODULAR_GROUP,
                "SL~(2,R), hyperbolic class: (1, 1, -1), repelling normalized flow",
                _sl2_hyperbolic,
            ),
        ]
        for definition in core:
            self._presets[definition.name] = definition

    def get(self, name: str) -> PresetDefinition:
        try:
            return self._presets[name]
        except KeyError:
            raise UnknownPreset(name, self.names()) from None

    def names(self) -> List[str]:
        return sorted(self._presets)

    def all(self) -> List[PresetDefinition]:
        return [self._presets[name] for name in self.names()]

    def build(self, name: str, parameter: Optional[float] = None) -> PresetBuild:
        definition = self.get(name)
        if definition.parameter is None and parameter is not None:
            raise InvalidParameter(f"Preset '{name}' takes no parameter")
        return definition.builder(parameter)


def parse_preset_name(text: str) -> Tuple[str, Optional[float]]:
    """Split ``"pdq:1"`` into ``("pdq", 1.0)``."""
    name, sep, raw = text.partition(":")
    if not sep:
        return name.strip(), None
    try:
        return name.strip(), float(raw)
    except ValueError:
        raise InvalidParameter(f"Preset parameter '{raw}' is not a number") from None


# Global registry instance
preset_registry = PresetRegistry()
