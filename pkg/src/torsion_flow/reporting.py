"""CSV and table output."""

import io
from pathlib import Path
from typing import List, Optional, TextIO, Tuple, Union

import pandas as pd
from rich.console import Console
from rich.table import Table

from .entropy import MonotonicityReport
from .presets import PresetRegistry
from .solver import Trajectory

TRAJECTORY_COLUMNS = ["t", "a", "c", "B", "phi", "tau", "torsion_re", "torsion_im", "W", "E_H"]
FLOAT_FORMAT = "%.17g"


def trajectory_frame(trajectory: Trajectory) -> pd.DataFrame:
    rows = []
    for t, state, sample in zip(trajectory.times, trajectory.states, trajectory.invariant_samples):
        rows.append(
            {
                "t": t,
                "a": state.a,
                "c": state.c,
                "B": state.B,
                "phi": state.phi,
                "tau": state.tau,
                "torsion_re": sample.torsion.real,
                "torsion_im": sample.torsion.imag,
                "W": sample.webster,
                "E_H": sample.einstein_hilbert,
            }
        )
    return pd.DataFrame(rows, columns=TRAJECTORY_COLUMNS, dtype=float)


def entropy_frame(report: MonotonicityReport) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "t": report.times,
            "functional": report.functional_values,
            "derivative": report.finite_diff_derivative,
            "rhs_unweighted": report.theorem_rhs_unweighted,
            "rhs_weighted": report.theorem_rhs_weighted,
            "constraint": report.constraint_values,
            "torsion_norm": report.torsion_norms,
            "curvature_defect": report.curvature_defects,
        }
    )


def write_csv(
    frame: pd.DataFrame,
    target: Union[Path, TextIO, None] = None,
    comments: Optional[List[str]] = None,
) -> str:
    """Write ``frame`` followed by ``# `` comment lines; returns the text."""
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")
    for comment in comments or []:
        buffer.write(f"# {comment}\n")
    text = buffer.getvalue()
    if isinstance(target, (str, Path)):
        Path(target).write_text(text, encoding="utf-8")
    elif target is not None:
        target.write(text)
    return text


def write_trajectory(trajectory: Trajectory, target: Union[Path, TextIO, None] = None) -> str:
    return write_csv(
        trajectory_frame(trajectory),
        target,
        comments=[f"event: {trajectory.terminal_event}"],
    )


def read_csv(source: Union[Path, TextIO, str]) -> Tuple[pd.DataFrame, List[str]]:
    """Parse output of ``write_csv`` (a path, an open file or the text itself)."""
    if isinstance(source, Path):
        text = source.read_text(encoding="utf-8")
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
    comments = [line[1:].strip() for line in text.splitlines() if line.startswith("#")]
    frame = pd.read_csv(io.StringIO(text), comment="#", float_precision="round_trip")
    return frame, comments


def presets_table(registry: PresetRegistry) -> Table:
    table = Table(title="Torsion Flow Presets")
    table.add_column("Preset", style="cyan", no_wrap=True)
    table.add_column("Family", style="magenta")
    table.add_column("Description")
    for definition in registry.all():
        table.add_row(definition.signature, definition.family.value, definition.purpose)
    return table


def print_presets(registry: PresetRegistry, file: Optional[TextIO] = None) -> None:
    Console(file=file, width=120).print(presets_table(registry))
