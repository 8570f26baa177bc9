"""Command-line interface for Torsion Flow."""

import functools
import json
import sys
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple

import click
import structlog
import yaml
from pydantic import ValidationError

from . import __version__
from .config import configure_logging, settings
from .entropy import EntropyConfig, functional_for, run_with_report
from .errors import TorsionFlowError
from .flow import FixedPointKind, FlowKind, classify_dynamics, fixed_points, phase_field
from .lie_algebra import classify_geometry
from .presets import preset_registry
from .reporting import entropy_frame, print_presets, write_csv, write_trajectory
from .runspec import RunSpec, load_document
from .solver import integrate
from .verify import run_all

logger = structlog.get_logger(__name__)

EXIT_INPUT = 1
EXIT_INTEGRATOR = 2
EXIT_VERIFY = 3

INPUT_ERRORS = (TorsionFlowError, ValidationError, OSError, yaml.YAMLError, json.JSONDecodeError)


def _fail(message: str, code: int) -> None:
    click.echo(f"❌ {message}", err=True)
    sys.exit(code)


def source_options(command: Callable) -> Callable:
    """Options that select the structure and initial state."""
    decorators = [
        click.option("-i", "--input", "input_path", type=click.Path(path_type=Path), help="JSON or YAML run file"),
        click.option("--preset", "preset_name", help="Preset name, optionally with parameter (pdq:1)"),
        click.option("--K", "K", type=float, help="Curvature parameter for pdq / prequant"),
        click.option("--rossi-t", type=float, help="Deformation parameter for rossi"),
        click.option("--a0", type=float, help="Initial a"),
        click.option("--c0", type=float, help="Initial c"),
        click.option("--b0", type=float, help="Initial b (B = b²)"),
        click.option("--phi0", type=float, help="Initial φ"),
        click.option("--tau0", type=float, help="Initial τ"),
    ]
    for decorator in reversed(decorators):
        command = decorator(command)
    return command


def integrator_options(command: Callable) -> Callable:
    decorators = [
        click.option("--kind", type=click.Choice([k.value for k in FlowKind]), help="Flow kind"),
        click.option("--t-end", type=float, help="Final time"),
        click.option("--method", type=click.Choice(["RK45", "RK4"], case_sensitive=False), help="Integrator"),
        click.option("--rtol", type=float, help=f"Relative tolerance (default {settings.rtol:g})"),
        click.option("--atol", type=float, help=f"Absolute tolerance (default {settings.atol:g})"),
        click.option("--dt", type=float, help=f"RK4 step (default {settings.dt:g})"),
        click.option("--samples", type=int, help=f"Dense output samples (default {settings.samples})"),
        click.option("-o", "--output", type=click.Path(path_type=Path), help="Output CSV (default stdout)"),
    ]
    for decorator in reversed(decorators):
        command = decorator(command)
    return command


def build_run_spec(params: Dict[str, Any], default_kind: Optional[str] = None) -> RunSpec:
    """Merge an optional run file with command-line overrides."""
    doc: Dict[str, Any] = load_document(params["input_path"]) if params.get("input_path") else {}

    if params.get("preset_name"):
        for key in ("preset", "structure_constants", "raw_constants"):
            doc.pop(key, None)
        doc["preset"] = {"name": params["preset_name"]}
    if params.get("K") is not None:
        doc.setdefault("preset", {})["K"] = params["K"]
    if params.get("rossi_t") is not None:
        doc.setdefault("preset", {})["t"] = params["rossi_t"]

    initial = dict(doc.get("initial") or {})
    for flag, name in (("a0", "a"), ("c0", "c"), ("phi0", "phi"), ("tau0", "tau")):
        if params.get(flag) is not None:
            initial[name] = params[flag]
    if params.get("b0") is not None:
        initial["B"] = params["b0"] ** 2
    doc["initial"] = initial

    if params.get("kind"):
        doc["kind"] = params["kind"]
    elif default_kind and "kind" not in doc:
        doc["kind"] = default_kind
    if params.get("t_end") is not None:
        doc["t_end"] = params["t_end"]
    if params.get("output") is not None:
        doc["output"] = str(params["output"])

    options = dict(doc.get("options") or {})
    for name in ("rtol", "atol", "dt", "samples"):
        if params.get(name) is not None:
            options[name] = params[name]
    if params.get("method"):
        options["method"] = params["method"].upper()
    doc["options"] = options
    return RunSpec.model_validate(doc)


def handle_errors(command: Callable) -> Callable:
    """Map input errors to exit 1 and unexpected failures to exit 2."""

    @functools.wraps(command)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return command(*args, **kwargs)
        except INPUT_ERRORS as exc:
            logger.debug("input_error", error=str(exc))
            _fail(f"Input error: {exc}", EXIT_INPUT)
        except (ArithmeticError, RuntimeError, FloatingPointError) as exc:
            logger.error("integrator_failure", error=str(exc))
            _fail(f"Integrator failure: {exc}", EXIT_INTEGRATOR)

    return wrapper


def _parse_range(text: str, name: str) -> Tuple[float, float]:
    try:
        lo, hi = (float(part) for part in text.split(":"))
    except ValueError:
        raise click.BadParameter(f"expected LO:HI, got '{text}'", param_hint=name) from None
    return lo, hi


def _parse_grid(text: str) -> Tuple[int, int]:
    try:
        n, m = (int(part) for part in text.lower().split("x"))
    except ValueError:
        raise click.BadParameter(f"expected NxM, got '{text}'", param_hint="--grid") from None
    return n, m


def _emit(text: str, output: Optional[Path]) -> None:
    if output is None:
        click.echo(text, nl=False)
    else:
        output.write_text(text, encoding="utf-8")
        click.echo(f"💾 Wrote {output}")


@click.group()
@click.version_option(version=__version__)
@click.option("--log-level", default=settings.log_level, help="Log level")
@click.option(
    "--log-format",
    default=settings.log_format,
    type=click.Choice(["console", "json"]),
    help="Log renderer",
)
def main(log_level: str, log_format: str) -> None:
    """Torsion Flow - pseudohermitian invariants and torsion flows on homogeneous contact 3-manifolds."""
    try:
        configure_logging(log_level, log_format)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--log-level") from None


@main.command()
def presets() -> None:
    """List the named structures."""
    print_presets(preset_registry)


@main.command()
@source_options
@handle_errors
def classify(**params: Any) -> None:
    """Classify the structure and its torsion-free complex structures."""
    spec = build_run_spec(params)
    nd, _ = spec.structure()
    geometry = classify_geometry(nd)
    points = fixed_points(nd)
    dynamics = classify_dynamics(nd)

    parts = [geometry.geometry.label]
    if points.kind is FixedPointKind.ISOLATED:
        parts += ["unimodular" if geometry.unimodular else "non-unimodular", str(points), dynamics.value]
    else:
        parts.append(str(points))
    click.echo(", ".join(parts))
    click.echo(f"  unimodular: {'yes' if geometry.unimodular else 'no'}")
    click.echo(f"  torsion-free J: {'yes' if geometry.admits_torsion_free else 'no'}")
    click.echo(f"  normalized flow: {dynamics.value}")
    constants = ", ".join(f"{k}={v:g}" for k, v in nd.to_dict().items())
    click.echo(f"  constants: c1_23=1, {constants}")


@main.command()
@source_options
@integrator_options
@handle_errors
def simulate(**params: Any) -> None:
    """Integrate a flow and write the trajectory as CSV."""
    spec = build_run_spec(params)
    nd, s0 = spec.structure()
    trajectory = integrate(spec.kind, nd, s0, spec.t_end, spec.options.build())
    _emit(write_trajectory(trajectory), spec.output)
    logger.info("simulate_finished", terminal_event=str(trajectory.terminal_event))


@main.command()
@source_options
@click.option("--a-range", default="-2:2", help="a range LO:HI")
@click.option("--c-range", default="0:2", help="c range LO:HI (c > 0)")
@click.option("--grid", default="20x20", help="Grid size NxM")
@click.option("-o", "--output", type=click.Path(path_type=Path), help="Output CSV (default stdout)")
@handle_errors
def portrait(a_range: str, c_range: str, grid: str, output: Optional[Path], **params: Any) -> None:
    """Sample the normalized flow's velocity field on an (a, c) grid."""
    spec = build_run_spec(params)
    nd, _ = spec.structure()
    frame = phase_field(nd, _parse_range(a_range, "--a-range"), _parse_range(c_range, "--c-range"), _parse_grid(grid))
    _emit(write_csv(frame), output)


@main.command()
@source_options
@integrator_options
@handle_errors
def entropy(**params: Any) -> None:
    """Check the monotonicity formula of the functional attached to a flow."""
    spec = build_run_spec(params, default_kind=FlowKind.COUPLED_F.value)
    nd, s0 = spec.structure()
    if spec.kind in (FlowKind.COUPLED_W_PLUS, FlowKind.COUPLED_W_MINUS) and s0.tau is None:
        s0 = s0.with_fields(tau=1.0)
    cfg = EntropyConfig(functional_for(spec.kind), settings.vol0)
    report = run_with_report(spec.kind, nd, s0, spec.t_end, cfg, spec.options.build())
    summary = report.summary()
    text = write_csv(entropy_frame(report), comments=[f"event: {report.terminal_event}", summary])
    _emit(text, spec.output)
    if spec.output is not None:
        click.echo(summary)


@main.command()
@click.option("--seed", type=int, default=None, help=f"Random seed (default {settings.verify_seed})")
@click.option("--cases", type=int, default=None, help=f"Cases per randomized suite (default {settings.verify_cases})")
@click.option("--corrupt", is_flag=True, hidden=True)
@click.option("-o", "--output", type=click.Path(path_type=Path), help="Write failing cases as JSON")
def verify(seed: Optional[int], cases: Optional[int], corrupt: bool, output: Optional[Path]) -> None:
    """Run every self-verification suite."""
    click.echo("🧪 Running verification suites...")
    report = run_all(seed=seed, cases=cases, corrupt=corrupt)
    for line in report.lines():
        click.echo(line)
    if report.passed:
        return
    for failure in report.failures:
        click.echo(f"# replay: {json.dumps(failure, default=str)}")
    if output is not None:
        output.write_text(json.dumps(report.failures, indent=2, default=str), encoding="utf-8")
    sys.exit(EXIT_VERIFY)


if __name__ == "__main__":
    main()
