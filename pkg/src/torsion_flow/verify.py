"""Self-verification suites.

Each suite draws seeded cases, checks one family of identities and records
every failing case in a JSON-serializable form so it can be replayed.
"""

import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import structlog

from .config import settings
from .entropy import MATCH_TOLERANCE, EntropyConfig, Functional, Weighting, functional_for, run_with_report
from .errors import TorsionFlowError
from .flow import FlowKind, FlowState, j_velocity, normalized_velocity
from .lie_algebra import (
    NormalizedContactData,
    StructureConstants,
    change_basis,
    classify_geometry,
    normalize_frame,
    validate,
)
from .pseudohermitian import (
    CRParameters,
    invariants_closed_form,
    invariants_from_structure_equations,
    j_endomorphism,
    lie_derivative_reeb_J,
    rescale_b,
    torsion_and_webster,
    torsion_matrix,
)
from .solver import (
    EventKind,
    IntegratorOptions,
    integrate,
    pdq_blowup_time,
    pdq_closed_form,
    preset,
    prequant_blowup_time,
    prequant_closed_form,
)

logger = structlog.get_logger(__name__)

ORACLE_TOLERANCE = 1e-12
SCALING_TOLERANCE = 1e-14
REEB_TOLERANCE = 1e-12
REDUCTION_TOLERANCE = 1e-12
CLOSED_FORM_TOLERANCE = 1e-8
CONVERGENCE_TOLERANCE = 1e-6
CORRUPTION = 1e-2
GRADIENT_RUNS = 50


@dataclass
class SuiteResult:
    name: str
    cases: int
    failures: List[Dict[str, Any]] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures


@dataclass
class VerifyReport:
    seed: int
    suites: List[SuiteResult]
    elapsed: float

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.suites)

    @property
    def failures(self) -> List[Dict[str, Any]]:
        return [f for s in self.suites for f in s.failures]

    def lines(self) -> List[str]:
        out = []
        for suite in self.suites:
            status = "✅ PASS" if suite.passed else "❌ FAIL"
            detail = f"{suite.cases} cases, {suite.elapsed:.2f}s"
            if not suite.passed:
                detail += f", {len(suite.failures)} failing"
            out.append(f"{status} {suite.name} ({detail})")
        passed = sum(s.passed for s in self.suites)
        out.append(f"📊 Results: {passed}/{len(self.suites)} suites passed in {self.elapsed:.2f}s (seed {self.seed})")
        out.append("all suites pass" if self.passed else f"{len(self.suites) - passed} suites failed")
        return out


def random_normalized(rng: np.random.Generator) -> NormalizedContactData:
    """Normalized data honouring c2_13·c3_23 = 0 and c2_23·c3_12 = 0."""
    p, q, r, s = rng.uniform(-2.0, 2.0, size=4)
    if rng.random() < 0.5:
        q = s = 0.0
    else:
        if rng.random() < 0.5:
            p = 0.0
        else:
            s = 0.0
        if rng.random() < 0.5:
            q = 0.0
        else:
            r = 0.0
    return NormalizedContactData.from_free(c2_13=p, c2_23=q, c3_12=r, c3_23=s)


def random_parameters(rng: np.random.Generator) -> CRParameters:
    return CRParameters(
        a=float(rng.uniform(-3.0, 3.0)),
        b=float(rng.uniform(0.1, 10.0)),
        c=float(rng.uniform(0.1, 10.0)),
    )


def _random_frame(rng: np.random.Generator) -> np.ndarray:
    frame = np.eye(3) + 0.15 * rng.standard_normal((3, 3))
    if np.linalg.det(frame) < 0:
        frame[:, 2] = -frame[:, 2]
    return frame


def _case(nd: NormalizedContactData, p: Optional[CRParameters] = None, **extra: Any) -> Dict[str, Any]:
    case: Dict[str, Any] = {"structure_constants": nd.to_dict()}
    if p is not None:
        case["initial"] = {"a": p.a, "c": p.c, "B": p.B}
    case.update(extra)
    return case


def _run_cases(
    name: str,
    count: int,
    rng: np.random.Generator,
    check: Callable[[np.random.Generator, int], Optional[Dict[str, Any]]],
) -> SuiteResult:
    result = SuiteResult(name=name, cases=count)
    start = time.perf_counter()
    for index in range(count):
        try:
            failure = check(rng, index)
        except (TorsionFlowError, ArithmeticError) as exc:
            failure = {"error": f"{type(exc).__name__}: {exc}"}
        if failure is not None:
            failure.setdefault("suite", name)
            failure.setdefault("case", index)
            result.failures.append(failure)
    result.elapsed = time.perf_counter() - start
    logger.info("suite_finished", suite=name, cases=count, failures=len(result.failures))
    return result


def oracle_suite(count: int, rng: np.random.Generator) -> SuiteResult:
    """Closed-form invariants against direct evaluation of dθ^1."""

    def check(rng: np.random.Generator, index: int) -> Optional[Dict[str, Any]]:
        nd, p = random_normalized(rng), random_parameters(rng)
        deviation = invariants_closed_form(nd, p).deviation(invariants_from_structure_equations(nd, p))
        if deviation > ORACLE_TOLERANCE:
            return _case(nd, p, b=p.b, deviation=deviation)
        return None

    return _run_cases("oracle equivalence", count, rng, check)


def scaling_suite(count: int, rng: np.random.Generator) -> SuiteResult:
    """Torsion and Webster curvature scale by λ^{-2} under θ ↦ λ²θ."""

    def check(rng: np.random.Generator, index: int) -> Optional[Dict[str, Any]]:
        nd, p = random_normalized(rng), random_parameters(rng)
        lam = float(rng.uniform(0.25, 4.0))
        base = invariants_closed_form(nd, p)
        scaled = invariants_closed_form(nd, rescale_b(p, lam))
        errors = (
            abs(scaled.torsion * lam**2 - base.torsion) / (1.0 + abs(base.torsion)),
            abs(scaled.webster * lam**2 - base.webster) / (1.0 + abs(base.webster)),
        )
        if max(errors) > SCALING_TOLERANCE:
            return _case(nd, p, b=p.b, lam=lam, error=max(errors))
        return None

    return _run_cases("scaling laws", count, rng, check)


def reeb_suite(count: int, rng: np.random.Generator) -> SuiteResult:
    """L_T J = 2·J·A on the contact plane at b = 1."""

    def check(rng: np.random.Generator, index: int) -> Optional[Dict[str, Any]]:
        nd = random_normalized(rng)
        a, c = float(rng.uniform(-2.0, 2.0)), float(rng.uniform(0.3, 3.0))
        torsion, _ = torsion_and_webster(nd, a, c, 1.0)
        lie = lie_derivative_reeb_J(nd, a, c)
        expected = 2.0 * j_endomorphism(a, c) @ torsion_matrix(a, c, torsion.conjugate())
        error = float(np.max(np.abs(lie - expected)))
        if error > REEB_TOLERANCE * (1.0 + float(np.max(np.abs(lie)))):
            return _case(nd, CRParameters(a, 1.0, c), error=error)
        return None

    return _run_cases("reeb derivative", count, rng, check)


def reduction_suite(count: int, rng: np.random.Generator) -> SuiteResult:
    """J̇ = 2·A at b = 1 reproduces the normalized (a, c) field."""

    def check(rng: np.random.Generator, index: int) -> Optional[Dict[str, Any]]:
        nd, p = random_normalized(rng), random_parameters(rng)
        torsion, _ = torsion_and_webster(nd, p.a, p.c, 1.0)
        reduced = np.array(j_velocity(p.a, p.c, torsion.conjugate()))
        expected = np.array(normalized_velocity(nd, p.a, p.c))
        error = float(np.max(np.abs(reduced - expected)))
        if error > REDUCTION_TOLERANCE * (1.0 + float(np.max(np.abs(expected)))):
            return _case(nd, CRParameters(p.a, 1.0, p.c), error=error)
        return None

    return _run_cases("normalized reduction", count, rng, check)


def frame_suite(count: int, rng: np.random.Generator, corrupt: bool = False) -> SuiteResult:
    """Geometry class survives a random change of frame and renormalization."""

    def check(rng: np.random.Generator, index: int) -> Optional[Dict[str, Any]]:
        nd = random_normalized(rng)
        if nd.c2_23 != 0.0 or nd.c3_23 != 0.0:
            nd = NormalizedContactData.from_free(c2_13=nd.c2_13, c3_12=nd.c3_12)
        frame = _random_frame(rng)
        moved = change_basis(nd.constants, frame)
        if corrupt:
            entries = moved.to_dict()
            entries["c3_23"] += CORRUPTION
            moved = StructureConstants.from_dict(entries)
        case = _case(nd, raw_constants={"constants": moved.tensor.tolist(), "theta": frame[0].tolist()})
        try:
            renormalized, _ = normalize_frame(validate(moved.tensor), frame[0])
        except TorsionFlowError as exc:
            case["error"] = f"{type(exc).__name__}: {exc}"
            return case
        expected, found = classify_geometry(nd), classify_geometry(renormalized)
        if expected != found:
            case["expected"], case["found"] = str(expected), str(found)
            return case
        return None

    return _run_cases("frame invariance", count, rng, check)


def closed_form_suite(opts: IntegratorOptions) -> SuiteResult:
    """RK45 against the exact circle-bundle solutions."""
    starts = (0.5, 1.0, 2.0)
    cases = [("pdq", K, c0, pdq_closed_form, pdq_blowup_time) for K in (-1.0, 0.0, 1.0) for c0 in starts]
    cases += [("prequant", K, c0, prequant_closed_form, prequant_blowup_time) for K in (-1.0, 1.0) for c0 in starts]

    def check(rng: np.random.Generator, index: int) -> Optional[Dict[str, Any]]:
        name, K, c0, exact, blowup = cases[index]
        nd, s0 = preset(name, K)
        s0 = s0.with_fields(c=c0)
        second = s0.b if name == "pdq" else s0.B
        t_end = min(1.0, 0.9 * blowup(K, s0.c, second))
        trajectory = integrate(FlowKind.UNNORMALIZED, nd, s0, t_end, opts)
        worst = 0.0
        for t, state in zip(trajectory.times, trajectory.states):
            c, B = exact(K, s0.c, second, float(t))
            worst = max(worst, abs(state.c - c) / abs(c), abs(state.B - B) / abs(B), abs(state.a))
        if worst > CLOSED_FORM_TOLERANCE or trajectory.terminal_event.kind is not EventKind.COMPLETED:
            return {"preset": {"name": name, "K": K}, "initial": {"c": c0}, "t_end": t_end, "error": worst}
        return None

    return _run_cases("closed-form agreement", len(cases), np.random.default_rng(0), check)


def start_grid() -> List[Tuple[float, float]]:
    """5×5 starts over [−2, 2] × [0.25, 4]."""
    return [(float(a), float(c)) for a in np.linspace(-2.0, 2.0, 5) for c in np.linspace(0.25, 4.0, 5)]


def convergence_suite(opts: IntegratorOptions) -> SuiteResult:
    """Normalized flow on SU(2) reaches the standard structure from the Rossi spheres and a start grid."""
    values = (0.1, 0.5, 0.9)
    grid = start_grid()

    def check(rng: np.random.Generator, index: int) -> Optional[Dict[str, Any]]:
        if index < len(values):
            nd, s0 = preset("rossi", values[index])
            origin: Dict[str, Any] = {"preset": {"name": "rossi", "t": values[index]}}
        else:
            nd, _ = preset("su2")
            a, c = grid[index - len(values)]
            s0 = FlowState(a, c, 1.0)
            origin = {"preset": {"name": "su2"}, "initial": {"a": a, "c": c}}
        final = integrate(FlowKind.NORMALIZED, nd, s0, 50.0, opts).final_state
        distance = float(np.hypot(final.a, final.c - 1.0))
        if distance > CONVERGENCE_TOLERANCE:
            return {**origin, "distance": distance}
        return None

    return _run_cases("convergence", len(values) + len(grid), np.random.default_rng(0), check)


def repelling_suite(opts: IntegratorOptions) -> SuiteResult:
    """Off the fixed point, normalized SL~(2,R) runs blow up or leave the domain, with a·ȧ > 0."""
    grid = start_grid()
    nd, _ = preset("sl2_hyperbolic")

    def check(rng: np.random.Generator, index: int) -> Optional[Dict[str, Any]]:
        a, c = grid[index]
        event = integrate(FlowKind.NORMALIZED, nd, FlowState(a, c, 1.0), 10.0, opts).terminal_event
        a_dot, _ = normalized_velocity(nd, a, c)
        if event.kind not in (EventKind.BLOW_UP, EventKind.DOMAIN_EXIT) or (a != 0.0 and a * a_dot <= 0.0):
            return {"preset": {"name": "sl2_hyperbolic"}, "initial": {"a": a, "c": c}, "event": str(event)}
        return None

    return _run_cases("repelling dynamics", len(grid), np.random.default_rng(0), check)


def monotonicity_suite(opts: IntegratorOptions) -> SuiteResult:
    """Functionals decrease along their flows and match the same weighting on both model groups."""
    starts = {
        FlowKind.UNNORMALIZED: FlowState(0.0, 2.0, 1.0),
        FlowKind.COUPLED_F: FlowState(0.0, 2.0, 1.0),
        FlowKind.COUPLED_W_PLUS: FlowState(0.0, 2.0, 1.0, tau=1.0),
        FlowKind.COUPLED_W_MINUS: FlowState(0.0, 2.0, 1.0, tau=1.0),
    }
    runs = [(name, kind) for name in ("su2", "sl2_hyperbolic") for kind in starts]
    matched: Dict[FlowKind, Weighting] = {}

    def check(rng: np.random.Generator, index: int) -> Optional[Dict[str, Any]]:
        name, kind = runs[index]
        nd, _ = preset(name)
        report = run_with_report(kind, nd, starts[kind], 0.2, EntropyConfig(functional_for(kind)), opts)
        first = matched.setdefault(kind, report.matched_weighting)
        if (
            not report.monotone
            or not report.constraint_conserved
            or report.matched_weighting is Weighting.NEITHER
            or report.matched_weighting is not first
        ):
            return {"preset": {"name": name}, "kind": kind.value, **report.to_dict()}
        return None

    return _run_cases("monotonicity", len(runs), np.random.default_rng(0), check)


def gradient_suite(count: int, rng: np.random.Generator, opts: IntegratorOptions) -> SuiteResult:
    """Unnormalized runs on random unimodular structures: E_H decreases at the rate fixed by the torsion norm."""

    def check(rng: np.random.Generator, index: int) -> Optional[Dict[str, Any]]:
        p, r = rng.uniform(-0.5, 0.5, size=2)
        nd = NormalizedContactData.from_free(c2_13=float(p), c3_12=float(r))
        s0 = FlowState(
            float(rng.uniform(-1.0, 1.0)),
            float(rng.uniform(1.0, 2.0)),
            float(rng.uniform(1.0, 2.0)),
        )
        report = run_with_report(
            FlowKind.UNNORMALIZED, nd, s0, 0.02, EntropyConfig(Functional.EINSTEIN_HILBERT), opts
        )
        if not report.monotone or report.residual_unweighted > MATCH_TOLERANCE:
            return _case(nd, CRParameters(s0.a, float(np.sqrt(s0.B)), s0.c), **report.to_dict())
        return None

    return _run_cases("gradient identity", count, rng, check)


def run_all(
    seed: Optional[int] = None,
    cases: Optional[int] = None,
    corrupt: bool = False,
    opts: Optional[IntegratorOptions] = None,
) -> VerifyReport:
    seed = settings.verify_seed if seed is None else seed
    cases = settings.verify_cases if cases is None else cases
    opts = opts or IntegratorOptions()
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    suites = [
        oracle_suite(cases, rng),
        scaling_suite(cases, rng),
        reeb_suite(cases, rng),
        reduction_suite(cases, rng),
        frame_suite(cases, rng, corrupt=corrupt),
        closed_form_suite(opts),
        convergence_suite(opts),
        repelling_suite(opts),
        monotonicity_suite(opts),
        gradient_suite(min(cases, GRADIENT_RUNS), rng, opts),
    ]
    report = VerifyReport(seed=seed, suites=suites, elapsed=time.perf_counter() - start)
    logger.info("verify_finished", passed=report.passed, seed=seed, cases=cases)
    return report
