"""
Verification campaigns behind the command line.

A campaign reads a ``CampaignConfig`` (JSON file plus flag overrides), builds
the frame it describes, runs the checks for one subcommand and writes three
artifacts: the structured JSON report (deterministic for a given config and
seed), a plain-text summary with wall-clock timings, and optionally a CSV of
per-point residuals.
"""

import json
import logging
import time
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, PrivateAttr, ValidationError, field_validator, model_validator

from .clifford_core import Multivector, Signature, blade_mask
from .config import (
    DEFAULT_POINTS,
    DEFAULT_SEED,
    DEFAULT_TOLERANCES,
    EXACT_MAX_GENERATORS,
    GAUGE_AMPLITUDE,
    GAUGE_DEGREE,
    ORTHO_AMPLITUDE,
    OUTPUT_DIR,
)
from .connection import (
    connection_field,
    uniqueness_probe,
    verify_connection_formulas,
    verify_defining_equation,
    verify_zero_curvature,
)
from .exceptions import CampaignConfigError
from .fixtures_io import load_coefficients, load_frame
from .frames import (
    Frame,
    GaugeScalar,
    OrthoMatrixField,
    constant_frame,
    gauge_frame,
    orthogonal_frame,
    reindex_frame,
    sample_points,
    scaled_generator,
    validate_frame,
)
from .gauge_ym import (
    CovDerivContext,
    YangMillsField,
    build_covconst_solution,
    build_sigma_solution,
    conservation_residual,
    covconst_build,
    covderiv_property_suite,
    gauge_invariance,
    gauge_transform_field,
    random_coefficients,
    round_trip_residual,
    scaled_current,
    vacuum_field,
    ym_residuals,
)
from .jets import BaseSpace, Polynomial, finite_difference_check
from .residuals import CheckResult, ResidualTracker

logger = logging.getLogger(__name__)

CAMPAIGNS = ("validate-frame", "connection", "yangmills", "all")


# ---------------------------------------------------------------------------
# Config models

class ExponentTerm(BaseModel):
    """One term ``coefficient * x^exponents * e^blade`` of a polynomial field."""
    blade: List[int] = Field(default_factory=list)
    coefficient: Union[float, str]
    exponents: List[int] = Field(default_factory=list)

    @field_validator("coefficient")
    @classmethod
    def _parse_coefficient(cls, value):
        if isinstance(value, str):
            try:
                Fraction(value)
            except (ValueError, ZeroDivisionError) as e:
                raise ValueError(f"coefficient '{value}' is not a number or p/q fraction") from e
        return value

    def number(self):
        return Fraction(self.coefficient) if isinstance(self.coefficient, str) else float(self.coefficient)


class FrameRecipe(BaseModel):
    type: Literal["constant", "orthogonal", "gauge", "fixture"] = "constant"
    kind: Literal["scalar", "vector"] = "scalar"

    # orthogonal frames
    orthogonal_mode: Literal["random", "rotation", "identity"] = "random"
    plane: Tuple[int, int] = (1, 2)
    axis: int = 1
    rate: float = 1.0
    reflect: bool = False
    amplitude: float = ORTHO_AMPLITUDE

    # gauge frames
    base_frame: Optional["FrameRecipe"] = None
    gauge_mode: Literal["random", "exp", "cayley"] = "random"
    gauge_amplitude: float = GAUGE_AMPLITUDE
    gauge_degree: int = GAUGE_DEGREE
    exponent: List[ExponentTerm] = Field(default_factory=list)
    cayley_blade: List[int] = Field(default_factory=lambda: [1, 2])
    cayley_t: List[ExponentTerm] = Field(default_factory=list)

    # fixture files
    path: Optional[str] = None

    # post-processing
    reindex: Optional[List[List[float]]] = None
    break_generator: Optional[int] = None
    break_factor: float = 1.1

    @model_validator(mode="after")
    def _check_recipe(self):
        if self.type == "fixture" and not self.path:
            raise ValueError("fixture frames need a 'path'")
        if self.gauge_degree < 0 or self.amplitude < 0 or self.gauge_amplitude < 0:
            raise ValueError("amplitudes and degrees must be non-negative")
        return self


class CampaignConfig(BaseModel):
    signature: Tuple[int, int] = (2, 0)
    base: Optional[Tuple[int, int]] = None
    frame: FrameRecipe = Field(default_factory=FrameRecipe)
    sigma: List[float] = Field(default_factory=list)
    coefficients: Optional[str] = None
    random_k: int = 0
    points: int = DEFAULT_POINTS
    seed: int = DEFAULT_SEED
    exact: bool = False
    gauge_check: bool = True
    gauge_points: int = 10
    property_points: int = 5
    fd_points: int = 20
    uniqueness_samples: int = 64
    tolerances: Dict[str, float] = Field(default_factory=dict)
    out: Optional[str] = None
    csv: bool = False

    @field_validator("tolerances")
    @classmethod
    def _merge_tolerances(cls, value: Dict[str, float]) -> Dict[str, float]:
        unknown = set(value) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ValueError(f"unknown tolerance keys: {sorted(unknown)}")
        merged = {**DEFAULT_TOLERANCES, **value}
        bad = [k for k, v in merged.items() if not v > 0]
        if bad:
            raise ValueError(f"tolerances must be positive: {bad}")
        return merged

    @model_validator(mode="after")
    def _check_config(self):
        if self.points < 1:
            raise ValueError("point count must be at least 1")
        if min(self.gauge_points, self.property_points, self.fd_points) < 0 or self.random_k < 0:
            raise ValueError("counts must be non-negative")
        if not self.tolerances:
            self.tolerances = dict(DEFAULT_TOLERANCES)
        n = self.signature[0] + self.signature[1]
        if self.exact and n > EXACT_MAX_GENERATORS:
            raise ValueError(f"exact mode supports n <= {EXACT_MAX_GENERATORS}, got n = {n}")
        if self.base is None:
            self.base = self.signature
        if len(set(self.sigma)) != len(self.sigma):
            raise ValueError(f"sigma values must be distinct, got {self.sigma}")
        # both raise ValueError subclasses
        Signature(*self.signature)
        BaseSpace(*self.base)
        return self

    @property
    def sig(self) -> Signature:
        return Signature(*self.signature)

    @property
    def base_space(self) -> BaseSpace:
        return BaseSpace(*self.base)


def load_config(path: Optional[Union[str, Path]] = None, overrides: Optional[Dict[str, Any]] = None) -> CampaignConfig:
    """File values first, then non-None overrides from the command line."""
    data: Dict[str, Any] = {}
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise CampaignConfigError(f"cannot read config {path}: {e}") from e
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return CampaignConfig.model_validate(data)
    except ValidationError as e:
        raise CampaignConfigError(f"invalid campaign config: {e}") from e


# ---------------------------------------------------------------------------
# Timings

class CampaignMonitor:
    """Wall-clock log of campaign stages; goes to the text summary, never the JSON report."""

    def __init__(self):
        self.stage_log: List[Dict[str, Any]] = []

    def log_stage(self, stage: str, seconds: float):
        self.stage_log.append({"stage": stage, "seconds": seconds})

    @contextmanager
    def track(self, stage: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            elapsed = time.perf_counter() - start
            self.log_stage(stage, elapsed)
            logger.info(f"{stage} took {elapsed:.2f}s")

    def get_summary(self) -> Dict[str, Any]:
        total = sum(s["seconds"] for s in self.stage_log)
        slowest = max(self.stage_log, key=lambda s: s["seconds"], default=None)
        return {
            "stages": len(self.stage_log),
            "total_seconds": round(total, 3),
            "slowest_stage": slowest["stage"] if slowest else None,
        }


# ---------------------------------------------------------------------------
# Reports

class Report(BaseModel):
    campaign: str
    seed: int
    config: Dict[str, Any]
    checks: List[CheckResult] = Field(default_factory=list)
    tables: Dict[str, List[Dict[str, Any]]] = Field(default_factory=dict)
    probes: Dict[str, float] = Field(default_factory=dict)
    passed: bool = True
    _timings: List[Dict[str, Any]] = PrivateAttr(default_factory=list)
    _paths: Dict[str, str] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def _unique_checks(self):
        names = [c.name for c in self.checks]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ValueError(f"checks listed more than once: {duplicates}")
        self.passed = all(c.passed for c in self.checks)
        return self

    def check(self, name: str) -> CheckResult:
        for item in self.checks:
            if item.name == name:
                return item
        raise KeyError(name)

    def failures(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True)

    def summary_table(self) -> pd.DataFrame:
        rows = [{"check": c.name, "max_residual": c.max_residual, "mean_residual": c.mean_residual,
                 "tolerance": c.tolerance, "samples": c.samples, "status": "PASS" if c.passed else "FAIL"}
                for c in self.checks]
        return pd.DataFrame(rows, columns=["check", "max_residual", "mean_residual", "tolerance", "samples", "status"])

    def per_point(self) -> pd.DataFrame:
        frames = [c.per_point() for c in self.checks if c.samples]
        return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()

    def summary_text(self) -> str:
        lines = [f"Campaign: {self.campaign}   seed: {self.seed}   "
                 f"result: {'PASS' if self.passed else 'FAIL'}", ""]
        lines.append(self.summary_table().to_string(index=False))
        for name, rows in sorted(self.tables.items()):
            lines += ["", f"{name}:", pd.DataFrame(rows).to_string(index=False)]
        if self.probes:
            lines += ["", "probes:"] + [f"  {k} = {v:.6g}" for k, v in sorted(self.probes.items())]
        if self._timings:
            lines += ["", "timings:"] + [f"  {t['stage']}: {t['seconds']:.2f}s" for t in self._timings]
        return "\n".join(lines) + "\n"


def _assemble(campaign: str, config: CampaignConfig, checks: List[CheckResult], monitor: CampaignMonitor,
              tables: Optional[Dict[str, List[Dict[str, Any]]]] = None,
              probes: Optional[Dict[str, float]] = None) -> Report:
    report = Report(campaign=campaign, seed=config.seed, config=config.model_dump(mode="json"), checks=checks,
                    tables=tables or {}, probes=probes or {})
    report._timings = list(monitor.stage_log)
    return report


def write_report(report: Report, config: CampaignConfig) -> Dict[str, Path]:
    out = Path(config.out) if config.out else OUTPUT_DIR / f"{report.campaign}.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    paths = {"json": out, "summary": out.with_suffix(".txt")}
    out.write_text(report.to_json())
    paths["summary"].write_text(report.summary_text())
    if config.csv:
        paths["csv"] = out.with_suffix(".csv")
        report.per_point().to_csv(paths["csv"], index=False)
    report._paths = {k: str(v) for k, v in paths.items()}
    logger.info(f"Report written to {out}")
    return paths


# ---------------------------------------------------------------------------
# Frame construction from a recipe

def _polynomial(sig: Signature, m: int, terms: List[ExponentTerm]) -> Polynomial:
    out = []
    for term in terms:
        alpha = tuple(term.exponents) if term.exponents else (0,) * m
        if len(alpha) != m:
            raise CampaignConfigError(f"exponent list {term.exponents} needs {m} entries")
        mv = Multivector.blade(sig, blade_mask(term.blade), term.number())
        out.append((alpha, mv))
    if not out:
        raise CampaignConfigError("polynomial needs at least one term")
    return Polynomial(sig, out)


def _gauge_scalar(recipe: FrameRecipe, sig: Signature, m: int, rng: np.random.Generator) -> GaugeScalar:
    if recipe.gauge_mode == "random":
        return GaugeScalar.random(sig, m, rng, recipe.gauge_amplitude, recipe.gauge_degree)
    if recipe.gauge_mode == "exp":
        return GaugeScalar.from_exponent(_polynomial(sig, m, recipe.exponent))
    t = _polynomial(sig, m, recipe.cayley_t or [ExponentTerm(coefficient="1/2", exponents=[1] + [0] * (m - 1))])
    return GaugeScalar.cayley(sig, blade_mask(recipe.cayley_blade), t)


def build_frame(recipe: FrameRecipe, sig: Signature, base: BaseSpace, rng: np.random.Generator) -> Frame:
    if recipe.type == "fixture":
        frame = load_frame(recipe.path)
        if frame.sig != sig or frame.base != base:
            raise CampaignConfigError(f"fixture {recipe.path} is {frame}, campaign asks for {sig} over {base}")
    elif recipe.type == "constant":
        frame = constant_frame(sig, base, recipe.kind)
    elif recipe.type == "orthogonal":
        if recipe.orthogonal_mode == "identity":
            field = OrthoMatrixField.identity(sig, base.m)
        elif recipe.orthogonal_mode == "rotation":
            field = OrthoMatrixField.rotation(sig, base.m, recipe.plane, recipe.axis, recipe.rate)
        else:
            field = OrthoMatrixField.random(sig, base.m, rng, recipe.amplitude, recipe.reflect)
        frame = orthogonal_frame(field, base, recipe.kind)
    else:
        inner = recipe.base_frame or FrameRecipe(kind=recipe.kind)
        parent = build_frame(inner, sig, base, rng)
        frame = gauge_frame(_gauge_scalar(recipe, sig, base.m, rng), parent)
    if recipe.reindex is not None:
        frame = reindex_frame(frame, np.array(recipe.reindex))
    if recipe.break_generator is not None:
        frame = scaled_generator(frame, recipe.break_generator, recipe.break_factor)
    logger.info(f"Built {frame}")
    return frame


def _campaign_frame(config: CampaignConfig) -> Tuple[Frame, np.ndarray]:
    rng = np.random.default_rng(config.seed)
    frame = build_frame(config.frame, config.sig, config.base_space, rng)
    points = sample_points(frame.m, config.points, config.seed)
    return frame, points


# ---------------------------------------------------------------------------
# Campaign bodies

def _frame_checks(config: CampaignConfig, frame: Frame, points: np.ndarray,
                  monitor: CampaignMonitor) -> List[CheckResult]:
    tol = config.tolerances
    with monitor.track("frame constraints"):
        checks = list(validate_frame(frame, points, tol, config.exact).checks)
    if frame.gauge is not None:
        with monitor.track("gauge scalar"):
            checks.append(frame.gauge.validate(points, frame.m, tol["gauge_scalar"], config.exact))
    if config.fd_points:
        with monitor.track("finite differences"):
            tracker = ResidualTracker("finite_difference", tol["finite_difference"])
            for x in points[:config.fd_points]:
                worst = max(finite_difference_check(g, x).max_deviation for g in frame.gens)
                tracker.record(worst, x)
            checks.append(tracker.summary())
    return checks


def _connection_checks(config: CampaignConfig, frame: Frame, points: np.ndarray,
                       monitor: CampaignMonitor) -> Tuple[List[CheckResult], Dict[str, float]]:
    tol = config.tolerances
    connection = connection_field(frame)
    with monitor.track("defining equation"):
        checks = list(verify_defining_equation(frame, connection, points, tol, config.exact).checks)
    with monitor.track("zero curvature"):
        checks += verify_zero_curvature(connection, points, tol, config.exact).checks
    with monitor.track("connection formulas"):
        checks += verify_connection_formulas(frame, points, tol, config.exact, config.seed).checks
    if frame.gauge is not None and frame.parent is not None:
        with monitor.track("gauge-transported connection"):
            transported = connection_field(frame, "gauge")
            checks += verify_defining_equation(frame, transported, points, tol, config.exact).prefixed("transported/")
    probes = {}
    if config.uniqueness_samples:
        probes["uniqueness_min_commutator"] = uniqueness_probe(frame, points[0], config.uniqueness_samples,
                                                               config.seed)
    return checks, probes


def _field_checks(prefix: str, field: YangMillsField, points: np.ndarray, config: CampaignConfig) -> List[CheckResult]:
    tol = config.tolerances
    checks = ym_residuals(field, points, tol, config.exact).prefixed(prefix)
    checks.append(conservation_residual(field, points, tol=tol["conservation"]).renamed(f"{prefix}conservation"))
    return checks


def _wrong_current_check(prefix: str, field: YangMillsField, points: np.ndarray,
                         config: CampaignConfig) -> CheckResult:
    tol = config.tolerances["conservation"]
    probe = conservation_residual(field, points, tol=tol, current_override=scaled_current(field))
    # passes when the rescaled current is caught
    return CheckResult(name=f"{prefix}wrong_current_detected", tolerance=tol, max_residual=probe.max_residual,
                       mean_residual=probe.mean_residual, worst_point=probe.worst_point, samples=probe.samples,
                       passed=bool(probe.max_residual > tol), detail={"expected": "residual above tolerance"})


def _gauge_checks(prefix: str, field: YangMillsField, S: GaugeScalar, points: np.ndarray,
                  config: CampaignConfig) -> List[CheckResult]:
    tol = config.tolerances
    subset = points[:config.gauge_points]
    before = ym_residuals(field, subset, tol)
    after = ym_residuals(gauge_transform_field(field, S), subset, tol)
    return [
        gauge_invariance(before, after).renamed(f"{prefix}gauge_invariance"),
        round_trip_residual(field, S, subset, tol["round_trip"]).renamed(f"{prefix}round_trip"),
    ]


def _yangmills_checks(config: CampaignConfig, frame: Frame, points: np.ndarray, monitor: CampaignMonitor
                      ) -> Tuple[List[CheckResult], Dict[str, List[Dict[str, Any]]]]:
    tol = config.tolerances
    checks: List[CheckResult] = []
    tables: Dict[str, List[Dict[str, Any]]] = {}
    with monitor.track("covariant derivative context"):
        ctx = CovDerivContext(frame, tolerances=tol)
    rng = np.random.default_rng(config.seed + 1)
    gauge = None
    if config.gauge_check and config.gauge_points:
        if config.exact:
            logger.warning("Gauge-invariance checks use an exponential gauge and are skipped in exact mode")
        elif frame.n >= 2:
            gauge = GaugeScalar.random(frame.sig, frame.m, rng)

    fields: List[Tuple[str, YangMillsField]] = []
    if config.sigma:
        if frame.kind != "vector":
            raise CampaignConfigError("sigma solutions need a vector frame (frame.kind = 'vector')")
        rows = []
        for sigma in config.sigma:
            field = build_sigma_solution(frame, sigma, ctx)
            rows.append({"sigma": sigma, "epsilon": field.epsilon})
            fields.append((f"sigma={sigma:g}/", field))
        tables["sigma_epsilon"] = rows
    if config.coefficients:
        doc = load_coefficients(config.coefficients, frame.sig, frame.base)
        K = covconst_build(ctx, doc["coefficients"], doc["center_free"], tol=tol["covariant_constancy"])
        checks.append(K.check.renamed("K_file/covariant_constancy"))
        fields.append(("K_file/", build_covconst_solution(ctx, K)))
    for i in range(config.random_k):
        K = covconst_build(ctx, random_coefficients(ctx, rng), tol=tol["covariant_constancy"])
        checks.append(K.check.renamed(f"K{i}/covariant_constancy"))
        fields.append((f"K{i}/", build_covconst_solution(ctx, K)))
    if not fields:
        raise CampaignConfigError("yangmills needs a sigma list, a coefficient file or random_k > 0")

    for prefix, field in fields:
        with monitor.track(f"yang-mills {prefix.rstrip('/')}"):
            checks += _field_checks(prefix, field, points, config)
            if field.sigma is None or field.sigma != 0:
                checks.append(_wrong_current_check(prefix, field, points[:config.gauge_points or 1], config))
        if gauge is not None:
            with monitor.track(f"gauge transform {prefix.rstrip('/')}"):
                checks += _gauge_checks(prefix, field, gauge, points, config)

    if gauge is not None:
        with monitor.track("vacuum"):
            vacuum = vacuum_field(gauge, frame.base)
            checks += ym_residuals(vacuum, points[:config.gauge_points], tol).prefixed("vacuum/")
    if config.property_points:
        with monitor.track("covariant derivative properties"):
            checks += covderiv_property_suite(ctx, points[:config.property_points], config.seed, tol,
                                              config.exact).prefixed("covariant_derivative/")
    return checks, tables


# ---------------------------------------------------------------------------
# Subcommands

def cmd_validate_frame(config: CampaignConfig, write: bool = True) -> Report:
    monitor = CampaignMonitor()
    with monitor.track("frame construction"):
        frame, points = _campaign_frame(config)
    report = _assemble("validate-frame", config, _frame_checks(config, frame, points, monitor), monitor)
    return _finish(report, config, write)


def cmd_connection(config: CampaignConfig, write: bool = True) -> Report:
    monitor = CampaignMonitor()
    with monitor.track("frame construction"):
        frame, points = _campaign_frame(config)
    checks, probes = _connection_checks(config, frame, points, monitor)
    return _finish(_assemble("connection", config, checks, monitor, probes=probes), config, write)


def cmd_yangmills(config: CampaignConfig, write: bool = True) -> Report:
    monitor = CampaignMonitor()
    with monitor.track("frame construction"):
        frame, points = _campaign_frame(config)
    checks, tables = _yangmills_checks(config, frame, points, monitor)
    return _finish(_assemble("yangmills", config, checks, monitor, tables=tables), config, write)


def cmd_all(config: CampaignConfig, write: bool = True) -> Report:
    monitor = CampaignMonitor()
    with monitor.track("frame construction"):
        frame, points = _campaign_frame(config)
    checks = [c.renamed(f"frame/{c.name}") for c in _frame_checks(config, frame, points, monitor)]
    connection_checks, probes = _connection_checks(config, frame, points, monitor)
    checks += [c.renamed(f"connection/{c.name}") for c in connection_checks]
    tables: Dict[str, List[Dict[str, Any]]] = {}
    if config.sigma or config.coefficients or config.random_k:
        ym_checks, tables = _yangmills_checks(config, frame, points, monitor)
        checks += [c.renamed(f"yangmills/{c.name}") for c in ym_checks]
    else:
        logger.info("No sigma list or K coefficients given; skipping the Yang-Mills stage")
    return _finish(_assemble("all", config, checks, monitor, tables=tables, probes=probes), config, write)


COMMANDS = {
    "validate-frame": cmd_validate_frame,
    "connection": cmd_connection,
    "yangmills": cmd_yangmills,
    "all": cmd_all,
}


def _finish(report: Report, config: CampaignConfig, write: bool) -> Report:
    for check in report.checks:
        if not check.passed:
            logger.warning(f"{check.name} failed: max residual {check.max_residual:.3g} "
                           f"(tolerance {check.tolerance:.1g}) at {check.worst_point}")
    if report.passed:
        logger.info(f"✓ {report.campaign}: all {len(report.checks)} checks passed")
    if write:
        write_report(report, config)
    return report


def run_campaign(name: str, config: CampaignConfig, write: bool = True) -> Report:
    if name not in COMMANDS:
        raise CampaignConfigError(f"unknown campaign '{name}', expected one of {CAMPAIGNS}")
    return COMMANDS[name](config, write)
