"""Mamdani fuzzy controller producing the battery power share.

Inputs are the normalized demand power (preq, [-1, 1]) and the two states of
charge (socbat, socsc, [0, 1]); the single output kbat in [0, 1] is the
fraction of the demand assigned to the battery. Inference is min/max with
centroid defuzzification on a fixed 501-point grid. The rule base is data: a
small text format (see ``parse_rule_base``) with a canonical default shipped
in ``data/default_rules.txt``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from ._kernels import mamdani_centroid
from .errors import RuleBaseError

INPUT_VARS = ("preq", "socbat", "socsc")
OUTPUT_VAR = "kbat"
DOMAINS = {"preq": (-1.0, 1.0), "socbat": (0.0, 1.0), "socsc": (0.0, 1.0), "kbat": (0.0, 1.0)}
GRID_POINTS = 501
COVERAGE_GRID = 21


@dataclass(frozen=True)
class MembershipFunction:
    """Triangular or trapezoidal membership function."""

    shape: str
    breakpoints: tuple
    label: str

    def __post_init__(self):
        pts = tuple(float(p) for p in self.breakpoints)
        want = {"tri": 3, "trap": 4}.get(self.shape)
        if want is None:
            raise RuleBaseError(f"unknown membership shape {self.shape!r}")
        if len(pts) != want:
            raise RuleBaseError(
                f"{self.shape} membership {self.label!r} needs {want} breakpoints, got {len(pts)}"
            )
        if any(b < a for a, b in zip(pts, pts[1:])):
            raise RuleBaseError(f"membership {self.label!r} breakpoints must be non-decreasing")
        object.__setattr__(self, "breakpoints", pts)

    @property
    def corners(self):
        """Trapezoid corners (a, b, c, d); a triangle doubles its peak."""
        if self.shape == "tri":
            a, b, c = self.breakpoints
            return (a, b, b, c)
        return self.breakpoints

    def mu(self, x):
        """Membership degree of x (scalar or array)."""
        a, b, c, d = self.corners
        x = np.asarray(x, dtype=float)
        rising = (x - a) / (b - a) if b > a else np.ones_like(x)
        falling = (d - x) / (d - c) if d > c else np.ones_like(x)
        out = np.minimum(np.minimum(rising, 1.0), falling)
        out = np.where((x < a) | (x > d), 0.0, np.clip(out, 0.0, 1.0))
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Rule:
    antecedents: tuple  # ((var, label), ...) with each var at most once
    consequent: str


@dataclass
class FuzzyRuleBase:
    """Validated rule base plus arrays compiled for the inference kernel."""

    input_mfs: dict
    output_mfs: list
    rules: list
    _compiled: tuple = field(default=None, repr=False, compare=False)

    def compiled(self):
        if self._compiled is None:
            self._compiled = _compile(self)
        return self._compiled


def _compile(rb: FuzzyRuleBase):
    mf_rows = []
    index = {}
    for var in INPUT_VARS:
        for mf in rb.input_mfs[var]:
            index[(var, mf.label)] = len(mf_rows)
            mf_rows.append(mf.corners)
    in_mfs = np.ascontiguousarray(mf_rows, dtype=float)

    out_index = {mf.label: i for i, mf in enumerate(rb.output_mfs)}
    lo, hi = DOMAINS[OUTPUT_VAR]
    grid = np.linspace(lo, hi, GRID_POINTS)
    out_mu = np.ascontiguousarray([mf.mu(grid) for mf in rb.output_mfs], dtype=float)

    ant = np.full((len(rb.rules), 3), -1, dtype=np.int32)
    out = np.zeros(len(rb.rules), dtype=np.int32)
    for r, rule in enumerate(rb.rules):
        for var, label in rule.antecedents:
            ant[r, INPUT_VARS.index(var)] = index[(var, label)]
        out[r] = out_index[rule.consequent]
    return in_mfs, np.ascontiguousarray(ant), np.ascontiguousarray(out), out_mu, grid


def parse_rule_base(text: str) -> FuzzyRuleBase:
    """Parse the rule-base text format.

    Lines (``#`` comments and blanks ignored):
      mf <var> <label> tri a b c
      mf <var> <label> trap a b c d
      if <var>=<Label> and <var>=<Label> ... then kbat=<Label>
    """
    input_mfs = {var: [] for var in INPUT_VARS}
    output_mfs = []
    rules = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            if line.startswith("mf "):
                _parse_mf(line, input_mfs, output_mfs)
            elif line.startswith("if "):
                rules.append(_parse_rule(line, input_mfs, output_mfs))
            else:
                raise RuleBaseError(f"expected 'mf' or 'if', got {line.split()[0]!r}")
        except RuleBaseError as exc:
            raise RuleBaseError(f"line {lineno}: {exc}") from None
    rb = FuzzyRuleBase(input_mfs=input_mfs, output_mfs=output_mfs, rules=rules)
    _validate(rb)
    return rb


def _parse_mf(line, input_mfs, output_mfs):
    parts = line.split()
    if len(parts) < 4:
        raise RuleBaseError(f"malformed mf line: {line!r}")
    _, var, label, shape, *nums = parts
    if var not in DOMAINS:
        raise RuleBaseError(f"unknown variable {var!r}")
    try:
        pts = tuple(float(v) for v in nums)
    except ValueError:
        raise RuleBaseError(f"non-numeric breakpoint in {line!r}")
    mf = MembershipFunction(shape=shape, breakpoints=pts, label=label)
    bucket = output_mfs if var == OUTPUT_VAR else input_mfs[var]
    if any(existing.label == label for existing in bucket):
        raise RuleBaseError(f"duplicate membership label {label!r} for {var}")
    bucket.append(mf)


def _parse_rule(line, input_mfs, output_mfs):
    body = line[3:]
    if " then " not in body:
        raise RuleBaseError(f"rule missing 'then': {line!r}")
    ant_text, _, cons_text = body.partition(" then ")
    antecedents = []
    seen = set()
    for clause in ant_text.split(" and "):
        var, label = _parse_clause(clause)
        if var == OUTPUT_VAR:
            raise RuleBaseError("output variable cannot appear in antecedents")
        if var in seen:
            raise RuleBaseError(f"variable {var!r} used twice in one rule")
        seen.add(var)
        if not any(mf.label == label for mf in input_mfs[var]):
            raise RuleBaseError(f"unknown term {label!r} for {var}")
        antecedents.append((var, label))
    if not antecedents:
        raise RuleBaseError("rule has no antecedents")
    var, label = _parse_clause(cons_text)
    if var != OUTPUT_VAR:
        raise RuleBaseError(f"consequent must assign {OUTPUT_VAR}, got {var!r}")
    if not any(mf.label == label for mf in output_mfs):
        raise RuleBaseError(f"unknown term {label!r} for {OUTPUT_VAR}")
    return Rule(antecedents=tuple(antecedents), consequent=label)


def _parse_clause(clause):
    clause = clause.strip()
    if "=" not in clause:
        raise RuleBaseError(f"malformed clause {clause!r}")
    var, _, label = clause.partition("=")
    var, label = var.strip(), label.strip()
    if var not in DOMAINS:
        raise RuleBaseError(f"unknown variable {var!r}")
    return var, label


def _validate(rb: FuzzyRuleBase):
    for var in INPUT_VARS:
        if not rb.input_mfs[var]:
            raise RuleBaseError(f"no membership functions for input {var!r}")
    if not rb.output_mfs:
        raise RuleBaseError(f"no membership functions for output {OUTPUT_VAR!r}")
    if not rb.rules:
        raise RuleBaseError("rule base has no rules")

    lo, hi = DOMAINS[OUTPUT_VAR]
    grid = np.linspace(lo, hi, GRID_POINTS)
    support = np.zeros_like(grid)
    for mf in rb.output_mfs:
        support = np.maximum(support, mf.mu(grid))
    if np.any(support <= 0.0):
        hole = grid[int(np.argmin(support))]
        raise RuleBaseError(f"output terms leave {OUTPUT_VAR}={hole:.3f} uncovered")

    _coverage_check(rb)


def _coverage_check(rb: FuzzyRuleBase):
    """Every combination on a 21³ input grid must fire at least one rule."""
    axes = [np.linspace(*DOMAINS[var], COVERAGE_GRID) for var in INPUT_VARS]
    # membership of every term at every grid point, per input
    mu = {
        var: {mf.label: mf.mu(axes[i]) for mf in rb.input_mfs[var]}
        for i, var in enumerate(INPUT_VARS)
    }
    strength = np.zeros((COVERAGE_GRID,) * 3)
    for rule in rb.rules:
        w = np.ones((COVERAGE_GRID,) * 3)
        for var, label in rule.antecedents:
            axis = INPUT_VARS.index(var)
            shape = [1, 1, 1]
            shape[axis] = COVERAGE_GRID
            w = np.minimum(w, mu[var][label].reshape(shape))
        strength = np.maximum(strength, w)
    if np.any(strength <= 0.0):
        idx = np.unravel_index(int(np.argmin(strength)), strength.shape)
        witness = {var: float(axes[i][idx[i]]) for i, var in enumerate(INPUT_VARS)}
        raise RuleBaseError(f"rule base does not cover input point {witness}")


def load_rule_base(source) -> FuzzyRuleBase:
    """Load and validate a rule base from a path or a byte/text stream."""
    if hasattr(source, "read"):
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    else:
        with open(source, "rb") as fh:
            text = fh.read().decode("utf-8")
    return parse_rule_base(text)


_DEFAULT = None


def default_rule_base() -> FuzzyRuleBase:
    """The rule base shipped with the package (parsed once, then cached)."""
    global _DEFAULT
    if _DEFAULT is None:
        text = resources.files("hesskit.data").joinpath("default_rules.txt").read_text("utf-8")
        _DEFAULT = parse_rule_base(text)
    return _DEFAULT


def evaluate(rb: FuzzyRuleBase, p_req_norm: float, soc_bat: float, soc_sc: float) -> float:
    """Battery share k_bat in [0, 1] for the given (clamped) inputs."""
    x = []
    for var, val in zip(INPUT_VARS, (p_req_norm, soc_bat, soc_sc)):
        lo, hi = DOMAINS[var]
        x.append(min(max(float(val), lo), hi))
    in_mfs, ant, out, out_mu, grid = rb.compiled()
    k = mamdani_centroid(in_mfs, ant, out, out_mu, grid, x[0], x[1], x[2])
    if not np.isfinite(k):
        raise RuleBaseError(
            f"no rule fired at preq={x[0]:.4f} socbat={x[1]:.4f} socsc={x[2]:.4f}"
        )
    lo, hi = DOMAINS[OUTPUT_VAR]
    return min(max(k, lo), hi)
