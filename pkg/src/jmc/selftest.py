"""Randomised property checks for the interval and McCormick kernels.

The generator emits expression *text*; cases are rejected when the graph is
not domain-valid on the sampled box or its bounds exceed ``MAX_MAGNITUDE``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .expr import ExprGraph, eval_real, parse
from .interval import Box, Interval, eval_interval, iv_arith
from .relax import RelaxationScheme, relax_at

MAX_DEPTH = 6
MAX_MAGNITUDE = 1e3
ULP_SLACK = 4
CONVEXITY_SLACK = 1e-10


def ulp_slack(*values: float) -> float:
    return ULP_SLACK * math.ulp(max(abs(v) for v in values))


def working_scale(scheme: RelaxationScheme) -> float:
    """Largest magnitude among all node bounds; rounding errors scale with it."""
    return max(max(abs(b.lo), abs(b.hi)) for b in scheme.bounds)


def random_text(rng: np.random.Generator, depth: int, n_x: int, n_w: int) -> str:
    """Random well-formed expression text of nesting depth at most ``depth``."""
    if depth <= 1 or rng.random() < 0.2:
        r = rng.random()
        if r < 0.4 and n_x:
            return f"x{rng.integers(1, n_x + 1)}"
        if r < 0.8 and n_w:
            return f"w{rng.integers(1, n_w + 1)}"
        return repr(round(float(rng.uniform(0.1, 3.0)), 2))
    sub = lambda: random_text(rng, depth - 1, n_x, n_w)
    k = rng.integers(0, 12)
    if k <= 1:
        return f"({sub()}+{sub()})"
    if k == 2:
        return f"({sub()}-{sub()})"
    if k <= 4:
        return f"({sub()}*{sub()})"
    if k == 5:
        guard = rng.random() < 0.5
        return f"({sub()}/(1+({sub()})^2))" if guard else f"({sub()}/{sub()})"
    if k == 6:
        return f"({sub()})^{rng.integers(2, 6)}"
    if k == 7:
        return f"(-{sub()})"
    fn = ("exp", "ln", "sqrt", "sin", "cos")[rng.integers(0, 5)]
    if fn in ("ln", "sqrt") and rng.random() < 0.5:
        return f"{fn}(0.5+({sub()})^2)"
    if fn == "exp":
        return f"exp({sub()}/4)"
    return f"{fn}({sub()})"


@dataclass
class Case:
    text: str
    graph: ExprGraph
    box: Box

    @property
    def n_x(self) -> int:
        return self.graph.n_x


def random_box(rng: np.random.Generator, n: int, max_width: float = 2.0) -> Box:
    comps = []
    for _ in range(n):
        c = float(rng.uniform(-2.0, 2.0))
        h = float(rng.uniform(0.0, max_width)) * 0.5
        comps.append(Interval(c - h, c + h))
    return Box(comps)


def random_case(rng: np.random.Generator, n_x: int = 2, n_w: int = 2,
                depth: int = MAX_DEPTH, max_tries: int = 1000) -> Case:
    for _ in range(max_tries):
        text = random_text(rng, int(rng.integers(1, depth + 1)), n_x, n_w)
        g = parse(text, n_x=n_x, n_w=n_w)
        box = random_box(rng, n_x + n_w)
        try:
            b = eval_interval(g, box.components[:n_x], box.components[n_x:])
            RelaxationScheme(g, box)
        except (DomainError, OverflowError):
            continue
        if max(abs(b.lo), abs(b.hi)) <= MAX_MAGNITUDE:
            return Case(text, g, box)
    raise RuntimeError("could not draw a domain-valid case")


def random_point(rng: np.random.Generator, box: Box) -> list[float]:
    return [float(rng.uniform(c.lo, c.hi)) if c.width > 0 else c.lo for c in box]


def python_eval(text: str, x, w) -> float:
    """Evaluate expression text with Python's own parser (reference route)."""
    src = text.replace("^", "**")
    env = {"exp": math.exp, "ln": math.log, "sqrt": math.sqrt, "sin": math.sin, "cos": math.cos}
    env.update({f"x{i + 1}": float(v) for i, v in enumerate(x)})
    env.update({f"w{i + 1}": float(v) for i, v in enumerate(w)})
    return float(eval(src, {"__builtins__": {}}, env))


@dataclass
class Report:
    checks: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def record(self, name: str, ok: bool, detail: str = ""):
        n_ok, n_total = self.checks.get(name, (0, 0))
        self.checks[name] = (n_ok + bool(ok), n_total + 1)
        if not ok and len(self.failures) < 20:
            self.failures.append(f"{name}: {detail}")

    @property
    def ok(self) -> bool:
        return all(a == b for a, b in self.checks.values())

    def lines(self) -> list[str]:
        out = []
        for name, (a, b) in self.checks.items():
            out.append(f"{'PASS' if a == b else 'FAIL'} {name}: {a}/{b}")
        return out + [f"  {f}" for f in self.failures]


def check_case(case: Case, rng: np.random.Generator, report: Report):
    """Evaluation, inclusion, sandwich, convexity and degenerate-box checks for one case."""
    g, box, nx = case.graph, case.box, case.n_x
    scheme = RelaxationScheme(g, box)
    lo, hi = scheme.root_bounds.lo, scheme.root_bounds.hi
    p = random_point(rng, box)
    try:
        f = eval_real(g, p[:nx], p[nx:])
    except DomainError:
        report.record("eval", False, f"{case.text} at {p}: domain error inside a valid box")
        return
    ref = python_eval(case.text, p[:nx], p[nx:])
    report.record("eval_vs_reference", abs(f - ref) <= ulp_slack(f, ref) or f == ref,
                  f"{case.text} at {p}: {f!r} vs {ref!r}")
    report.record("inclusion", lo <= f <= hi, f"{case.text} at {p}: {f!r} not in [{lo!r}, {hi!r}]")
    v = relax_at(scheme, p)
    s = ulp_slack(f, working_scale(scheme))
    ok = lo - s <= v.cv <= f + s and f - s <= v.cc <= hi + s
    report.record("sandwich", ok, f"{case.text} at {p}: lo={lo!r} cv={v.cv!r} f={f!r} cc={v.cc!r} hi={hi!r}")
    q = random_point(rng, box)
    lam = float(rng.uniform(0.0, 1.0))
    r = [lam * a + (1.0 - lam) * b for a, b in zip(p, q)]
    vq, vr = relax_at(scheme, q), relax_at(scheme, r)
    report.record("convexity_cv", vr.cv <= lam * v.cv + (1.0 - lam) * vq.cv + CONVEXITY_SLACK,
                  f"{case.text}: cv midpoint violation")
    report.record("concavity_cc", vr.cc >= lam * v.cc + (1.0 - lam) * vq.cc - CONVEXITY_SLACK,
                  f"{case.text}: cc midpoint violation")
    try:
        pt = RelaxationScheme(g, Box.point(p))
    except DomainError:
        return
    d = relax_at(pt, p)
    s = ulp_slack(f, working_scale(pt))
    report.record("degenerate_box", abs(d.cv - f) <= s and abs(d.cc - f) <= s,
                  f"{case.text} at {p}: cv={d.cv!r} cc={d.cc!r} f={f!r}")


_MONO_OPS = ("neg", "exp", "ln", "sqrt", "sin", "cos", "pow")


def check_monotonicity(rng: np.random.Generator, report: Report):
    """S' subset of S implies op(S') subset of op(S) for a random unary op."""
    op = _MONO_OPS[rng.integers(0, len(_MONO_OPS))]
    base = 0.01 if op in ("ln", "sqrt") else -4.0
    a, b = sorted(float(v) for v in rng.uniform(base, 4.0, 2))
    c, d = sorted(float(v) for v in rng.uniform(a, b, 2))
    n = int(rng.integers(2, 7)) if op == "pow" else None
    outer = iv_arith(op, Interval(a, b), n)
    inner = iv_arith(op, Interval(c, d), n)
    report.record("inclusion_monotone", inner in outer, f"{op} {[c, d]} in {[a, b]}")


def run(cases: int = 2000, seed: int = 0) -> Report:
    rng = np.random.Generator(np.random.PCG64(seed))
    report = Report()
    for _ in range(cases):
        n_x, n_w = int(rng.integers(0, 3)), int(rng.integers(0, 3))
        if n_x + n_w == 0:
            n_x = 1
        check_case(random_case(rng, n_x, n_w), rng, report)
        check_monotonicity(rng, report)
    return report
