"""Experiment runner: every engine as a subcommand with deterministic output.

Configs are flat key=value text files (one dotted key per line, ``#`` starts
a comment).  Each run writes a fixed-schema CSV, prints a plain-text
summary, optionally emits a small SVG chart, and exits 0 on PASS, 1 on
FALSIFIED (serializing the falsifying witness vector alongside the CSV),
2 on INCONCLUSIVE, 3 on configuration or usage errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import random
import sys
from dataclasses import dataclass
from pathlib import Path

from .groups import (
    INFINITE,
    DegenerateInputError,
    FreeProductPresentation,
    GroupElement,
    PresentationMismatchError,
    reduce,
)
from .operators import (
    FormalOperator,
    NormBudget,
    NormEstimate,
    StateVector,
    norm_lower_bound,
    triangle_upper_bound,
)
from .spaces import BudgetExceededError, CayleySpace, orbit_decompose
from .dynamics import (
    FALSIFIED,
    INCONCLUSIVE,
    PASS,
    averaging_decay_report,
    canonical_trace,
    finite_order_blowup,
    ideal_experiment,
    pingpong_certificate,
    tracial_property_check,
    verify_panalytic,
)

EXIT_PASS = 0
EXIT_FALSIFIED = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 3

CSV_HEADER = "experiment,param_hash,index,bound,estimate,residual,support,converged,verdict"

EXPERIMENTS = (
    "panalytic",
    "average",
    "norm",
    "trace",
    "orbits",
    "pingpong",
    "blowup",
    "ideal",
)


class ConfigError(ValueError):
    """Unparseable or inconsistent configuration; maps to exit code 3."""


class WordParseError(ValueError):
    """A group word failed to parse under the presentation."""


# ---------------------------------------------------------------------------
# word and operator grammar


def parse_word(text: str, presentation: FreeProductPresentation) -> GroupElement:
    """Parse the canonical rendering: space-separated ``name`` or ``name^int``.

    The token ``e`` is the identity.  parse(render(x)) == x for every x.
    """
    name_to_index = {n: i for i, n in enumerate(presentation.factor_names)}
    raw: list[tuple[int, int]] = []
    for token in text.split():
        if token == "e":
            continue
        name, _, exp_text = token.partition("^")
        if name not in name_to_index:
            raise WordParseError(f"unknown generator {name!r} in {text!r}")
        if _ == "^":
            try:
                exp = int(exp_text)
            except ValueError:
                raise WordParseError(f"malformed exponent {exp_text!r} in {text!r}") from None
        else:
            exp = 1
        raw.append((name_to_index[name], exp))
    return reduce(presentation, raw)


def render_word(x: GroupElement) -> str:
    return x.render()


def parse_operator(text: str, presentation: FreeProductPresentation) -> FormalOperator:
    """Parse ``coeff*word; coeff*word; ...`` into a formal operator.

    Coefficients accept anything ``complex()`` does ("2", "-0.5", "1+2j");
    a bare word means coefficient 1.
    """
    terms: list[tuple[complex, GroupElement]] = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        coeff_text, star, word_text = chunk.partition("*")
        if star == "*":
            try:
                coeff = complex(coeff_text.strip().replace(" ", ""))
            except ValueError:
                raise WordParseError(f"malformed coefficient {coeff_text!r}") from None
        else:
            coeff, word_text = 1.0, chunk
        terms.append((coeff, parse_word(word_text.strip(), presentation)))
    return FormalOperator.from_terms(presentation, terms)


# ---------------------------------------------------------------------------
# configuration


@dataclass
class Budgets:
    J_max: int = 8
    J_list: tuple[int, ...] | None = None
    L: int = 6
    R: int = 6
    max_iterations: int = 150
    support_cap: int = 30_000
    prune_threshold: float = 1e-8
    residual_target: float = 1e-6
    c_min: float = 0.5
    C: float = 2.0
    N: int = 4

    def norm_budget(self, start_vector: StateVector | None = None) -> NormBudget:
        return NormBudget(
            max_iterations=self.max_iterations,
            support_cap=self.support_cap,
            prune_threshold=self.prune_threshold,
            residual_target=self.residual_target,
            start_vector=start_vector,
        )


@dataclass
class ExperimentConfig:
    presentation: FreeProductPresentation
    experiment: str
    elements: dict[str, str]
    operators: dict[str, str]
    subgroup: list[str]
    budgets: Budgets
    output: str | None = None

    def element(self, name: str) -> GroupElement:
        if name not in self.elements:
            raise ConfigError(f"missing required element {name!r} (key elements.{name})")
        return parse_word(self.elements[name], self.presentation)

    def operator(self, name: str) -> FormalOperator:
        if name not in self.operators:
            raise ConfigError(f"missing required operator {name!r} (key operator.{name})")
        return parse_operator(self.operators[name], self.presentation)


def _parse_orders(text: str) -> tuple[int, ...]:
    orders = []
    for part in text.split(","):
        part = part.strip().lower()
        if part in ("inf", "infinite", "0"):
            orders.append(INFINITE)
        else:
            try:
                orders.append(int(part))
            except ValueError:
                raise ConfigError(f"bad factor order {part!r}") from None
    return tuple(orders)


def load_config_lines(path: str) -> dict[str, str]:
    raw: dict[str, str] = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, eq, value = stripped.partition("=")
        if eq != "=":
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {stripped!r}")
        raw[key.strip()] = value.strip()
    return raw


_INT_BUDGETS = {"J_max", "L", "R", "max_iterations", "support_cap", "N"}
_FLOAT_BUDGETS = {"prune_threshold", "residual_target", "c_min", "C"}


def build_config(raw: dict[str, str], source: str = "<config>") -> ExperimentConfig:
    if "presentation.orders" not in raw:
        raise ConfigError(f"{source}: missing key presentation.orders")
    orders = _parse_orders(raw["presentation.orders"])
    names_text = raw.get("presentation.names")
    names = (
        tuple(n.strip() for n in names_text.split(",")) if names_text is not None else None
    )
    try:
        presentation = FreeProductPresentation(
            orders, names if names is not None else tuple(chr(ord("a") + i) for i in range(len(orders)))
        )
    except ValueError as exc:
        raise ConfigError(f"{source}: bad presentation: {exc}") from None

    action = raw.get("action", "cayley")
    if action != "cayley":
        raise ConfigError(f"{source}: unsupported action {action!r}")

    experiment = raw.get("experiment", "")
    if experiment and experiment not in EXPERIMENTS:
        raise ConfigError(f"{source}: unknown experiment {experiment!r}")

    budgets = Budgets()
    elements: dict[str, str] = {}
    operators: dict[str, str] = {}
    subgroup: list[str] = []
    for key, value in raw.items():
        if key.startswith("elements."):
            elements[key.split(".", 1)[1]] = value
        elif key.startswith("operator."):
            operators[key.split(".", 1)[1]] = value
        elif key == "subgroup":
            subgroup = [part.strip() for part in value.split(";") if part.strip()]
        elif key.startswith("budgets."):
            name = key.split(".", 1)[1]
            try:
                if name in _INT_BUDGETS:
                    setattr(budgets, name, int(value))
                elif name in _FLOAT_BUDGETS:
                    setattr(budgets, name, float(value))
                elif name == "J_list":
                    budgets.J_list = tuple(int(p.strip()) for p in value.split(",") if p.strip())
                else:
                    raise ConfigError(f"{source}: unknown budget key {key!r}")
            except ValueError:
                raise ConfigError(f"{source}: bad value for {key}: {value!r}") from None
        elif key in (
            "presentation.orders",
            "presentation.names",
            "action",
            "experiment",
            "output.path",
        ):
            continue
        else:
            raise ConfigError(f"{source}: unknown key {key!r}")
    return ExperimentConfig(
        presentation=presentation,
        experiment=experiment,
        elements=elements,
        operators=operators,
        subgroup=subgroup,
        budgets=budgets,
        output=raw.get("output.path"),
    )


def param_hash(raw: dict[str, str], seed: int | None, slack: float) -> str:
    payload = "\n".join(f"{k}={raw[k]}" for k in sorted(raw))
    payload += f"\nseed={seed}\nslack={fmt(slack)}"
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# rows and serialization


def fmt(x: float) -> str:
    """12 significant digits, period decimal separator, no locale."""
    return format(float(x), ".12g")


@dataclass
class ResultRow:
    experiment: str
    param_hash: str
    index: int
    bound: float
    estimate: float
    residual: float
    support: int
    converged: bool
    verdict: str

    def to_csv(self) -> str:
        return ",".join(
            (
                self.experiment,
                self.param_hash,
                str(self.index),
                fmt(self.bound),
                fmt(self.estimate),
                fmt(self.residual),
                str(self.support),
                "true" if self.converged else "false",
                self.verdict,
            )
        )


@dataclass
class ExperimentResult:
    rows: list[ResultRow]
    verdict: str
    summary: list[str]
    witness: dict | None = None


def _row_verdict(falsified: bool, converged: bool) -> str:
    if falsified:
        return FALSIFIED
    return PASS if converged else INCONCLUSIVE


def _witness_payload(label: str, index: int, est: NormEstimate, bound: float) -> dict:
    vec = est.witness
    return {
        "experiment": label,
        "index": index,
        "bound": bound,
        "estimate": est.lower_bound,
        "vector": [
            [x.render(), c.real, c.imag] for x, c in (vec.coefficients.items() if vec else ())
        ],
    }


# ---------------------------------------------------------------------------
# runners


def _start_vector(config: ExperimentConfig, seed: int | None, symbols) -> StateVector | None:
    """Optional randomized restart: a seeded random vector near the base point."""
    if seed is None:
        return None
    rng = random.Random(seed)
    space = CayleySpace(config.presentation)
    points = [space.base_point] + [g * space.base_point for g in symbols]
    coeffs = {x: complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for x in points}
    return StateVector(space, coeffs)


def run_panalytic(config: ExperimentConfig, ph: str, seed: int | None, slack: float) -> ExperimentResult:
    h = config.element("h")
    g = config.element("g")
    b = config.budgets
    start = _start_vector(config, seed, [h, g.inverse() * h * g])
    rep = verify_panalytic(
        h, g, b.J_max, C=b.C, budget=b.norm_budget(start), slack=slack
    )
    rows, witness = [], None
    for r in rep.rows:
        rows.append(
            ResultRow(
                "panalytic", ph, r.J, r.bound, r.estimate.lower_bound,
                r.estimate.residual, r.estimate.support_size, r.estimate.converged,
                _row_verdict(r.falsified, r.estimate.converged),
            )
        )
        if r.falsified and witness is None:
            witness = _witness_payload("panalytic", r.J, r.estimate, r.bound)
    summary = [
        f"panalytic: h={h} g={g} C={fmt(rep.constant_C)} J_max={b.J_max}",
        f"verdict: {rep.verdict}",
    ]
    return ExperimentResult(rows, rep.verdict, summary, witness)


def run_average(config: ExperimentConfig, ph: str, seed: int | None, slack: float) -> ExperimentResult:
    T = config.operator("T")
    g = config.element("g")
    b = config.budgets
    J_list = list(b.J_list) if b.J_list else list(range(1, b.J_max + 1))
    rep = averaging_decay_report(T, g, J_list, C=b.C, budget=b.norm_budget(), slack=slack)
    rows, witness = [], None
    for r in rep.rows:
        ok = r.identity_preserved
        falsified = r.falsified or not ok
        rows.append(
            ResultRow(
                "average", ph, r.J, r.bound, r.estimate.lower_bound,
                r.estimate.residual, r.estimate.support_size, r.estimate.converged,
                _row_verdict(falsified, r.estimate.converged),
            )
        )
        if r.falsified and witness is None:
            witness = _witness_payload("average", r.J, r.estimate, r.bound)
    summary = [
        f"average: |supp T|={len(T)} g={g} identity coefficient={rep.identity_coefficient}",
        f"off-identity l1 mass: {fmt(rep.off_identity_l1)}",
        f"verdict: {rep.verdict}",
    ]
    return ExperimentResult(rows, rep.verdict, summary, witness)


def run_norm(config: ExperimentConfig, ph: str, seed: int | None, slack: float) -> ExperimentResult:
    T = config.operator("T")
    space = CayleySpace(config.presentation)
    start = _start_vector(config, seed, list(T.support))
    est = norm_lower_bound(T, space, config.budgets.norm_budget(start))
    bound = triangle_upper_bound(T)
    falsified = est.lower_bound > bound + slack
    verdict = _row_verdict(falsified, est.converged)
    rows = [
        ResultRow(
            "norm", ph, 0, bound, est.lower_bound, est.residual,
            est.support_size, est.converged, verdict,
        )
    ]
    witness = _witness_payload("norm", 0, est, bound) if falsified else None
    summary = [
        f"norm: certified lower bound {fmt(est.lower_bound)} (l1 upper bound {fmt(bound)})",
        f"iterations={est.iterations} radius={est.radius_hint} converged={est.converged}",
        f"verdict: {verdict}",
    ]
    return ExperimentResult(rows, verdict, summary, witness)


def run_trace(config: ExperimentConfig, ph: str, seed: int | None, slack: float) -> ExperimentResult:
    T = config.operator("T")
    value = canonical_trace(T)
    ok = True
    summary = [f"trace: coefficient at identity = {value}"]
    if "S" in config.operators:
        S = config.operator("S")
        ok = tracial_property_check(S, T)
        summary.append(f"tracial property (with operator S): {'holds' if ok else 'VIOLATED'}")
    verdict = PASS if ok else FALSIFIED
    summary.append(f"verdict: {verdict}")
    rows = [
        ResultRow(
            "trace", ph, 0, 0.0, value.real, value.imag, len(T), True, verdict
        )
    ]
    return ExperimentResult(rows, verdict, summary)


def run_orbits(config: ExperimentConfig, ph: str, seed: int | None, slack: float) -> ExperimentResult:
    space = CayleySpace(config.presentation)
    gens = [parse_word(text, config.presentation) for text in config.subgroup]
    if not gens:
        raise ConfigError("orbits experiment needs a 'subgroup' key with generator words")
    ball = space.enumerate_ball(space.base_point, config.budgets.R)
    dec = orbit_decompose(space, gens, ball)
    sizes = [0] * len(dec.representatives)
    for label in dec.membership.values():
        sizes[label] += 1
    rows = [
        ResultRow("orbits", ph, i, 0.0, float(sizes[i]), 0.0, sizes[i], True, PASS)
        for i in range(len(dec.representatives))
    ]
    summary = [
        f"orbits: {len(dec.representatives)} orbit pieces on the radius-{config.budgets.R} ball "
        f"({len(ball)} points)",
        "representatives: "
        + ", ".join(r.render() for r in dec.representatives[:12])
        + ("..." if len(dec.representatives) > 12 else ""),
        f"verdict: {PASS}",
    ]
    return ExperimentResult(rows, PASS, summary)


def run_pingpong(config: ExperimentConfig, ph: str, seed: int | None, slack: float) -> ExperimentResult:
    h = config.element("h")
    g = config.element("g")
    b = config.budgets
    rep = pingpong_certificate(h, g, b.L, b.J_max, b.R, c_min=b.c_min)
    checks = [
        ("injectivity", float(len(rep.trivial_words)), rep.injectivity_ok),
        ("disjointness", float(len(rep.disjointness.collisions)), rep.disjointness.disjoint),
        (
            "displacement",
            min(r.displacement / r.n for r in rep.displacement_rows),
            rep.displacement_ok,
        ),
    ]
    rows = [
        ResultRow(
            "pingpong", ph, i, b.c_min if name == "displacement" else 0.0,
            value, 0.0, rep.disjointness.words_tested, True,
            PASS if ok else FALSIFIED,
        )
        for i, (name, value, ok) in enumerate(checks)
    ]
    verdict = PASS if rep.verdict == PASS else FALSIFIED
    summary = [
        f"pingpong: h={h} g={g} L={b.L} J={b.J_max} R={b.R} c_min={fmt(b.c_min)}",
        f"injectivity: {'ok' if rep.injectivity_ok else 'trivial-acting words found'}"
        + (f" ({', '.join(str(w) for w in rep.trivial_words[:3])})" if rep.trivial_words else ""),
        f"translate disjointness: {'ok' if rep.disjointness.disjoint else f'{len(rep.disjointness.collisions)} collisions'}",
        f"displacement growth: {'ok' if rep.displacement_ok else 'sublinear'}",
        "note: PASS is consistency within budgets, not a proof",
        f"verdict: {verdict}",
    ]
    return ExperimentResult(rows, verdict, summary)


def run_blowup(config: ExperimentConfig, ph: str, seed: int | None, slack: float) -> ExperimentResult:
    h = config.element("h")
    g = config.element("g")
    N = config.budgets.N
    res = finite_order_blowup(h, g, N)
    expected = math.sqrt(N)
    exact = res.norm == expected
    verdict = PASS if exact else FALSIFIED
    rows = [
        ResultRow(
            "blowup", ph, N, expected, res.norm, abs(res.norm - expected),
            len(res.operator), True, verdict,
        )
    ]
    summary = [
        f"blowup: h={h} g={g} (order {res.period}) N={N}",
        f"collapsed operator: sqrt(N) * pi({res.collapsed_symbol}), norm {fmt(res.norm)}",
        f"verdict: {verdict}",
    ]
    return ExperimentResult(rows, verdict, summary)


def run_ideal(config: ExperimentConfig, ph: str, seed: int | None, slack: float) -> ExperimentResult:
    T = config.operator("T")
    k = config.element("k")
    g = config.element("g")
    b = config.budgets
    rep = ideal_experiment(T, k, g, b.J_max, C=b.C, budget=b.norm_budget(), slack=slack)
    rows, witness = [], None
    for r in rep.rows:
        rows.append(
            ResultRow(
                "ideal", ph, r.J, r.bound, r.residual_norm_estimate.lower_bound,
                r.residual_norm_estimate.residual, r.residual_norm_estimate.support_size,
                r.residual_norm_estimate.converged,
                _row_verdict(r.falsified, True),
            )
        )
        if r.falsified and witness is None:
            witness = _witness_payload("ideal", r.J, r.residual_norm_estimate, r.bound)
    summary = [
        f"ideal: pivot k={k} with coefficient {rep.a_k}, g={g}, threshold |a_k|/2 = {fmt(abs(rep.a_k) / 2)}",
        (
            f"decay envelope first drops below the threshold at J = {rep.success_J}"
            if rep.success_J is not None
            else f"decay envelope stays above the threshold through J = {b.J_max}"
        ),
        f"verdict: {rep.verdict}",
    ]
    return ExperimentResult(rows, rep.verdict, summary, witness)


RUNNERS = {
    "panalytic": run_panalytic,
    "average": run_average,
    "norm": run_norm,
    "trace": run_trace,
    "orbits": run_orbits,
    "pingpong": run_pingpong,
    "blowup": run_blowup,
    "ideal": run_ideal,
}


# ---------------------------------------------------------------------------
# output artifacts


def write_csv(path: Path, rows: list[ResultRow]) -> None:
    lines = [CSV_HEADER] + [r.to_csv() for r in rows]
    path.write_text("\n".join(lines) + "\n")


def write_svg(path: Path, rows: list[ResultRow]) -> None:
    """Decorative estimate-vs-bound polyline chart; acceptance never needs it."""
    if not rows:
        path.write_text('<svg xmlns="http://www.w3.org/2000/svg" width="480" height="320"/>\n')
        return
    w, h, pad = 480, 320, 40
    xs = [r.index for r in rows]
    ys = [v for r in rows for v in (r.bound, r.estimate)]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = 0.0, max(ys + [1e-12])
    span_x = (x_hi - x_lo) or 1
    span_y = (y_hi - y_lo) or 1

    def px(x):
        return pad + (w - 2 * pad) * (x - x_lo) / span_x

    def py(y):
        return h - pad - (h - 2 * pad) * (y - y_lo) / span_y

    def polyline(values, color):
        pts = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in values)
        return f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>'

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        polyline([(r.index, r.bound) for r in rows], "#888888"),
        polyline([(r.index, r.estimate) for r in rows], "#1f77b4"),
        f'<text x="{pad}" y="{pad - 12}" font-size="12">estimate (blue) vs bound (gray)</text>',
        "</svg>",
    ]
    path.write_text("\n".join(parts) + "\n")


def run(
    raw_config: dict[str, str],
    experiment: str,
    out_path: str | None = None,
    emit_svg: bool = False,
    seed: int | None = None,
    slack: float = 1e-9,
) -> int:
    """Execute one experiment from a parsed config; returns the exit code."""
    config = build_config(raw_config)
    if config.experiment and config.experiment != experiment:
        raise ConfigError(
            f"config names experiment {config.experiment!r} but {experiment!r} was invoked"
        )
    ph = param_hash(raw_config, seed, slack)
    out = Path(out_path or config.output or f"{experiment}.csv")

    runner = RUNNERS[experiment]
    try:
        result = runner(config, ph, seed, slack)
    except BudgetExceededError as exc:
        write_csv(out, [])
        print(f"budget overflow: {exc}", file=sys.stderr)
        print(f"partial csv: {out}")
        return EXIT_INCONCLUSIVE

    write_csv(out, result.rows)
    artifacts = [str(out)]
    tpath = out.with_suffix(".txt")
    tpath.write_text("\n".join(result.summary) + "\n")
    artifacts.append(str(tpath))
    if result.witness is not None:
        wpath = out.with_suffix(".witness.json")
        wpath.write_text(json.dumps(result.witness, indent=1, sort_keys=True) + "\n")
        artifacts.append(str(wpath))
    if emit_svg:
        spath = out.with_suffix(".svg")
        write_svg(spath, result.rows)
        artifacts.append(str(spath))

    for line in result.summary:
        print(line)
    print("artifacts: " + ", ".join(artifacts))
    if result.verdict == PASS:
        return EXIT_PASS
    if result.verdict == FALSIFIED:
        return EXIT_FALSIFIED
    return EXIT_INCONCLUSIVE


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which collides with INCONCLUSIVE
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def main(argv: list[str] | None = None) -> int:
    parser = _Parser(
        prog="actrep",
        description="Conjugation-averaging experiments on Cayley-graph action representations.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="flat key=value config file")
        p.add_argument("--out", default=None, help="CSV output path")
        p.add_argument("--csv", action="store_true", help="write CSV output (always on)")
        p.add_argument("--svg", action="store_true", help="also write a small SVG chart")
        p.add_argument("--seed", type=int, default=None, help="randomized-restart seed")
        p.add_argument("--slack", type=float, default=1e-9, help="falsification slack")
    args = parser.parse_args(argv)

    try:
        raw = load_config_lines(args.config)
        code = run(
            raw,
            args.experiment,
            out_path=args.out,
            emit_svg=args.svg,
            seed=args.seed,
            slack=args.slack,
        )
    except (ConfigError, WordParseError, DegenerateInputError, PresentationMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return code


if __name__ == "__main__":
    sys.exit(main())
