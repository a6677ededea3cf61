"""Verification engines for conjugation averaging on action representations.

The quantitative story: for a pair (h, g) generating a free product inside
the acting group, the uniform averages (1/J) sum_j pi(g^-j h g^j) decay in
norm like C/sqrt(J) with C = 2, the averaging map M_J crushes every
non-identity coefficient while fixing the identity coefficient exactly, and
the coefficient-at-identity functional is the unique trace candidate.  When
g has finite order the conjugates are periodic, the averages collapse to a
fixed operator, and the decay bound fails; both regimes are exercised here.

All verdicts are falsification-style: estimates are certified lower bounds,
so an estimate above a claimed upper bound (plus slack) refutes the claim,
while staying below it is consistency within budgets, never a proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .groups import (
    DegenerateInputError,
    FreeProductPresentation,
    GroupElement,
    conjugate_sequence,
    element_order,
    first_syllable_in,
    free_product,
)
from .operators import (
    FormalOperator,
    NormBudget,
    NormEstimate,
    norm_lower_bound,
)
from .spaces import ActionSpace, CayleySpace, Point

PASS = "PASS"
FALSIFIED = "FALSIFIED"
INCONCLUSIVE = "INCONCLUSIVE"
FAIL = "FAIL"

DEFAULT_SLACK = 1e-9


class DomainError(ValueError):
    """An argument lies outside the operation's mathematical domain."""


def _self_action(space: ActionSpace | None, presentation: FreeProductPresentation) -> ActionSpace:
    return space if space is not None else CayleySpace(presentation)


# ---------------------------------------------------------------------------
# coefficient sequences and the basic constructions


@dataclass(frozen=True)
class CoefficientSequence:
    """Finitely supported map from positive integers to complex weights."""

    entries: dict[int, complex]

    def __post_init__(self) -> None:
        cleaned = {int(j): complex(c) for j, c in self.entries.items() if c != 0}
        for j in cleaned:
            if j < 1:
                raise ValueError("indices must be positive integers")
        object.__setattr__(self, "entries", cleaned)

    @classmethod
    def uniform(cls, J: int) -> "CoefficientSequence":
        if J < 1:
            raise ValueError("J must be >= 1")
        return cls({j: 1.0 / J for j in range(1, J + 1)})

    @classmethod
    def dirac(cls, j: int, value: complex = 1.0) -> "CoefficientSequence":
        return cls({j: value})

    @property
    def max_index(self) -> int:
        return max(self.entries, default=0)

    def l2_norm(self) -> float:
        return math.sqrt(
            math.fsum(c.real * c.real + c.imag * c.imag for c in self.entries.values())
        )


def build_Ta(h: GroupElement, g: GroupElement, a: CoefficientSequence) -> FormalOperator:
    """The formal sum over j of a_j (g^-j h g^j).

    When distinct j produce the same reduced conjugate (periodic conjugates,
    i.e. g of finite order) the coefficients add at that element.
    """
    if h.is_identity:
        raise DegenerateInputError("h must be nontrivial")
    J = a.max_index
    if J == 0:
        return FormalOperator(h.presentation, {})
    conjugates = conjugate_sequence(g, h, J)
    acc: dict[GroupElement, complex] = {}
    for j, c in sorted(a.entries.items()):
        elem = conjugates[j - 1]
        acc[elem] = acc.get(elem, 0j) + c
    return FormalOperator(h.presentation, acc)


def average_MJ(T: FormalOperator, g: GroupElement, J: int) -> FormalOperator:
    """Conjugation average (1/J) sum_j pi(g^-j) T pi(g^j), computed in the group algebra.

    Conjugation fixes the identity and is injective, so the identity
    coefficient is copied through unchanged; every other symbol accumulates
    its J conjugates and is divided by J once at the end.
    """
    if J < 1:
        raise ValueError("J must be >= 1")
    pres = T.presentation
    e = pres.identity()
    ginv = g.inverse()
    acc: dict[GroupElement, complex] = {}
    out: dict[GroupElement, complex] = {}
    for s, c in T.coefficients.items():
        if s == e:
            out[e] = c  # exact: conjugation fixes e and nothing else lands on it
            continue
        current = s
        for _ in range(J):
            current = ginv * current * g
            acc[current] = acc.get(current, 0j) + c
    for s, c in acc.items():
        out[s] = out.get(s, 0j) + c / J
    return FormalOperator(pres, out)


def canonical_trace(T: FormalOperator) -> complex:
    """The coefficient-at-identity functional: linear, unital, tracial."""
    return T.identity_coefficient


def tracial_property_check(S: FormalOperator, T: FormalOperator) -> bool:
    """Exact symbolic check of trace(ST) = trace(TS) and trace(S*S) >= 0.

    Both products are formed in the group algebra with exactly rounded
    coefficient sums, so the equalities hold bit-for-bit when they hold
    mathematically.
    """
    st = canonical_trace(S * T)
    ts = canonical_trace(T * S)
    if st != ts:
        return False
    positivity = canonical_trace(S.adjoint() * S)
    return positivity.imag == 0.0 and positivity.real >= 0.0


@dataclass
class BlowupResult:
    operator: FormalOperator
    norm: float
    collapsed_symbol: GroupElement
    period: int
    N: int


def finite_order_blowup(h: GroupElement, g: GroupElement, N: int) -> BlowupResult:
    """The periodic-conjugate counterexample: weights 1/sqrt(N) at j = 1 + k m.

    With g of finite order m the conjugates g^-(1+km) h g^(1+km) all reduce
    to the single element g^-1 h g, so the sum collapses to sqrt(N) times one
    unitary symbol, of exact norm sqrt(N).  The collapsed coefficient is the
    closed form of N equal summands, so the returned norm is exactly
    sqrt(N) rather than an accumulation of rounding.
    """
    if h.is_identity:
        raise DegenerateInputError("h must be nontrivial")
    if N < 1:
        raise ValueError("N must be >= 1")
    m = element_order(g)
    if m == 0:
        raise DomainError("g must have finite order in the presentation")
    base = g.inverse() * h * g
    for k in range(1, N):
        exponent = 1 + k * m
        conj = (g ** exponent).inverse() * h * (g ** exponent)
        if conj != base:
            raise DomainError("conjugates failed to collapse; g^m is not the identity")
    value = math.sqrt(N)
    return BlowupResult(
        operator=FormalOperator(h.presentation, {base: value}),
        norm=value,
        collapsed_symbol=base,
        period=m,
        N=N,
    )


# ---------------------------------------------------------------------------
# norm-bound reports


@dataclass
class PAnalyticRow:
    J: int
    estimate: NormEstimate
    bound: float
    falsified: bool


@dataclass
class PAnalyticReport:
    """Per-J comparison of the averaged-operator norm against C/sqrt(J).

    FALSIFIED as soon as one certified estimate exceeds its bound plus
    slack; INCONCLUSIVE when nothing falsified but some estimate failed to
    stabilize; PASS otherwise.
    """

    h: GroupElement
    g: GroupElement
    constant_C: float
    slack: float
    rows: list[PAnalyticRow]
    verdict: str


def _overall_verdict(falsified: bool, all_converged: bool) -> str:
    if falsified:
        return FALSIFIED
    return PASS if all_converged else INCONCLUSIVE


def verify_panalytic(
    h: GroupElement,
    g: GroupElement,
    J_max: int,
    C: float = 2.0,
    budget: NormBudget | None = None,
    space: ActionSpace | None = None,
    slack: float = DEFAULT_SLACK,
) -> PAnalyticReport:
    """Probe the square-summable bound on uniform conjugation averages.

    For each J up to J_max the operator (1/J) sum_j pi(g^-j h g^j) is built
    symbolically and its norm is estimated from below; the uniform weight
    sequence has l2 norm 1/sqrt(J), so the claimed upper bound is C/sqrt(J).
    """
    if h.is_identity:
        raise DegenerateInputError("h must be nontrivial")
    if J_max < 1:
        raise ValueError("J_max must be >= 1")
    if C <= 0:
        raise ValueError("C must be positive")
    space = _self_action(space, h.presentation)
    rows: list[PAnalyticRow] = []
    for J in range(1, J_max + 1):
        T = build_Ta(h, g, CoefficientSequence.uniform(J))
        est = norm_lower_bound(T, space, budget)
        bound = C / math.sqrt(J)
        rows.append(PAnalyticRow(J, est, bound, est.lower_bound > bound + slack))
    return PAnalyticReport(
        h=h,
        g=g,
        constant_C=C,
        slack=slack,
        rows=rows,
        verdict=_overall_verdict(
            any(r.falsified for r in rows), all(r.estimate.converged for r in rows)
        ),
    )


@dataclass
class DecayRow:
    J: int
    residual_operator: FormalOperator
    estimate: NormEstimate
    bound: float
    falsified: bool
    identity_preserved: bool


@dataclass
class AveragingDecayReport:
    """M_J(T) minus its identity part against the (C/sqrt(J)) sum |a_h| envelope."""

    T: FormalOperator
    g: GroupElement
    constant_C: float
    slack: float
    identity_coefficient: complex
    off_identity_l1: float
    rows: list[DecayRow]
    verdict: str


def averaging_decay_report(
    T: FormalOperator,
    g: GroupElement,
    J_list: list[int],
    C: float = 2.0,
    budget: NormBudget | None = None,
    space: ActionSpace | None = None,
    slack: float = DEFAULT_SLACK,
) -> AveragingDecayReport:
    """Check that averaging kills the off-identity part at rate C/sqrt(J).

    For each J the residual M_J(T) - a_e e is formed symbolically (its
    identity coefficient cancels exactly) and its norm estimate is compared
    against (C/sqrt(J)) times the l1 mass of T off the identity.
    """
    pres = T.presentation
    space = _self_action(space, pres)
    e = pres.identity()
    a_e = T.identity_coefficient
    sum_f = math.fsum(abs(c) for s, c in T.coefficients.items() if s != e)
    unit_e = FormalOperator(pres, {e: a_e}) if a_e != 0 else FormalOperator(pres, {})
    rows: list[DecayRow] = []
    for J in J_list:
        avg = average_MJ(T, g, J)
        residual = avg - unit_e
        identity_ok = residual.identity_coefficient == 0j
        est = norm_lower_bound(residual, space, budget)
        bound = (C / math.sqrt(J)) * sum_f
        rows.append(
            DecayRow(J, residual, est, bound, est.lower_bound > bound + slack, identity_ok)
        )
    falsified = any(r.falsified for r in rows) or not all(r.identity_preserved for r in rows)
    return AveragingDecayReport(
        T=T,
        g=g,
        constant_C=C,
        slack=slack,
        identity_coefficient=a_e,
        off_identity_l1=sum_f,
        rows=rows,
        verdict=_overall_verdict(falsified, all(r.estimate.converged for r in rows)),
    )


@dataclass
class IdealRow:
    J: int
    identity_coefficient: complex
    residual_operator: FormalOperator
    residual_norm_estimate: NormEstimate
    threshold: float
    bound: float
    bound_below_threshold: bool
    falsified: bool


@dataclass
class IdealExperimentReport:
    """The norm-perturbation bookkeeping behind the simplicity argument.

    T is left-translated by the pivot inverse so the pivot coefficient sits
    at the identity; averaging then preserves it exactly while the decay
    envelope (C/sqrt(J)) sum |a_h| eventually drops below |a_k|/2, the margin
    at which a perturbed average stays invertibly close to a_k times the
    identity.  success_J is the first J where that happens.
    """

    T: FormalOperator
    pivot: GroupElement
    a_k: complex
    g: GroupElement
    constant_C: float
    slack: float
    rows: list[IdealRow]
    success_J: int | None
    verdict: str


def ideal_experiment(
    T: FormalOperator,
    k: GroupElement,
    g: GroupElement,
    J_max: int,
    C: float = 2.0,
    budget: NormBudget | None = None,
    space: ActionSpace | None = None,
    slack: float = DEFAULT_SLACK,
) -> IdealExperimentReport:
    """Translate T by the pivot, average, and find where the bound closes.

    The verdict certifies exact arithmetic: the translated operator carries
    the pivot coefficient at the identity through every average, and
    success_J is pure arithmetic on the decay envelope.  Norm estimates are
    reported per row as diagnostics; a row only counts against the verdict
    if it falsifies the envelope outright.
    """
    a_k = T[k]
    if a_k == 0:
        raise DegenerateInputError("pivot coefficient must be nonzero")
    if J_max < 1:
        raise ValueError("J_max must be >= 1")
    pres = T.presentation
    space = _self_action(space, pres)
    e = pres.identity()
    T0 = T.translate_left(k.inverse())
    assert T0.identity_coefficient == a_k  # relocation moves, never recomputes
    threshold = abs(a_k) / 2.0
    sum_f = math.fsum(abs(c) for s, c in T0.coefficients.items() if s != e)
    unit_e = FormalOperator(pres, {e: a_k})
    rows: list[IdealRow] = []
    success_J: int | None = None
    for J in range(1, J_max + 1):
        avg = average_MJ(T0, g, J)
        residual = avg - unit_e
        est = norm_lower_bound(residual, space, budget)
        bound = (C / math.sqrt(J)) * sum_f
        below = bound < threshold
        if below and success_J is None:
            success_J = J
        rows.append(
            IdealRow(
                J=J,
                identity_coefficient=avg.identity_coefficient,
                residual_operator=residual,
                residual_norm_estimate=est,
                threshold=threshold,
                bound=bound,
                bound_below_threshold=below,
                falsified=est.lower_bound > bound + slack,
            )
        )
    pivots_exact = all(r.identity_coefficient == a_k for r in rows)
    if any(r.falsified for r in rows):
        verdict = FALSIFIED
    elif success_J is not None and pivots_exact:
        verdict = PASS
    else:
        verdict = INCONCLUSIVE
    return IdealExperimentReport(
        T=T,
        pivot=k,
        a_k=a_k,
        g=g,
        constant_C=C,
        slack=slack,
        rows=rows,
        success_J=success_J,
        verdict=verdict,
    )


# ---------------------------------------------------------------------------
# free-product structure probes


def _abstract_pair(h: GroupElement, g: GroupElement) -> FreeProductPresentation:
    """The abstract free product <h> * <g> built from the element orders."""
    if h.is_identity or g.is_identity:
        raise DegenerateInputError("h and g must be nontrivial")
    return free_product([element_order(h), element_order(g)], names=("h", "g"))


def _evaluate(word: GroupElement, images: tuple[GroupElement, GroupElement]) -> GroupElement:
    """Substitute the images for the abstract generators of a pair word."""
    acc = images[0].presentation.identity()
    for fi, e in word.syllables:
        acc = acc * (images[fi] ** e)
    return acc


@dataclass
class WjCollision:
    j: int
    u: GroupElement  # abstract word in W_0
    k: int
    v: GroupElement
    point: Point
    witness_abstract: GroupElement  # v^-1 g^(j-k) u, nontrivial in <h>*<g>
    witness_evaluated: GroupElement  # its image, a stabilizer element of x_i


@dataclass
class WjDisjointReport:
    h: GroupElement
    g: GroupElement
    J: int
    L: int
    x_i: Point
    words_tested: int
    collisions: list[WjCollision]
    disjoint: bool


def check_Wj_disjoint(
    h: GroupElement,
    g: GroupElement,
    J: int,
    L: int,
    x_i: Point | None = None,
    space: ActionSpace | None = None,
    word_cap: int = 2_000_000,
) -> WjDisjointReport:
    """Exhaustive disjointness check of the translate family W_j . x_i.

    W_0 is enumerated in the abstract free product <h> * <g> (words of
    length at most L not beginning with a g-power, the identity included),
    translated by g^j for |j| <= J, evaluated into the acting group, and
    pushed to the point x_i.  A collision between distinct j exhibits a
    nontrivial abstract word v^-1 g^(j-k) u whose image stabilizes x_i.
    """
    if J < 1 or L < 1:
        raise ValueError("J and L must be >= 1")
    space = _self_action(space, h.presentation)
    if x_i is None:
        x_i = space.base_point
    abstract = _abstract_pair(h, g)
    aspace = CayleySpace(abstract, ball_cap=word_cap)
    words = aspace.enumerate_ball(abstract.identity(), L)
    w0 = [w for w in words if not first_syllable_in(w, 1)]
    gbar = abstract.generator(1)
    images = (h, g)
    seen: dict[Point, tuple[int, GroupElement]] = {}
    collisions: list[WjCollision] = []
    for j in range(-J, J + 1):
        gj = gbar ** j
        for u in w0:
            point = space.apply(_evaluate(gj * u, images), x_i)
            prev = seen.get(point)
            if prev is None:
                seen[point] = (j, u)
            elif prev[0] != j:
                k, v = prev
                witness = v.inverse() * (gbar ** (j - k)) * u
                collisions.append(
                    WjCollision(
                        j=j,
                        u=u,
                        k=k,
                        v=v,
                        point=point,
                        witness_abstract=witness,
                        witness_evaluated=_evaluate(witness, images),
                    )
                )
    return WjDisjointReport(
        h=h,
        g=g,
        J=J,
        L=L,
        x_i=x_i,
        words_tested=len(w0),
        collisions=collisions,
        disjoint=not collisions,
    )


@dataclass
class DisplacementRow:
    n: int
    displacement: int
    required: float


@dataclass
class PingPongReport:
    """Budgeted consistency certificate for the pair (h, g).

    PASS means no reduced pair word of length <= L acts trivially on the
    tested ball, the translate family is disjoint at (J, L), and g displaces
    the base point linearly; all three are falsification checks inside the
    stated budgets, never proofs.  The elliptic line refines injectivity:
    words containing a g-syllable must move something.
    """

    h: GroupElement
    g: GroupElement
    L: int
    J: int
    R: int
    c_min: float
    trivial_words: list[GroupElement]
    injectivity_ok: bool
    elliptic_ok: bool
    disjointness: WjDisjointReport
    displacement_rows: list[DisplacementRow]
    displacement_ok: bool
    verdict: str


def pingpong_certificate(
    h: GroupElement,
    g: GroupElement,
    L: int,
    J: int,
    R: int,
    c_min: float = 0.5,
    space: ActionSpace | None = None,
    word_cap: int = 2_000_000,
) -> PingPongReport:
    """Run the three free-product consistency probes for (h, g)."""
    if c_min <= 0:
        raise ValueError("c_min must be positive")
    space = _self_action(space, h.presentation)
    abstract = _abstract_pair(h, g)
    aspace = CayleySpace(abstract, ball_cap=word_cap)
    ball = space.enumerate_ball(space.base_point, R)
    images = (h, g)

    trivial: list[GroupElement] = []
    for wbar in aspace.enumerate_ball(abstract.identity(), L):
        if wbar.is_identity:
            continue
        w = _evaluate(wbar, images)
        if not any(space.apply(w, x) != x for x in ball):
            trivial.append(wbar)
    injectivity_ok = not trivial
    elliptic_ok = not any(
        any(fi == 1 for fi, _ in wbar.syllables) for wbar in trivial
    )

    disjointness = check_Wj_disjoint(h, g, J, L, space.base_point, space, word_cap)

    displacement_rows: list[DisplacementRow] = []
    displacement_ok = True
    for n in range(1, J + 1):
        d = space.distance(space.base_point, space.apply(g ** n, space.base_point))
        displacement_rows.append(DisplacementRow(n, d, c_min * n))
        if d < c_min * n:
            displacement_ok = False
    verdict = (
        PASS if (injectivity_ok and disjointness.disjoint and displacement_ok) else FAIL
    )
    return PingPongReport(
        h=h,
        g=g,
        L=L,
        J=J,
        R=R,
        c_min=c_min,
        trivial_words=trivial,
        injectivity_ok=injectivity_ok,
        elliptic_ok=elliptic_ok,
        disjointness=disjointness,
        displacement_rows=displacement_rows,
        displacement_ok=displacement_ok,
        verdict=verdict,
    )


@dataclass
class LoxodromicReport:
    word: GroupElement
    rows: list[DisplacementRow]
    rate: float
    ok: bool
    verdict: str


def loxodromic_probe(
    g1: GroupElement,
    g2: GroupElement,
    l: int,
    k: int,
    n_max: int = 10,
    c_min: float = 0.5,
    space: ActionSpace | None = None,
) -> LoxodromicReport:
    """Linear displacement growth of the product g1^l g2^k from the base point.

    A loxodromic isometry moves every point at a positive linear rate; its
    budgeted surrogate is d(x0, w^n x0) >= c_min * n for n up to n_max.  The
    empirical rate is the displacement at n_max divided by n_max.
    """
    if l < 1 or k < 1:
        raise ValueError("l and k must be >= 1")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    space = _self_action(space, g1.presentation)
    w = (g1 ** l) * (g2 ** k)
    rows: list[DisplacementRow] = []
    ok = True
    current = w
    for n in range(1, n_max + 1):
        d = space.distance(space.base_point, space.apply(current, space.base_point))
        rows.append(DisplacementRow(n, d, c_min * n))
        if d < c_min * n:
            ok = False
        current = current * w
    rate = rows[-1].displacement / n_max
    return LoxodromicReport(
        word=w, rows=rows, rate=rate, ok=ok, verdict=PASS if ok else FAIL
    )
