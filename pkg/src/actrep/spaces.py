"""Countable metric spaces with isometric group actions.

The concrete space is the Cayley graph of a free product acting on itself by
left multiplication, with the word metric of the standard generating set.
Balls are enumerated lazily and deterministically; orbit decompositions and
faithfulness checks are budget-relative: they certify what a finite window
shows and never claim more.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

from .groups import (
    INFINITE,
    FreeProductPresentation,
    GroupElement,
    PresentationMismatchError,
)

#: Points of a Cayley space are reduced words; other spaces may use any
#: hashable value whose equality matches the intended point identity.
Point = GroupElement

#: Default ceiling on enumerated ball size, keeping worst-case memory near 1 GB.
DEFAULT_BALL_CAP = 5_000_000


class BudgetExceededError(RuntimeError):
    """An enumeration outgrew its configured cardinality cap."""


class ActionSpace(Protocol):
    """Structural contract for a countable metric space with a group action."""

    presentation: FreeProductPresentation
    base_point: Point

    def apply(self, g: GroupElement, x: Point) -> Point: ...

    def distance(self, x: Point, y: Point) -> int: ...

    def enumerate_ball(self, center: Point, radius: int) -> list[Point]: ...


class CayleySpace:
    """A free product acting on itself by left multiplication.

    The metric is the word metric of the generating set made of all factor
    generators; left multiplication is an isometry for it.  The base point is
    the identity.
    """

    def __init__(self, presentation: FreeProductPresentation, ball_cap: int = DEFAULT_BALL_CAP):
        self.presentation = presentation
        self.base_point: Point = presentation.identity()
        self.ball_cap = ball_cap
        self._moves = self._one_step_moves()

    def _one_step_moves(self) -> list[GroupElement]:
        # generator order, positive exponent before negative; for an order-2
        # factor the two coincide and are emitted once
        moves: list[GroupElement] = []
        for i, m in enumerate(self.presentation.factor_orders):
            moves.append(GroupElement(self.presentation, ((i, 1),)))
            if m != 2:
                inv = m - 1 if m != INFINITE else -1
                moves.append(GroupElement(self.presentation, ((i, inv),)))
        return moves

    def apply(self, g: GroupElement, x: Point) -> Point:
        if g.presentation is not self.presentation and g.presentation != self.presentation:
            raise PresentationMismatchError("element acts on a different presentation")
        return g * x

    def distance(self, x: Point, y: Point) -> int:
        return (x.inverse() * y).word_length()

    def enumerate_ball(self, center: Point, radius: int) -> list[Point]:
        """All points at distance <= radius, in breadth-first discovery order."""
        if radius < 0:
            raise ValueError("radius must be >= 0")
        seen: dict[Point, None] = {center: None}
        frontier = [center]
        for _ in range(radius):
            nxt: list[Point] = []
            for x in frontier:
                for s in self._moves:
                    y = x * s
                    if y not in seen:
                        if len(seen) >= self.ball_cap:
                            raise BudgetExceededError(
                                f"ball enumeration exceeded cap of {self.ball_cap} points"
                            )
                        seen[y] = None
                        nxt.append(y)
            frontier = nxt
        return list(seen)


@dataclass
class OrbitDecomposition:
    """Greedy orbit labelling of an enumerated ball.

    ``representatives[i]`` is the first enumerated point of the i-th orbit
    piece; ``membership`` labels every ball point with its piece index.
    Pieces are orbit intersections with the ball, connected through moves
    that stay inside the ball.
    """

    representatives: list[Point]
    membership: dict[Point, int]


def orbit_decompose(
    space: ActionSpace,
    subgroup_generators: Sequence[GroupElement],
    ball: Sequence[Point],
) -> OrbitDecomposition:
    """Decompose a ball into orbit pieces of the generated subgroup.

    Representatives are chosen greedily in enumeration order: the first point
    not yet claimed starts a new piece, whose membership is the closure of
    the representative under the generators and their inverses, intersected
    with the ball.
    """
    if not ball:
        raise ValueError("ball must be nonempty")
    moves: list[GroupElement] = []
    for g in subgroup_generators:
        for m in (g, g.inverse()):
            if m not in moves:
                moves.append(m)
    in_ball = set(ball)
    membership: dict[Point, int] = {}
    representatives: list[Point] = []
    for p in ball:
        if p in membership:
            continue
        label = len(representatives)
        representatives.append(p)
        membership[p] = label
        frontier = [p]
        while frontier:
            nxt: list[Point] = []
            for x in frontier:
                for s in moves:
                    y = space.apply(s, x)
                    if y in in_ball and y not in membership:
                        membership[y] = label
                        nxt.append(y)
            frontier = nxt
    return OrbitDecomposition(representatives, membership)


@dataclass
class FaithfulnessReport:
    """Outcome of the budgeted faithfulness probe.

    ``witnesses`` maps every nontrivial word of the census to a point it
    moves; ``failures`` lists words that fixed the whole tested ball.
    """

    witnesses: dict[GroupElement, Point]
    failures: list[GroupElement]
    words_checked: int
    ball_size: int
    verdict: str  # "PASS" | "FAIL"


def faithfulness_check(
    space: ActionSpace,
    word_length_budget: int,
    radius: int,
    word_cap: int = DEFAULT_BALL_CAP,
) -> FaithfulnessReport:
    """Search moved-point witnesses for every short nontrivial word.

    For each reduced word of length at most ``word_length_budget`` the
    radius-``radius`` ball around the base point is scanned for a point the
    word moves.  PASS means every word has a witness within the budget; a
    failure exhibits a word acting trivially on the whole tested window.
    """
    census_space = CayleySpace(space.presentation, ball_cap=word_cap)
    words = census_space.enumerate_ball(space.presentation.identity(), word_length_budget)
    ball = space.enumerate_ball(space.base_point, radius)
    witnesses: dict[GroupElement, Point] = {}
    failures: list[GroupElement] = []
    checked = 0
    for w in words:
        if w.is_identity:
            continue
        checked += 1
        for x in ball:
            if space.apply(w, x) != x:
                witnesses[w] = x
                break
        else:
            failures.append(w)
    verdict = "PASS" if not failures else "FAIL"
    return FaithfulnessReport(witnesses, failures, checked, len(ball), verdict)
