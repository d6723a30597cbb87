#!/usr/bin/env python3

"""Disk bundles, plumbing vectors and the decomposition of the domain of
outer communication into toric plumbings, corner balls, cylinders and the
asymptotic end.

Indices of bundles and plumbing vectors are 1-based in reports, matching
w_1, w_2, ... for the rod structures of a component.
"""

import itertools
import logging
from collections import namedtuple
from dataclasses import dataclass
from math import gcd
from typing import List, Optional, Sequence, Tuple

from . import RodTopologyError
from . import intlin
from . import roddiagram
from .roddiagram import RodDiagram, torus_label

logger = logging.getLogger(__name__)

TORIC_PLUMBING = "toric_plumbing"
CORNER_BALL = "corner_ball"
CYLINDER = "cylinder"
END = "end"

RelationCheck = namedtuple("RelationCheck", ["relation", "index", "passed", "detail"])

Vector = Tuple[int, ...]


class PlumbingError(RodTopologyError):
    pass


@dataclass(frozen=True)
class Bundle:
    """Disk bundle over S3, L(p, q) or S1xS2, times T^(n-3).

    The triple datum (q, r, p) is the third column of the Hermite form of
    three consecutive rod structures; r is the Euler datum.
    """

    q: int
    r: int
    p: int
    n: int

    @property
    def base(self) -> str:
        if self.p == 0:
            return roddiagram.S1XS2
        if self.p == 1:
            return roddiagram.S3
        return roddiagram.LENS

    @property
    def euler(self) -> int:
        return self.r

    @property
    def torus_factor(self) -> int:
        return self.n - 3

    @property
    def base_label(self) -> str:
        if self.p == 0:
            return "S¹×S²"
        if self.p == 1:
            return "S³"
        return f"L({self.p},{self.q})"

    @property
    def label(self) -> str:
        return f"{self.base_label} e{self.r}"

    def to_dict(self) -> dict:
        return {
            "base": self.base,
            "p": self.p,
            "q": self.q,
            "r": self.r,
            "euler": self.euler,
            "torus_factor": self.torus_factor,
            "label": self.label,
        }


@dataclass(frozen=True)
class ToricPlumbing:
    bundles: Tuple[Bundle, ...]
    plumbing_vectors: Tuple[Vector, ...]
    rods_hnf: Tuple[Vector, ...]
    signs: Tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            "bundles": [b.to_dict() for b in self.bundles],
            "plumbing_vectors": {
                str(i + 2): list(v) for i, v in enumerate(self.plumbing_vectors)
            },
            "rods_hnf": [list(w) for w in self.rods_hnf],
            "signs": list(self.signs),
        }


@dataclass(frozen=True)
class Piece:
    kind: str
    source_rod_indices: Tuple[int, ...]
    label: str
    plumbing: Optional[ToricPlumbing] = None
    end: Optional[roddiagram.CrossSectionTopology] = None

    def to_dict(self) -> dict:
        result = {
            "kind": self.kind,
            "label": self.label,
            "source_rod_indices": list(self.source_rod_indices),
        }
        if self.plumbing is not None:
            result["plumbing"] = self.plumbing.to_dict()
        if self.end is not None:
            result["cross_section"] = self.end.to_dict()
        return result


@dataclass(frozen=True)
class DocDecomposition:
    pieces: Tuple[Piece, ...]

    def _count(self, kind: str) -> int:
        return sum(1 for piece in self.pieces if piece.kind == kind)

    @property
    def J(self) -> int:
        return self._count(TORIC_PLUMBING)

    @property
    def N1(self) -> int:
        return self._count(CYLINDER)

    @property
    def N2(self) -> int:
        return self._count(CORNER_BALL)

    def to_dict(self) -> dict:
        return {
            "pieces": [piece.to_dict() for piece in self.pieces],
            "counts": {"J": self.J, "N1": self.N1, "N2": self.N2},
        }


def _vector(x) -> Vector:
    if isinstance(x, roddiagram.RodStructure):
        return x.v
    return tuple(int(c) for c in x)


def _combine(*terms) -> Vector:
    """Integer linear combination of (coefficient, vector) pairs."""
    size = len(terms[0][1])
    return tuple(sum(c * v[j] for c, v in terms) for j in range(size))


def _unit(n: int, i: int) -> Vector:
    return tuple(1 if j == i else 0 for j in range(n))


def _last_nonzero(v: Sequence[int]) -> int:
    """1-based index of the last nonzero entry, 0 for the zero vector."""
    return max((j + 1 for j, x in enumerate(v) if x != 0), default=0)


def _triple_datum(v1, v2, v3) -> Tuple[int, int, int]:
    H = intlin.hermite_normal_form(intlin.column_matrix([v1, v2, v3])).H
    assert H[0, 0] == 1 and H[1, 1] == 1 and H[1, 0] == 0 and H[0, 1] == 0
    return int(H[0, 2]), int(H[1, 2]), int(H[2, 2])


def _check_corners(vectors: Sequence[Vector], offset: int = 0) -> None:
    for i in range(len(vectors) - 1):
        d = intlin.span_divisor([vectors[i], vectors[i + 1]])
        if d != 1:
            raise PlumbingError(
                f"corner between structures {i + 1 + offset} and {i + 2 + offset} "
                f"is inadmissible, Det_2 = {d}"
            )


def triple_to_bundle(v1, v2, v3) -> Bundle:
    """Bundle datum of three consecutive rod structures.

    In the dependent case the third structure is w_3 = ±w_1 + r w_2; the
    sign is absorbed into the structure so that q = 1.
    """
    vs = [_vector(x) for x in (v1, v2, v3)]
    n = len(vs[0])
    if n < 3:
        raise PlumbingError(f"disk bundles need n >= 3, got n = {n}")
    _check_corners(vs)
    q, r, p = _triple_datum(*vs)
    if p == 0 and q == -1:
        q, r = 1, -r
    return Bundle(q=q, r=r, p=p, n=n)


def plumbing_vector(w_i, w_i1, w_i2, q: int, r: int, p: int) -> Vector:
    """The vector 𝔭 with w_i2 = q w_i + r w_i1 + p 𝔭 (zero when p == 0)."""
    w_i, w_i1, w_i2 = _vector(w_i), _vector(w_i1), _vector(w_i2)
    diff = _combine((1, w_i2), (-q, w_i), (-r, w_i1))
    if p == 0:
        if any(diff):
            raise PlumbingError(
                f"{w_i2} != {q}*{w_i} + {r}*{w_i1} although the bundle has p = 0"
            )
        return tuple(0 for _ in w_i)
    if any(x % p for x in diff):
        raise PlumbingError(f"{diff} is not divisible by p = {p}")
    vector = tuple(x // p for x in diff)
    det3 = intlin.span_divisor([w_i, w_i1, vector])
    if det3 != 1:
        raise PlumbingError(
            f"plumbing vector {vector} does not complete {w_i}, {w_i1} "
            f"to a primitive set, Det_3 = {det3}"
        )
    return vector


def corner_sign(v, w) -> int:
    """Sign of the first nonzero 2x2 minor of the columns v, w, row pairs
    taken in lexicographic order; 0 when v and w are parallel."""
    for i, j in itertools.combinations(range(len(v)), 2):
        minor = v[i] * w[j] - v[j] * w[i]
        if minor:
            return 1 if minor > 0 else -1
    return 0


def decompose_component(structures: Sequence) -> ToricPlumbing:
    """Bundles and plumbing vectors of a chain of >= 3 axis rods.

    w_2 is negated when corner_sign(w_1, w_2) is negative, and later
    structures where a dependent triple would otherwise have q = -1.  The
    signed chain is then brought to Hermite normal form; bundles are read
    off each consecutive triple and plumbing vectors off triples 2..l.
    """
    vectors = [_vector(s) for s in structures]
    if len(vectors) < 3:
        raise PlumbingError(f"a toric plumbing needs at least 3 rods, got {len(vectors)}")
    n = len(vectors[0])
    if n < 3:
        raise PlumbingError(f"toric plumbings need n >= 3, got n = {n}")
    _check_corners(vectors)

    signs = [1] * len(vectors)
    signed = list(vectors)
    if corner_sign(signed[0], signed[1]) < 0:
        signs[1] = -1
        signed[1] = tuple(-x for x in signed[1])
    for i in range(len(vectors) - 2):
        q, _, p = _triple_datum(*signed[i:i + 3])
        if p == 0 and q == -1:
            signs[i + 2] = -signs[i + 2]
            signed[i + 2] = tuple(-x for x in signed[i + 2])

    H = intlin.hermite_normal_form(intlin.column_matrix(signed)).H
    rods_hnf = [tuple(int(x) for x in H[:, j]) for j in range(H.shape[1])]

    bundles = []
    for i in range(len(rods_hnf) - 2):
        q, r, p = _triple_datum(*rods_hnf[i:i + 3])
        bundles.append(Bundle(q=q, r=r, p=p, n=n))

    plumbing_vectors = []
    for i in range(1, len(bundles)):
        b = bundles[i]
        plumbing_vectors.append(
            plumbing_vector(rods_hnf[i], rods_hnf[i + 1], rods_hnf[i + 2], b.q, b.r, b.p)
        )
    logger.debug(
        "component of %d rods: bundles %s, plumbing vectors %s",
        len(vectors), [b.label for b in bundles], plumbing_vectors,
    )
    return ToricPlumbing(
        bundles=tuple(bundles),
        plumbing_vectors=tuple(plumbing_vectors),
        rods_hnf=tuple(rods_hnf),
        signs=tuple(signs),
    )


def _prepare(bundles: Sequence[Bundle], plumbing_vectors: Sequence) -> Tuple[int, List[Vector]]:
    if not bundles:
        raise PlumbingError("at least one bundle is required")
    n = bundles[0].n
    if n < 3 or any(b.n != n for b in bundles):
        raise PlumbingError("all bundles must share one torus rank n >= 3")
    if len(plumbing_vectors) != len(bundles) - 1:
        raise PlumbingError(
            f"{len(bundles)} bundles need {len(bundles) - 1} plumbing vectors, "
            f"got {len(plumbing_vectors)}"
        )
    vectors = [_vector(v) for v in plumbing_vectors]
    if any(len(v) != n for v in vectors):
        raise PlumbingError(f"plumbing vectors must have length {n}")
    first = _unit(n, 2) if bundles[0].p != 0 else tuple([0] * n)
    return n, [first] + vectors


def _generate(bundles: Sequence[Bundle], vectors: Sequence[Vector]) -> List[Vector]:
    n = bundles[0].n
    ws = [_unit(n, 0), _unit(n, 1)]
    for i, b in enumerate(bundles):
        ws.append(_combine((b.q, ws[i]), (b.r, ws[i + 1]), (b.p, vectors[i])))
    return ws


def verify_plumbing_relations(
    bundles: Sequence[Bundle], plumbing_vectors: Sequence
) -> List[RelationCheck]:
    """Every plumbing relation evaluated on the recursion-generated structures.

    Relations, in order: primitivity, admissibility, triple (Det_3 = 1),
    zeros, pivot and hermite.  All outcomes are returned.
    """
    n, P = _prepare(bundles, plumbing_vectors)
    ws = _generate(bundles, P)
    l = len(bundles)
    checks: List[RelationCheck] = []

    for i in range(1, l):
        v = P[i]
        ok = not any(v) or intlin.is_primitive_vector(v)
        checks.append(RelationCheck("primitivity", i + 1, ok, f"𝔭 = {v}"))

    for i, b in enumerate(bundles):
        target = _combine((b.q, ws[i]), (b.p, P[i]))
        if any(target):
            d = intlin.span_divisor([ws[i + 1], target])
        else:
            d = 0
        checks.append(RelationCheck("admissibility", i + 1, d == 1, f"Det_2 = {d}"))

    for i in range(l):
        if any(P[i]):
            d = intlin.span_divisor([ws[i], ws[i + 1], P[i]])
            checks.append(RelationCheck("triple", i + 1, d == 1, f"Det_3 = {d}"))

    reach = max(2, _last_nonzero(P[0]))
    for i in range(1, l):
        last = _last_nonzero(P[i])
        vanishes = not any(P[i])
        ok = last <= reach + 1 and vanishes == (bundles[i].p == 0)
        checks.append(
            RelationCheck("zeros", i + 1, ok, f"last nonzero entry {last}, allowed {reach + 1}")
        )
        reach = max(reach, last)

    for i, b in enumerate(bundles):
        if b.p > 0:
            ok = 0 <= b.q < b.p and 0 <= b.r < b.p and gcd(b.q, b.p) == 1
        else:
            ok = b.p == 0 and b.q == 1
        checks.append(RelationCheck("pivot", i + 1, ok, f"(q, r, p) = ({b.q}, {b.r}, {b.p})"))

    reach = max(2, _last_nonzero(P[0]))
    for i in range(1, l):
        m = _last_nonzero(P[i])
        if m > reach:
            w = ws[i + 2]
            pivot = w[m - 1]
            ok = pivot > 0 and all(0 <= w[j] < pivot for j in range(m - 1))
            checks.append(RelationCheck("pivot", i + 1, ok, f"new pivot row {m} of w_{i + 3} = {w}"))
        reach = max(reach, m)

    ok = intlin.is_hermite_normal_form(intlin.column_matrix(ws))
    checks.append(RelationCheck("hermite", l, ok, "generated structures in Hermite normal form"))
    return checks


def relations_ok(checks: Sequence[RelationCheck]) -> bool:
    return all(c.passed for c in checks)


def first_failure(checks: Sequence[RelationCheck]) -> Optional[RelationCheck]:
    return next((c for c in checks if not c.passed), None)


def plumbing_to_rods(bundles: Sequence[Bundle], plumbing_vectors: Sequence) -> List[Vector]:
    """w_1 = e_1, w_2 = e_2, w_{i+2} = q_i w_i + r_i w_{i+1} + p_i 𝔭_i."""
    failure = first_failure(verify_plumbing_relations(bundles, plumbing_vectors))
    if failure is not None:
        raise PlumbingError(
            f"{failure.relation} relation fails at index {failure.index}: {failure.detail}"
        )
    _, P = _prepare(bundles, plumbing_vectors)
    return _generate(bundles, P)


def axis_components(diagram: RodDiagram) -> List[List[int]]:
    """Rod indices of the maximal runs of axis rods between horizons."""
    components, current = [], []
    for i, rod in enumerate(diagram.rods):
        if rod.is_axis:
            current.append(i)
        else:
            components.append(current)
            current = []
    components.append(current)
    return [c for c in components if c]


def doc_decomposition(diagram: RodDiagram) -> DocDecomposition:
    """Split the domain of outer communication into closed pieces.

    Components of >= 3 rods become toric plumbings, two rods a corner ball
    B^4 x T^(n-2), one finite rod a cylinder [0,1] x D^2 x T^(n-1).  A lone
    semi-infinite rod is absorbed into the end, which comes last.
    """
    if diagram.shape != roddiagram.HALF_PLANE:
        raise PlumbingError("the decomposition needs a half-plane diagram")
    n = diagram.n
    if n < 3:
        raise PlumbingError(f"the decomposition needs n >= 3, got n = {n}")
    for corner in roddiagram.corners(diagram):
        if not corner.admissible:
            raise PlumbingError(
                f"rods {corner.left} and {corner.right}: inadmissible corner, "
                f"Det_2 = {corner.det2}"
            )

    last = len(diagram.rods) - 1
    pieces, absorbed = [], []
    for component in axis_components(diagram):
        semi_infinite = 0 in component or last in component
        if len(component) == 1:
            if semi_infinite:
                absorbed.extend(component)
                continue
            pieces.append(Piece(CYLINDER, tuple(component), "[0,1]×D²" + torus_label(n - 1)))
        elif len(component) == 2:
            pieces.append(Piece(CORNER_BALL, tuple(component), "B⁴" + torus_label(n - 2)))
        else:
            plumbing = decompose_component([diagram.rods[i].v for i in component])
            label = " ∪ ".join(b.label for b in plumbing.bundles)
            pieces.append(Piece(TORIC_PLUMBING, tuple(component), label, plumbing=plumbing))

    end = roddiagram.asymptotic_end(diagram)
    pieces.append(Piece(END, tuple(absorbed), "R₊×" + end.label, end=end))
    result = DocDecomposition(pieces=tuple(pieces))
    logger.debug("decomposition J=%d N1=%d N2=%d", result.J, result.N1, result.N2)
    return result
