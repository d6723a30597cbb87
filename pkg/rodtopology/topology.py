#!/usr/bin/env python3

"""Global topology of rod diagrams: fundamental groups, torsion-free covers,
horizon fill-ins, compactification and the low-dimensional chart."""

import logging
from collections import namedtuple
from dataclasses import dataclass
from typing import List, Sequence, Tuple

from . import RodTopologyError
from . import intlin
from . import roddiagram
from .roddiagram import AXIS, DISK, HALF_PLANE, Rod, RodDiagram, RodStructure, superscript

logger = logging.getLogger(__name__)

Vector = Tuple[int, ...]

# compactify actions
DELETE = "delete"
MERGE = "merge"
INSERT = "insert"

HorizonFillin = namedtuple("HorizonFillin", ["index", "left", "right", "det2", "action", "inserted"])


class TopologyError(RodTopologyError):
    pass


class CompactificationError(TopologyError):
    pass


@dataclass(frozen=True)
class AbelianGroup:
    """Z^free_rank ⊕ Z_t1 ⊕ Z_t2 ⊕ ... with t_i | t_{i+1}."""

    free_rank: int
    torsion: Tuple[int, ...] = ()

    @property
    def is_trivial(self) -> bool:
        return self.free_rank == 0 and not self.torsion

    @property
    def label(self) -> str:
        parts = [f"Z{_subscript(t)}" for t in self.torsion]
        if self.free_rank == 1:
            parts.append("Z")
        elif self.free_rank > 1:
            parts.append(f"Z{superscript(self.free_rank)}")
        return " ⊕ ".join(parts) if parts else "1"

    def to_dict(self) -> dict:
        return {"free_rank": self.free_rank, "torsion": list(self.torsion), "label": self.label}


def _subscript(k: int) -> str:
    return str(k).translate(str.maketrans("0123456789", "₀₁₂₃₄₅₆₇₈₉"))


def group_of_span(vectors: Sequence[Vector], n: int) -> AbelianGroup:
    """Z^n modulo the integral span of the vectors."""
    if not vectors:
        return AbelianGroup(free_rank=n)
    smith = intlin.smith_normal_form(intlin.column_matrix(vectors))
    torsion = tuple(s for s in smith.divisors if s > 1)
    return AbelianGroup(free_rank=n - smith.rank, torsion=torsion)


def fundamental_group(diagram: RodDiagram) -> AbelianGroup:
    """Z^n / span of all axis rod structures, read off the Smith form."""
    return group_of_span(diagram.structures, diagram.n)


def is_simply_connected(diagram: RodDiagram) -> bool:
    return fundamental_group(diagram).is_trivial


def end_pi1(diagram: RodDiagram) -> AbelianGroup:
    """π1 of the asymptotic end R+ × cross-section."""
    end = roddiagram.asymptotic_end(diagram)
    t = end.torus_factor
    if end.family == roddiagram.S3:
        return AbelianGroup(free_rank=t)
    if end.family == roddiagram.LENS:
        return AbelianGroup(free_rank=t, torsion=(end.p,))
    return AbelianGroup(free_rank=t + 1)


@dataclass(frozen=True)
class Cover:
    """Torsion-free cover: same rods, structures in the cover's lattice."""

    deck_group: AbelianGroup
    structures: Tuple[Vector, ...]
    diagram: RodDiagram

    def to_dict(self) -> dict:
        return {
            "deck_group": self.deck_group.to_dict(),
            "structures": [list(v) for v in self.structures],
            "diagram": roddiagram.to_dict(self.diagram),
        }


def universal_cover(diagram: RodDiagram) -> Cover:
    """The torsion-free cover of a simple T^n-manifold.

    With S = U A V the Smith form of the structure matrix, the cover's
    structures are the columns of U A with row i divided by s_i.
    """
    structures = diagram.structures
    if not structures:
        return Cover(AbelianGroup(0), (), diagram)
    A = intlin.column_matrix(structures)
    smith = intlin.smith_normal_form(A)
    UA = smith.U @ A
    for i, s in enumerate(smith.divisors):
        if s > 1:
            assert all(x % s == 0 for x in UA[i])
            UA[i] = UA[i] // s
    covered = [tuple(int(x) for x in UA[:, j]) for j in range(UA.shape[1])]

    rods, k = [], 0
    for rod in diagram.rods:
        if rod.is_axis:
            rods.append(Rod(AXIS, RodStructure.from_vector(covered[k]), rod.z, rod.potential))
            k += 1
        else:
            rods.append(rod)
    cover = RodDiagram(n=diagram.n, shape=diagram.shape, rods=tuple(rods))
    assert not fundamental_group(cover).torsion
    deck = AbelianGroup(free_rank=0, torsion=tuple(s for s in smith.divisors if s > 1))
    return Cover(deck_group=deck, structures=tuple(covered), diagram=cover)


def fillin_path(v, w) -> List[Vector]:
    """Chain v = u_1, ..., u_k = w of primitive vectors with every
    consecutive Det_2 equal to 1.

    In Hermite coordinates v = e_1 and w = (q, p, 0, ...).  The chain
    (1,0), (0,1), then the convergents (k_j, h_j) of p/q up to (q, p), is
    mapped back by Q^-1.
    """
    v = tuple(int(x) for x in (v.v if isinstance(v, RodStructure) else v))
    w = tuple(int(x) for x in (w.v if isinstance(w, RodStructure) else w))
    n = len(v)
    if not (intlin.is_primitive_vector(v) and intlin.is_primitive_vector(w)):
        raise TopologyError(f"fill-in endpoints {v}, {w} must be primitive")

    hermite = intlin.hermite_normal_form(intlin.column_matrix([v, w]))
    back = intlin.unimodular_inverse(hermite.Q)
    q, p = int(hermite.H[0, 1]), int(hermite.H[1, 1])

    def lift(a: int, b: int) -> Vector:
        x = [a, b] + [0] * (n - 2)
        return tuple(int(sum(back[i, j] * x[j] for j in range(n))) for i in range(n))

    if p == 0:
        path = [v, lift(0, 1), w]
    elif p == 1:
        path = [v, w]
    else:
        chain = [(1, 0), (0, 1)]
        chain += [(k, h) for h, k in intlin.convergents(intlin.continued_fraction(p, q))]
        assert chain[-1] == (q, p)
        path = [v] + [lift(a, b) for a, b in chain[1:-1]] + [w]

    for a, b in zip(path, path[1:]):
        assert intlin.span_divisor([a, b]) == 1
    return path


@dataclass(frozen=True)
class FillinPlan:
    horizons: Tuple[HorizonFillin, ...]
    end_cap: HorizonFillin
    waypoints: Tuple[Vector, ...]
    diagram: RodDiagram

    def to_dict(self) -> dict:
        def entry(f: HorizonFillin) -> dict:
            return {
                "index": f.index,
                "left": list(f.left),
                "right": list(f.right),
                "det2": f.det2,
                "action": f.action,
                "inserted": [list(u) for u in f.inserted],
            }

        return {
            "horizons": [entry(f) for f in self.horizons],
            "end_cap": entry(self.end_cap),
            "waypoints": [list(u) for u in self.waypoints],
            "diagram": roddiagram.to_dict(self.diagram),
        }


def _fill(index, v: Vector, w: Vector) -> HorizonFillin:
    d = intlin.span_divisor([v, w])
    if d == 1:
        return HorizonFillin(index, v, w, d, DELETE, ())
    if d == 0:
        return HorizonFillin(index, v, w, d, MERGE, ())
    return HorizonFillin(index, v, w, d, INSERT, tuple(fillin_path(v, w)[1:-1]))


def _unit(n: int, i: int) -> Vector:
    return tuple(1 if j == i else 0 for j in range(n))


def _route(start: Vector, waypoints: Sequence[Vector], stop: Vector) -> List[Vector]:
    """Interior of the concatenated fill-in chains start -> waypoints -> stop."""
    stops = [start] + list(waypoints) + [stop]
    interior: List[Vector] = []
    for a, b in zip(stops, stops[1:]):
        interior.extend(fillin_path(a, b)[1:])
    return interior[:-1]


def _normalized(u: Vector) -> Vector:
    return RodStructure.from_vector(u).v


def compactify(diagram: RodDiagram) -> FillinPlan:
    """Fill every horizon and cap the end, producing a disk diagram.

    A horizon between v and w is deleted (Det_2 = 1), merged away (v = w)
    or replaced by the interior of fillin_path(v, w).  The end is capped the
    same way between the last and the first rod.  When the result is not
    simply connected the end cap is rerouted through e_1, ..., e_n.
    """
    if diagram.shape != HALF_PLANE:
        raise TopologyError("only half-plane diagrams can be compactified")
    n = diagram.n
    rods = diagram.rods

    body: List[Vector] = [rods[0].v]
    fills = []
    i = 1
    while i < len(rods):
        rod = rods[i]
        if rod.is_axis:
            body.append(rod.v)
            i += 1
            continue
        fill = _fill(i, body[-1], rods[i + 1].v)
        fills.append(fill)
        logger.debug("horizon %d: Det_2 = %d, %s", i, fill.det2, fill.action)
        if fill.action == MERGE:
            i += 2
            continue
        body.extend(fill.inserted)
        i += 1

    cap = _fill(None, body[-1], body[0])
    if cap.action == MERGE and len(body) > 1:
        body.pop()
    logger.debug("end cap: Det_2 = %d, %s", cap.det2, cap.action)

    tail = list(cap.inserted)
    waypoints: List[Vector] = []
    attempts = 0
    while not group_of_span(body + tail, n).is_trivial:
        if attempts == n:
            raise CompactificationError(
                f"compactification is not simply connected after {n} reroutes"
            )
        e = _unit(n, attempts)
        attempts += 1
        span = group_of_span(body + waypoints, n)
        if group_of_span(body + waypoints + [e], n) == span:
            continue
        waypoints.append(e)
        start, stop = body[-1], body[0]
        if len(body) == 1 and cap.action == MERGE:
            start = stop = body[0]
        tail = _route(start, waypoints, stop)
        logger.debug("rerouted end cap through %s", waypoints)

    chain = [_normalized(u) for u in body + tail]
    if len(chain) < 2:
        raise CompactificationError("compactification collapsed to a single rod")
    for a, b in zip(chain, chain[1:] + chain[:1]):
        if a == b or intlin.span_divisor([a, b]) != 1:
            raise CompactificationError(f"compactified corner {a}, {b} is not admissible")

    disk = RodDiagram(
        n=n, shape=DISK, rods=tuple(Rod(AXIS, RodStructure.from_vector(u)) for u in chain)
    )
    try:
        roddiagram.validate(disk)
    except roddiagram.DiagramError as e:
        raise CompactificationError(f"compactified diagram is invalid: {e}") from e
    if not is_simply_connected(disk):
        raise CompactificationError("compactified diagram is not simply connected")
    return FillinPlan(
        horizons=tuple(fills), end_cap=cap, waypoints=tuple(waypoints), diagram=disk
    )


def betti2(disk: RodDiagram) -> int:
    """k = (#corners) - n for a simply connected disk diagram, n in {2, 3, 4}."""
    if disk.shape != DISK:
        raise TopologyError("betti2 needs a disk diagram")
    if disk.horizon_indices:
        raise TopologyError("betti2 needs a closed diagram without horizon rods")
    if disk.n not in (2, 3, 4):
        raise TopologyError(f"the chart covers n = 2, 3, 4; got n = {disk.n}")
    if not is_simply_connected(disk):
        raise TopologyError("betti2 needs a simply connected diagram")
    return len(roddiagram.corners(disk)) - disk.n


@dataclass(frozen=True)
class Classification:
    n: int
    k: int
    spin: bool
    family_row: int
    summands: Tuple[Tuple[int, str], ...]
    text: str

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "spin": self.spin,
            "family_row": self.family_row,
            "summands": [{"count": c, "manifold": m} for c, m in self.summands],
            "text": self.text,
            "derived_invariant": "k = #corners - n",
        }


TWISTED = "\u00d7\u0303"

_SPHERES = {2: "S⁴", 3: "S⁵", 4: "S³×S³"}


def _connected_sum(summands: Sequence[Tuple[int, str]]) -> str:
    kept = [(c, m) for c, m in summands if c > 0]
    if len(kept) == 1:
        c, m = kept[0]
        return m if c == 1 else f"#{c}({m})"
    return " # ".join(f"({m})" if c == 1 else f"{c}({m})" for c, m in kept)


def classify(disk: RodDiagram, spin: bool) -> Classification:
    """Homeomorphism type of a closed simply connected toric manifold of
    dimension n + 2 with n in {2, 3, 4}, from k = betti2 and spin."""
    k = betti2(disk)
    n = disk.n
    if k == 0:
        return Classification(n, k, spin, 1, ((1, _SPHERES[n]),), _SPHERES[n])

    if n == 2:
        if spin:
            if k % 2:
                raise TopologyError(f"a spin 4-manifold of this kind has even k, got k = {k}")
            summands = ((k // 2, "S²×S²"),)
            return Classification(n, k, spin, 2, summands, _connected_sum(summands))
        text = f"ℓCP² # ({k}-ℓ)CP²bar, 0 ≤ ℓ ≤ {k}"
        return Classification(n, k, spin, 3, ((k, "±CP²"),), text)

    if n == 3:
        if spin:
            summands = ((k, "S²×S³"),)
            row = 2
        else:
            summands = ((1, f"S²{TWISTED}S³"), (k - 1, "S²×S³"))
            row = 3
    else:
        if spin:
            summands = ((k, "S²×S⁴"), (k + 1, "S³×S³"))
            row = 2
        else:
            summands = ((1, f"S²{TWISTED}S⁴"), (k - 1, "S²×S⁴"), (k + 1, "S³×S³"))
            row = 3
    summands = tuple((c, m) for c, m in summands if c > 0)
    return Classification(n, k, spin, row, summands, _connected_sum(summands))


def compactified_classification(diagram: RodDiagram, spin: bool) -> Classification:
    """classify(compactify(d), spin): the chart entry of the filled-in DOC."""
    return classify(compactify(diagram).diagram, spin)
