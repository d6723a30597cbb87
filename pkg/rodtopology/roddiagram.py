#!/usr/bin/env python3

"""Rod diagrams: data model, JSON codec, validation and local topology.

A diagram lists the boundary of the orbit space in order.  Axis rods carry a
primitive rod structure in Z^n, horizon rods carry nothing.  Half-plane
diagrams start and end with semi-infinite axis rods; disk diagrams are read
cyclically.  Reversing the list order reverses the orientation of the total
space.
"""

import json
import logging
import math
from collections import namedtuple
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import RodTopologyError
from . import intlin

logger = logging.getLogger(__name__)

AXIS = "axis"
HORIZON = "horizon"
HALF_PLANE = "half_plane"
DISK = "disk"

S3 = "S3"
LENS = "Lens"
S1XS2 = "S1xS2"

_SUPERSCRIPTS = str.maketrans("0123456789", "⁰¹²³⁴⁵⁶⁷⁸⁹")


class DiagramError(RodTopologyError):
    pass


def superscript(k: int) -> str:
    return str(k).translate(_SUPERSCRIPTS)


def torus_label(t: int) -> str:
    """Suffix for a T^t factor: '', '×S¹', '×T²', ..."""
    if t == 0:
        return ""
    if t == 1:
        return "×S¹"
    return f"×T{superscript(t)}"


@dataclass(frozen=True)
class RodStructure:
    """Primitive rod structure, sign-normalized so the first nonzero entry is
    positive.  The vector as written in the input is kept in `raw`."""

    v: Tuple[int, ...]
    raw: Tuple[int, ...] = field(compare=False, default=())

    @classmethod
    def from_vector(cls, vector: Sequence[int]) -> "RodStructure":
        raw = tuple(int(x) for x in vector)
        if not any(raw):
            raise DiagramError(f"structure {raw} is zero")
        if not intlin.is_primitive_vector(raw):
            raise DiagramError(f"structure {raw} is not primitive")
        lead = next(x for x in raw if x != 0)
        v = raw if lead > 0 else tuple(-x for x in raw)
        return cls(v=v, raw=raw)

    @property
    def n(self) -> int:
        return len(self.v)


@dataclass(frozen=True)
class Rod:
    kind: str
    structure: Optional[RodStructure] = None
    z: Optional[Tuple[float, float]] = None
    potential: Optional[Tuple[float, ...]] = None

    @property
    def is_axis(self) -> bool:
        return self.kind == AXIS

    @property
    def v(self) -> Tuple[int, ...]:
        if self.structure is None:
            raise DiagramError("horizon rods carry no structure")
        return self.structure.v


@dataclass(frozen=True)
class RodDiagram:
    n: int
    shape: str
    rods: Tuple[Rod, ...]
    description: str = ""

    @property
    def axis_indices(self) -> List[int]:
        return [i for i, rod in enumerate(self.rods) if rod.is_axis]

    @property
    def structures(self) -> List[Tuple[int, ...]]:
        return [rod.v for rod in self.rods if rod.is_axis]

    @property
    def horizon_indices(self) -> List[int]:
        return [i for i, rod in enumerate(self.rods) if not rod.is_axis]

    @property
    def has_geometry(self) -> bool:
        return self.rods[0].z is not None

    @property
    def has_potentials(self) -> bool:
        return any(rod.potential is not None for rod in self.rods)

    def neighbors(self, i: int) -> Tuple[Optional[int], Optional[int]]:
        """Indices of the rods before and after rod i (cyclic on a disk)."""
        count = len(self.rods)
        if self.shape == DISK:
            return (i - 1) % count, (i + 1) % count
        return (i - 1 if i > 0 else None), (i + 1 if i < count - 1 else None)

    def adjacent_pairs(self) -> List[Tuple[int, int]]:
        count = len(self.rods)
        pairs = [(i, i + 1) for i in range(count - 1)]
        if self.shape == DISK:
            pairs.append((count - 1, 0))
        return pairs


@dataclass(frozen=True)
class CrossSectionTopology:
    """Cross-section of a horizon or of the asymptotic end: S3, L(p, q) or
    S1xS2, times a torus of rank `torus_factor`."""

    family: str
    torus_factor: int
    p: int = 1
    q: int = 0

    @property
    def base_label(self) -> str:
        if self.family == S3:
            return "S³"
        if self.family == LENS:
            return f"L({self.p},{self.q})"
        return "S¹×S²"

    @property
    def label(self) -> str:
        # S¹×S²×T^t is displayed as S²×T^(t+1)
        if self.family == S1XS2 and self.torus_factor > 0:
            return f"S²×T{superscript(self.torus_factor + 1)}"
        return self.base_label + torus_label(self.torus_factor)

    def to_dict(self) -> dict:
        result = {"family": self.family, "torus_factor": self.torus_factor}
        if self.family == LENS:
            result.update(p=self.p, q=self.q)
        result["label"] = self.label
        return result


@dataclass(frozen=True)
class CornerClass:
    admissible: bool
    det2: int


Corner = namedtuple("Corner", ["left", "right", "v", "w", "det2", "admissible"])
Horizon = namedtuple("Horizon", ["index", "left", "right", "topology"])
Compatibility = namedtuple(
    "Compatibility", ["matrix", "oriented", "normalized", "value"]
)


def _vector(x) -> Tuple[int, ...]:
    if isinstance(x, RodStructure):
        return x.v
    return tuple(int(c) for c in x)


def _number(x, where: str) -> float:
    if x == "-inf":
        return -math.inf
    if x == "+inf":
        return math.inf
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise DiagramError(f"{where}: expected a number, got {x!r}")
    if not math.isfinite(x):
        raise DiagramError(f"{where}: use the strings '-inf'/'+inf' for infinite ends")
    return float(x)


def _parse_rod(i: int, item, n: int) -> Rod:
    where = f"rod {i}"
    if not isinstance(item, dict):
        raise DiagramError(f"{where}: expected an object")
    unknown = set(item) - {"kind", "v", "z", "potential"}
    if unknown:
        raise DiagramError(f"{where}: unknown keys {sorted(unknown)}")
    kind = item.get("kind")
    if kind not in (AXIS, HORIZON):
        raise DiagramError(f"{where}: kind must be 'axis' or 'horizon', got {kind!r}")

    z = None
    if "z" in item:
        if not isinstance(item["z"], list) or len(item["z"]) != 2:
            raise DiagramError(f"{where}: z must be a pair")
        z = tuple(_number(x, where) for x in item["z"])

    if kind == HORIZON:
        if "v" in item or "potential" in item:
            raise DiagramError(f"{where}: horizon rods carry no structure or potential")
        return Rod(kind=HORIZON, z=z)

    vector = item.get("v")
    if not isinstance(vector, list) or len(vector) != n:
        raise DiagramError(f"{where}: axis structure must be a list of {n} integers")
    if any(isinstance(x, bool) or not isinstance(x, int) for x in vector):
        raise DiagramError(f"{where}: axis structure entries must be integers")
    try:
        structure = RodStructure.from_vector(vector)
    except DiagramError as e:
        raise DiagramError(f"{where}: {e}") from e

    potential = None
    if "potential" in item:
        values = item["potential"]
        if not isinstance(values, list) or len(values) != n:
            raise DiagramError(f"{where}: potential must be a list of {n} numbers")
        potential = tuple(_number(x, where) for x in values)
    return Rod(kind=AXIS, structure=structure, z=z, potential=potential)


def from_dict(data) -> RodDiagram:
    if not isinstance(data, dict):
        raise DiagramError("diagram must be a JSON object")
    unknown = set(data) - {"n", "shape", "rods", "description"}
    if unknown:
        raise DiagramError(f"unknown keys {sorted(unknown)}")
    n = data.get("n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 2:
        raise DiagramError(f"n must be an integer >= 2, got {n!r}")
    shape = data.get("shape")
    if shape not in (HALF_PLANE, DISK):
        raise DiagramError(f"shape must be 'half_plane' or 'disk', got {shape!r}")
    items = data.get("rods")
    if not isinstance(items, list):
        raise DiagramError("rods must be a list")
    rods = tuple(_parse_rod(i, item, n) for i, item in enumerate(items))
    diagram = RodDiagram(
        n=n, shape=shape, rods=rods, description=str(data.get("description", ""))
    )
    validate(diagram)
    return diagram


def parse(text: str) -> RodDiagram:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise DiagramError(f"invalid JSON: {e}") from e
    return from_dict(data)


def _z_out(x: float):
    if x == -math.inf:
        return "-inf"
    if x == math.inf:
        return "+inf"
    return x


def to_dict(diagram: RodDiagram) -> dict:
    rods = []
    for rod in diagram.rods:
        item = {"kind": rod.kind}
        if rod.is_axis:
            item["v"] = list(rod.v)
        if rod.z is not None:
            item["z"] = [_z_out(x) for x in rod.z]
        if rod.potential is not None:
            item["potential"] = list(rod.potential)
        rods.append(item)
    data = {"n": diagram.n, "shape": diagram.shape, "rods": rods}
    if diagram.description:
        data["description"] = diagram.description
    return data


def serialize(diagram: RodDiagram) -> str:
    return json.dumps(to_dict(diagram), indent=2, ensure_ascii=False) + "\n"


def validate(diagram: RodDiagram) -> None:
    """Raise DiagramError on the first violated diagram invariant."""
    rods = diagram.rods
    n = diagram.n
    if len(rods) < 2:
        raise DiagramError("a diagram needs at least two rods")
    if diagram.shape == HALF_PLANE:
        if not rods[0].is_axis:
            raise DiagramError("rod 0: a half-plane diagram must start with an axis rod")
        if not rods[-1].is_axis:
            raise DiagramError(
                f"rod {len(rods) - 1}: a half-plane diagram must end with an axis rod"
            )

    for i, rod in enumerate(rods):
        if rod.is_axis and rod.structure.n != n:
            raise DiagramError(f"rod {i}: structure has length {rod.structure.n}, expected {n}")

    for i, j in diagram.adjacent_pairs():
        a, b = rods[i], rods[j]
        if not a.is_axis and not b.is_axis:
            raise DiagramError(f"rods {i} and {j}: adjacent horizon rods")
        if a.is_axis and b.is_axis:
            if a.v == b.v:
                raise DiagramError(
                    f"rods {i} and {j}: adjacent axis rods have equal structure {a.v}"
                )
            if a.potential is not None and b.potential is not None:
                if a.potential != b.potential:
                    raise DiagramError(
                        f"rods {i} and {j}: potential constants differ across the corner"
                    )

    axis = [rod for rod in rods if rod.is_axis]
    with_potential = sum(1 for rod in axis if rod.potential is not None)
    if 0 < with_potential < len(axis):
        missing = next(i for i, rod in enumerate(rods) if rod.is_axis and rod.potential is None)
        raise DiagramError(f"rod {missing}: potential constants must be given for all axis rods or none")

    _validate_geometry(diagram)


def _validate_geometry(diagram: RodDiagram) -> None:
    rods = diagram.rods
    with_z = sum(1 for rod in rods if rod.z is not None)
    if with_z == 0:
        return
    if with_z < len(rods):
        missing = next(i for i, rod in enumerate(rods) if rod.z is None)
        raise DiagramError(f"rod {missing}: z must be given for all rods or none")

    last = len(rods) - 1
    for i, rod in enumerate(rods):
        a, b = rod.z
        semi_bottom = diagram.shape == HALF_PLANE and i == 0
        semi_top = diagram.shape == HALF_PLANE and i == last
        if semi_bottom and a != -math.inf:
            raise DiagramError("rod 0: the first rod of a half-plane diagram must start at -inf")
        if semi_top and b != math.inf:
            raise DiagramError(f"rod {i}: the last rod of a half-plane diagram must end at +inf")
        if (a == -math.inf and not semi_bottom) or (b == math.inf and not semi_top):
            raise DiagramError(f"rod {i}: only the outer rods of a half-plane diagram are semi-infinite")
        if a == math.inf or b == -math.inf:
            raise DiagramError(f"rod {i}: z interval {rod.z} is reversed")
        if not a < b:
            raise DiagramError(f"rod {i}: z interval {rod.z} is degenerate or reversed")
        if i > 0 and rods[i - 1].z[1] != a:
            raise DiagramError(f"rod {i}: z interval does not continue rod {i - 1}")


def structure_matrix(diagram: RodDiagram) -> np.ndarray:
    """Axis rod structures as the columns of an n x k integer matrix."""
    return intlin.column_matrix(diagram.structures)


def classify_corner(v, w) -> CornerClass:
    """Admissible iff Det_2(v, w) == 1."""
    v, w = _vector(v), _vector(w)
    det2 = intlin.span_divisor([v, w])
    if det2 == 0:
        raise DiagramError(f"corner structures {v} and {w} are parallel")
    return CornerClass(admissible=det2 == 1, det2=det2)


def cross_section_topology(v, w, n: int) -> CrossSectionTopology:
    """Topology of the cross-section between two axis rods.

    The Hermite form sends v to e_1 and w to (q, p, 0, ...): p = 0 gives
    S1xS2, p = 1 gives S3, p > 1 gives L(p, q).
    """
    v, w = _vector(v), _vector(w)
    H = intlin.hermite_normal_form(intlin.column_matrix([v, w])).H
    q, p = int(H[0, 1]), int(H[1, 1])
    t = n - 2
    if p == 0:
        return CrossSectionTopology(family=S1XS2, torus_factor=t, p=0, q=1)
    if p == 1:
        return CrossSectionTopology(family=S3, torus_factor=t)
    return CrossSectionTopology(family=LENS, torus_factor=t, p=p, q=q)


def asymptotic_end(diagram: RodDiagram) -> CrossSectionTopology:
    """Cross-section of the end R+ x (cross-section)."""
    if diagram.shape != HALF_PLANE:
        raise DiagramError("a disk diagram has no asymptotic end")
    return cross_section_topology(diagram.rods[0].v, diagram.rods[-1].v, diagram.n)


def corners(diagram: RodDiagram) -> List[Corner]:
    result = []
    for i, j in diagram.adjacent_pairs():
        a, b = diagram.rods[i], diagram.rods[j]
        if a.is_axis and b.is_axis:
            c = classify_corner(a.v, b.v)
            result.append(Corner(i, j, a.v, b.v, c.det2, c.admissible))
    return result


def horizon_topology(diagram: RodDiagram, i: int) -> CrossSectionTopology:
    if diagram.rods[i].is_axis:
        raise DiagramError(f"rod {i} is not a horizon rod")
    left, right = diagram.neighbors(i)
    return cross_section_topology(diagram.rods[left].v, diagram.rods[right].v, diagram.n)


def horizons(diagram: RodDiagram) -> List[Horizon]:
    return [Horizon(i, *diagram.neighbors(i), horizon_topology(diagram, i)) for i in diagram.horizon_indices]


def diagram_equivalent(d1: RodDiagram, d2: RodDiagram) -> bool:
    """True iff one unimodular Q maps every structure of d1 to the matching
    structure of d2 (up to the sign of each structure).

    Signs of d2 are searched depth first with the first sign fixed; a branch
    dies as soon as the Hermite forms of the prefixes differ.
    """
    if d1.shape != d2.shape:
        raise DiagramError(f"cannot compare a {d1.shape} diagram with a {d2.shape} diagram")
    if d1.n != d2.n or [r.kind for r in d1.rods] != [r.kind for r in d2.rods]:
        return False
    left, right = d1.structures, d2.structures
    if not left:
        return True
    left_forms = [
        intlin.hermite_normal_form(intlin.column_matrix(left[: k + 1])).H
        for k in range(len(left))
    ]

    def search(chosen):
        k = len(chosen)
        if k == len(right):
            return True
        for sign in ((1,) if k == 0 else (1, -1)):
            candidate = chosen + [tuple(sign * x for x in right[k])]
            H = intlin.hermite_normal_form(intlin.column_matrix(candidate)).H
            if (H == left_forms[k]).all() and search(candidate):
                return True
        return False

    return search([])


def _det(a, b) -> int:
    return a[0] * b[1] - a[1] * b[0]


def normalize_compatibility(v1, v2, v3) -> Compatibility:
    """Unimodular A sending an oriented triple in Z^2 to (1,0), (0,1), (r', s').

    v2 and v3 are negated where needed so both corner determinants are +1.
    `value` is m*r*(mq - np)*(ps - rq) for the normalized triple, which is
    -r'^2 and therefore never positive.
    """
    vs = [_vector(x) for x in (v1, v2, v3)]
    if any(len(x) != 2 for x in vs):
        raise DiagramError("compatibility is defined for structures in Z^2")
    for i in (1, 2):
        d = _det(vs[i - 1], vs[i])
        if abs(d) != 1:
            raise DiagramError(f"corner between {vs[i - 1]} and {vs[i]} has Det_2 = {abs(d)}")
        if d == -1:
            vs[i] = tuple(-x for x in vs[i])
    (m, n), (p, q) = vs[0], vs[1]
    A = np.array([[q, -p], [-n, m]], dtype=object)
    normalized = [tuple(int(x) for x in A @ np.array(v, dtype=object)) for v in vs]
    assert normalized[0] == (1, 0) and normalized[1] == (0, 1)
    return Compatibility(
        matrix=A, oriented=vs, normalized=normalized, value=compatibility_value(*normalized)
    )


def compatibility_value(v1, v2, v3) -> int:
    (m, n), (p, q), (r, s) = (_vector(x) for x in (v1, v2, v3))
    return m * r * (m * q - n * p) * (p * s - r * q)


def _z_text(rod: Rod) -> str:
    if rod.z is None:
        return ""
    a, b = (str(_z_out(x)) for x in rod.z)
    return f"z [{a}, {b}]"


def render_text(diagram: RodDiagram) -> str:
    """ASCII listing of the boundary with corner and horizon markers."""
    lines = [f"{diagram.shape} diagram, n={diagram.n}, {len(diagram.rods)} rods"]
    if diagram.description:
        lines.append(f"  {diagram.description}")
    topology = {h.index: h.topology.label for h in horizons(diagram)}

    def corner_line(a: Rod, b: Rod) -> Optional[str]:
        if not (a.is_axis and b.is_axis):
            return None
        det2 = intlin.span_divisor([a.v, b.v])
        mark = "+" if det2 == 1 else "!"
        note = "" if det2 == 1 else "  inadmissible"
        return f"     {mark} corner  Det2={det2}{note}"

    for i, rod in enumerate(diagram.rods):
        if i > 0:
            line = corner_line(diagram.rods[i - 1], rod)
            if line:
                lines.append(line)
        if rod.is_axis:
            vector = "(" + ", ".join(str(x) for x in rod.v) + ")"
            lines.append(f"{i:>4} | axis     {vector:<20} {_z_text(rod)}".rstrip())
        else:
            lines.append(f"{i:>4} ~ horizon  {topology[i]:<20} {_z_text(rod)}".rstrip())
    if diagram.shape == DISK:
        line = corner_line(diagram.rods[-1], diagram.rods[0])
        if line:
            lines.append(line + "  (closing)")
    else:
        lines.append(f"     end  {asymptotic_end(diagram).label}")
    return "\n".join(lines) + "\n"
