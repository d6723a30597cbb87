#!/usr/bin/env python3

"""File loading, settings and report building behind the command line."""

import csv
import dataclasses
import json
import logging
import os
import sys
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

from . import RodTopologyError
from . import intlin
from . import modelmap
from . import plumbing
from . import roddiagram
from . import topology
from .roddiagram import HALF_PLANE, RodDiagram

logger = logging.getLogger(__name__)


class InputError(RodTopologyError):
    pass


@dataclass(frozen=True)
class Settings:
    grid_h: float = 0.05
    epsilon: float = 0.2
    rays: int = 6
    excision: Optional[float] = None
    ray_points: int = 12
    ray_decades: float = 1.0
    annulus_samples: int = 60
    slope_threshold: float = -2.3
    refinement_ratio: float = 1.1
    pin_transition_columns: bool = True
    log_level: str = "WARNING"


def load_settings(filename: str = "settings.json") -> Settings:
    """Load `settings.json`; a missing file gives the defaults."""
    if not os.path.exists(filename):
        logger.debug("no settings file %s, using defaults", filename)
        return Settings()
    data = load_json(filename)
    if not isinstance(data, dict):
        raise InputError(f"{filename}: settings must be a JSON object")
    known = {f.name for f in dataclasses.fields(Settings)}
    for key in sorted(set(data) - known):
        logger.debug("ignoring unknown setting %r", key)
    return Settings(**{k: v for k, v in data.items() if k in known})


def setup_logging(verbose: bool, settings: Settings) -> None:
    level = logging.DEBUG if verbose else getattr(logging, str(settings.log_level).upper(), logging.WARNING)
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


def load_json(filename: str, encoding: str = "utf-8"):
    try:
        with open(filename, "r", encoding=encoding) as f:
            return json.load(f)
    except OSError as e:
        raise InputError(f"cannot read {filename}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise InputError(f"{filename}: invalid JSON: {e}") from e


def load_diagram(filename: str) -> RodDiagram:
    data = load_json(filename)
    try:
        return roddiagram.from_dict(data)
    except roddiagram.DiagramError as e:
        raise roddiagram.DiagramError(f"{filename}: {e}") from e


def load_matrix(filename: str):
    """Integer matrix from {"matrix": [[...], ...]} or from a diagram's
    axis structures taken as columns."""
    data = load_json(filename)
    if isinstance(data, dict) and "matrix" in data:
        return intlin.as_int_matrix(data["matrix"])
    return roddiagram.structure_matrix(roddiagram.from_dict(data))


def _rows(M) -> List[List[int]]:
    return [[int(x) for x in row] for row in M]


def validate_report(diagram: RodDiagram) -> dict:
    return {
        "valid": True,
        "n": diagram.n,
        "shape": diagram.shape,
        "rods": len(diagram.rods),
        "axis_rods": len(diagram.axis_indices),
        "horizon_rods": len(diagram.horizon_indices),
        "geometry": diagram.has_geometry,
        "potentials": diagram.has_potentials,
    }


def hnf_report(A) -> dict:
    result = intlin.hermite_normal_form(A)
    return {
        "matrix": _rows(A),
        "H": _rows(result.H),
        "Q": _rows(result.Q),
        "pivots": [list(p) for p in result.pivots],
        "rank": result.rank,
    }


def snf_report(A) -> dict:
    result = intlin.smith_normal_form(A)
    return {
        "matrix": _rows(A),
        "S": _rows(result.S),
        "U": _rows(result.U),
        "V": _rows(result.V),
        "divisors": list(result.divisors),
        "rank": result.rank,
    }


def detk_report(A, k: Optional[int] = None) -> dict:
    ks = [k] if k is not None else list(range(1, min(A.shape) + 1))
    return {
        "matrix": _rows(A),
        "determinant_divisors": {str(j): intlin.determinant_divisor(A, j) for j in ks},
    }


def _compatibility_entries(diagram: RodDiagram) -> List[dict]:
    """Normalized compatibility of every three consecutive admissible axis rods."""
    entries = []
    for i in range(len(diagram.rods)):
        _, j = diagram.neighbors(i)
        k = diagram.neighbors(j)[1] if j is not None else None
        if k is None or not all(diagram.rods[x].is_axis for x in (i, j, k)):
            continue
        try:
            c = roddiagram.normalize_compatibility(*(diagram.rods[x].v for x in (i, j, k)))
        except roddiagram.DiagramError as e:
            logger.debug("no compatibility at rods %d, %d, %d: %s", i, j, k, e)
            continue
        entries.append({"rods": [i, j, k], "normalized": [list(v) for v in c.normalized], "value": c.value})
    return entries


def analyze_report(diagram: RodDiagram) -> dict:
    report = {
        "n": diagram.n,
        "shape": diagram.shape,
        "corners": [
            {
                "rods": [c.left, c.right],
                "structures": [list(c.v), list(c.w)],
                "det2": c.det2,
                "admissible": c.admissible,
            }
            for c in roddiagram.corners(diagram)
        ],
        "horizons": [
            {"rod": h.index, "topology": h.topology.to_dict()} for h in roddiagram.horizons(diagram)
        ],
    }
    if diagram.n == 2:
        report["compatibility"] = _compatibility_entries(diagram)
    if diagram.shape == HALF_PLANE:
        report["end"] = roddiagram.asymptotic_end(diagram).to_dict()
        report["end_pi1"] = topology.end_pi1(diagram).to_dict()
    group = topology.fundamental_group(diagram)
    report["pi1"] = group.to_dict()
    report["simply_connected"] = group.is_trivial
    return report


def decompose_report(diagram: RodDiagram) -> Tuple[dict, bool]:
    """The decomposition plus the plumbing relations of every toric
    plumbing piece; the flag is False when any relation fails."""
    decomposition = plumbing.doc_decomposition(diagram)
    report = decomposition.to_dict()
    passed = True
    relations = []
    for piece in decomposition.pieces:
        if piece.plumbing is None:
            continue
        p = piece.plumbing
        checks = plumbing.verify_plumbing_relations(p.bundles, list(p.plumbing_vectors))
        passed &= plumbing.relations_ok(checks)
        relations.append(
            {
                "rods": list(piece.source_rod_indices),
                "checks": [c._asdict() for c in checks],
            }
        )
    report["relations"] = relations
    return report, passed


def pi1_report(diagram: RodDiagram) -> dict:
    group = topology.fundamental_group(diagram)
    report = {"pi1": group.to_dict(), "simply_connected": group.is_trivial}
    if diagram.shape == HALF_PLANE:
        report["end_pi1"] = topology.end_pi1(diagram).to_dict()
    return report


def fillin_report(diagram: RodDiagram) -> dict:
    chains = []
    for h in roddiagram.horizons(diagram):
        v, w = diagram.rods[h.left].v, diagram.rods[h.right].v
        entry = {"rod": h.index, "left": list(v), "right": list(w), "det2": intlin.span_divisor([v, w])}
        entry["chain"] = [list(u) for u in topology.fillin_path(v, w)] if entry["det2"] else None
        chains.append(entry)
    return {"horizons": chains}


def compactify_report(diagram: RodDiagram) -> Tuple[dict, RodDiagram]:
    plan = topology.compactify(diagram)
    return plan.to_dict(), plan.diagram


def classify_report(diagram: RodDiagram, spin: bool) -> dict:
    if diagram.shape == HALF_PLANE:
        logger.info("classifying the compactification of a half-plane diagram")
        result = topology.compactified_classification(diagram, spin)
        compactified = True
    else:
        result = topology.classify(diagram, spin)
        compactified = False
    report = result.to_dict()
    report["compactified"] = compactified
    return report


def cover_report(diagram: RodDiagram) -> dict:
    return topology.universal_cover(diagram).to_dict()


def grid_spec(settings: Settings, **overrides) -> modelmap.GridSpec:
    values = {
        "h": settings.grid_h,
        "excision": settings.excision,
        "epsilon": settings.epsilon,
        "rays": settings.rays,
        "ray_points": settings.ray_points,
        "decades": settings.ray_decades,
        "samples": settings.annulus_samples,
        "slope_threshold": settings.slope_threshold,
        "refinement_ratio": settings.refinement_ratio,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    return modelmap.GridSpec(**values)


def model_verify_report(diagram: RodDiagram, grid: modelmap.GridSpec, pinned: bool = True):
    model = modelmap.build_model_map(diagram, epsilon=grid.epsilon, pin_transition_columns=pinned)
    report = modelmap.verify_tension(model, grid)
    result = report.to_dict()
    result["pin_transition_columns"] = pinned
    return result, report


def write_samples_csv(filename: str, samples: Iterable[Tuple[float, float, float]]) -> None:
    with open(filename, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["rho", "z", "tension"])
        for rho, z, tau in samples:
            writer.writerow([f"{rho:.6g}", f"{z:.6g}", f"{tau:.6e}"])


def _text_lines(value, indent: int = 0) -> List[str]:
    pad = "  " * indent
    lines = []
    if isinstance(value, dict):
        for key, item in value.items():
            if isinstance(item, (dict, list)) and item and not _flat(item):
                lines.append(f"{pad}{key}:")
                lines.extend(_text_lines(item, indent + 1))
            else:
                lines.append(f"{pad}{key}: {_scalar(item)}")
    elif isinstance(value, list):
        for item in value:
            if isinstance(item, dict):
                sub = _text_lines(item, indent + 1)
                lines.append(f"{pad}- {sub[0].strip()}")
                lines.extend(sub[1:])
            else:
                lines.append(f"{pad}- {_scalar(item)}")
    else:
        lines.append(f"{pad}{_scalar(value)}")
    return lines


def _flat(item) -> bool:
    if isinstance(item, dict):
        return False
    return all(not isinstance(x, (dict, list)) or (isinstance(x, list) and _flat(x)) for x in item)


def _scalar(item) -> str:
    if isinstance(item, list):
        return "(" + ", ".join(_scalar(x) for x in item) + ")"
    if item is None:
        return "-"
    if isinstance(item, bool):
        return "yes" if item else "no"
    return str(item)


def render(report: dict, fmt: str, diagram: Optional[RodDiagram] = None) -> str:
    """JSON (the machine contract) or an indented text listing, preceded by
    the boundary listing of `diagram` in text mode."""
    if fmt == "json":
        return json.dumps(report, indent=2, ensure_ascii=False) + "\n"
    text = ""
    if diagram is not None:
        text = roddiagram.render_text(diagram) + "\n"
    return text + "\n".join(_text_lines(report)) + "\n"


def write_output(text: str, out: Optional[str] = None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text)
    except OSError as e:
        raise InputError(f"cannot write {out}: {e.strerror}") from e
