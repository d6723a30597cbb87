#!/usr/bin/env python3

"""Model map (F, ω) of a rod data set and numerical tension diagnostics.

F is built as B^-T F0 B^-1.  F0 = diag(e^U, e^V, 1, ..., 1) is exactly
harmonic: U and V are sums of the per-rod harmonic log-functions of the rods
assigned to slot 0 and slot 1.  The frame B(ρ, z) carries each rod structure
in the column of its slot, so the kernel of F on an axis rod is that rod's
structure.  B is constant near corners and poles, moves along the middle of
rod interiors with the rod's column pinned, and relaxes to the far-field
frame away from the axis.  ω is locally constant near each axis component
and an angular profile far away.
"""

import copy
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import RodTopologyError
from . import intlin
from . import plumbing
from . import roddiagram
from .roddiagram import HALF_PLANE, RodDiagram

logger = logging.getLogger(__name__)

LOG2 = math.log(2.0)
BOTTOM = "bottom"
TOP = "top"
BOUNDED = "bounded"


class ModelMapError(RodTopologyError):
    pass


class StencilError(ModelMapError):
    pass


def smoothstep(x) -> np.ndarray:
    """Quintic C² step: 0 for x <= 0, 1 for x >= 1."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return x * x * x * (x * (6.0 * x - 15.0) + 10.0)


def potentials(a: float, rho, z) -> Tuple[np.ndarray, np.ndarray]:
    """u_a = log(r_a - (z - a)), v_a = log(r_a + (z - a)).

    The vanishing factor is evaluated as ρ² / (r_a ± (z - a)) to avoid
    cancellation near the axis.  On the axis one of them is -inf.
    """
    rho = np.asarray(rho, dtype=float)
    z = np.asarray(z, dtype=float)
    d = z - a
    if np.any((rho == 0.0) & (d == 0.0)):
        raise ModelMapError(f"potentials are singular at the axis point z = {a}")
    r = np.hypot(rho, d)
    rho2 = rho * rho
    with np.errstate(divide="ignore", invalid="ignore"):
        minus = np.where(d > 0, rho2 / (r + d), r - d)
        plus = np.where(d < 0, rho2 / (r - d), r + d)
        return np.log(minus), np.log(plus)


def harmonic_residual(fn, rho: float, z: float, h: float) -> float:
    """5-point axisymmetric Laplacian f_ρρ + f_ρ/ρ + f_zz of fn at (ρ, z)."""
    if rho - h <= 0:
        raise StencilError(f"stencil at ρ={rho} with h={h} crosses the axis")
    c = fn(rho, z)
    rp, rm = fn(rho + h, z), fn(rho - h, z)
    zp, zm = fn(rho, z + h), fn(rho, z - h)
    return float(
        (rp - 2 * c + rm) / h**2 + (rp - rm) / (2 * h * rho) + (zp - 2 * c + zm) / h**2
    )


class _MatrixPath:
    """Continuous path T(t), t in [0, 1], of positive-determinant matrices
    from I to T.  With a fixed column k, column k of T(t) stays e_k.

    The straight line is used when it stays invertible; otherwise T is
    factored into row-addition shears and a diagonal, each deformed to the
    identity separately.
    """

    def __init__(self, T: np.ndarray, fixed: Optional[int] = None):
        self.T = np.array(T, dtype=float)
        self.n = self.T.shape[0]
        self.fixed = fixed
        if np.linalg.det(self.T) <= 0:
            raise ModelMapError("transition endpoints have determinants of opposite sign")
        if fixed is not None:
            unit = np.zeros(self.n)
            unit[fixed] = 1.0
            if not np.allclose(self.T[:, fixed], unit, atol=1e-9):
                raise ModelMapError(f"column {fixed} is not shared by the transition endpoints")
        self.linear = self._line_is_invertible()
        if not self.linear:
            self._factor()
            assert np.allclose(self(np.array([1.0]))[0], self.T, atol=1e-8)

    def _line_is_invertible(self) -> bool:
        eigenvalues = np.linalg.eigvals(self.T - np.eye(self.n))
        real = eigenvalues[np.abs(eigenvalues.imag) < 1e-12].real
        if np.any(real <= -1.0 + 1e-9):
            return False
        t = np.linspace(0.0, 1.0, 100)
        dets = np.linalg.det(self._line(t))
        return bool(np.all(dets > 1e-9))

    def _line(self, t: np.ndarray) -> np.ndarray:
        return np.eye(self.n)[None] + t[:, None, None] * (self.T - np.eye(self.n))[None]

    def _factor(self):
        others = [i for i in range(self.n) if i != self.fixed]
        A = self.T[np.ix_(others, others)].copy()
        self.others = others
        self.bottom = (
            self.T[self.fixed, others].copy() if self.fixed is not None else None
        )
        m = len(others)
        ops = []
        for col in range(m):
            if abs(A[col, col]) < 1e-12:
                source = next(r for r in range(col + 1, m) if abs(A[r, col]) > 1e-12)
                A[col] += A[source]
                ops.append((col, source, 1.0))
            for r in range(m):
                if r != col and A[r, col] != 0.0:
                    c = -A[r, col] / A[col, col]
                    A[r] += c * A[col]
                    ops.append((r, col, c))
        self.ops = ops
        self.diagonal = np.diag(A).copy()
        negatives = [i for i, d in enumerate(self.diagonal) if d < 0]
        assert len(negatives) % 2 == 0
        self.pairs = list(zip(negatives[::2], negatives[1::2]))
        logger.debug("transition uses a shear path with %d shears", len(ops))

    def _factored(self, t: np.ndarray) -> np.ndarray:
        m = len(self.others)
        N = len(t)
        P = np.broadcast_to(np.eye(m), (N, m, m)).copy()
        for target, source, c in self.ops:
            # right-multiplying by I - t c e_target e_source^T
            P[:, :, source] -= (t * c)[:, None] * P[:, :, target]
        D = np.zeros((N, m, m))
        magnitude = np.abs(self.diagonal)[None, :] ** t[:, None]
        for i in range(m):
            D[:, i, i] = magnitude[:, i]
        for i, j in self.pairs:
            c, s = np.cos(np.pi * t), np.sin(np.pi * t)
            D[:, i, i], D[:, i, j] = c * magnitude[:, i], -s * magnitude[:, j]
            D[:, j, i], D[:, j, j] = s * magnitude[:, i], c * magnitude[:, j]
        A = P @ D
        result = np.broadcast_to(np.eye(self.n), (N, self.n, self.n)).copy()
        result[np.ix_(range(N), self.others, self.others)] = A
        if self.fixed is not None:
            result[:, self.fixed, self.others] = t[:, None] * self.bottom[None, :]
        return result

    def __call__(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self._line(t) if self.linear else self._factored(t)


@dataclass
class _Transition:
    """Frame moving from `start` to `end` over z in [z0, z1]."""

    z0: float
    z1: float
    start: np.ndarray
    end: np.ndarray
    fixed: Optional[int]
    bump: float = 0.0

    def __post_init__(self):
        self.path = _MatrixPath(np.linalg.solve(self.start, self.end), self.fixed)

    def __call__(self, z: np.ndarray) -> np.ndarray:
        t = smoothstep((z - self.z0) / (self.z1 - self.z0))
        frames = self.start[None] @ self.path(t)
        if self.bump and self.fixed is not None:
            # corrupted curve: the pinned column leaves its rod structure
            other = self.start[:, (self.fixed + 1) % self.start.shape[0]]
            frames[:, :, self.fixed] += (self.bump * 4 * t * (1 - t))[:, None] * other[None]
        return frames


@dataclass
class _Component:
    kind: str
    rods: List[int]
    z_lo: float
    z_hi: float
    constant: np.ndarray
    first: np.ndarray
    transitions: List[_Transition] = field(default_factory=list)
    z_target: float = 0.0
    far_path: Optional[_MatrixPath] = None

    def frame(self, z: np.ndarray) -> np.ndarray:
        frames = np.broadcast_to(self.first, (len(z),) + self.first.shape).copy()
        for transition in self.transitions:
            mask = z > transition.z0
            if np.any(mask):
                frames[mask] = transition(z[mask])
        return frames

    def region(self, rho: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Level function vanishing exactly on the component's axis segment:
        confocal ellipses for a bounded segment, paraboloids for a ray."""
        if self.kind == TOP:
            return np.hypot(rho, z - self.z_lo) - (z - self.z_lo)
        if self.kind == BOTTOM:
            return np.hypot(rho, z - self.z_hi) + (z - self.z_hi)
        return (
            np.hypot(rho, z - self.z_lo) + np.hypot(rho, z - self.z_hi) - (self.z_hi - self.z_lo)
        )


def _frame(n: int, columns: Dict[int, Sequence[int]]) -> np.ndarray:
    """Frame with the given integer columns, completed greedily by e_i."""
    chosen = [tuple(v) for v in columns.values()]
    completion = []
    for i in range(n):
        if len(chosen) + len(completion) == n:
            break
        e = tuple(1 if j == i else 0 for j in range(n))
        if intlin.span_divisor(chosen + completion + [e]) != 0:
            completion.append(e)
    B = np.zeros((n, n))
    free = [k for k in range(n) if k not in columns]
    for slot, v in columns.items():
        B[:, slot] = v
    for slot, e in zip(free, completion):
        B[:, slot] = e
    return B


def _make_positive(B: np.ndarray, protected: Sequence[int]) -> np.ndarray:
    """Flip one unprotected column if det B < 0."""
    if np.linalg.det(B) < 0:
        free = [k for k in range(B.shape[0]) if k not in protected]
        B = B.copy()
        B[:, free[-1]] *= -1
    return B


class ModelMap:
    """The assembled map; evaluate(ρ, z) returns (F, ω) on arrays."""

    def __init__(self, diagram: RodDiagram, epsilon: float = 0.2, pin_transition_columns: bool = True):
        if diagram.shape != HALF_PLANE:
            raise ModelMapError("model maps need a half-plane diagram")
        if not diagram.has_geometry:
            raise ModelMapError("model maps need z coordinates on every rod")
        if not diagram.horizon_indices:
            raise ModelMapError("model maps need at least one horizon rod")
        for corner in roddiagram.corners(diagram):
            if not corner.admissible:
                raise ModelMapError(
                    f"rods {corner.left} and {corner.right}: inadmissible corner, Det_2 = {corner.det2}"
                )
        if not 0 < epsilon < math.pi / 4:
            raise ModelMapError(f"epsilon must lie in (0, π/4), got {epsilon}")

        self.diagram = diagram
        self.n = diagram.n
        self.epsilon = epsilon
        self.pin_transition_columns = pin_transition_columns
        self.transform: Optional[np.ndarray] = None
        rods = diagram.rods
        n = self.n

        if diagram.has_potentials:
            self.constants = {i: np.array(rod.potential) for i, rod in enumerate(rods) if rod.is_axis}
        else:
            logger.info("no potential constants given, using zeros")
            self.constants = {i: np.zeros(n) for i, rod in enumerate(rods) if rod.is_axis}

        finite = sorted({x for rod in rods for x in rod.z if math.isfinite(x)})
        self.center = 0.5 * (finite[0] + finite[-1])
        self.extent = 0.5 * (finite[-1] - finite[0])
        lengths = [rod.z[1] - rod.z[0] for rod in rods if all(map(math.isfinite, rod.z))]
        self.delta = min(rods[i].z[1] - rods[i].z[0] for i in diagram.horizon_indices) / 8
        self.transition_length = max([1.0] + lengths)
        self.regularization = self.extent + 1.0

        top, bottom = len(rods) - 1, 0
        s_top, s_bot = rods[top].v, rods[bottom].v
        self.slots = self._assign_slots()

        if s_top == s_bot:
            far = _frame(n, {0: s_top})
            self.far_frame = _make_positive(far, [0])
        else:
            far = _frame(n, {0: s_top, 1: s_bot})
            self.far_frame = _make_positive(far, [0] if n == 2 else [0, 1])

        self.components = [self._build_component(c) for c in plumbing.axis_components(diagram)]
        self.omega_top = self.constants[top]
        self.omega_bottom = self.constants[bottom]
        self.ball_radius = self._ball_radius()
        logger.debug(
            "model map n=%d slots=%s delta=%.4g ball radius=%.4g",
            n, self.slots, self.delta, self.ball_radius,
        )

    def _assign_slots(self) -> Dict[int, int]:
        rods = self.diagram.rods
        top = len(rods) - 1
        slots = {}
        for component in plumbing.axis_components(self.diagram):
            if top in component:
                for k, i in enumerate(reversed(component)):
                    slots[i] = k % 2
            elif 0 in component:
                start = 0 if rods[0].v == rods[top].v else 1
                for k, i in enumerate(component):
                    slots[i] = (start + k) % 2
            else:
                for k, i in enumerate(component):
                    slots[i] = k % 2
        return slots

    def _build_component(self, indices: List[int]) -> _Component:
        rods = self.diagram.rods
        n = self.n
        last = len(rods) - 1
        kind = BOTTOM if 0 in indices else TOP if last in indices else BOUNDED
        constant = self.constants[indices[0]]
        z_lo, z_hi = rods[indices[0]].z[0], rods[indices[-1]].z[1]
        bump = 0.0 if self.pin_transition_columns else 0.5
        slot = self.slots

        def corner(i, j):
            return _frame(n, {slot[i]: rods[i].v, slot[j]: rods[j].v})

        def aligned(B, previous, shared, other):
            B = B.copy()
            B[:, slot[shared]] = previous[:, slot[shared]]
            protected = [slot[shared]] if n == 2 else [slot[shared], slot[other]]
            return _make_positive(B, protected)

        pairs = list(zip(indices, indices[1:]))
        frames: List[np.ndarray] = []
        if kind == TOP:
            previous = self.far_frame
            for i, j in reversed(pairs):
                previous = aligned(corner(i, j), previous, j, i)
                frames.insert(0, previous)
        elif kind == BOTTOM:
            previous = self.far_frame
            for i, j in pairs:
                previous = aligned(corner(i, j), previous, i, j)
                frames.append(previous)
        else:
            for k, (i, j) in enumerate(pairs):
                if k == 0:
                    B = corner(i, j)
                    frames.append(_make_positive(B, [slot[i]] if n == 2 else [slot[i], slot[j]]))
                else:
                    frames.append(aligned(corner(i, j), frames[-1], i, j))
            if not pairs:
                frames.append(_make_positive(_frame(n, {slot[indices[0]]: rods[indices[0]].v}), [slot[indices[0]]]))

        L = self.transition_length
        transitions = []
        if kind == BOTTOM and pairs:
            b = rods[indices[0]].z[1]
            transitions.append(_Transition(b - 2 * L, b - L, self.far_frame, frames[0], slot[indices[0]], bump))
        for k in range(1, len(indices) - 1):
            a, b = rods[indices[k]].z
            quarter = (b - a) / 4
            transitions.append(
                _Transition(a + quarter, b - quarter, frames[k - 1], frames[k], slot[indices[k]], bump)
            )
        if kind == TOP and pairs:
            a = rods[indices[-1]].z[0]
            transitions.append(_Transition(a + L, a + 2 * L, frames[-1], self.far_frame, slot[indices[-1]], bump))

        if kind == BOTTOM:
            first = self.far_frame
            target = rods[indices[0]].z[1] - 2 * L
        elif kind == TOP:
            first = frames[0] if frames else self.far_frame
            target = rods[indices[-1]].z[0] + 2 * L
        else:
            first = frames[0]
            target = 0.5 * (z_lo + z_hi)

        component = _Component(
            kind=kind, rods=indices, z_lo=z_lo, z_hi=z_hi, constant=constant,
            first=first, transitions=transitions, z_target=target,
        )
        if kind == BOUNDED:
            anchor = component.frame(np.array([target]))[0]
            component.far_path = _MatrixPath(np.linalg.solve(anchor, self.far_frame))
        return component

    def _cos_theta(self, rho: np.ndarray, z: np.ndarray) -> np.ndarray:
        dz = z - self.center
        return dz / np.sqrt(rho * rho + dz * dz + self.regularization**2)

    def _far_field_clean(self, r: float) -> bool:
        theta = np.linspace(0.0, np.pi, 721)
        rho = r * np.sin(theta)
        z = self.center + r * np.cos(theta)
        cos_t = self._cos_theta(rho, z)
        limit = math.cos(self.epsilon)
        for component in self.components:
            inside = component.region(rho, z) < 4 * self.delta
            if component.kind == TOP:
                if np.any(inside & ((cos_t < limit) | (z < component.z_target))):
                    return False
            elif component.kind == BOTTOM:
                if np.any(inside & ((cos_t > -limit) | (z > component.z_target))):
                    return False
            elif np.any(inside):
                return False
        return True

    def _ball_radius(self) -> float:
        R = max(2 * self.extent + 2, 4 * self.transition_length + self.extent)
        for _ in range(200):
            if all(self._far_field_clean(R * f) for f in (1, 2, 5, 10)):
                return R
            R *= 1.1
        raise ModelMapError("could not find a far region free of axis structure")

    def frames(self, rho: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Frame B at each point.

        Within s < δ of a component the frame follows the rod at the point's
        own z.  Out to 4δ it is collapsed onto the frame at z_target, and a
        bounded component then relaxes to the far frame over s in [2δ, 4δ].
        Regions of different components stay disjoint because every horizon
        is at least 8δ long.
        """
        B = np.broadcast_to(self.far_frame, (len(z), self.n, self.n)).copy()
        d = self.delta
        for component in self.components:
            s = component.region(rho, z)
            mask = s < 4 * d
            if not np.any(mask):
                continue
            sm, zm = s[mask], z[mask]
            if component.kind == BOUNDED:
                w = smoothstep((sm - d) / d)
                values = component.frame(zm + w * (component.z_target - zm))
                t = smoothstep((sm - 2 * d) / (2 * d))
                moving = t > 0
                if np.any(moving):
                    anchor = component.frame(np.array([component.z_target]))[0]
                    values[moving] = anchor[None] @ component.far_path(t[moving])
            else:
                w = smoothstep((sm - d) / (3 * d))
                values = component.frame(zm + w * (component.z_target - zm))
            B[mask] = values
        return B

    def omega(self, rho: np.ndarray, z: np.ndarray) -> np.ndarray:
        limit = math.cos(self.epsilon)
        theta = smoothstep((limit - self._cos_theta(rho, z)) / (2 * limit))
        far = self.omega_top[None] + theta[:, None] * (self.omega_bottom - self.omega_top)[None]
        result = far.copy()
        d = self.delta
        for component in self.components:
            s = component.region(rho, z)
            psi = 1.0 - smoothstep((s - 2 * d) / d)
            mask = psi > 0
            if np.any(mask):
                result[mask] += psi[mask, None] * (component.constant[None] - far[mask])
        return result

    def log_diagonal(self, rho: np.ndarray, z: np.ndarray) -> np.ndarray:
        rods = self.diagram.rods
        last = len(rods) - 1
        logs = np.zeros((len(z), self.n))
        for i, slot in self.slots.items():
            a, b = rods[i].z
            if i == last:
                phi = potentials(a, rho, z)[0] - LOG2
            elif i == 0:
                phi = potentials(b, rho, z)[1] - LOG2
            else:
                phi = potentials(a, rho, z)[0] - potentials(b, rho, z)[0]
            logs[:, slot] += phi
        return logs

    def evaluate(self, rho, z) -> Tuple[np.ndarray, np.ndarray]:
        """F (…, n, n) and ω (…, n) at the given points."""
        rho, z = np.broadcast_arrays(np.asarray(rho, dtype=float), np.asarray(z, dtype=float))
        shape = rho.shape
        rho, z = rho.ravel(), z.ravel()
        with np.errstate(over="ignore"):
            diagonal = np.exp(self.log_diagonal(rho, z))
        inverse = np.linalg.inv(self.frames(rho, z))
        F = np.einsum("pki,pk,pkj->pij", inverse, diagonal, inverse)
        F = 0.5 * (F + np.swapaxes(F, 1, 2))
        omega = self.omega(rho, z)
        if self.transform is not None:
            h = self.transform
            F = h[None] @ F @ h.T[None]
            omega = omega @ h.T
        return F.reshape(shape + (self.n, self.n)), omega.reshape(shape + (self.n,))

    def transformed(self, h) -> "ModelMap":
        """The map F -> h F h^T, ω -> h ω for a constant matrix h."""
        h = np.array(h, dtype=float)
        result = copy.copy(self)
        result.transform = h if self.transform is None else h @ self.transform
        return result


def build_model_map(diagram: RodDiagram, epsilon: float = 0.2, pin_transition_columns: bool = True) -> ModelMap:
    return ModelMap(diagram, epsilon=epsilon, pin_transition_columns=pin_transition_columns)


@dataclass
class TensionTerms:
    norm: np.ndarray
    div_h: np.ndarray
    g: np.ndarray
    div_k: np.ndarray


def tension_terms(model: ModelMap, rho, z, h: float) -> TensionTerms:
    """Tension of (F, ω) by centered differences.

    H = F^-1 ∇F, G = f^-1 F^-1 Σ ∂ω ∂ω^T, K = f^-1 F^-1 ∇ω and
    |τ|² = ¼ (Tr A)² + ¼ Tr A² + ½ f (div K)^T F (div K), A = div H + G.
    The divergence ∂_ρ V_ρ + V_ρ/ρ + ∂_z V_z is differenced in the form
    (1/ρ) ∂_ρ (ρ V_ρ) + ∂_z V_z.
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float)).ravel()
    z = np.atleast_1d(np.asarray(z, dtype=float)).ravel()
    rho, z = np.broadcast_arrays(rho, z)
    if np.any(rho - 2 * h <= 0):
        raise StencilError(f"stencil with h={h} reaches the axis; need ρ > {2 * h}")

    offsets = [(0, 0), (1, 0), (-1, 0), (2, 0), (-2, 0), (0, 1), (0, -1), (0, 2), (0, -2)]
    N = len(rho)
    pr = np.concatenate([rho + a * h for a, _ in offsets])
    pz = np.concatenate([z + b * h for _, b in offsets])
    F_all, w_all = model.evaluate(pr, pz)
    F = {o: F_all[k * N:(k + 1) * N] for k, o in enumerate(offsets)}
    w = {o: w_all[k * N:(k + 1) * N] for k, o in enumerate(offsets)}

    inv = {o: np.linalg.inv(F[o]) for o in [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)]}
    det = {o: np.linalg.det(F[o]) for o in inv}

    def d_rho(field, at):
        return (field[(at + 1, 0)] - field[(at - 1, 0)]) / (2 * h)

    def d_z(field, at):
        return (field[(0, at + 1)] - field[(0, at - 1)]) / (2 * h)

    r = rho[:, None, None]
    H_rp = inv[(1, 0)] @ d_rho(F, 1)
    H_rm = inv[(-1, 0)] @ d_rho(F, -1)
    H_zp = inv[(0, 1)] @ d_z(F, 1)
    H_zm = inv[(0, -1)] @ d_z(F, -1)
    div_h = ((r + h) * H_rp - (r - h) * H_rm) / (2 * h * r) + (H_zp - H_zm) / (2 * h)

    w_rho = (w[(1, 0)] - w[(-1, 0)]) / (2 * h)
    w_z = (w[(0, 1)] - w[(0, -1)]) / (2 * h)
    outer = w_rho[:, :, None] * w_rho[:, None, :] + w_z[:, :, None] * w_z[:, None, :]
    f = det[(0, 0)]
    g = inv[(0, 0)] @ outer / f[:, None, None]

    def k_vector(o, derivative):
        return (inv[o] @ derivative[:, :, None])[:, :, 0] / det[o][:, None]

    rc = rho[:, None]
    K_rp = k_vector((1, 0), d_rho(w, 1))
    K_rm = k_vector((-1, 0), d_rho(w, -1))
    K_zp = k_vector((0, 1), d_z(w, 1))
    K_zm = k_vector((0, -1), d_z(w, -1))
    div_k = ((rc + h) * K_rp - (rc - h) * K_rm) / (2 * h * rc) + (K_zp - K_zm) / (2 * h)

    A = div_h + g
    X = F[(0, 0)] @ A
    A_s = inv[(0, 0)] @ (0.5 * (X + np.swapaxes(X, 1, 2)))
    trace = np.trace(A_s, axis1=1, axis2=2)
    square = np.trace(A_s @ A_s, axis1=1, axis2=2)
    twist = f * np.einsum("pi,pij,pj->p", div_k, F[(0, 0)], div_k)
    tau2 = 0.25 * trace**2 + 0.25 * square + 0.5 * twist
    return TensionTerms(norm=np.sqrt(np.maximum(tau2, 0.0)), div_h=div_h, g=g, div_k=div_k)


def tension_norm(model: ModelMap, rho, z, h: float):
    """|τ| at one point (float) or at an array of points."""
    norm = tension_terms(model, rho, z, h).norm
    if np.ndim(rho) == 0 and np.ndim(z) == 0:
        return float(norm[0])
    return norm


@dataclass(frozen=True)
class GridSpec:
    h: float = 0.05
    excision: Optional[float] = None
    epsilon: float = 0.2
    rays: int = 6
    ray_points: int = 12
    decades: float = 1.0
    samples: int = 60
    slope_threshold: float = -2.3
    refinement_ratio: float = 1.1
    noise_floor: float = 1e-9
    refine: bool = True

    @property
    def effective_excision(self) -> float:
        return self.excision if self.excision is not None else 10 * self.h

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "excision": self.effective_excision,
            "epsilon": self.epsilon,
            "rays": self.rays,
            "ray_points": self.ray_points,
            "decades": self.decades,
            "samples": self.samples,
            "slope_threshold": self.slope_threshold,
            "refinement_ratio": self.refinement_ratio,
        }


@dataclass
class TensionReport:
    grid: GridSpec
    ball_radius: float
    center: float
    annuli: List[dict]
    rays: List[dict]
    decay_passed: bool
    refinement_passed: bool
    samples: List[Tuple[float, float, float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.decay_passed and self.refinement_passed

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "ball_radius": self.ball_radius,
            "center": self.center,
            "annuli": self.annuli,
            "rays": self.rays,
            "checks": {
                "decay": "PASS" if self.decay_passed else "FAIL",
                "refinement": "PASS" if self.refinement_passed else "FAIL",
            },
            "result": "PASS" if self.passed else "FAIL",
        }


def _chunked_norm(model: ModelMap, rho: np.ndarray, z: np.ndarray, h: float, size: int = 4000) -> np.ndarray:
    if len(rho) == 0:
        return np.zeros(0)
    return np.concatenate(
        [tension_terms(model, rho[k:k + size], z[k:k + size], h).norm for k in range(0, len(rho), size)]
    )


def _annulus_points(model: ModelMap, inner: float, outer: float, grid: GridSpec):
    excision = grid.effective_excision
    spacing = outer / grid.samples
    rho = np.arange(excision, outer + spacing / 2, spacing)
    z = model.center + np.arange(-outer, outer + spacing / 2, spacing)
    P, Z = np.meshgrid(rho, z, indexing="ij")
    P, Z = P.ravel(), Z.ravel()
    r = np.hypot(P, Z - model.center)
    keep = (r >= inner) & (r < outer)
    endpoints = sorted({x for rod in model.diagram.rods for x in rod.z if math.isfinite(x)})
    for e in endpoints:
        keep &= np.hypot(P, Z - e) >= 2 * excision
    return P[keep], Z[keep]


def verify_tension(model: ModelMap, grid: GridSpec) -> TensionReport:
    """Sup of |τ| on annuli around the rods and decay fits along rays."""
    h = grid.h
    if grid.effective_excision <= 2 * h:
        raise StencilError(f"excision {grid.effective_excision} must exceed 2h = {2 * h}")
    R = model.ball_radius
    edges = [0.0, R / 3, 2 * R / 3, R]

    annuli, samples = [], []
    refinement_passed = True
    for inner, outer in zip(edges, edges[1:]):
        rho, z = _annulus_points(model, inner, outer, grid)
        tau = _chunked_norm(model, rho, z, h)
        entry = {"inner": inner, "outer": outer, "points": int(len(rho)),
                 "sup": float(tau.max()) if len(tau) else 0.0}
        samples.extend(zip(rho.tolist(), z.tolist(), tau.tolist()))
        if grid.refine and len(tau):
            fine = _chunked_norm(model, rho, z, h / 2)
            entry["sup_refined"] = float(fine.max())
            if entry["sup"] > grid.noise_floor and entry["sup_refined"] > grid.noise_floor:
                ratio = entry["sup"] / entry["sup_refined"]
                ratio = max(ratio, 1 / ratio)
            else:
                ratio = 1.0
            entry["ratio"] = ratio
            refinement_passed &= ratio < grid.refinement_ratio
        annuli.append(entry)
        logger.debug("annulus [%.3g, %.3g): %d points, sup %.4g", inner, outer, len(rho), entry["sup"])

    eps = grid.epsilon
    thetas = eps + (np.arange(grid.rays) + 0.5) * (np.pi - 2 * eps) / grid.rays
    radii = R * np.geomspace(1.0, 10.0**grid.decades, grid.ray_points)
    rays = []
    decay_passed = True
    for theta in thetas:
        rho = radii * np.sin(theta)
        z = model.center + radii * np.cos(theta)
        tau = _chunked_norm(model, rho, z, h)
        entry = {"theta": float(theta), "radii": radii.tolist(), "tension": tau.tolist()}
        if tau.max() <= grid.noise_floor:
            entry.update(slope=None, stderr=None, note="tension below noise floor")
        else:
            coefficients, covariance = np.polyfit(
                np.log(radii), np.log(np.maximum(tau, 1e-300)), 1, cov=True
            )
            slope = float(coefficients[0])
            entry.update(slope=slope, stderr=float(np.sqrt(covariance[0, 0])))
            decay_passed &= slope <= grid.slope_threshold
        rays.append(entry)
        logger.debug("ray θ=%.3f slope %s", theta, entry["slope"])

    return TensionReport(
        grid=grid,
        ball_radius=R,
        center=model.center,
        annuli=annuli,
        rays=rays,
        decay_passed=bool(decay_passed),
        refinement_passed=bool(refinement_passed),
        samples=samples,
    )
