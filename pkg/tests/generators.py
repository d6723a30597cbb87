"""Seeded random inputs shared by the property suites."""

import random
import signal
from contextlib import contextmanager
from math import gcd
from typing import List, Tuple

import numpy as np

from rodtopology import intlin

Vector = Tuple[int, ...]


@contextmanager
def time_budget(seconds: float):
    """Fail the enclosing test instead of hanging past `seconds`."""

    def expire(signum, frame):
        raise AssertionError(f"did not finish within {seconds} s")

    previous = signal.signal(signal.SIGALRM, expire)
    signal.setitimer(signal.ITIMER_REAL, seconds)
    try:
        yield
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0)
        signal.signal(signal.SIGALRM, previous)


def random_matrix(rng: random.Random, rows: int, cols: int, bound: int = 9) -> List[List[int]]:
    return [[rng.randint(-bound, bound) for _ in range(cols)] for _ in range(rows)]


def random_unimodular(rng: random.Random, n: int, steps: int = 8):
    """Product of random row swaps, negations and row additions."""
    B = intlin.identity(n)
    for _ in range(steps):
        kind = rng.randrange(3)
        i, j = rng.sample(range(n), 2) if n > 1 else (0, 0)
        if kind == 0 and n > 1:
            B[[i, j]] = B[[j, i]]
        elif kind == 1:
            B[i] = -B[i]
        elif n > 1:
            B[i] = B[i] + rng.randint(-3, 3) * B[j]
    return B


def random_primitive(rng: random.Random, n: int, bound: int = 5) -> Vector:
    while True:
        v = tuple(rng.randint(-bound, bound) for _ in range(n))
        if any(v) and gcd(*v) == 1:
            return v


def random_neighbor(rng: random.Random, v: Vector, bound: int = 3) -> Vector:
    """A w with Det_2(v, w) == 1."""
    n = len(v)
    B = intlin.complete_to_basis([v])
    x = (rng.randint(-bound, bound),) + random_primitive(rng, n - 1, bound)
    return tuple(int(sum(B[i, j] * x[j] for j in range(n))) for i in range(n))


def random_chain(rng: random.Random, n: int, length: int) -> List[Vector]:
    """Rod structures with every consecutive pair admissible."""
    chain = [random_primitive(rng, n, 3)]
    while len(chain) < length:
        chain.append(random_neighbor(rng, chain[-1], 2))
    return chain


def random_half_plane(rng: random.Random, n: int, axis_rods: int) -> dict:
    """Diagram data with random structures and horizons between some rods;
    adjacent axis rods are distinct but not necessarily admissible."""
    rods = []
    previous = None
    for k in range(axis_rods):
        if k > 0 and rng.random() < 0.5:
            rods.append({"kind": "horizon"})
            previous = None
        while True:
            v = random_primitive(rng, n, 2)
            lead = next(x for x in v if x)
            normalized = v if lead > 0 else tuple(-x for x in v)
            if normalized != previous:
                break
        rods.append({"kind": "axis", "v": list(v)})
        previous = normalized
    return {"n": n, "shape": "half_plane", "rods": rods}


def random_admissible_half_plane(rng: random.Random, n: int, axis_rods: int) -> dict:
    """Like random_half_plane, but every corner between adjacent axis rods
    is admissible."""
    rods = []
    previous = None
    for k in range(axis_rods):
        if k > 0 and rng.random() < 0.5:
            rods.append({"kind": "horizon"})
            v = random_primitive(rng, n, 2)
        elif previous is None:
            v = random_primitive(rng, n, 2)
        else:
            v = random_neighbor(rng, previous, 2)
        rods.append({"kind": "axis", "v": list(v)})
        previous = v
    return {"n": n, "shape": "half_plane", "rods": rods}


def image(Q, v) -> Vector:
    return tuple(int(x) for x in Q @ np.array(v, dtype=object))


def transformed(data: dict, Q) -> dict:
    """Diagram data with every axis structure replaced by Q @ v."""
    rods = []
    for rod in data["rods"]:
        rod = dict(rod)
        if rod["kind"] == "axis":
            rod["v"] = list(image(Q, rod["v"]))
        rods.append(rod)
    return dict(data, rods=rods)
