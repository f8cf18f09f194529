"""Shared construction of random cone-program instances for tests."""

import numpy as np
import scipy.sparse as sp

from spcabeam.cones import ConicProgram


def random_cone_layout(rng, with_zero=True):
    cones = []
    if with_zero and rng.random() < 0.7:
        cones.append(("zero", int(rng.integers(1, 4))))
    cones.append(("nonneg", int(rng.integers(1, 6))))
    for _ in range(int(rng.integers(1, 4))):
        cones.append(("soc", int(rng.integers(2, 6))))
    return cones


def interior_point(rng, cones):
    """Strictly interior point of the product cone (zero blocks are 0)."""
    parts = []
    for kind, dim in cones:
        if kind == "zero":
            parts.append(np.zeros(dim))
        elif kind == "nonneg":
            parts.append(rng.uniform(0.5, 2.0, size=dim))
        else:
            tail = rng.normal(size=dim - 1)
            head = np.linalg.norm(tail) + rng.uniform(0.5, 2.0)
            parts.append(np.concatenate([[head], tail]))
    return np.concatenate(parts)


def dual_interior_point(rng, cones):
    """Strictly interior point of the dual cone (zero rows are free)."""
    parts = []
    for kind, dim in cones:
        if kind == "zero":
            parts.append(rng.normal(size=dim))
        elif kind == "nonneg":
            parts.append(rng.uniform(0.5, 2.0, size=dim))
        else:
            tail = rng.normal(size=dim - 1)
            head = np.linalg.norm(tail) + rng.uniform(0.5, 2.0)
            parts.append(np.concatenate([[head], tail]))
    return np.concatenate(parts)


def random_feasible_program(rng):
    """Both primal and dual strictly feasible by construction."""
    cones = random_cone_layout(rng)
    m = sum(d for _, d in cones)
    n = int(rng.integers(3, 8))
    A = rng.normal(size=(m, n))
    x0 = rng.normal(size=n)
    s0 = interior_point(rng, cones)
    b = A @ x0 + s0
    y0 = dual_interior_point(rng, cones)
    c = -A.T @ y0
    return ConicProgram(c=c, A=sp.csr_matrix(A), b=b, cones=cones)


def primal_infeasible_program(rng):
    """Project A against an interior dual certificate, force b'y < 0."""
    cones = random_cone_layout(rng, with_zero=True)
    m = sum(d for _, d in cones)
    n = int(rng.integers(3, 7))
    y0 = dual_interior_point(rng, cones)
    A = rng.normal(size=(m, n))
    A -= np.outer(y0, y0 @ A) / (y0 @ y0)       # A'y0 = 0
    b = rng.normal(size=m)
    margin = rng.uniform(0.5, 2.0)
    b -= y0 * ((b @ y0) + margin) / (y0 @ y0)   # b'y0 = -margin < 0
    c = rng.normal(size=n)
    return ConicProgram(c=c, A=sp.csr_matrix(A), b=b, cones=cones)


def unbounded_program(rng):
    """Plant a feasible ray x0 with c'x0 < 0 and a feasible base point."""
    cones = random_cone_layout(rng, with_zero=False)
    m = sum(d for _, d in cones)
    n = int(rng.integers(3, 7))
    x0 = rng.normal(size=n)
    s0 = interior_point(rng, cones)
    A = rng.normal(size=(m, n))
    A -= np.outer(A @ x0 + s0, x0) / (x0 @ x0)  # A x0 = -s0, so -A x0 in K
    base = rng.normal(size=n)
    b = A @ base + interior_point(rng, cones)   # primal feasible
    c = rng.normal(size=n)
    c -= x0 * ((c @ x0) + rng.uniform(0.5, 2.0)) / (x0 @ x0)  # c'x0 < 0
    return ConicProgram(c=c, A=sp.csr_matrix(A), b=b, cones=cones)
