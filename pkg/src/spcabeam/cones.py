"""Standard-form cone programs and second-order-cone rewriting utilities.

A program is stored in the conic standard form

    minimize    c'x
    subject to  A x + s = b,   s in K

where K is an ordered product of zero cones (equalities), nonnegative
orthants and second-order cones.  A second-order cone of dimension d
contains the points with ``s[0] >= ||s[1:]||_2``.

The two rewriting utilities implement the classical identities used by the
beamforming subproblems:

* ``add_hyperbolic``  encodes  w'w <= x*y, x >= 0, y >= 0  as the SOC
  ``|| [2w; x - y] ||_2 <= x + y``.
* ``gm_tree``  stacks hyperbolic constraints into a binary tree whose root
  is bounded by the geometric mean ``(prod leaves)^(1/2^p)``, padding the
  leaf list with pinned constants 1 when the leaf count is not a power of
  two (1 is the multiplicative identity, so the optimum is unchanged).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import MapError, ProgramError

ZERO = "zero"
NONNEG = "nonneg"
SOC = "soc"

_DUMP_HEADER = "spcabeam-conic v1"


class VariableMap:
    """Named handles to column index ranges of a cone program.

    Ranges are disjoint by construction and together cover exactly the
    declared variable count.
    """

    def __init__(self):
        self._ranges: dict[tuple, range] = {}
        self._count = 0

    def add(self, name: tuple, count: int) -> range:
        if name in self._ranges:
            raise MapError(f"variable name already declared: {name!r}")
        if count < 1:
            raise ProgramError(f"variable block {name!r} must have count >= 1")
        r = range(self._count, self._count + count)
        self._ranges[name] = r
        self._count += count
        return r

    def __getitem__(self, name: tuple) -> range:
        try:
            return self._ranges[name]
        except KeyError:
            raise MapError(f"no variable named {name!r}") from None

    def __contains__(self, name: tuple) -> bool:
        return name in self._ranges

    def scalar(self, name: tuple) -> int:
        """Index of a one-element block."""
        r = self[name]
        if len(r) != 1:
            raise MapError(f"{name!r} is a block of {len(r)} variables, not a scalar")
        return r.start

    def names(self):
        return self._ranges.keys()

    @property
    def total(self) -> int:
        return self._count

    def check_cover(self, n: int) -> None:
        """Verify ranges are disjoint and cover exactly ``n`` columns."""
        seen = np.zeros(n, dtype=bool)
        for name, r in self._ranges.items():
            if r.stop > n:
                raise ProgramError(f"{name!r} range exceeds variable count {n}")
            if seen[r.start:r.stop].any():
                raise ProgramError(f"{name!r} overlaps another variable range")
            seen[r.start:r.stop] = True
        if not seen.all():
            raise ProgramError("variable ranges do not cover all columns")


@dataclass
class ConicProgram:
    """Immutable standard-form cone program (minimization convention)."""

    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    cones: list[tuple[str, int]]

    @property
    def num_vars(self) -> int:
        return self.c.shape[0]

    @property
    def num_rows(self) -> int:
        return self.b.shape[0]

    def slack(self, x: np.ndarray) -> np.ndarray:
        """s = b - A x for a candidate primal point."""
        return self.b - self.A @ x

    def cone_ranges(self):
        """Yield (kind, row range) per cone, in order."""
        start = 0
        for kind, dim in self.cones:
            yield kind, range(start, start + dim)
            start += dim


def cone_violation(s: np.ndarray, cones: list[tuple[str, int]]) -> float:
    """Largest violation of cone membership over all cones (0 if feasible).

    For a zero cone the violation is max |s_i|; for the orthant max(-s_i);
    for a second-order cone ||s[1:]|| - s[0].
    """
    worst = 0.0
    start = 0
    for kind, dim in cones:
        blk = s[start:start + dim]
        if kind == ZERO:
            v = float(np.max(np.abs(blk))) if dim else 0.0
        elif kind == NONNEG:
            v = float(np.max(-blk)) if dim else 0.0
        elif kind == SOC:
            v = float(np.linalg.norm(blk[1:]) - blk[0])
        else:
            raise ProgramError(f"unknown cone kind {kind!r}")
        worst = max(worst, v)
        start += dim
    return worst


@dataclass
class Diagnostics:
    num_vars: int
    num_rows: int
    num_cones: int
    issues: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues


def validate(prog: ConicProgram) -> Diagnostics:
    """Structural consistency report for a program (never raises)."""
    issues = []
    total = sum(dim for _, dim in prog.cones)
    if total != prog.num_rows:
        issues.append(
            f"cone dimensions sum to {total} but A/b have {prog.num_rows} rows"
        )
    if prog.A.shape != (prog.num_rows, prog.num_vars):
        issues.append(f"A has shape {prog.A.shape}, expected "
                      f"({prog.num_rows}, {prog.num_vars})")
    for k, (kind, dim) in enumerate(prog.cones):
        if dim <= 0:
            issues.append(f"cone {k} ({kind}) is empty")
        if kind == SOC and dim < 2:
            issues.append(f"cone {k} is a second-order cone of dimension {dim} < 2")
        if kind not in (ZERO, NONNEG, SOC):
            issues.append(f"cone {k} has unknown kind {kind!r}")
    for name, arr in (("c", prog.c), ("b", prog.b), ("A", prog.A.data)):
        if arr.size and not np.all(np.isfinite(arr)):
            issues.append(f"{name} contains non-finite entries")
    return Diagnostics(prog.num_vars, prog.num_rows, len(prog.cones), issues)


class ProgramBuilder:
    """Accumulates variables and cone rows, then freezes to a ConicProgram.

    Row helpers all follow the slack convention ``s = const + sum val*x[idx]``
    with ``s`` constrained to the cone being added, which keeps signs out of
    caller code.
    """

    def __init__(self):
        self.varmap = VariableMap()
        self._rows_i: list[int] = []
        self._rows_j: list[int] = []
        self._rows_v: list[float] = []
        self._b: list[float] = []
        self._cones: list[tuple[str, int]] = []
        self._obj_idx: list[int] = []
        self._obj_val: list[float] = []
        self._obj_sign = 1.0

    # -- variables ---------------------------------------------------------

    def add_block(self, name: tuple, count: int) -> range:
        return self.varmap.add(name, count)

    def add_scalar(self, name: tuple) -> int:
        return self.varmap.add(name, 1).start

    def add_pinned_constant(self, name: tuple, value: float) -> int:
        """Fresh variable fixed to ``value`` by a zero-cone row."""
        j = self.add_scalar(name)
        self.add_zero([j], [1.0], -value)
        return j

    @property
    def num_vars(self) -> int:
        return self.varmap.total

    @property
    def num_rows(self) -> int:
        return len(self._b)

    # -- rows ----------------------------------------------------------------

    def _append_row(self, idx, val, const) -> None:
        i = len(self._b)
        for j, v in zip(idx, val):
            if v != 0.0:
                self._rows_i.append(i)
                self._rows_j.append(int(j))
                # s = b - A x  =>  A entries carry the negated coefficients
                self._rows_v.append(-float(v))
        self._b.append(float(const))

    def add_zero(self, idx, val, const) -> None:
        """const + val.x == 0"""
        self._append_row(idx, val, const)
        self._cones.append((ZERO, 1))

    def add_nonneg(self, idx, val, const) -> None:
        """const + val.x >= 0"""
        self._append_row(idx, val, const)
        self._cones.append((NONNEG, 1))

    def add_soc(self, rows) -> None:
        """||entries||_2 <= head, each row an affine (idx, val, const) triple.

        ``rows[0]`` is the head.
        """
        if len(rows) < 2:
            raise ProgramError("a second-order cone needs a head and >= 1 entry")
        for idx, val, const in rows:
            self._append_row(idx, val, const)
        self._cones.append((SOC, len(rows)))

    # -- objective -----------------------------------------------------------

    def minimize(self, idx, val) -> None:
        self._obj_idx = list(idx)
        self._obj_val = [float(v) for v in val]
        self._obj_sign = 1.0

    def maximize(self, idx, val) -> None:
        self.minimize(idx, val)
        self._obj_sign = -1.0

    # -- finish ----------------------------------------------------------------

    def build(self) -> ConicProgram:
        n = self.num_vars
        m = self.num_rows
        c = np.zeros(n)
        for j, v in zip(self._obj_idx, self._obj_val):
            c[j] += self._obj_sign * v
        A = sp.coo_matrix(
            (self._rows_v, (self._rows_i, self._rows_j)), shape=(m, n)
        ).tocsr()
        prog = ConicProgram(c=c, A=A, b=np.asarray(self._b, dtype=float),
                            cones=list(self._cones))
        self.varmap.check_cover(n)
        return prog


def add_hyperbolic(builder: ProgramBuilder, w_idx, x_idx: int, y_idx: int) -> None:
    """Append the SOC encoding of  w'w <= x*y  (with x, y >= 0 implied).

    The cone ``|| [2w; x - y] ||_2 <= x + y`` forces x + y >= |x - y|, hence
    x >= 0 and y >= 0 hold automatically at any feasible point.
    """
    w_idx = list(w_idx)
    if not w_idx:
        raise ProgramError("hyperbolic constraint needs at least one w variable")
    rows = [([x_idx, y_idx], [1.0, 1.0], 0.0)]
    rows += [([j], [2.0], 0.0) for j in w_idx]
    rows.append(([x_idx, y_idx], [1.0, -1.0], 0.0))
    builder.add_soc(rows)


def gm_tree(builder: ProgramBuilder, leaves) -> int:
    """Bound a fresh root variable by the geometric mean of ``leaves``.

    Builds ceil(log2 T) stages of hyperbolic constraints; any feasible point
    satisfies root <= (prod leaves)^(1/2^p) with equality attainable.  For a
    single leaf the leaf itself is returned and no rows are added.
    """
    leaves = [int(j) for j in leaves]
    if not leaves:
        raise ProgramError("gm_tree needs at least one leaf")
    if len(leaves) == 1:
        return leaves[0]
    p = math.ceil(math.log2(len(leaves)))
    pads = 2 ** p - len(leaves)
    level = list(leaves)
    for k in range(pads):
        level.append(builder.add_pinned_constant(("gm_pad", k), 1.0))
    depth = p
    while len(level) > 1:
        depth -= 1
        nxt = []
        for i in range(len(level) // 2):
            parent = builder.add_scalar(("psi", depth, i))
            add_hyperbolic(builder, [parent], level[2 * i], level[2 * i + 1])
            nxt.append(parent)
        level = nxt
    return level[0]


# -- plain-text interchange format -------------------------------------------


def dump_program(prog: ConicProgram) -> str:
    """Serialize to the documented sparse text format (see README)."""
    out = io.StringIO()
    out.write(f"{_DUMP_HEADER}\n")
    out.write(f"vars {prog.num_vars}\n")
    out.write(f"rows {prog.num_rows}\n")
    for kind, dim in prog.cones:
        out.write(f"cone {kind} {dim}\n")
    for j in np.nonzero(prog.c)[0]:
        out.write(f"c {j} {prog.c[j]:.17g}\n")
    coo = prog.A.tocoo()
    for i, j, v in zip(coo.row, coo.col, coo.data):
        out.write(f"A {i} {j} {v:.17g}\n")
    for i in np.nonzero(prog.b)[0]:
        out.write(f"b {i} {prog.b[i]:.17g}\n")
    out.write("end\n")
    return out.getvalue()


def load_program(text: str) -> ConicProgram:
    """Parse the text format produced by :func:`dump_program`."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or lines[0] != _DUMP_HEADER:
        raise ProgramError(f"bad header; expected {_DUMP_HEADER!r}")
    n = m = None
    cones: list[tuple[str, int]] = []
    c_entries, a_entries, b_entries = [], [], []
    for ln in lines[1:]:
        parts = ln.split()
        tag = parts[0]
        if tag == "vars":
            n = int(parts[1])
        elif tag == "rows":
            m = int(parts[1])
        elif tag == "cone":
            cones.append((parts[1], int(parts[2])))
        elif tag == "c":
            c_entries.append((int(parts[1]), float(parts[2])))
        elif tag == "A":
            a_entries.append((int(parts[1]), int(parts[2]), float(parts[3])))
        elif tag == "b":
            b_entries.append((int(parts[1]), float(parts[2])))
        elif tag == "end":
            break
        else:
            raise ProgramError(f"unknown record {tag!r}")
    if n is None or m is None:
        raise ProgramError("missing vars/rows declaration")
    c = np.zeros(n)
    for j, v in c_entries:
        c[j] = v
    b = np.zeros(m)
    for i, v in b_entries:
        b[i] = v
    if a_entries:
        ai, aj, av = zip(*a_entries)
    else:
        ai = aj = av = []
    A = sp.coo_matrix((av, (ai, aj)), shape=(m, n)).tocsr()
    return ConicProgram(c=c, A=A, b=b, cones=cones)


def write_program(prog: ConicProgram, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_program(prog))


def read_program(path) -> ConicProgram:
    with open(path, "r", encoding="utf-8") as fh:
        return load_program(fh.read())
