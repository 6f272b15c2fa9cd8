"""Exact linear algebra over F2 (default) and Q.

Scalars are plain Python objects: ints 0/1 for F2, fractions.Fraction for Q.
Matrices are kept sparse as {(row, col): scalar} with no stored zeros.
No floating point anywhere in this module.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


class Field:
    """A field of scalars with exact arithmetic."""

    name: str

    def zero(self):
        raise NotImplementedError

    def one(self):
        raise NotImplementedError

    def add(self, a, b):
        raise NotImplementedError

    def neg(self, a):
        raise NotImplementedError

    def mul(self, a, b):
        raise NotImplementedError

    def inv(self, a):
        raise NotImplementedError

    def coerce(self, a):
        raise NotImplementedError

    def __repr__(self):
        return self.name


class _GF2(Field):
    name = "F2"

    def zero(self):
        return 0

    def one(self):
        return 1

    def add(self, a, b):
        return (a + b) & 1

    def neg(self, a):
        return a & 1

    def mul(self, a, b):
        return a & b & 1

    def inv(self, a):
        if a & 1 == 0:
            raise ZeroDivisionError("inverse of 0 in F2")
        return 1

    def coerce(self, a):
        return int(a) & 1


class _QQ(Field):
    name = "Q"

    def zero(self):
        return Fraction(0)

    def one(self):
        return Fraction(1)

    def add(self, a, b):
        return a + b

    def neg(self, a):
        return -a

    def mul(self, a, b):
        return a * b

    def inv(self, a):
        return 1 / Fraction(a)

    def coerce(self, a):
        return Fraction(a)


GF2 = _GF2()
QQ = _QQ()

FIELDS = {"f2": GF2, "q": QQ}


@dataclass(frozen=True)
class SparseMatrix:
    """Immutable sparse matrix over a field; entries omit zeros."""

    rows: int
    cols: int
    entries: tuple  # tuple of ((i, j), scalar)
    field: Field = GF2

    @staticmethod
    def from_dict(rows, cols, d, field=GF2):
        ent = []
        for (i, j), v in d.items():
            v = field.coerce(v)
            if v != field.zero():
                if not (0 <= i < rows and 0 <= j < cols):
                    raise ValueError(f"entry ({i},{j}) out of bounds {rows}x{cols}")
                ent.append(((i, j), v))
        ent.sort(key=lambda e: e[0])
        return SparseMatrix(rows, cols, tuple(ent), field)

    def to_dict(self):
        return {ij: v for ij, v in self.entries}

    def columns(self):
        """Columns as a list of dicts row -> scalar."""
        cols = [dict() for _ in range(self.cols)]
        for (i, j), v in self.entries:
            cols[j][i] = v
        return cols

    def transpose(self):
        return SparseMatrix.from_dict(
            self.cols, self.rows, {(j, i): v for (i, j), v in self.entries}, self.field
        )

    def rank(self):
        return rank_of_columns(self.columns(), self.field)

    def __matmul__(self, other):
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        F = self.field
        rows_of_other = {}
        for (i, j), v in other.entries:
            rows_of_other.setdefault(i, []).append((j, v))
        out = {}
        for (i, k), v in self.entries:
            for j, w in rows_of_other.get(k, ()):
                key = (i, j)
                out[key] = F.add(out.get(key, F.zero()), F.mul(v, w))
        return SparseMatrix.from_dict(self.rows, other.cols, out, F)


def rank_of_columns(cols, field=GF2):
    """Rank of a list of sparse columns (dicts row -> scalar), destructive-free."""
    pivots = {}  # pivot row -> reduced column (dict)
    rank = 0
    for col in cols:
        col = dict(col)
        while col:
            p = max(col)
            if p not in pivots:
                pivots[p] = col
                rank += 1
                break
            col = _eliminate(col, pivots[p], p, field)
    return rank


def _eliminate(col, piv, p, field):
    """Subtract the right multiple of piv from col to kill row p."""
    c = field.mul(col[p], field.inv(piv[p]))
    out = dict(col)
    for i, v in piv.items():
        w = field.add(out.get(i, field.zero()), field.neg(field.mul(c, v)))
        if w == field.zero():
            out.pop(i, None)
        else:
            out[i] = w
    return out

def kernel_of_columns(cols, field=GF2):
    """Basis of the kernel of the map sending e_j to cols[j].

    Returns a list of combination dicts {j: scalar}.
    """
    pivots = {}
    kernel = []
    for idx, col in enumerate(cols):
        col = dict(col)
        combo = {idx: field.one()}
        while col:
            p = max(col)
            if p not in pivots:
                pivots[p] = (col, combo)
                combo = None
                break
            pc, pcombo = pivots[p]
            c = field.mul(col[p], field.inv(pc[p]))
            col = _eliminate(col, pc, p, field)
            combo = _combo_sub(combo, pcombo, c, field)
        if combo is not None:
            kernel.append(combo)
    return kernel


def solve_columns(cols, target, field=GF2):
    """Express target (dict row->scalar) as a combination of cols.

    Returns a list of coefficients (one per column) or None if inconsistent.
    """
    # Forward elimination remembering combinations.
    pivots = {}  # pivot row -> (column, combo)
    combos = []
    n = len(cols)
    for idx, col in enumerate(cols):
        col = dict(col)
        combo = {idx: field.one()}
        while col:
            p = max(col)
            if p not in pivots:
                pivots[p] = (col, combo)
                break
            pc, pcombo = pivots[p]
            c = field.mul(col[p], field.inv(pc[p]))
            col = _eliminate(col, pc, p, field)
            combo = _combo_sub(combo, pcombo, c, field)
        combos.append(None)
    t = dict(target)
    tcombo = {}
    while t:
        p = max(t)
        if p not in pivots:
            return None
        pc, pcombo = pivots[p]
        c = field.mul(t[p], field.inv(pc[p]))
        t = _eliminate(t, pc, p, field)
        tcombo = _combo_add(tcombo, pcombo, c, field)
    out = [field.zero()] * n
    for j, v in tcombo.items():
        out[j] = v
    return out


def _combo_sub(a, b, c, field):
    out = dict(a)
    for j, v in b.items():
        w = field.add(out.get(j, field.zero()), field.neg(field.mul(c, v)))
        if w == field.zero():
            out.pop(j, None)
        else:
            out[j] = w
    return out


def _combo_add(a, b, c, field):
    out = dict(a)
    for j, v in b.items():
        w = field.add(out.get(j, field.zero()), field.mul(c, v))
        if w == field.zero():
            out.pop(j, None)
        else:
            out[j] = w
    return out
