"""Ordered value groups with exact arithmetic.

A group descriptor fixes r generator weights living in the real quadratic
field Q(sqrt(d)); elements are rational coordinate vectors over those
weights.  All order decisions are made exactly in Q(sqrt(d)), never through
floats.  The char exponent p tags which p-power denominators are meaningful
(the direct limit of (1/p^i)-scaled copies of the base group).
"""

from __future__ import annotations

from fractions import Fraction
from functools import cmp_to_key

from .errors import MembershipFailed, ParseError, ScaleOutsideGroup


class QuadValue:
    """Exact element a + b*sqrt(d) of a fixed real quadratic field."""

    __slots__ = ("a", "b", "d")

    def __init__(self, a, b=0, d=1):
        a = Fraction(a)
        b = Fraction(b)
        if d == 1:
            a, b = a + b, Fraction(0)
        self.a = a
        self.b = b
        self.d = int(d)

    def __add__(self, other):
        return QuadValue(self.a + other.a, self.b + other.b, max(self.d, other.d))

    def __sub__(self, other):
        return QuadValue(self.a - other.a, self.b - other.b, max(self.d, other.d))

    def scale(self, q):
        q = Fraction(q)
        return QuadValue(self.a * q, self.b * q, self.d)

    def sign(self):
        a, b = self.a, self.b
        if b == 0:
            return (a > 0) - (a < 0)
        if a == 0:
            return (b > 0) - (b < 0)
        if a > 0 and b > 0:
            return 1
        if a < 0 and b < 0:
            return -1
        # mixed signs: compare a^2 against b^2*d exactly; the larger square wins
        lhs, rhs = a * a, b * b * self.d
        if lhs == rhs:
            return 0
        if lhs > rhs:
            return 1 if a > 0 else -1
        return 1 if b > 0 else -1

    def is_zero(self):
        return self.a == 0 and self.b == 0

    def is_rational(self):
        return self.b == 0

    def __eq__(self, other):
        return isinstance(other, QuadValue) and (self - other).is_zero()

    def __hash__(self):
        return hash((self.a, self.b, self.d))

    def __repr__(self):
        if self.b == 0:
            return f"{self.a}"
        return f"{self.a}+{self.b}*sqrt({self.d})"


def _padic_val(n, p):
    """Exponent of p in the positive integer n."""
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


class GroupDescriptor:
    """r independent positive weights in Q(sqrt(d)) plus the char exponent p."""

    def __init__(self, weights, char_exponent=1, sqrt_disc=1):
        self.sqrt_disc = int(sqrt_disc)
        ws = []
        for w in weights:
            if isinstance(w, QuadValue):
                ws.append(QuadValue(w.a, w.b, self.sqrt_disc))
            elif isinstance(w, tuple):
                ws.append(QuadValue(w[0], w[1], self.sqrt_disc))
            else:
                ws.append(QuadValue(w, 0, self.sqrt_disc))
        self.weights = tuple(ws)
        self.rank = len(ws)
        self.char_exponent = int(char_exponent)
        if self.rank < 1:
            raise ValueError("descriptor needs at least one weight")
        if self.char_exponent < 1:
            raise ValueError("char exponent must be a positive integer")
        for w in ws:
            if w.sign() <= 0:
                raise ValueError("weights must be positive")
        if not self._independent():
            raise ValueError("weights are Z-linearly dependent")

    def _independent(self):
        # Sum n_j (a_j + b_j sqrt d) = 0 forces the rational and sqrt parts to
        # vanish separately (d non-square), so dependence is a rational kernel
        # of the 2 x r matrix [[a_j], [b_j]].
        if self.sqrt_disc == 1 or _is_square(self.sqrt_disc):
            return self.rank == 1
        rows = [[w.a for w in self.weights], [w.b for w in self.weights]]
        return _kernel_is_trivial(rows, self.rank)

    # -- element construction ------------------------------------------------

    def element(self, coords):
        if not isinstance(coords, (list, tuple)):
            coords = [coords]
        if len(coords) != self.rank:
            raise ValueError(f"expected {self.rank} coordinates")
        return GroupElement(self, tuple(Fraction(c) for c in coords))

    def zero(self):
        return self.element([0] * self.rank)

    def basis(self, j):
        coords = [Fraction(0)] * self.rank
        coords[j] = Fraction(1)
        return GroupElement(self, tuple(coords))

    def from_rational(self, q):
        """The element q * (first weight); requires a rational first weight."""
        if not self.weights[0].is_rational():
            raise ValueError("first weight is irrational; give full coordinates")
        coords = [Fraction(q) / self.weights[0].a] + [Fraction(0)] * (self.rank - 1)
        return GroupElement(self, tuple(coords))

    # -- order ----------------------------------------------------------------

    def value_of(self, elem):
        total = QuadValue(0, 0, self.sqrt_disc)
        for c, w in zip(elem.coords, self.weights):
            total = total + w.scale(c)
        return total

    def compare(self, a, b):
        if a is INF:
            return 0 if b is INF else 1
        if b is INF:
            return -1
        diff = QuadValue(0, 0, self.sqrt_disc)
        for ca, cb, w in zip(a.coords, b.coords, self.weights):
            diff = diff + w.scale(ca - cb)
        return diff.sign()

    def sort_key(self):
        return cmp_to_key(self.compare)

    def __eq__(self, other):
        return (isinstance(other, GroupDescriptor)
                and self.weights == other.weights
                and self.char_exponent == other.char_exponent
                and self.sqrt_disc == other.sqrt_disc)

    def __hash__(self):
        return hash((self.weights, self.char_exponent, self.sqrt_disc))

    def __repr__(self):
        return (f"GroupDescriptor(weights={list(self.weights)!r}, "
                f"p={self.char_exponent}, d={self.sqrt_disc})")


def _is_square(n):
    r = int(n ** 0.5)
    while r * r < n:
        r += 1
    return r * r == n


class GroupElement:
    """Rational coordinate vector over a descriptor's weights."""

    __slots__ = ("descriptor", "coords")

    def __init__(self, descriptor, coords):
        self.descriptor = descriptor
        self.coords = coords

    @property
    def pdenom(self):
        """Minimal i with p^i * coords having p-free denominators (0 if p = 1)."""
        p = self.descriptor.char_exponent
        if p == 1:
            return 0
        return max((_padic_val(c.denominator, p) for c in self.coords), default=0)

    def canonicalize(self):
        """Canonical form is maintained eagerly; re-canonicalizing is identity."""
        return self

    def real_value(self):
        return self.descriptor.value_of(self)

    def is_zero(self):
        return all(c == 0 for c in self.coords)

    def rational_value(self):
        """The exact rational value, or None if genuinely irrational."""
        v = self.real_value()
        return v.a if v.is_rational() else None

    # -- arithmetic ------------------------------------------------------------

    def _check(self, other):
        if self.descriptor != other.descriptor:
            raise ValueError("group elements over different descriptors")

    def __add__(self, other):
        if other is INF:
            return INF
        self._check(other)
        return GroupElement(self.descriptor,
                            tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other):
        self._check(other)
        return GroupElement(self.descriptor,
                            tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self):
        return GroupElement(self.descriptor, tuple(-c for c in self.coords))

    def scale_unchecked(self, q):
        q = Fraction(q)
        return GroupElement(self.descriptor, tuple(c * q for c in self.coords))

    def scale(self, q):
        """Scale by a rational; for p > 1 the denominator must be a p-power."""
        q = Fraction(q)
        p = self.descriptor.char_exponent
        if p > 1:
            den = q.denominator
            while den % p == 0:
                den //= p
            if den != 1:
                raise ScaleOutsideGroup(
                    f"scaling by {q} leaves the p-power denominator lattice (p={p})")
        return self.scale_unchecked(q)

    def __mul__(self, n):
        return self.scale_unchecked(Fraction(n))

    __rmul__ = __mul__

    # -- order -----------------------------------------------------------------

    def cmp(self, other):
        return self.descriptor.compare(self, other)

    def __lt__(self, other):
        if other is INF:
            return True
        return self.cmp(other) < 0

    def __le__(self, other):
        if other is INF:
            return True
        return self.cmp(other) <= 0

    def __gt__(self, other):
        if other is INF:
            return False
        return self.cmp(other) > 0

    def __ge__(self, other):
        if other is INF:
            return False
        return self.cmp(other) >= 0

    def __eq__(self, other):
        if other is INF:
            return False
        return (isinstance(other, GroupElement)
                and self.descriptor == other.descriptor
                and self.cmp(other) == 0)

    def __hash__(self):
        return hash(self.coords)

    def __repr__(self):
        return f"<{self.to_text()}>"

    # -- text form ---------------------------------------------------------------

    def to_text(self):
        return " + ".join(f"{c}*g{j + 1}" for j, c in enumerate(self.coords))

    @classmethod
    def parse(cls, descriptor, text):
        coords = [Fraction(0)] * descriptor.rank
        for part in text.split("+"):
            part = part.strip()
            if not part:
                raise ParseError("empty group term")
            if "*" not in part:
                raise ParseError(f"bad group term {part!r}")
            q, g = part.split("*", 1)
            g = g.strip()
            if not g.startswith("g"):
                raise ParseError(f"bad generator name {g!r}")
            try:
                j = int(g[1:]) - 1
                coords[j] = coords[j] + Fraction(q.strip())
            except (ValueError, IndexError) as exc:
                raise ParseError(f"bad group term {part!r}") from exc
        return descriptor.element(coords)


class _Infinity:
    """Order-topped sentinel used for exact roots and unbounded precision."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is INF

    def __gt__(self, other):
        return other is not INF

    def __ge__(self, other):
        return True

    def __add__(self, other):
        return INF

    __radd__ = __add__

    def __neg__(self):
        raise ArithmeticError("cannot negate infinity")

    def __repr__(self):
        return "inf"


INF = _Infinity()


def cmp(a, b):
    """Exact three-way comparison; returns -1, 0 or 1."""
    if a is INF:
        return 0 if b is INF else 1
    if b is INF:
        return -1
    return a.cmp(b)


def group_add(a, b):
    return a + b


def group_scale(a, q):
    return a.scale(q)


def gmin(*elems):
    best = None
    for e in elems:
        if e is None:
            continue
        if best is None or cmp(e, best) < 0:
            best = e
    return best


def gmax(*elems):
    best = None
    for e in elems:
        if e is None:
            continue
        if best is None or cmp(e, best) > 0:
            best = e
    return best


def _kernel_is_trivial(rows, ncols):
    """True iff the rational row-space of `rows` has full column rank ncols."""
    mat = [list(map(Fraction, row)) for row in rows]
    rank = 0
    for col in range(ncols):
        piv = next((r for r in range(rank, len(mat)) if mat[r][col] != 0), None)
        if piv is None:
            return False
        mat[rank], mat[piv] = mat[piv], mat[rank]
        inv = mat[rank][col]
        for r in range(len(mat)):
            if r != rank and mat[r][col] != 0:
                f = mat[r][col] / inv
                mat[r] = [x - f * y for x, y in zip(mat[r], mat[rank])]
        rank += 1
        if rank == ncols:
            return True
    return rank == ncols


def solve_rational(rows, rhs):
    """One exact solution x of rows·x = rhs over Q, or None.

    rows is a list of m rows of length k (m equations, k unknowns).
    """
    m, k = len(rows), (len(rows[0]) if rows else 0)
    mat = [list(map(Fraction, rows[i])) + [Fraction(rhs[i])] for i in range(m)]
    piv_cols = []
    rank = 0
    for col in range(k):
        piv = next((r for r in range(rank, m) if mat[r][col] != 0), None)
        if piv is None:
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        inv = mat[rank][col]
        mat[rank] = [x / inv for x in mat[rank]]
        for r in range(m):
            if r != rank and mat[r][col] != 0:
                f = mat[r][col]
                mat[r] = [x - f * y for x, y in zip(mat[r], mat[rank])]
        piv_cols.append(col)
        rank += 1
    for r in range(rank, m):
        if mat[r][k] != 0:
            return None
    sol = [Fraction(0)] * k
    for r, col in enumerate(piv_cols):
        sol[col] = mat[r][k]
    return sol


def membership(a, gens):
    """Rational coefficients expressing a over gens, or None.

    Solved exactly in the coordinate representation: one equation per
    descriptor coordinate.
    """
    desc = a.descriptor
    rows = [[g.coords[i] for g in gens] for i in range(desc.rank)]
    rhs = [a.coords[i] for i in range(desc.rank)]
    sol = solve_rational(rows, rhs)
    return tuple(sol) if sol is not None else None


def require_membership(a, gens):
    sol = membership(a, gens)
    if sol is None:
        raise MembershipFailed(f"{a.to_text()} outside the span of the given generators")
    return sol
