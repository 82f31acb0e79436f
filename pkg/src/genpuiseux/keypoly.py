"""Key-polynomial chains: Hasse derivatives, standard expansions, truncated
valuations, the epsilon invariants, and MacLane-style chain extension.

A chain entry holds a monic polynomial over the lower-stage series field
together with its assigned value beta, the derivative order realizing the
epsilon invariant, epsilon itself, and the degree ratio to the previous
entry.  The valuation oracle is pullback along the partial root series being
constructed; entry values are assigned from Newton polygons of the defining
polynomial and cross-checked against evaluation whenever it is determinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import (
    ChainComplete,
    EngineInvariantViolation,
    ValuationIndeterminate,
    ZeroPolynomial,
)
from .groups import INF, cmp, gmin
from .series import GenSeries, eval_poly


class ValPoly:
    """Univariate polynomial with GenSeries coefficients (ascending order)."""

    __slots__ = ("ring", "coeffs", "var")

    def __init__(self, ring, coeffs, var="y"):
        self.ring = ring
        self.var = var
        cs = list(coeffs)
        while cs and not cs[-1].terms and cs[-1].prec is INF:
            cs.pop()
        self.coeffs = tuple(cs)

    @classmethod
    def variable(cls, ring, var="y"):
        return cls(ring, [ring.zero(), ring.one()], var)

    @classmethod
    def const(cls, series, var="y"):
        return cls(series.ring, [series], var)

    def degree(self):
        return len(self.coeffs) - 1

    def is_zero(self):
        return not self.coeffs

    def coeff(self, j):
        return self.coeffs[j] if j <= self.degree() else self.ring.zero()

    def is_monic(self):
        if self.is_zero():
            return False
        lead = self.coeffs[-1]
        return lead == self.ring.one()

    def __add__(self, other):
        n = max(len(self.coeffs), len(other.coeffs))
        return ValPoly(self.ring,
                       [self.coeff(j) + other.coeff(j) for j in range(n)], self.var)

    def __sub__(self, other):
        n = max(len(self.coeffs), len(other.coeffs))
        return ValPoly(self.ring,
                       [self.coeff(j) - other.coeff(j) for j in range(n)], self.var)

    def __neg__(self):
        return ValPoly(self.ring, [-c for c in self.coeffs], self.var)

    def __mul__(self, other):
        if isinstance(other, GenSeries):
            return ValPoly(self.ring, [c * other for c in self.coeffs], self.var)
        if self.is_zero() or other.is_zero():
            return ValPoly(self.ring, [], self.var)
        out = [self.ring.zero()] * (self.degree() + other.degree() + 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return ValPoly(self.ring, out, self.var)

    def __pow__(self, n):
        out = ValPoly(self.ring, [self.ring.one()], self.var)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def scale(self, c):
        return ValPoly(self.ring, [a * c if isinstance(c, int) else a.scale(c)
                                   for a in self.coeffs], self.var)

    def divmod_monic(self, q):
        """Division by a monic polynomial; exact, never inverts coefficients."""
        if not q.is_monic():
            raise ValueError("division only by monic polynomials")
        d = q.degree()
        rem = list(self.coeffs)
        quot = [self.ring.zero()] * max(0, len(rem) - d)
        while len(rem) > d:
            lead = rem[-1]
            k = len(rem) - 1 - d
            quot[k] = quot[k] + lead
            for i in range(d + 1):
                rem[k + i] = rem[k + i] - lead * q.coeff(i)
            rem.pop()
        return ValPoly(self.ring, quot, self.var), ValPoly(self.ring, rem, self.var)

    def hasse_derivative(self, m):
        """Divided-power derivative: sum C(k, m) a_k x^(k-m)."""
        if m < 1:
            raise ValueError("derivative order must be >= 1")
        out = []
        for k in range(m, self.degree() + 1):
            out.append(self.coeffs[k] * math.comb(k, m))
        return ValPoly(self.ring, out, self.var)

    def eval(self, s):
        if hasattr(s, "eval_valpoly"):
            return s.eval_valpoly(self)
        return eval_poly(list(self.coeffs), s)

    def coerce(self, ring):
        return ValPoly(ring, [c.coerce(ring) if c.ring != ring else c
                              for c in self.coeffs], self.var)

    def __eq__(self, other):
        if not isinstance(other, ValPoly):
            return NotImplemented
        if len(self.coeffs) != len(other.coeffs):
            return False
        return all(a == b for a, b in zip(self.coeffs, other.coeffs))

    def __hash__(self):
        return hash((self.coeffs, self.var))

    def to_text(self):
        if self.is_zero():
            return "0"
        parts = []
        for j in range(self.degree(), -1, -1):
            c = self.coeff(j)
            if not c.terms and c.prec is INF:
                continue
            ct = c.to_text()
            if j == 0:
                parts.append(ct)
                continue
            v = self.var if j == 1 else f"{self.var}^{j}"
            if ct == "1":
                parts.append(v)
            elif ct == "-1" and "O" not in ct:
                parts.append(f"-{v}")
            else:
                if "+" in ct or " - " in ct or ct.startswith("O"):
                    ct = f"({ct})"
                parts.append(f"{ct}*{v}")
        out = " + ".join(parts)
        return out.replace("+ -", "- ")

    def __repr__(self):
        return f"ValPoly({self.to_text()})"


def hasse_derivative(f, m):
    return f.hasse_derivative(m)


def group_text(g):
    """Short text for chain reports: rationals bare, else the coordinate form."""
    if g is INF:
        return "inf"
    q = g.rational_value()
    if q is not None and all(c == 0 for c in g.coords[1:]):
        return str(q)
    return g.to_text()


@dataclass(frozen=True)
class ChainEntry:
    poly: ValPoly
    beta: object  # GroupElement or INF
    b_order: int
    epsilon: object  # GroupElement or INF
    alpha: int


class KeyPolyChain:
    """Immutable snapshot of the computed key-polynomial chain."""

    def __init__(self, ring, entries=()):
        self.ring = ring
        self.entries = tuple(entries)

    def __len__(self):
        return len(self.entries)

    def entry(self, i):
        """1-based entry access."""
        return self.entries[i - 1]

    def epsilons(self):
        return [e.epsilon for e in self.entries]

    def index_for(self, beta):
        """Smallest 1-based i with beta <= epsilon_i, or len+1 when none."""
        for i, e in enumerate(self.entries, start=1):
            if e.epsilon is INF or cmp(beta, e.epsilon) <= 0:
                return i
        return len(self.entries) + 1

    def appended(self, entry):
        return KeyPolyChain(self.ring, self.entries + (entry,))

    def stabilized_tail(self):
        """Number of trailing entries sharing one polynomial (re-pinned)."""
        n = 0
        for e in reversed(self.entries):
            if e.poly == self.entries[-1].poly:
                n += 1
            else:
                break
        return n

    def limit_required(self):
        """Degrees stabilized while epsilon increments shrink geometrically."""
        tail = self.stabilized_tail()
        if tail < 3:
            return False
        eps = [e.epsilon for e in self.entries[-tail:]]
        if any(e is INF for e in eps):
            return False
        p = self.ring.descriptor.char_exponent
        if p <= 1:
            return False
        d1 = eps[-2] - eps[-3]
        d2 = eps[-1] - eps[-2]
        return cmp(d1, d2.scale_unchecked(p)) == 0

    def report(self):
        lines = []
        for i, e in enumerate(self.entries, start=1):
            lines.append(
                f"{i}: Q_{i}={e.poly.to_text()} beta={group_text(e.beta)} "
                f"b={e.b_order} eps={group_text(e.epsilon)} alpha={e.alpha}")
        return "\n".join(lines)


def standard_expansion(f, chain, i):
    """Coefficients c_j of f = sum c_j Q_i^j with deg c_j < deg Q_i."""
    q = chain.entry(i).poly
    if not q.is_monic():
        raise ValueError("standard expansion needs a monic key polynomial")
    cs = []
    r = f
    while not r.is_zero():
        r, rem = r.divmod_monic(q)
        cs.append(rem)
    return cs


def poly_value(f, chain, i):
    """nu(f) read through stages <= i; exact for deg f below the next degree."""
    return truncated_val(f, chain, i)[0]


def _value_below(c, chain, i):
    """Value of an expansion coefficient (degree < deg Q_i)."""
    if c.is_zero():
        return INF
    if c.degree() == 0:
        return c.coeffs[0].val()
    return truncated_val(c, chain, i - 1)[0]


def truncated_val(f, chain, i):
    """The stage-i truncated valuation of f and its attaining index set."""
    if f.is_zero():
        return INF, []
    if f.degree() == 0:
        return f.coeffs[0].val(), [0]
    entry = chain.entry(i)
    cs = standard_expansion(f, chain, i)
    best = None
    vals = {}
    for j, c in enumerate(cs):
        if c.is_zero():
            continue
        cv = _value_below(c, chain, i)
        if cv is INF:
            continue
        if entry.beta is INF:
            total = INF if j > 0 else cv
        else:
            total = entry.beta.scale_unchecked(j) + cv if j else cv
        vals[j] = total
        if total is not INF and (best is None or cmp(total, best) < 0):
            best = total
    if best is None:
        return INF, []
    s_set = [j for j, v in sorted(vals.items()) if v is not INF and cmp(v, best) == 0]
    return best, s_set


def epsilon_invariants(chain, i):
    """(b_i, epsilon_i): least derivative order maximizing the value drop."""
    entry = chain.entry(i)
    q = entry.poly
    p = chain.ring.descriptor.char_exponent
    d = q.degree()
    best = None
    best_b = None
    b = 0
    while p ** b <= d:
        m = p ** b
        dq = q.hasse_derivative(m)
        if not dq.is_zero():
            dv = _value_below(dq, chain, i) if dq.degree() < d else poly_value(dq, chain, i)
            if dv is not INF:
                if entry.beta is INF:
                    cand = INF
                else:
                    cand = (entry.beta - dv).scale_unchecked(_inv_ppow(p, b))
                if best is None or cmp(cand, best) > 0:
                    best = cand
                    best_b = b
        if p == 1:
            break
        b += 1
    if best is None:
        raise ZeroPolynomial("all divided derivatives vanish")
    return best_b, best


def _inv_ppow(p, b):
    from fractions import Fraction
    return Fraction(1, p ** b)


def first_exponent(F):
    """First Newton-polygon slope of a monic polynomial: the root's valuation."""
    d = F.degree()
    if d < 1 or not F.is_monic():
        raise ValueError("need a monic, non-constant polynomial")
    if F.coeff(0).is_exact_zero():
        return INF  # 0 is an exact root
    best = None
    for j in range(d):
        c = F.coeff(j)
        if not c.terms and c.prec is INF:
            continue
        slope = c.val().scale_unchecked(_inv_frac(d - j))
        if best is None or cmp(slope, best) < 0:
            best = slope
    return best


def _inv_frac(n):
    from fractions import Fraction
    return Fraction(1, n)


def initial_chain(ring, F, var="y"):
    """The chain start: the bare variable with the polygon's first slope."""
    beta1 = first_exponent(F)
    q1 = ValPoly.variable(ring, var)
    chain = KeyPolyChain(ring, [ChainEntry(q1, beta1, 0, beta1, 1)])
    b, eps = epsilon_invariants(chain, 1)
    return KeyPolyChain(ring, [ChainEntry(q1, beta1, b, eps, 1)])


def leading_standard_monomial(c, chain, i):
    """The dominant standard monomial of c through stages <= i, as a ValPoly.

    Ties resolve to the smallest power of the stage polynomial.
    """
    if c.is_zero():
        raise ZeroPolynomial("no leading monomial of zero")
    if i == 0 or c.degree() == 0:
        series = c.coeffs[0] if c.degree() == 0 else None
        if series is None:
            raise EngineInvariantViolation("constant expected at stage 0")
        g, lead = series.leading_term()
        return ValPoly.const(series.ring.monomial(g, lead), c.var)
    entry = chain.entry(i)
    cs = standard_expansion(c, chain, i)
    best = None
    best_j = None
    for j, cj in enumerate(cs):
        if cj.is_zero():
            continue
        cv = _value_below(cj, chain, i)
        if cv is INF:
            continue
        total = cv if not j or entry.beta is INF else entry.beta.scale_unchecked(j) + cv
        if best is None or cmp(total, best) < 0:
            best = total
            best_j = j
    if best_j is None:
        raise ValuationIndeterminate("no determinate monomial")
    sub = leading_standard_monomial(cs[best_j], chain, i - 1)
    return sub * (entry.poly ** best_j)


def _monomial_ratio(num, den, chain, i):
    """num / den for leading standard monomials; den must divide num's shape."""
    # peel common stage powers from the top down
    num_c, den_c = num, den
    factors = []
    for k in range(i, 0, -1):
        qk = chain.entry(k).poly
        e_num = 0
        while num_c.degree() >= qk.degree() and qk.degree() >= 1:
            quot, rem = num_c.divmod_monic(qk)
            if not rem.is_zero():
                break
            num_c = quot
            e_num += 1
        e_den = 0
        while den_c.degree() >= qk.degree() and qk.degree() >= 1:
            quot, rem = den_c.divmod_monic(qk)
            if not rem.is_zero():
                break
            den_c = quot
            e_den += 1
        if e_num < e_den:
            raise EngineInvariantViolation(
                "monomial ratio outside the polynomial ring")
        factors.append((qk, e_num - e_den))
    ns = num_c.coeffs[0]
    ds = den_c.coeffs[0]
    ge_n, cn = ns.leading_term()
    ge_d, cd = ds.leading_term()
    diff = ge_n - ge_d
    ring = ns.ring
    if ring.mode == "p":
        inv_cd = cd.inv()
    else:
        inv_cd = cd.inv()
    out = ValPoly.const(ring.monomial(diff, cn * inv_cd), num.var)
    for qk, e in factors:
        if e:
            out = out * (qk ** e)
    return out


def extend_chain(chain, F, partial):
    """MacLane-style augmentation of the chain from the defining polynomial.

    partial: the current exact partial root (supports .eval of ValPoly)
    through which pinned leading coefficients are read.  Returns the new
    chain; raises ChainComplete when the chain already computes nu(F).
    """
    ring = chain.ring
    i = len(chain)
    last = chain.entry(i)

    if last.beta is INF:
        raise ChainComplete("the chain ends with an exact divisor of the input")

    if last.poly == F:
        # refresh the defining-polynomial entry against the longer partial
        ev = F.eval(partial)
        beta = INF if ev.is_exact_zero() else ev.val()
        return _append_with_invariants(chain, F, beta, alpha=1)

    cs = standard_expansion(F, chain, i)
    vals = {}
    best = None
    for j, c in enumerate(cs):
        if c.is_zero():
            continue
        cv = _value_below(c, chain, i)
        if cv is INF:
            continue
        total = cv if not j else (INF if last.beta is INF
                                  else last.beta.scale_unchecked(j) + cv)
        if total is INF:
            continue
        vals[j] = total
        if best is None or cmp(total, best) < 0:
            best = total
    ties = sorted(j for j, v in vals.items() if cmp(v, best) == 0)
    if len(ties) < 2:
        raise ChainComplete("the truncated value of the input is already exact")
    j0, j1 = ties[0], ties[1]
    delta = j1 - j0

    lsm0 = leading_standard_monomial(cs[j0], chain, i)
    lsm1 = leading_standard_monomial(cs[j1], chain, i)
    ratio = _monomial_ratio(lsm0, lsm1, chain, i)

    # pinned data: leading coefficients of the stage and ratio at the partial
    q_eval = last.poly.eval(partial)
    r_eval = ratio.eval(partial)
    if not q_eval.terms or not r_eval.terms:
        raise ValuationIndeterminate("stage data not pinned by the partial root")
    ell = q_eval.leading_term()[1]
    rbar = r_eval.leading_term()[1]
    res_ell = ring.c_residue(ell)
    res_rbar = ring.c_residue(rbar)
    coeff = -(res_ell ** delta) * res_rbar.inv()
    lifted = ring.c_lift(coeff)
    q_new = (last.poly ** delta) + ratio * ring.const(lifted)

    if q_new == F:
        ev = F.eval(partial)
        beta = INF if ev.is_exact_zero() else ev.val()
        return _append_with_invariants(chain, F, beta, alpha=delta)

    # polygon-assigned value from the expansion of F in the new polynomial
    cs_new = []
    r = F
    while not r.is_zero():
        r, rem = r.divmod_monic(q_new)
        cs_new.append(rem)
    v0 = poly_value(cs_new[0], chain, i) if not cs_new[0].is_zero() else INF
    if v0 is INF:
        beta = INF
    else:
        beta = None
        for j in range(1, len(cs_new)):
            if cs_new[j].is_zero():
                continue
            vj = poly_value(cs_new[j], chain, i)
            if vj is INF:
                continue
            cand = (v0 - vj).scale_unchecked(_inv_frac(j))
            if beta is None or cmp(cand, beta) < 0:
                beta = cand
        if beta is None:
            beta = INF
    if beta is not INF and last.beta is not INF:
        floor_val = last.beta.scale_unchecked(delta)
        if cmp(beta, floor_val) <= 0:
            raise EngineInvariantViolation(
                "augmented value does not exceed the previous level")
    return _append_with_invariants(chain, q_new, beta, alpha=delta)


def _append_with_invariants(chain, q_new, beta, alpha):
    tmp = chain.appended(ChainEntry(q_new, beta, 0, beta, alpha))
    b, eps = epsilon_invariants(tmp, len(tmp))
    new = chain.appended(ChainEntry(q_new, beta, b, eps, alpha))
    prev_eps = chain.entries[-1].epsilon if chain.entries else None
    if prev_eps is not None and eps is not INF and prev_eps is not INF:
        if cmp(eps, prev_eps) <= 0:
            raise EngineInvariantViolation(
                "epsilon sequence failed to increase strictly")
    return new


def derivative_min_check(h, chain, i, root):
    """Report on the three-way minimum identity at beta = epsilon_i.

    Evaluates nu_i(h) against min over derivative orders of both the true
    (pullback) and the truncated values shifted by alpha*beta.
    """
    entry = chain.entry(i)
    beta = entry.epsilon
    lhs, _ = truncated_val(h, chain, i)

    def true_val(f):
        ev = f.eval(root)
        if ev.is_exact_zero():
            return INF
        try:
            return ev.val()
        except ValuationIndeterminate:
            return INF

    mid = None
    rhs = None
    for a in range(0, h.degree() + 1):
        da = h if a == 0 else h.hasse_derivative(a)
        if da.is_zero():
            continue
        shift = beta.scale_unchecked(a) if beta is not INF else INF
        tv = true_val(da)
        if tv is not INF and shift is not INF:
            mid = gmin(mid, tv + shift)
        uv, _ = truncated_val(da, chain, i)
        if uv is not INF and shift is not INF:
            rhs = gmin(rhs, uv + shift)
    ok = (lhs is not INF and mid is not None and rhs is not None
          and cmp(lhs, mid) == 0 and cmp(lhs, rhs) == 0)
    return {
        "nu_i": lhs,
        "min_true": mid,
        "min_truncated": rhs,
        "equal": ok,
    }
