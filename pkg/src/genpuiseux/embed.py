"""Construction of Puiseux developments by successive partial developments.

The driver is presented with a monic defining polynomial whose root in the
series ring induces the valuation by pullback.  Each step solves the residue
equation read off the exponent-level ties of the Taylor expansion of the
defining polynomial at the current partial root, lifts the chosen root,
advances the exponent through the chain's epsilon thresholds, and extends
the key-polynomial chain at stage boundaries.  Accumulation stages hand off
to a registered closed-form limit pattern and resume past it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

from .coeff import CoeffElem, solve_in_closure
from .errors import (
    ChainComplete,
    EngineInvariantViolation,
    IrreducibleOverRationals,
    MembershipFailed,
    UnsupportedLimitPattern,
    ValuationIndeterminate,
    ZeroPolynomial,
)
from .groups import INF, cmp, gmin, membership
from .keypoly import (
    KeyPolyChain,
    ValPoly,
    extend_chain,
    group_text,
    initial_chain,
    truncated_val,
)
from .series import GenSeries

RUNNING = "RUNNING"
COMPLETE = "COMPLETE"
BUDGET = "BUDGET"
COMPLETE_TRANSCENDENTAL = "COMPLETE_TRANSCENDENTAL"


# -- multivariate stand-ins for ring elements --------------------------------------


class MPoly:
    """Multivariate polynomial over the coefficient domain, main variable last."""

    def __init__(self, variables, terms):
        self.variables = tuple(variables)
        cleaned = {}
        for exps, c in terms.items():
            if isinstance(c, int) and c == 0:
                continue
            if not isinstance(c, int) and hasattr(c, "is_zero") and c.is_zero():
                continue
            cleaned[tuple(exps)] = c
        self.terms = dict(cleaned)

    def is_zero(self):
        return not self.terms

    def hasse_derivative(self, var_index, m):
        import math

        out = {}
        for exps, c in self.terms.items():
            k = exps[var_index]
            if k < m:
                continue
            newe = list(exps)
            newe[var_index] = k - m
            binom = math.comb(k, m)
            prev = out.get(tuple(newe))
            scaled = c * binom if not isinstance(c, int) else c * binom
            out[tuple(newe)] = prev + scaled if prev is not None else scaled
        return MPoly(self.variables, out)

    def monomial_val(self, values):
        """Least weighted degree over the support; values: one per variable."""
        if not self.terms:
            raise ZeroPolynomial("monomial valuation of the zero polynomial")
        best = None
        for exps in self.terms:
            total = None
            for e, v in zip(exps, values):
                if e:
                    piece = v.scale_unchecked(e)
                    total = piece if total is None else total + piece
            if total is None:
                total = values[0].descriptor.zero()
            if best is None or cmp(total, best) < 0:
                best = total
        return best

    def to_valpoly(self, ring, embeddings, main_var=None):
        """Collapse to a univariate polynomial in the main variable.

        Lower-variable monomials are evaluated at their embedded series.
        """
        main = main_var or self.variables[-1]
        mi = self.variables.index(main)
        coeffs = {}
        for exps, c in self.terms.items():
            k = exps[mi]
            acc = ring.const(ring.c_from_int(c) if isinstance(c, int)
                             else ring.coerce_coeff(c))
            for j, e in enumerate(exps):
                if j == mi or not e:
                    continue
                acc = acc * (embeddings[self.variables[j]] ** e)
            coeffs[k] = coeffs.get(k, ring.zero()) + acc
        top = max(coeffs) if coeffs else 0
        return ValPoly(ring, [coeffs.get(k, ring.zero()) for k in range(top + 1)],
                       main)

    def eval(self, ring, embeddings):
        acc = ring.zero()
        for exps, c in self.terms.items():
            part = ring.const(ring.c_from_int(c) if isinstance(c, int)
                              else ring.coerce_coeff(c))
            for j, e in enumerate(exps):
                if e:
                    part = part * (embeddings[self.variables[j]] ** e)
            acc = acc + part
        return acc


def monomial_val(f, values):
    return f.monomial_val(values)


def monomial_embedding(ring, names):
    """Base-case embedding: each independent variable to its weight monomial."""
    desc = ring.descriptor
    if len(names) > desc.rank:
        raise ValueError("more names than independent weights")
    return {nm: ring.monomial(desc.basis(j)) for j, nm in enumerate(names)}


# -- limit closed forms --------------------------------------------------------------


class LimitPartial:
    """Exact root of a stage polynomial plus finitely many tail terms.

    Evaluation of any polynomial reduces modulo the stage polynomial first
    (exact by construction) and Taylor-expands in the tail.
    """

    def __init__(self, ring, flim, head_terms, sup, next_exp, tails=()):
        self.ring = ring
        self.flim = flim
        self.head_terms = tuple(head_terms)
        self.sup = sup          # accumulation point of the head support
        self.next_exp = next_exp  # first unmaterialized head exponent
        self.tails = tuple(tails)

    def head_series(self):
        return GenSeries(self.ring, list(self.head_terms), self.next_exp, False)

    def tail_series(self):
        return GenSeries(self.ring, list(self.tails))

    def add_term(self, gamma, c):
        return LimitPartial(self.ring, self.flim, self.head_terms, self.sup,
                            self.next_exp, self.tails + ((gamma, c),))

    def as_series(self, prec=INF, closed=False):
        return GenSeries(self.ring, list(self.head_terms) + list(self.tails),
                         prec, closed)

    def coerce(self, ring):
        return LimitPartial(
            ring, self.flim.coerce(ring),
            [(g, ring.coerce_coeff(c)) for g, c in self.head_terms],
            self.sup, self.next_exp,
            [(g, ring.coerce_coeff(c)) for g, c in self.tails])

    def eval_valpoly(self, P):
        ring = self.ring
        head = self.head_series()
        if not self.tails:
            _, rem = P.divmod_monic(self.flim)
            return rem.eval(head)
        tau = self.tail_series()
        acc = ring.zero()
        tau_pow = ring.one()
        for l in range(0, P.degree() + 1):
            dP = P if l == 0 else P.hasse_derivative(l)
            if not dP.is_zero():
                _, rem = dP.divmod_monic(self.flim)
                part = rem.eval(head)
                acc = acc + part * tau_pow
            tau_pow = tau_pow * tau
        return acc


# -- state -----------------------------------------------------------------------------


@dataclass
class PuiseuxState:
    ring: object
    F: ValPoly
    chain: KeyPolyChain
    partial: object  # GenSeries (exact) or LimitPartial
    beta: object
    status: str = RUNNING
    trace: tuple = ()
    emitted: tuple = ()  # (exponent, coefficient) pairs actually added
    lower: dict = field(default_factory=dict)
    lower_rank: int = None  # weights spanned by the lower stage (default all)
    note: str = ""

    @property
    def i_beta(self):
        return self.chain.index_for(self.beta)

    def partial_series(self, prec=None):
        prec = self.beta if prec is None else prec
        if self.status == COMPLETE:
            prec = INF
        if isinstance(self.partial, LimitPartial):
            return self.partial.as_series(prec)
        if prec is INF:
            return self.partial
        return GenSeries(self.ring, list(self.partial._raw), prec, False)

    def eval_at_partial(self, poly):
        return poly.eval(self.partial)

    def with_tower(self, tower):
        if tower == self.ring.tower:
            return self
        ring2 = self.ring.with_tower(tower)
        chain2 = KeyPolyChain(ring2, [
            replace(e, poly=e.poly.coerce(ring2)) for e in self.chain.entries])
        part2 = (self.partial.coerce(ring2) if isinstance(self.partial, LimitPartial)
                 else self.partial.coerce(ring2))
        lower2 = {k: v.coerce(ring2) for k, v in self.lower.items()}
        return replace(self, ring=ring2, F=self.F.coerce(ring2), chain=chain2,
                       partial=part2, lower=lower2)


def init_state(F, ring, lower=None, chain=None, lower_rank=None):
    """Start of the recursion: zero partial at the polygon's first exponent."""
    chain = chain or initial_chain(ring, F, F.var)
    e1 = chain.entry(1)
    state = PuiseuxState(ring=ring, F=F, chain=chain, partial=ring.zero(),
                         beta=e1.beta, lower=dict(lower or {}),
                         lower_rank=lower_rank)
    if e1.beta is INF:
        # zero is an exact root
        return replace(state, status=COMPLETE)
    return state


def gamma_generators(state):
    """Generators of the current rational span: lower weights plus earlier betas."""
    desc = state.ring.descriptor
    rank = desc.rank if state.lower_rank is None else state.lower_rank
    gens = [desc.basis(j) for j in range(rank)]
    for e in state.chain.entries[:state.i_beta - 1]:
        if e.beta is not INF:
            gens.append(e.beta)
    return gens


# -- the residue equation ------------------------------------------------------------


@dataclass
class ResidualData:
    equation: list  # CoeffElem coefficients, ascending
    ties: list
    level: object
    lam: int
    lam_coeffs: tuple
    d_val: object
    z: object
    tower: object


def residual_equation(state):
    """Residue equation for the next coefficient, from the Taylor ties.

    Raises MembershipFailed when the current exponent leaves the rational
    span (the caller's terminal branch).
    """
    ring = state.ring
    beta = state.beta
    gens = gamma_generators(state)
    sol = membership(beta, gens)
    if sol is None:
        raise MembershipFailed("exponent outside the current rational span")

    F = state.F
    taylor = {}
    for l in range(0, F.degree() + 1):
        dF = F if l == 0 else F.hasse_derivative(l)
        if dF.is_zero():
            continue
        ev = state.eval_at_partial(dF)
        if ev.is_exact_zero():
            continue
        taylor[l] = ev

    level = None
    vals = {}
    for l, ev in taylor.items():
        v = ev.val()
        tot = v + beta.scale_unchecked(l)
        vals[l] = tot
        if level is None or cmp(tot, level) < 0:
            level = tot
    ties = sorted(l for l, v in vals.items() if cmp(v, level) == 0)

    tower = ring.tower
    eq = {}
    for l in ties:
        lead = taylor[l].leading_term()[1]
        eq[l] = ring.c_residue(lead)
    top = max(eq)
    coeffs = [eq.get(l, CoeffElem.zero(tower)) for l in range(top + 1)]

    lam, lam_coeffs, d_val = _relation_decoration(state, sol, gens)
    z = CoeffElem.zero(tower)
    i_b = state.i_beta
    at_eps = (i_b <= len(state.chain)
              and state.chain.entry(i_b).epsilon is not INF
              and cmp(beta, state.chain.entry(i_b).epsilon) == 0)
    if at_eps and 0 in eq:
        lc = coeffs[-1]
        z = -(eq[0] * lc.inv())
    return ResidualData(coeffs, ties, level, lam, lam_coeffs, d_val, z, tower)


def _relation_decoration(state, sol, gens):
    """Integer relation lambda*beta-level = sum(lambda_j beta_j) + nu(d)."""
    lam = 1
    for q in sol:
        lam = lam * q.denominator // _gcd(lam, q.denominator)
    desc = state.ring.descriptor
    lam_coeffs = tuple(int(q * lam) for q in sol[desc.rank:])
    d_val = None
    for j in range(desc.rank):
        piece = desc.basis(j).scale_unchecked(sol[j] * lam)
        d_val = piece if d_val is None else d_val + piece
    return lam, lam_coeffs, d_val


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


# -- partial development predicate ------------------------------------------------------


def is_partial_development(state):
    """Machine check of the two defining valuation conditions.

    Historical snapshots of a re-pinned stage polynomial (an entry whose
    polynomial reappears later in the chain) record the value attained at
    their creation time; only the latest binding per polynomial is checked.
    """
    report = []
    ok = True
    i_b = state.i_beta
    chain = state.chain
    for i in range(1, min(i_b - 1, len(chain)) + 1):
        e = chain.entry(i)
        if any(chain.entry(j).poly == e.poly
               for j in range(i + 1, len(chain) + 1)):
            continue
        ev = state.eval_at_partial(e.poly)
        if e.beta is INF:
            good = ev.is_exact_zero()
        else:
            try:
                good = cmp(ev.val(), e.beta) == 0
            except ValuationIndeterminate:
                good = False
        report.append((i, "value-pinned", good))
        ok = ok and good
    if i_b <= len(chain) and state.beta is not INF:
        e = chain.entry(i_b)
        bound = _min_derivative_level(chain, i_b, state.beta)
        ev = state.eval_at_partial(e.poly)
        lb = ev.val_lower_bound()
        good = bound is None or lb is INF or cmp(lb, bound) >= 0
        report.append((i_b, "boundary-inequality", good))
        ok = ok and good
    return ok, report


def _min_derivative_level(chain, i, beta):
    """min over p-power orders of nu(dQ) + p^q * beta for the stage polynomial."""
    q_poly = chain.entry(i).poly
    p = chain.ring.descriptor.char_exponent
    best = None
    b = 0
    while p ** b <= q_poly.degree():
        m = p ** b
        dq = q_poly.hasse_derivative(m)
        if not dq.is_zero():
            dv, _ = truncated_val(dq, chain, max(i - 1, 1))
            if dv is not INF:
                best = gmin(best, dv + beta.scale_unchecked(m))
        if p == 1:
            break
        b += 1
    return best


def _epsilon_for_value(chain, i, beta_tilde):
    """max over p-power orders of (beta_tilde - nu(dQ_i)) / p^q."""
    if beta_tilde is INF:
        return INF
    q_poly = chain.entry(i).poly
    p = chain.ring.descriptor.char_exponent
    best = None
    b = 0
    while p ** b <= q_poly.degree():
        m = p ** b
        dq = q_poly.hasse_derivative(m)
        if not dq.is_zero():
            dv, _ = truncated_val(dq, chain, max(i - 1, 1))
            if dv is not INF:
                cand = (beta_tilde - dv).scale_unchecked(Fraction(1, m))
                if best is None or cmp(cand, best) > 0:
                    best = cand
        if p == 1:
            break
        b += 1
    return best


# -- the recursion step -------------------------------------------------------------------


def _record(state, coeff_text, beta_plus, branch, note=""):
    rec = {
        "beta": group_text(state.beta),
        "coeff": coeff_text,
        "i_beta": state.i_beta,
        "beta_plus": group_text(beta_plus) if beta_plus is not INF else "inf",
        "branch": branch,
    }
    if note:
        rec["note"] = note
    return state.trace + (rec,)


def _add_to_partial(state, a):
    mono = state.ring.monomial(state.beta, a)
    if isinstance(state.partial, LimitPartial):
        return state.partial.add_term(state.beta, a)
    return state.partial + mono


def step(state):
    """One recursion step: solve the residue equation, lift, advance."""
    if state.status != RUNNING:
        return state

    ev0 = state.eval_at_partial(state.F)
    if ev0.is_exact_zero():
        return replace(state, status=COMPLETE)

    try:
        data = residual_equation(state)
    except MembershipFailed:
        # terminal branch: the exponent left the span, append a unit term
        one = state.ring.c_one()
        partial = _add_to_partial(state, one)
        note = ""
        if state.chain.entries[-1].beta is not INF:
            note = "terminal-or-budget-ambiguous"
        trace = _record(state, state.ring.c_residue(one).to_text(), INF,
                        "TERMINAL", note)
        return replace(state, partial=partial, status=COMPLETE, trace=trace,
                       emitted=state.emitted + ((state.beta, one),))

    try:
        tower2, roots = solve_in_closure(data.tower, data.equation)
    except IrreducibleOverRationals:
        trace = _record(state, "(no root in permitted towers)", INF, "TERMINAL")
        return replace(state, status=COMPLETE_TRANSCENDENTAL, trace=trace)

    if tower2 != state.ring.tower:
        state = state.with_tower(tower2)
    root = roots[0][0]
    a = state.ring.c_lift(root)

    emitted = state.emitted
    if root.is_zero():
        new_partial = state.partial
    else:
        new_partial = _add_to_partial(state, a)
        emitted = emitted + ((state.beta, a),)

    coeff_text = root.to_text()
    i_b = state.i_beta
    chain = state.chain
    entry = chain.entry(i_b) if i_b <= len(chain) else None
    boundary = (entry is not None and entry.epsilon is not INF
                and cmp(state.beta, entry.epsilon) == 0)

    if boundary:
        try:
            chain = extend_chain(chain, state.F, new_partial)
        except (ChainComplete, ValuationIndeterminate):
            # stage data exhausted at the working precision: an honest stop
            trace = _record(state, coeff_text, state.beta, "STEP",
                            note="stage-data-exhausted-at-precision")
            return replace(state, partial=new_partial, status=BUDGET,
                           trace=trace, emitted=emitted)
        i_plus = len(chain)
        new_entry = chain.entry(i_plus)
        # the advance is capped by the new threshold but driven by the value
        # the new stage polynomial actually attains at the current partial
        q_eval = new_entry.poly.eval(new_partial)
        beta_tilde = INF if q_eval.is_exact_zero() else q_eval.val()
        eps_tilde = _epsilon_for_value(chain, i_plus, beta_tilde)
        beta_plus = gmin(eps_tilde, new_entry.epsilon)
    else:
        i_plus = i_b
        q_eval = chain.entry(i_b).poly.eval(new_partial)
        beta_tilde = INF if q_eval.is_exact_zero() else q_eval.val()
        if beta_tilde is INF:
            eps_tilde = INF
            beta_plus = INF
        else:
            eps_tilde = _epsilon_for_value(chain, i_b, beta_tilde)
            cap = chain.entry(i_b).epsilon
            beta_plus = gmin(eps_tilde, cap)

    if eps_tilde is not INF and cmp(eps_tilde, state.beta) < 0:
        raise EngineInvariantViolation(
            f"epsilon-tilde {group_text(eps_tilde)} fell below beta "
            f"{group_text(state.beta)}")
    if beta_plus is not INF and cmp(beta_plus, state.beta) <= 0:
        raise EngineInvariantViolation(
            f"no progress: beta_plus {group_text(beta_plus)} <= beta "
            f"{group_text(state.beta)}")

    trace = _record(state, coeff_text, beta_plus, "STEP")
    new_state = replace(state, partial=new_partial, beta=beta_plus, chain=chain,
                        trace=trace, emitted=emitted)
    if beta_plus is INF:
        new_state = replace(new_state, status=COMPLETE)
    return new_state


# -- the limit stage -----------------------------------------------------------------------


def limit_signature(state):
    """The stage polynomial accumulated against, or None.

    Detects a geometric exponent stream crawling below the threshold of a
    stage polynomial distinct from the defining polynomial (for the defining
    polynomial itself the accumulation IS the root and the budget governs).
    """
    if state.status != RUNNING or len(state.emitted) < 3:
        return None
    p = state.ring.descriptor.char_exponent
    if p <= 1:
        return None
    i_b = state.i_beta
    if i_b > len(state.chain):
        return None
    entry = state.chain.entry(i_b)
    if entry.poly == state.F:
        return None
    exps = [e for e, _ in state.emitted]
    d1 = exps[-2] - exps[-3]
    d2 = exps[-1] - exps[-2]
    if cmp(d1, d2.scale_unchecked(p)) != 0:
        return None
    sup = exps[-1] + d2.scale_unchecked(Fraction(1, p - 1))
    if entry.epsilon is not INF and cmp(sup, entry.epsilon) > 0:
        return None
    if state.beta is not INF and cmp(state.beta, sup) >= 0:
        return None  # the accumulation point is already behind us
    return entry.poly


def limit_step(state):
    """Hand off an accumulating exponent stream to a registered closed form.

    The only registered family is the constant-coefficient geometric pattern
    (exponents A - B p^-k).  Identity on states with no detected limit.
    """
    if state.status != RUNNING:
        return state
    ring = state.ring
    p = ring.descriptor.char_exponent
    if len(state.emitted) < 3:
        raise UnsupportedLimitPattern("too few terms to match a pattern")
    exps = [e for e, _ in state.emitted]
    coeffs = [c for _, c in state.emitted]
    d1 = exps[-2] - exps[-3]
    d2 = exps[-1] - exps[-2]
    if p <= 1 or cmp(d1, d2.scale_unchecked(p)) != 0:
        raise UnsupportedLimitPattern("increments are not geometric")
    if not (coeffs[-1] == coeffs[-2] == coeffs[-3]):
        raise UnsupportedLimitPattern("coefficients do not repeat")
    flim = limit_signature(state)
    if flim is None:
        return state
    i_b = state.i_beta
    entry = state.chain.entry(i_b)
    c_rep = coeffs[-1]
    sup = exps[-1] + d2.scale_unchecked(Fraction(1, p - 1))

    # verify the stage polynomial's valuations along three extrapolated terms
    head = list(state.emitted)
    delta = d2
    check_vals = []
    probe = state.partial
    for _ in range(3):
        delta = delta.scale_unchecked(Fraction(1, p))
        nxt = head[-1][0] + delta
        head.append((nxt, c_rep))
        probe = probe + ring.monomial(nxt, c_rep)
        evv = flim.eval(probe)
        if evv.is_exact_zero():
            check_vals.append(INF)
            break
        check_vals.append(evv.val())
    if len(check_vals) >= 3 and check_vals[-1] is not INF:
        inc1 = check_vals[1] - check_vals[0]
        inc2 = check_vals[2] - check_vals[1]
        if cmp(inc1, inc2.scale_unchecked(p)) != 0:
            raise UnsupportedLimitPattern(
                "stage valuations do not follow the geometric law")

    lp = LimitPartial(ring, flim, head, sup,
                      head[-1][0] + delta.scale_unchecked(Fraction(1, p)))
    # past the accumulation the stage is exactly killed; resume at its threshold
    beta_plus = entry.epsilon
    trace = _record(state, "(limit)", beta_plus, "LIMIT")
    return replace(state, partial=lp, beta=beta_plus, trace=trace)


# -- the driver ------------------------------------------------------------------------------


@dataclass
class ExpandResult:
    series: GenSeries
    chain: KeyPolyChain
    trace: tuple
    status: str
    state: PuiseuxState

    def trace_lines(self):
        lines = []
        for r in self.trace:
            line = (f"beta={r['beta']} coeff={r['coeff']} i_beta={r['i_beta']} "
                    f"beta_plus={r['beta_plus']} branch={r['branch']}")
            if "note" in r:
                line += f" note={r['note']}"
            lines.append(line)
        lines.append(f"result={self.series.to_text()} status={self.status}")
        return lines


def expand(F, ring, max_terms=16, max_prec=None, lower=None, chain=None):
    """Drive the recursion to completion or budget exhaustion."""
    state = init_state(F, ring, lower=lower, chain=chain)
    guard = 0
    while state.status == RUNNING:
        guard += 1
        if guard > 4 * max_terms + 64:
            raise EngineInvariantViolation("step budget safety valve tripped")
        if len(state.emitted) >= max_terms:
            state = replace(state, status=BUDGET)
            break
        if max_prec is not None and state.beta is not INF \
                and cmp(state.beta, max_prec) > 0:
            state = replace(state, status=BUDGET)
            break
        if limit_signature(state) is not None:
            state = limit_step(state)
            continue
        try:
            state = step(state)
        except ValuationIndeterminate:
            # residual data sank below the p-adic working precision
            state = replace(state, status=BUDGET,
                            note="residual-below-working-precision")
            break
    series = state.partial_series()
    return ExpandResult(series, state.chain, state.trace, state.status, state)


# -- the mu_beta valuation --------------------------------------------------------------------


def mu_beta_val(f, state):
    """Substitute the main variable by partial + T and read the T-graded min.

    Returns (value, attaining T-degrees).  f may be a ValPoly over the ring
    or an MPoly over the state's variables.
    """
    if isinstance(f, MPoly):
        emb = dict(state.lower)
        f = f.to_valpoly(state.ring, emb)
    beta = state.beta
    best = None
    attain = []
    for k in range(0, f.degree() + 1):
        dk = f if k == 0 else f.hasse_derivative(k)
        if dk.is_zero():
            continue
        ev = state.eval_at_partial(dk)
        if ev.is_exact_zero():
            continue
        tot = ev.val() + beta.scale_unchecked(k)
        if best is None or cmp(tot, best) < 0:
            best = tot
            attain = [k]
        elif cmp(tot, best) == 0:
            attain.append(k)
    if best is None:
        raise ZeroPolynomial("polynomial vanishes at the partial development")
    return best, attain
