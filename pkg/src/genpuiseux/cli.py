"""Command-line front door: expand, verify and arith pipelines.

Problem specifications are line-oriented key/value files (grammar in the
README).  Output is deterministic text, optionally in key=value record form
for machine consumption; traces can be teed to a file.
"""

from __future__ import annotations

import argparse
import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from .coeff import FieldTower, WittRing
from .embed import expand
from .errors import EngineError, ParseError
from .groups import INF, GroupDescriptor, cmp
from .keypoly import ValPoly, derivative_min_check, group_text
from .series import GenSeries, SeriesRing, _coeff_from_fraction
from .truncalg import (
    integral_dependence,
    multi_product_truncation,
    product_truncation,
    taylor_form,
)

ALL_CHECKS = ("caltron", "prodfini", "stab", "min", "ent", "taylor")


@dataclass
class ProblemSpec:
    mode: str = "equichar"
    char: int = 0
    p: int = 0
    weights: list = field(default_factory=lambda: [Fraction(1)])
    sqrt_disc: int = 1
    series_var: str = ""
    var: str = "y"
    lower_vars: list = field(default_factory=list)
    poly_text: str = ""
    budget_terms: int = 16
    max_prec: Fraction = None
    witt_prec: int = 6
    verify: tuple = ALL_CHECKS
    seed: int = 20260809
    trials: int = 50

    def uniformizer(self):
        if self.series_var:
            return self.series_var
        return "p" if self.mode == "mixed" else "t"


def parse_problem(text):
    spec = ProblemSpec()
    seen_poly = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if " " not in line:
            raise ParseError(f"expected 'key value'", line=lineno)
        key, value = line.split(None, 1)
        value = value.strip()
        try:
            if key == "mode":
                if value not in ("equichar", "mixed"):
                    raise ParseError(f"unknown mode {value!r}", line=lineno)
                spec.mode = value
            elif key == "char":
                spec.char = int(value)
            elif key == "p":
                spec.p = int(value)
                spec.mode = "mixed"
            elif key == "weights":
                spec.weights = [_parse_weight(w, lineno) for w in value.split()]
            elif key == "sqrt_disc":
                spec.sqrt_disc = int(value)
            elif key == "series_var":
                spec.series_var = value
            elif key == "var":
                spec.var = value
            elif key == "lower_vars":
                spec.lower_vars = value.split()
            elif key == "poly":
                spec.poly_text = value
                seen_poly = True
            elif key == "budget_terms":
                spec.budget_terms = int(value)
            elif key == "max_prec":
                spec.max_prec = Fraction(value)
            elif key == "witt_prec":
                spec.witt_prec = int(value)
            elif key == "verify":
                if value == "off":
                    spec.verify = ()
                elif value == "all":
                    spec.verify = ALL_CHECKS
                else:
                    names = tuple(v.strip() for v in value.split(","))
                    for nm in names:
                        if nm not in ALL_CHECKS:
                            raise ParseError(f"unknown check {nm!r}", line=lineno)
                    spec.verify = names
            elif key == "seed":
                spec.seed = int(value)
            elif key == "trials":
                spec.trials = int(value)
            else:
                raise ParseError(f"unknown key {key!r}", line=lineno)
        except ValueError as exc:
            raise ParseError(f"bad value for {key!r}: {value!r}", line=lineno) from exc
    if not seen_poly:
        raise ParseError("missing 'poly' line")
    return spec


def _parse_weight(text, lineno):
    # a/b or a/b+c/d*sqrt(D)
    if "sqrt" in text:
        head, tail = text.split("+", 1) if "+" in text else ("0", text)
        c, rest = tail.split("*", 1)
        if not rest.startswith("sqrt(") or not rest.endswith(")"):
            raise ParseError(f"bad weight {text!r}", line=lineno)
        return (Fraction(head), Fraction(c))
    return Fraction(text)


def build_ring(spec):
    if spec.mode == "mixed":
        if spec.p < 2:
            raise ParseError("mixed mode needs a prime p")
        desc = GroupDescriptor(spec.weights, char_exponent=spec.p,
                               sqrt_disc=spec.sqrt_disc)
        witt = WittRing(FieldTower.prime_field(spec.p), spec.witt_prec)
        return SeriesRing.mixed(desc, witt, var=spec.uniformizer())
    char = spec.char
    desc = GroupDescriptor(spec.weights, char_exponent=max(char, 1),
                           sqrt_disc=spec.sqrt_disc)
    tower = FieldTower.prime_field(char) if char else FieldTower.rationals()
    return SeriesRing.equichar(desc, tower, var=spec.uniformizer())


# -- polynomial expression parsing ----------------------------------------------------


class _ExprScanner:
    def __init__(self, text, lineno=None):
        self.text = text
        self.pos = 0
        self.lineno = lineno

    def error(self, msg):
        raise ParseError(msg, line=self.lineno, col=self.pos + 1)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, ch):
        self.skip()
        if not self.text.startswith(ch, self.pos):
            self.error(f"expected {ch!r}")
        self.pos += len(ch)

    def ident(self):
        self.skip()
        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isalnum()
                                             or self.text[self.pos] == "_"):
            self.pos += 1
        if start == self.pos:
            self.error("expected a name")
        return self.text[start:self.pos]

    def number(self):
        self.skip()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos < len(self.text) and self.text[self.pos] == "/":
            save = self.pos
            self.pos += 1
            if self.pos < len(self.text) and self.text[self.pos].isdigit():
                while self.pos < len(self.text) and self.text[self.pos].isdigit():
                    self.pos += 1
            else:
                self.pos = save
        return Fraction(self.text[start:self.pos])


def parse_poly(text, variables, lineno=None):
    """Multivariate polynomial expression over named variables.

    Grammar: sum of products of powers; +, -, *, ^, parentheses, rational
    literals.  Returns a dict exps -> Fraction.
    """
    sc = _ExprScanner(text, lineno)
    zero = tuple([0] * len(variables))

    def combine(a, b, mul=False):
        out = {}
        if not mul:
            for d in (a, b):
                for e, c in d.items():
                    out[e] = out.get(e, Fraction(0)) + c
        else:
            for e1, c1 in a.items():
                for e2, c2 in b.items():
                    e = tuple(x + y for x, y in zip(e1, e2))
                    out[e] = out.get(e, Fraction(0)) + c1 * c2
        return {e: c for e, c in out.items() if c != 0}

    def atom():
        ch = sc.peek()
        if ch == "(":
            sc.take("(")
            v = expr()
            sc.take(")")
            return v
        if ch.isdigit():
            return {zero: sc.number()}
        if ch.isalpha() or ch == "_":
            name = sc.ident()
            if name not in variables:
                sc.error(f"unknown variable {name!r}")
            e = list(zero)
            e[variables.index(name)] = 1
            return {tuple(e): Fraction(1)}
        sc.error("expected a term")

    def power():
        base = atom()
        while sc.peek() == "^":
            sc.take("^")
            n = sc.number()
            if n.denominator != 1 or n < 0:
                sc.error("exponents must be non-negative integers")
            acc = {zero: Fraction(1)}
            b = base
            k = int(n)
            while k:
                if k & 1:
                    acc = combine(acc, b, mul=True)
                b = combine(b, b, mul=True)
                k >>= 1
            base = acc
        return base

    def product():
        acc = power()
        while sc.peek() == "*":
            sc.take("*")
            acc = combine(acc, power(), mul=True)
        return acc

    def expr():
        first = sc.peek()
        neg = False
        if first == "-":
            sc.take("-")
            neg = True
        elif first == "+":
            sc.take("+")
        acc = product()
        if neg:
            acc = {e: -c for e, c in acc.items()}
        while sc.peek() in ("+", "-"):
            op = sc.peek()
            sc.take(op)
            nxt = product()
            if op == "-":
                nxt = {e: -c for e, c in nxt.items()}
            acc = combine(acc, nxt)
        return acc

    out = expr()
    sc.skip()
    if sc.pos != len(sc.text):
        sc.error("trailing input")
    return out


def build_valpoly(spec, ring):
    """The defining polynomial as a ValPoly over the lower embeddings."""
    uvar = spec.uniformizer()
    lower = [uvar] + list(spec.lower_vars)
    variables = lower + [spec.var]
    raw = parse_poly(spec.poly_text, variables)
    from .embed import monomial_embedding

    emb = monomial_embedding(ring, lower)
    coeffs = {}
    mi = len(variables) - 1
    for exps, q in raw.items():
        k = exps[mi]
        part = ring.const(_coeff_from_fraction(ring, q))
        for j, e in enumerate(exps[:-1]):
            if e:
                part = part * (emb[variables[j]] ** e)
        coeffs[k] = coeffs.get(k, ring.zero()) + part
    top = max(coeffs)
    F = ValPoly(ring, [coeffs.get(k, ring.zero()) for k in range(top + 1)], spec.var)
    if not F.is_monic():
        raise ParseError("the defining polynomial must be monic in the main variable")
    return F, emb


# -- expand ------------------------------------------------------------------------------


def run_expand(spec, budget_override=None, prec_override=None):
    ring = build_ring(spec)
    F, emb = build_valpoly(spec, ring)
    max_terms = budget_override or spec.budget_terms
    max_prec = None
    prec_q = prec_override if prec_override is not None else spec.max_prec
    if prec_q is not None:
        max_prec = ring.descriptor.from_rational(prec_q)
    return expand(F, ring, max_terms=max_terms, max_prec=max_prec, lower=emb)


def cmd_expand(spec, fmt="text", trace_path=None, budget=None, prec=None):
    res = run_expand(spec, budget, prec)
    lines = []
    if fmt == "records":
        for r in res.trace:
            rec = (f"beta={r['beta']} coeff={r['coeff']} i_beta={r['i_beta']} "
                   f"beta_plus={r['beta_plus']} branch={r['branch']}")
            if "note" in r:
                rec += f" note={r['note']}"
            lines.append(rec)
        lines.append(f"result={res.series.to_text()} status={res.status}")
        for ln in res.chain.report().splitlines():
            lines.append(f"chain {ln}")
    else:
        lines.append(f"series: {res.series.to_text()}")
        lines.append(f"status: {res.status}")
        lines.append("chain:")
        for ln in res.chain.report().splitlines():
            lines.append(f"  {ln}")
        lines.append("trace:")
        for ln in res.trace_lines()[:-1]:
            lines.append(f"  {ln}")
    if trace_path:
        with open(trace_path, "w") as fh:
            fh.write("\n".join(res.trace_lines()) + "\n")
    return 0, "\n".join(lines), res


# -- verify --------------------------------------------------------------------------------


def _rand_series(ring, rng, char):
    exps = rng.sample(range(0, 12), rng.randint(1, 5))
    terms = []
    for e in exps:
        c = rng.randint(1, char - 1) if char > 1 else rng.randint(1, 7)
        terms.append((ring.descriptor.from_rational(Fraction(e, 2)),
                      ring.c_from_int(c)))
    return GenSeries(ring, terms)


def _rand_poly(ring, rng, char, max_deg=4):
    coeffs = []
    for _ in range(rng.randint(1, max_deg + 1)):
        c = rng.randint(0, char - 1) if char > 1 else rng.randint(-3, 3)
        n = rng.randint(0, 3)
        coeffs.append(ring.monomial(ring.descriptor.from_rational(n),
                                    ring.c_from_int(c)) if c else ring.zero())
    return ValPoly(ring, coeffs, "h")


def _check_caltron(ring, rng, char, trials):
    worst = INF
    for _ in range(trials):
        g = _rand_series(ring, rng, char)
        h = _rand_series(ring, rng, char)
        lam_q = Fraction(rng.randint(2, 16), 2)
        lam = ring.descriptor.from_rational(lam_q)
        if cmp(g.val() + h.val(), lam) >= 0:
            continue
        prod = g * h
        if prod.prec is not INF and cmp(prod.prec, lam) < 0:
            continue  # digit-carrying horizon fell below the read point
        decomp = product_truncation(g, h, lam)
        lhs = decomp.evaluate(g, h)
        rhs = prod.truncate_open(lam)
        la = [t for t in lhs.terms if cmp(t[0], lam) < 0]
        rb = list(rhs.terms)
        if la != rb:
            return False, None
        if cmp(decomp.lambdas[-1], lam - h.val()) > 0:
            return False, None
        if cmp(decomp.deltas[0], lam - g.val()) > 0:
            return False, None
    return True, worst


def _check_prodfini(ring, rng, char, trials):
    for _ in range(max(1, trials // 3)):
        fs = [_rand_series(ring, rng, char) for _ in range(3)]
        prod = fs[0] * fs[1] * fs[2]
        lam = ring.descriptor.from_rational(Fraction(rng.randint(4, 14), 2))
        if cmp(prod.val(), lam) >= 0:
            continue
        if prod.prec is not INF and cmp(prod.prec, lam) < 0:
            continue
        tree = multi_product_truncation(fs, lam)
        lhs = tree.evaluate(fs)
        rhs = prod.truncate_open(lam)
        if [t for t in lhs.terms if cmp(t[0], lam) < 0] != list(rhs.terms):
            return False, None
    return True, INF


def _check_stab(res, rng, trials):
    ring = res.series.ring
    root = GenSeries(ring, list(res.series.terms))
    tgen = ring.uniformizer()
    if not root.terms:
        return True, INF
    for _ in range(max(1, trials // 3)):
        e1, e2 = rng.randint(0, 2), rng.randint(1, 2)
        factors = [tgen] * e1 + [root] * e2
        prod = factors[0]
        for f in factors[1:]:
            prod = prod * f
        lam = ring.descriptor.from_rational(Fraction(rng.randint(6, 14), 2))
        if cmp(prod.val(), lam) >= 0:
            continue
        if prod.prec is not INF and cmp(prod.prec, lam) < 0:
            continue
        tree = multi_product_truncation(factors, lam)
        lhs = tree.evaluate(factors)
        rhs = prod.truncate_open(lam)
        if [t for t in lhs.terms if cmp(t[0], lam) < 0] != list(rhs.terms):
            return False, None
    return True, INF


def _check_min(res, rng, char, trials):
    state = res.state
    chain = res.chain
    root = state.partial
    stages = [i for i in range(1, len(chain) + 1)
              if chain.entry(i).epsilon is not INF][:2]
    for i in stages:
        done = 0
        while done < trials:
            h = _rand_poly(res.series.ring, rng, char)
            if h.is_zero():
                continue
            done += 1
            rep = derivative_min_check(h, chain, i, root)
            if rep["nu_i"] is INF:
                continue
            if not rep["equal"]:
                return False, None
    return True, INF


def _check_ent(res):
    state = res.state
    chain = res.chain
    worst = INF
    for i in range(1, len(chain) + 1):
        eps = chain.entry(i).epsilon
        if eps is INF:
            continue
        if state.beta is not INF and cmp(eps, state.beta) > 0:
            continue
        try:
            rel = integral_dependence(eps, state)
        except EngineError:
            continue
        # the relation's degree is max U0 and its top coefficient a unit monomial
        if not rel.monomials or max(rel.monomials) != rel.degree:
            return False, rel.residual_val
        top = rel.monomials[rel.degree]
        if len(top.terms) != 1:
            return False, rel.residual_val
        if rel.residual_val is not INF and cmp(rel.residual_val, rel.lam) < 0:
            return False, rel.residual_val
        if rel.residual_val is not INF:
            worst = rel.residual_val if worst is INF else worst
    return True, worst


def _check_taylor(res):
    state = res.state
    chain = res.chain
    F = state.F
    for i in range(1, len(chain) + 1):
        eps = chain.entry(i).epsilon
        if eps is INF:
            continue
        if state.beta is not INF and cmp(eps, state.beta) >= 0:
            continue
        try:
            form = taylor_form(F, eps, state, mode="OPEN")
        except EngineError:
            continue
        acc = form.constant
        for b, mono in form.monomials.items():
            acc = acc + mono * (form.center ** b)
        if not acc.is_exact_zero() and acc.terms:
            if cmp(acc.val(), form.lam) < 0:
                return False, acc.val()
    return True, INF


def cmd_verify(spec, fmt="text", corrupt=False, budget=None, prec=None):
    res = run_expand(spec, budget, prec)
    if corrupt:
        ring = res.series.ring
        if res.series.terms:
            g0, c0 = res.series.terms[0]
            bumped = res.series + ring.monomial(g0, ring.c_one())
            from dataclasses import replace as _rep
            res = _rep(res, series=bumped,
                       state=_rep(res.state, partial=bumped))
    if not spec.verify:
        return 0, ""
    rng = random.Random(spec.seed)
    char = spec.p if spec.mode == "mixed" else spec.char
    ring = res.series.ring
    lines = []
    ok_all = True
    for name in spec.verify:
        if name == "caltron":
            ok, rv = _check_caltron(ring, rng, max(char, 0), spec.trials * 2)
        elif name == "prodfini":
            ok, rv = _check_prodfini(ring, rng, max(char, 0), spec.trials)
        elif name == "stab":
            ok, rv = _check_stab(res, rng, spec.trials)
        elif name == "min":
            ok, rv = _check_min(res, rng, char, spec.trials)
        elif name == "ent":
            ok, rv = _check_ent(res)
        elif name == "taylor":
            ok, rv = _check_taylor(res)
        else:
            continue
        ok_all = ok_all and ok
        rv_text = "inf" if rv is INF or rv is None else group_text(rv)
        lines.append(f"check={name} status={'PASS' if ok else 'FAIL'} "
                     f"residual_val={rv_text}")
    return (0 if ok_all else 1), "\n".join(lines)


# -- arith -----------------------------------------------------------------------------------


def cmd_arith(text):
    """Evaluate series declarations and print statements."""
    lines_out = []
    ring = None
    spec = ProblemSpec()
    env = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key = line.split(None, 1)[0]
        rest = line[len(key):].strip()
        if key in ("mode", "char", "p", "weights", "sqrt_disc", "series_var",
                   "witt_prec"):
            # reuse the problem-spec field parsing for this one key
            tmp = parse_problem(f"{key} {rest}\npoly 0")
            setattr(spec, key, getattr(tmp, key))
            if key == "p":
                spec.mode = "mixed"
            ring = None
            continue
        if ring is None:
            ring = build_ring(spec)
        if key == "let":
            if "=" not in rest:
                raise ParseError("expected 'let name = expr'", line=lineno)
            name, expr_text = rest.split("=", 1)
            env[name.strip()] = _eval_series_expr(ring, env, expr_text.strip(),
                                                  lineno)
        elif key == "print":
            val = _eval_series_expr(ring, env, rest, lineno)
            lines_out.append(val.to_text())
        else:
            raise ParseError(f"unknown statement {key!r}", line=lineno)
    return "\n".join(lines_out)


def _eval_series_expr(ring, env, text, lineno):
    sc = _ExprScanner(text, lineno)

    def atom():
        ch = sc.peek()
        if ch == "(":
            sc.take("(")
            v = addexpr()
            sc.take(")")
            return v
        if ch.isdigit():
            q = sc.number()
            return ring.const(_coeff_from_fraction(ring, q))
        name = sc.ident()
        if sc.peek() == "(":
            sc.take("(")
            args = [addexpr_or_number()]
            while sc.peek() == ",":
                sc.take(",")
                args.append(addexpr_or_number())
            sc.take(")")
            return _apply_func(ring, name, args, sc)
        if name == ring.var:
            return ring.uniformizer()
        if name in env:
            return env[name]
        sc.error(f"unknown name {name!r}")

    def addexpr_or_number():
        # numbers in argument position mean exponents
        save = sc.pos
        ch = sc.peek()
        if ch.isdigit() or ch == "-":
            neg = ch == "-"
            if neg:
                sc.take("-")
            q = sc.number()
            if sc.peek() in (",", ")"):
                return -q if neg else q
            sc.pos = save
        return addexpr()

    def power():
        base = atom()
        while sc.peek() == "^":
            sc.take("^")
            if sc.peek() == "(":
                sc.take("(")
                n = sc.number()
                sc.take(")")
            else:
                n = sc.number()
            if n.denominator == 1:
                base = base ** int(n)
            else:
                # fractional power of a single unit monomial
                if len(base.terms) != 1:
                    sc.error("fractional powers need a single monomial")
                gam, c = base.terms[0]
                if not c == ring.c_one():
                    sc.error("fractional powers need a unit coefficient")
                base = ring.monomial(gam.scale_unchecked(n))
        return base

    def product():
        acc = power()
        while sc.peek() == "*":
            sc.take("*")
            acc = acc * power()
        return acc

    def addexpr():
        neg = False
        if sc.peek() == "-":
            sc.take("-")
            neg = True
        elif sc.peek() == "+":
            sc.take("+")
        acc = product()
        if neg:
            acc = -acc
        while sc.peek() in ("+", "-"):
            op = sc.peek()
            sc.take(op)
            nxt = product()
            acc = acc - nxt if op == "-" else acc + nxt
        return acc

    out = addexpr()
    sc.skip()
    if sc.pos != len(sc.text):
        sc.error("trailing input")
    return out


def _apply_func(ring, name, args, sc):
    def as_exp(q):
        return ring.descriptor.from_rational(q) if isinstance(q, Fraction) \
            else q

    if name == "inv":
        prec = as_exp(args[1]) if len(args) > 1 else None
        return args[0].inv(prec)
    if name == "trunc_open":
        return args[0].truncate_open(as_exp(args[1]))
    if name == "trunc_closed":
        return args[0].truncate_closed(as_exp(args[1]))
    if name == "slice":
        return args[0].slice(as_exp(args[1]), as_exp(args[2]))
    if name == "normalize":
        return args[0].normalize()
    sc.error(f"unknown function {name!r}")


# -- entry point ------------------------------------------------------------------------------


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="genpuiseux",
        description="Exact generalized Puiseux expansions with verification")
    parser.add_argument("command", choices=["expand", "verify", "arith"])
    parser.add_argument("path", help="problem spec or expression file")
    parser.add_argument("--budget-terms", type=int, default=None)
    parser.add_argument("--prec", type=str, default=None,
                        help="maximal exponent a/b")
    parser.add_argument("--trace", type=str, default=None)
    parser.add_argument("--format", choices=["text", "records"], default="text")
    parser.add_argument("--inject-corruption", action="store_true",
                        help=argparse.SUPPRESS)
    args = parser.parse_args(argv)

    try:
        with open(args.path) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "expand":
            spec = parse_problem(text)
            code, out, _ = cmd_expand(spec, fmt=args.format,
                                      trace_path=args.trace,
                                      budget=args.budget_terms,
                                      prec=Fraction(args.prec) if args.prec else None)
        elif args.command == "verify":
            spec = parse_problem(text)
            code, out = cmd_verify(spec, fmt=args.format,
                                   corrupt=args.inject_corruption,
                                   budget=args.budget_terms,
                                   prec=Fraction(args.prec) if args.prec else None)
        else:
            code, out = 0, cmd_arith(text)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except EngineError as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return 1
    if out:
        print(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
