"""Exact symbolic expressions: canonical quotients of atom polynomials.

An Expr is num/den with both sides in the normal form enforced by poly.py,
gcd-reduced (plain ring), denominator primitive with positive leading
coefficient, free of sin atoms (cleared through the Pythagorean relation)
and of common exp/power unit factors.
"""

import hashlib
import random

from .rat import rat, ZERO, ONE, is_rat, is_integer, as_int, floor_rat
from . import poly as P
from .poly import (
    Poly, POLY_ZERO, POLY_ONE, Mon, MON_ONE, mon_make,
    g_var, g_sin, g_cos, g_exp, g_ln, g_fder, g_sder, g_pow,
    poly_const, poly_gen, poly_add, poly_sub, poly_neg, poly_mul, poly_scale,
    poly_pow, poly_gcd, poly_exact_div, poly_primitive, poly_div_mon,
    poly_mon_content, poly_from_terms, poly_gens,
    T_VAR, T_SIN, T_COS, T_EXP, T_LN, T_FDER, T_SDER, T_POW,
)

DEFAULT_SEED = 20177

# the opaque state functions are functions of exactly these two variables
SDER_ARGS = ("rho", "s")


class KernelError(Exception):
    pass


class UnsupportedFormError(KernelError):
    pass


class EvalError(KernelError):
    pass


class PoleError(EvalError):
    def __init__(self, msg, subexpr=None):
        super().__init__(msg)
        self.subexpr = subexpr


class InconclusiveError(KernelError):
    pass


class Expr:
    __slots__ = ("num", "den", "_h", "_k", "_vars")

    def __init__(self, num, den):
        # use _make; raw constructor assumes canonical input
        self.num = num
        self.den = den
        self._h = None
        self._k = None
        self._vars = None

    # -- canonical helpers ---------------------------------------------------

    @property
    def is_structural_zero(self):
        return self.num.is_zero

    @property
    def is_one(self):
        return self.den is POLY_ONE and self.num.t == POLY_ONE.t or \
            (self.den.is_constant and self.num.is_constant and
             not self.num.is_zero and
             self.num.const_value() == self.den.const_value())

    @property
    def is_rational(self):
        return self.num.is_constant and self.den.is_constant

    def rational_value(self):
        if not self.is_rational:
            raise ValueError("not a rational constant: %r" % self)
        if self.num.is_zero:
            return ZERO
        return self.num.const_value() / self.den.const_value()

    def sort_key(self):
        if self._k is None:
            self._k = (self.num.sort_key(), self.den.sort_key())
        return self._k

    def __hash__(self):
        if self._h is None:
            self._h = hash(self.sort_key())
        return self._h

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr):
            if is_rat(other):
                return self == num_(other)
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def variables(self):
        """All variable names, including inside atom arguments/exponents."""
        if self._vars is None:
            s = set()
            for p in (self.num, self.den):
                for m in p.t:
                    for g, _ in m.pairs:
                        _gen_vars(g, s)
            self._vars = frozenset(s)
        return self._vars

    def split_integer(self):
        """self = n + r with n the canonical integer part (for exponents)."""
        if self.num.is_zero:
            return 0, self
        lm, lc = self.den.leading()
        c = self.num.t.get(lm, ZERO) / lc
        n = floor_rat(c)
        if n == 0:
            return 0, self
        return n, self - n

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.num.is_zero:
            return other
        if other.num.is_zero:
            return self
        d1, d2 = self.den, other.den
        if d1 == d2:
            return _make(poly_add(self.num, other.num), d1)
        if not d1.is_constant and not d2.is_constant:
            g = poly_gcd(d1, d2)
            if not g.is_constant:
                q1 = P.poly_exact_div(d1, g)
                q2 = P.poly_exact_div(d2, g)
                return _make(poly_add(poly_mul(self.num, q2),
                                      poly_mul(other.num, q1)),
                             poly_mul(d1, q2))
        return _make(poly_add(poly_mul(self.num, d2),
                              poly_mul(other.num, d1)),
                     poly_mul(d1, d2))

    __radd__ = __add__

    def __neg__(self):
        return Expr(poly_neg(self.num), self.den)

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return _coerce(other) + (-self)

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.num.is_zero or other.num.is_zero:
            return EXPR_ZERO
        n1, d1 = self.num, self.den
        n2, d2 = other.num, other.den
        if not d2.is_constant and not n1.is_constant:
            g = poly_gcd(n1, d2)
            if not g.is_constant:
                n1 = poly_exact_div(n1, g)
                d2 = poly_exact_div(d2, g)
        if not d1.is_constant and not n2.is_constant:
            g = poly_gcd(n2, d1)
            if not g.is_constant:
                n2 = poly_exact_div(n2, g)
                d1 = poly_exact_div(d1, g)
        return _make(poly_mul(n1, n2), poly_mul(d1, d2))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return _coerce(other) * self.inverse()

    def inverse(self):
        if self.num.is_zero:
            raise ZeroDivisionError("division by the zero expression")
        return _make(self.den, self.num)

    def __pow__(self, e):
        if isinstance(e, int):
            return self.pow_int(e)
        return expr_pow(self, _coerce(e))

    def pow_int(self, n):
        if n == 0:
            return EXPR_ONE
        if n < 0:
            return self.inverse().pow_int(-n)
        if n == 1:
            return self
        return _make(poly_pow(self.num, n), poly_pow(self.den, n))

    def __repr__(self):
        try:
            from ..parser import print_expr
            return print_expr(self)
        except Exception:
            return "Expr(%d/%d terms)" % (len(self.num.t), len(self.den.t))

    __str__ = __repr__


def _gen_vars(g, s):
    t = g.tag
    if t == T_VAR:
        s.add(g.a)
    elif t in (T_SIN, T_COS, T_EXP, T_LN):
        s.update(g.a.variables())
    elif t == T_FDER:
        s.update(g.b.variables())
    elif t == T_SDER:
        s.update(SDER_ARGS)
    else:  # POW
        for m in g.a.t:
            for gg, _ in m.pairs:
                _gen_vars(gg, s)
        s.update(g.b.variables())


def _coerce(x):
    if isinstance(x, Expr):
        return x
    if is_rat(x):
        return num_(x)
    return NotImplemented


def _clear_den_units(num, den):
    """Remove exp/pow atoms common to every denominator monomial."""
    changed = True
    while changed and not den.is_constant:
        changed = False
        common = None
        for m in den.t:
            atoms = {g for g, _ in m.pairs if g.tag in (T_EXP, T_POW)}
            common = atoms if common is None else (common & atoms)
            if not common:
                break
        if common:
            for g in sorted(common, key=lambda g: g.sort_key()):
                den = poly_div_mon(den, mon_make([(g, 1)]))
                if g.tag == T_EXP:
                    num = poly_mul(num, poly_gen(g_exp(-g.a)))
                else:
                    n, res = (-g.b).split_integer()
                    if not res.is_structural_zero:
                        num = poly_mul(num, Poly({mon_make([(g_pow(g.a, res), 1)]): ONE}))
                    if n < 0:
                        den = poly_mul(den, poly_pow(g.a, -n))
                    elif n > 0:
                        num = poly_mul(num, poly_pow(g.a, n))
                changed = True
    return num, den


def _den_sin_atoms(den):
    out = set()
    for m in den.t:
        for g, _ in m.pairs:
            if g.tag == T_SIN:
                out.add(g)
    return out


def _clear_den_sin(num, den):
    while True:
        sins = _den_sin_atoms(den)
        if not sins:
            return num, den
        g = min(sins, key=lambda x: x.sort_key())
        a_part = {}
        b_part = {}
        gm = mon_make([(g, 1)])
        for m, c in den.t.items():
            if any(gg is g or gg == g for gg, _ in m.pairs):
                b_part[P.mon_div(m, gm)] = c
            else:
                a_part[m] = c
        A = Poly(a_part)
        B = Poly(b_part)
        # conjugate A - B*sin; product is sin-free after Pythagorean fold
        conj = poly_sub(A, poly_mul(B, Poly({gm: ONE})))
        if conj.is_zero:
            # den is a pure multiple of sin: multiply by sin instead
            conj = Poly({gm: ONE})
        num = poly_mul(num, conj)
        den = poly_mul(den, conj)


def _make(num, den):
    if den.is_zero:
        raise ZeroDivisionError("zero denominator")
    if num.is_zero:
        return EXPR_ZERO
    if den.is_constant:
        c = den.const_value()
        if c != ONE:
            num = poly_scale(num, 1 / c)
        return Expr(num, POLY_ONE)
    num, den = _clear_den_units(num, den)
    num, den = _clear_den_sin(num, den)
    if den.is_constant:
        return _make(num, den)
    mc_n = poly_mon_content(num)
    mc_d = poly_mon_content(den)
    mg = P.mon_gcd(mc_n, mc_d)
    if mg.pairs:
        num = poly_div_mon(num, mg)
        den = poly_div_mon(den, mg)
    g = poly_gcd(num, den)
    if not g.is_constant:
        num = poly_exact_div(num, g)
        den = poly_exact_div(den, g)
    c, den = poly_primitive(den)
    if den.is_constant:
        return _make(poly_scale(num, 1 / c), den)
    num = poly_scale(num, 1 / c)
    return Expr(num, den)


EXPR_ZERO = Expr(POLY_ZERO, POLY_ONE)
EXPR_ONE = Expr(POLY_ONE, POLY_ONE)


# -- constructors ------------------------------------------------------------

def num_(q):
    q = rat(q)
    if not q:
        return EXPR_ZERO
    return Expr(poly_const(q), POLY_ONE)


def var_(name):
    return Expr(poly_gen(g_var(name)), POLY_ONE)


def _atom(gen):
    return Expr(poly_gen(gen), POLY_ONE)


def sin_(a):
    a = _coerce(a)
    if a.is_structural_zero:
        return EXPR_ZERO
    return _atom(g_sin(a))


def cos_(a):
    a = _coerce(a)
    if a.is_structural_zero:
        return EXPR_ONE
    return _atom(g_cos(a))


def tan_(a):
    return sin_(a) / cos_(a)


def cot_(a):
    return cos_(a) / sin_(a)


def exp_(a):
    a = _coerce(a)
    if a.is_structural_zero:
        return EXPR_ONE
    return _atom(g_exp(a))


def ln_(a):
    a = _coerce(a)
    if a.is_structural_zero:
        raise KernelError("ln of the zero expression")
    if a.is_one:
        return EXPR_ZERO
    return _atom(g_ln(a))


def F_(order, a):
    if order not in (0, 1, 2):
        raise UnsupportedFormError("opaque function derivatives limited to F, F', F''")
    return _atom(g_fder(order, _coerce(a)))


def sder_(name, dr=0, ds=0):
    return _atom(g_sder(name, dr, ds))


def _nth_root_exact(n, k):
    """Integer k-th root of n >= 0 or None."""
    if n in (0, 1):
        return n
    r = round(n ** (1.0 / k))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand ** k == n:
            return cand
    return None


def expr_pow(base, expo):
    base = _coerce(base)
    expo = _coerce(expo)
    if expo.is_rational:
        q = expo.rational_value()
        if is_integer(q):
            return base.pow_int(as_int(q))
        if base.is_structural_zero:
            if q > 0:
                return EXPR_ZERO
            raise ZeroDivisionError("0 raised to a negative power")
        if base.is_rational:
            b = base.rational_value()
            k = int(q.denominator)
            pnum = int(q.numerator)
            if b > 0:
                rn = _nth_root_exact(int(b.numerator), k)
                rd = _nth_root_exact(int(b.denominator), k)
                if rn is not None and rd is not None:
                    return num_(rat(rn, rd)).pow_int(pnum)
    else:
        if base.is_structural_zero:
            raise UnsupportedFormError("0 raised to a symbolic power")
    if base.is_one:
        return EXPR_ONE
    out = _poly_base_pow(base.num, expo)
    if not base.den.is_constant or base.den.const_value() != ONE:
        out = out / _poly_base_pow(base.den, expo)
    return out


def _poly_base_pow(p, expo):
    """p**expo for a polynomial base; splits contents and monomial factors."""
    c, prim = poly_primitive(p, positive=False)
    out = EXPR_ONE
    if c != ONE:
        if c < 0:
            # keep the sign on the primitive part; never split (-1)**e
            prim = poly_neg(prim)
            c = -c
        if c != ONE:
            out = out * _rat_pow(c, expo)
    if prim == POLY_ONE:
        return out
    if len(prim.t) == 1:
        (m, co), = prim.t.items()
        if co == ONE:
            for g, e in m.pairs:
                ee = expo * e if e != 1 else expo
                if g.tag == T_POW:
                    out = out * expr_pow(Expr(g.a, POLY_ONE), g.b * ee)
                    continue
                if g.tag == T_EXP:
                    out = out * exp_(g.a * ee)
                    continue
                n, res = ee.split_integer()
                if not res.is_structural_zero:
                    out = out * _atom(g_pow(Poly({mon_make([(g, 1)]): ONE}), res))
                if n:
                    out = out * Expr(poly_gen(g), POLY_ONE).pow_int(n)
            return out
    n, res = expo.split_integer()
    if not res.is_structural_zero:
        out = out * _atom(g_pow(prim, res))
    if n:
        out = out * Expr(prim, POLY_ONE).pow_int(n)
    return out


def _rat_pow(c, expo):
    """c**expo for a positive rational c."""
    n, res = expo.split_integer()
    out = num_(c).pow_int(n) if n else EXPR_ONE
    if not res.is_structural_zero:
        if res.is_rational:
            q = res.rational_value()
            k = int(q.denominator)
            rn = _nth_root_exact(int(c.numerator), k)
            rd = _nth_root_exact(int(c.denominator), k)
            if rn is not None and rd is not None:
                return out * num_(rat(rn, rd)).pow_int(int(q.numerator))
        out = out * _atom(g_pow(poly_const(c), res))
    return out


def normalize(e):
    """Expressions are canonical by construction; exposed for the contract."""
    return _coerce(e)


# -- sums ----------------------------------------------------------------------

def expr_sum(items):
    """Sum of expressions, grouping by denominator to avoid repeated gcds."""
    groups = {}
    order = []
    for e in items:
        if e.is_structural_zero:
            continue
        k = e.den.sort_key()
        got = groups.get(k)
        if got is None:
            groups[k] = [e.den, e.num]
            order.append(k)
        else:
            got[1] = poly_add(got[1], e.num)
    parts = []
    for k in order:
        den, num = groups[k]
        if not num.is_zero:
            parts.append(_make(num, den))
    if not parts:
        return EXPR_ZERO
    while len(parts) > 1:
        nxt = []
        for i in range(0, len(parts) - 1, 2):
            nxt.append(parts[i] + parts[i + 1])
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


# -- differentiation ---------------------------------------------------------

def differentiate(e, v):
    e = _coerce(e)
    if v not in e.variables():
        return EXPR_ZERO
    return gradient(e, (v,)).get(v, EXPR_ZERO)


def gradient(e, wanted=None):
    """All partial derivatives in one pass: {var: d e / d var}.

    wanted restricts the variables (None = every variable of e).  Atom
    arguments are differentiated once and their chain factors distributed.
    """
    e = _coerce(e)
    if wanted is not None:
        wanted = frozenset(wanted) & e.variables()
        if not wanted:
            return {}
    ng = _poly_grad(e.num, wanted)
    if e.den is POLY_ONE or (e.den.is_constant and e.den.const_value() == ONE):
        return ng
    dg = _poly_grad(e.den, wanted)
    den_e = Expr(e.den, POLY_ONE)
    num_e = Expr(e.num, POLY_ONE)
    out = {}
    den2 = None
    for v in set(ng) | set(dg):
        a = ng.get(v)
        b = dg.get(v)
        if b is None:
            out[v] = a / den_e
        else:
            if den2 is None:
                den2 = den_e * den_e
            if a is None:
                out[v] = -(num_e * b) / den2
            else:
                out[v] = a / den_e - num_e * b / den2
    return out


def _poly_grad(p, wanted):
    plain = {}   # var -> {Mon: coeff}
    chains = {}  # var -> [Expr]
    arg_grads = {}
    for m, c in p.t.items():
        for i, (g, k) in enumerate(m.pairs):
            t = g.tag
            if t == T_VAR:
                if wanted is not None and g.a not in wanted:
                    continue
                rest = m.pairs[:i] + ((g, k - 1),) + m.pairs[i + 1:]
                mon = mon_make(rest)
                slot = plain.setdefault(g.a, {})
                prev = slot.get(mon)
                val = c * k if prev is None else prev + c * k
                if val:
                    slot[mon] = val
                elif prev is not None:
                    del slot[mon]
                continue
            contribs = _gen_grad(g, wanted, arg_grads)
            if not contribs:
                continue
            rest = m.pairs[:i] + ((g, k - 1),) + m.pairs[i + 1:]
            base = Expr(Poly({mon_make(rest): c * k}), POLY_ONE)
            for v, chain in contribs.items():
                chains.setdefault(v, []).append(base * chain)
    out = {}
    for v, terms in plain.items():
        out[v] = Expr(Poly(terms), POLY_ONE)
    for v, items in chains.items():
        extra = expr_sum(items)
        got = out.get(v)
        out[v] = extra if got is None else got + extra
    return {v: e for v, e in out.items() if not e.is_structural_zero}


def _arg_grad(a, wanted, arg_grads):
    key = (a, wanted)
    got = arg_grads.get(key)
    if got is None:
        got = gradient(a, wanted)
        arg_grads[key] = got
    return got


def _gen_grad(g, wanted, arg_grads):
    """{var: d gen / d var} as chain factors (Expr)."""
    t = g.tag
    if t == T_SIN:
        ag = _arg_grad(g.a, wanted, arg_grads)
        if not ag:
            return {}
        f = cos_(g.a)
        return {v: f * d for v, d in ag.items()}
    if t == T_COS:
        ag = _arg_grad(g.a, wanted, arg_grads)
        if not ag:
            return {}
        f = -sin_(g.a)
        return {v: f * d for v, d in ag.items()}
    if t == T_EXP:
        ag = _arg_grad(g.a, wanted, arg_grads)
        if not ag:
            return {}
        f = _atom(g)
        return {v: f * d for v, d in ag.items()}
    if t == T_LN:
        ag = _arg_grad(g.a, wanted, arg_grads)
        if not ag:
            return {}
        return {v: d / g.a for v, d in ag.items()}
    if t == T_FDER:
        ag = _arg_grad(g.b, wanted, arg_grads)
        if not ag:
            return {}
        if g.a >= 2:
            raise UnsupportedFormError(
                "derivative of F'' requested: opaque alphabet stops at F''")
        f = _atom(g_fder(g.a + 1, g.b))
        return {v: f * d for v, d in ag.items()}
    if t == T_SDER:
        out = {}
        if wanted is None or SDER_ARGS[0] in wanted:
            out[SDER_ARGS[0]] = _atom(g_sder(g.a, g.b + 1, g.c))
        if wanted is None or SDER_ARGS[1] in wanted:
            out[SDER_ARGS[1]] = _atom(g_sder(g.a, g.b, g.c + 1))
        return out
    # T_POW
    base_e = Expr(g.a, POLY_ONE)
    bg = _arg_grad(base_e, wanted, arg_grads)
    eg = _arg_grad(g.b, wanted, arg_grads)
    if bg and eg:
        both = set(bg) & set(eg)
        if both:
            raise UnsupportedFormError(
                "power with base and exponent both depending on %s" % sorted(both))
    out = {}
    if bg:
        f = g.b * expr_pow(base_e, g.b - 1)
        for v, d in bg.items():
            out[v] = f * d
    if eg:
        f = _atom(g) * ln_(base_e)
        for v, d in eg.items():
            out[v] = f * d
    return out


# -- substitution ------------------------------------------------------------

def substitute(e, mapping):
    """Replace named variables by expressions (atoms rebuilt recursively)."""
    e = _coerce(e)
    mapping = {k: _coerce(v) for k, v in mapping.items()}
    if not (set(mapping) & set(e.variables())):
        return e
    memo = {}
    return _subs_expr(e, mapping, memo)


def _subs_expr(e, mp, memo):
    key = e
    got = memo.get(key)
    if got is not None:
        return got
    if not (set(mp) & set(e.variables())):
        memo[key] = e
        return e
    n = _subs_poly(e.num, mp, memo)
    d = _subs_poly(e.den, mp, memo)
    out = n / d
    memo[key] = out
    return out


def _subs_poly(p, mp, memo):
    plain = {}
    terms = []
    fcache = {}
    for m, c in p.t.items():
        untouched = []
        factors = []
        for g, k in m.pairs:
            sub = _subs_gen(g, mp, memo)
            if sub is None:
                untouched.append((g, k))
            else:
                key = (g, k)
                f = fcache.get(key)
                if f is None:
                    f = sub.pow_int(k) if k != 1 else sub
                    fcache[key] = f
                factors.append(f)
        if not factors:
            mon = Mon(m.pairs)
            prev = plain.get(mon)
            val = c if prev is None else prev + c
            if val:
                plain[mon] = val
            elif prev is not None:
                del plain[mon]
            continue
        term = Expr(Poly({mon_make(untouched): c}), POLY_ONE)
        for f in factors:
            term = term * f
        terms.append(term)
    if plain:
        terms.append(Expr(Poly(plain), POLY_ONE))
    return expr_sum(terms)


def _subs_gen(g, mp, memo):
    """Substituted generator as an Expr, or None when untouched."""
    t = g.tag
    if t == T_VAR:
        return mp.get(g.a)
    if t == T_SDER:
        return None
    if t in (T_SIN, T_COS, T_EXP, T_LN):
        a = g.a
        if not (set(mp) & set(a.variables())):
            return None
        na = _subs_expr(a, mp, memo)
        return {T_SIN: sin_, T_COS: cos_, T_EXP: exp_, T_LN: ln_}[t](na)
    if t == T_FDER:
        a = g.b
        if not (set(mp) & set(a.variables())):
            return None
        return F_(g.a, _subs_expr(a, mp, memo))
    # T_POW
    base_e = Expr(g.a, POLY_ONE)
    touched_base = bool(set(mp) & set(base_e.variables()))
    touched_expo = bool(set(mp) & set(g.b.variables()))
    if not touched_base and not touched_expo:
        return None
    nb = _subs_expr(base_e, mp, memo) if touched_base else base_e
    ne = _subs_expr(g.b, mp, memo) if touched_expo else g.b
    return expr_pow(nb, ne)


# -- evaluation --------------------------------------------------------------

class SamplePolicy:
    """Deterministic transcendental-atom sampling.

    Each distinct atom is mapped to a fresh nonzero rational derived from
    (seed, atom key); sin/cos pairs of one angle share a tan-half-angle
    parameter tau so sin^2+cos^2=1 holds exactly.  Explicit values can be
    injected via `atom_values` (keyed by generator) and `tau` (keyed by the
    angle expression).
    """

    def __init__(self, seed=DEFAULT_SEED, atom_values=None, tau=None):
        self.seed = seed
        self.values = dict(atom_values or {})
        self.tau = dict(tau or {})

    def _fresh(self, tag, key, lo=-40, hi=40, den_max=12):
        h = hashlib.blake2b(repr((self.seed, tag, key)).encode(), digest_size=12).digest()
        n = int.from_bytes(h, "big")
        num = lo + (n % (hi - lo + 1))
        n //= (hi - lo + 1)
        if num == 0:
            num = 1 + (n % 7)
        den = 1 + (n % den_max)
        return rat(num, den)

    def value(self, gen):
        got = self.values.get(gen)
        if got is None:
            got = self._fresh(gen.tag, gen.sort_key())
            self.values[gen] = got
        return got

    def tau_of(self, angle):
        got = self.tau.get(angle)
        if got is None:
            got = self._fresh("tau", angle.sort_key(), lo=-9, hi=9, den_max=7)
            if got in (rat(0),):
                got = rat(1, 3)
            self.tau[angle] = got
        return got

    def sincos(self, angle):
        t = self.tau_of(angle)
        d = 1 + t * t
        return (2 * t) / d, (1 - t * t) / d


def _gen_value(g, assign, policy):
    t = g.tag
    if t == T_VAR:
        try:
            return assign[g.a]
        except KeyError:
            raise EvalError("variable %r has no assigned value" % g.a) from None
    if t == T_SIN:
        return policy.sincos(g.a)[0]
    if t == T_COS:
        return policy.sincos(g.a)[1]
    return policy.value(g)


def _eval_poly(p, assign, policy):
    total = ZERO
    for m, c in p.t.items():
        v = c
        for g, e in m.pairs:
            gv = _gen_value(g, assign, policy)
            v = v * (gv ** e)
        total += v
    return total


def eval_at(e, assign, policy=None, seed=DEFAULT_SEED):
    """Exact rational evaluation under the transcendental sampling policy."""
    e = _coerce(e)
    if policy is None:
        policy = SamplePolicy(seed)
    assign = {k: rat(v) for k, v in assign.items()}
    d = _eval_poly(e.den, assign, policy)
    if d == 0:
        raise PoleError("denominator vanishes at the assignment", subexpr=Expr(e.den, POLY_ONE))
    return _eval_poly(e.num, assign, policy) / d


def _gen_value_grad(g, assign, policy, wrt):
    t = g.tag
    if t == T_VAR:
        v = _gen_value(g, assign, policy)
        return v, ({g.a: ONE} if g.a in wrt else {})
    if t in (T_SIN, T_COS):
        sv, cv = policy.sincos(g.a)
        av, ag = _eval_expr_grad(g.a, assign, policy, wrt)
        if t == T_SIN:
            return sv, {k: cv * w for k, w in ag.items()}
        return cv, {k: -sv * w for k, w in ag.items()}
    if t == T_EXP:
        v = policy.value(g)
        av, ag = _eval_expr_grad(g.a, assign, policy, wrt)
        return v, {k: v * w for k, w in ag.items()}
    if t == T_LN:
        v = policy.value(g)
        av, ag = _eval_expr_grad(g.a, assign, policy, wrt)
        if av == 0:
            raise PoleError("ln argument vanishes at the assignment")
        return v, {k: w / av for k, w in ag.items()}
    if t == T_FDER:
        v = policy.value(g)
        av, ag = _eval_expr_grad(g.b, assign, policy, wrt)
        if ag:
            dv = policy.value(g_fder(g.a + 1, g.b))
            return v, {k: dv * w for k, w in ag.items()}
        return v, {}
    if t == T_SDER:
        v = policy.value(g)
        grad = {}
        if SDER_ARGS[0] in wrt:
            grad[SDER_ARGS[0]] = policy.value(g_sder(g.a, g.b + 1, g.c))
        if SDER_ARGS[1] in wrt:
            grad[SDER_ARGS[1]] = policy.value(g_sder(g.a, g.b, g.c + 1))
        return v, grad
    # T_POW
    if set(g.b.variables()) & wrt:
        raise EvalError("gradient through a power with varying exponent")
    v = policy.value(g)
    bv, bg = _eval_poly_grad(g.a, assign, policy, wrt)
    if not bg:
        return v, {}
    if bv == 0:
        raise PoleError("power base vanishes at the assignment")
    ev = eval_at(g.b, assign, policy)
    scale = v * ev / bv
    return v, {k: scale * w for k, w in bg.items()}


def _eval_poly_grad(p, assign, policy, wrt):
    total = ZERO
    grad = {}
    for m, c in p.t.items():
        vals = []
        grads = []
        for g, e in m.pairs:
            gv, gg = _gen_value_grad(g, assign, policy, wrt)
            vals.append((gv, e))
            grads.append(gg)
        v = c
        for gv, e in vals:
            v = v * gv ** e
        total += v
        for i, gg in enumerate(grads):
            if not gg:
                continue
            prod = c
            for j, (gv, e) in enumerate(vals):
                if j == i:
                    prod = prod * e * gv ** (e - 1)
                else:
                    prod = prod * gv ** e
            for k, w in gg.items():
                grad[k] = grad.get(k, ZERO) + prod * w
    return total, grad


def _eval_expr_grad(e, assign, policy, wrt):
    nv, ng = _eval_poly_grad(e.num, assign, policy, wrt)
    if e.den is POLY_ONE:
        return nv, ng
    dv, dg = _eval_poly_grad(e.den, assign, policy, wrt)
    if dv == 0:
        raise PoleError("denominator vanishes at the assignment",
                        subexpr=Expr(e.den, POLY_ONE))
    v = nv / dv
    grad = {}
    for k in set(ng) | set(dg):
        grad[k] = (ng.get(k, ZERO) - v * dg.get(k, ZERO)) / dv
    return v, grad


def eval_with_gradient(e, assign, wrt, policy=None, seed=DEFAULT_SEED):
    """(value, {var: d value / d var}) at an exact rational point."""
    e = _coerce(e)
    if policy is None:
        policy = SamplePolicy(seed)
    assign = {k: rat(v) for k, v in assign.items()}
    return _eval_expr_grad(e, assign, policy, frozenset(wrt))


# -- zero decision -----------------------------------------------------------

ZERO_CERTIFIED = "zero-certified"
ZERO_PROBABLE = "zero-probable"
NONZERO = "nonzero"


class ZeroDecision:
    __slots__ = ("kind", "witness")

    def __init__(self, kind, witness=None):
        self.kind = kind
        self.witness = witness

    @property
    def certified(self):
        return self.kind == ZERO_CERTIFIED

    @property
    def is_zero(self):
        return self.kind in (ZERO_CERTIFIED, ZERO_PROBABLE)

    def __repr__(self):
        if self.witness:
            return "ZeroDecision(%s, witness=%r)" % (self.kind, self.witness)
        return "ZeroDecision(%s)" % self.kind

    def __eq__(self, other):
        if isinstance(other, str):
            return self.kind == other
        return isinstance(other, ZeroDecision) and self.kind == other.kind


def is_zero(e, samples=16, seed=DEFAULT_SEED):
    """Two-tier zero test: canonical form first, rational sampling second."""
    e = _coerce(e)
    if e.is_structural_zero:
        return ZeroDecision(ZERO_CERTIFIED)
    names = sorted(e.variables())
    attempts = 0
    budget = 8 * samples + 8
    done = 0
    while done < samples:
        if attempts >= budget:
            raise InconclusiveError(
                "could not find %d pole-free sample points" % samples)
        rng = random.Random((seed, attempts, "is_zero"))
        assign = {n: rat(rng.randint(-60, 60), rng.randint(1, 16)) for n in names}
        policy = SamplePolicy(seed=(seed, attempts))
        attempts += 1
        try:
            v = eval_at(e, assign, policy)
        except PoleError:
            continue
        except ZeroDivisionError:
            continue
        if v != 0:
            return ZeroDecision(NONZERO, witness=assign)
        done += 1
    return ZeroDecision(ZERO_PROBABLE)


# -- float evaluation (testing aid) -------------------------------------------

def eval_float(e, assign):
    """Plain floating-point evaluation; the opaque F is taken to be exp."""
    import math
    e = _coerce(e)

    def gval(g):
        t = g.tag
        if t == T_VAR:
            return float(assign[g.a])
        if t == T_SIN:
            return math.sin(fexpr(g.a))
        if t == T_COS:
            return math.cos(fexpr(g.a))
        if t == T_EXP:
            return math.exp(fexpr(g.a))
        if t == T_LN:
            return math.log(fexpr(g.a))
        if t == T_FDER:
            return math.exp(fexpr(g.b))
        if t == T_SDER:
            raise EvalError("state-function atoms have no float value")
        return fpoly(g.a) ** fexpr(g.b)

    def fpoly(p):
        return sum(float(c) * _prodf(m) for m, c in p.t.items())

    def _prodf(m):
        v = 1.0
        for g, e in m.pairs:
            v *= gval(g) ** e
        return v

    def fexpr(x):
        return fpoly(x.num) / fpoly(x.den)

    return fexpr(e)
