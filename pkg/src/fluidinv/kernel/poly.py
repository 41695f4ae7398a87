"""Sparse multivariate polynomials over an atom alphabet.

Generators are named variables plus transcendental atoms: sin/cos/exp/ln of
a sub-expression, formal derivatives F, F', F'' of one opaque function,
opaque state-function derivatives (two fixed arguments rho, s), and power
atoms base^e with a non-integer or symbolic exponent.

Normal form kept by construction:
  * sin(a)-degree <= 1 per angle (sin^2 rewritten through 1 - cos^2),
  * at most one exp atom per monomial (arguments added on multiplication),
  * power atoms with a common base merged, exponents canonicalized so the
    integer part lives in ordinary polynomial degrees.

Atom arguments/exponents are Expr objects (see expr.py); this module only
relies on their arithmetic, hashing and sort keys, so there is no import
cycle.
"""

from .rat import rat, ZERO, ONE, is_integer, as_int

# generator kind tags (also the major sort key)
T_VAR, T_SIN, T_COS, T_EXP, T_LN, T_FDER, T_SDER, T_POW = range(8)

_intern = {}


def _interned(key, make):
    g = _intern.get(key)
    if g is None:
        g = make()
        g.sort_key()
        g = _intern.setdefault(key, g)
    return g


class Gen:
    """A single generator (variable or atom)."""

    __slots__ = ("tag", "a", "b", "c", "k", "_h")

    def __init__(self, tag, a=None, b=None, c=None):
        self.tag = tag
        self.a = a
        self.b = b
        self.c = c
        self.k = None
        self._h = None

    def sort_key(self):
        if self.k is None:
            t = self.tag
            if t == T_VAR:
                self.k = (t, self.a)
            elif t in (T_SIN, T_COS, T_EXP, T_LN):
                self.k = (t, self.a.sort_key())
            elif t == T_FDER:
                self.k = (t, self.a, self.b.sort_key())
            elif t == T_SDER:
                self.k = (t, self.a, self.b, self.c)
            else:
                self.k = (t, self.a.sort_key(), self.b.sort_key())
        return self.k

    def __hash__(self):
        if self._h is None:
            self._h = hash(self.sort_key())
        return self._h

    def __eq__(self, other):
        return self is other or (isinstance(other, Gen) and self.sort_key() == other.sort_key())

    def __repr__(self):
        names = {T_VAR: "var", T_SIN: "sin", T_COS: "cos", T_EXP: "exp",
                 T_LN: "ln", T_FDER: "F", T_SDER: "sder", T_POW: "pow"}
        return "<%s %r>" % (names[self.tag], self.a)


def g_var(name):
    return _interned((T_VAR, name), lambda: Gen(T_VAR, name))


def g_sin(arg):
    return _interned((T_SIN, arg), lambda: Gen(T_SIN, arg))


def g_cos(arg):
    return _interned((T_COS, arg), lambda: Gen(T_COS, arg))


def g_exp(arg):
    return _interned((T_EXP, arg), lambda: Gen(T_EXP, arg))


def g_ln(arg):
    return _interned((T_LN, arg), lambda: Gen(T_LN, arg))


def g_fder(order, arg):
    return _interned((T_FDER, order, arg), lambda: Gen(T_FDER, order, arg))


def g_sder(name, dr, ds):
    return _interned((T_SDER, name, dr, ds), lambda: Gen(T_SDER, name, dr, ds))


def g_pow(base_poly, expo):
    # base stored as a Poly, exponent as an (integer-stripped) Expr
    return _interned((T_POW, base_poly, expo), lambda: Gen(T_POW, base_poly, expo))


class Mon:
    """Monomial: sorted tuple of (generator, positive int exponent)."""

    __slots__ = ("pairs", "_h", "_k", "deg")

    def __init__(self, pairs):
        self.pairs = pairs
        self._h = None
        self._k = None
        self.deg = sum(e for _, e in pairs)

    def sort_key(self):
        # graded lex; priority to the largest generator key so that plain
        # tuple comparison is a genuine (multiplicative) monomial order
        if self._k is None:
            self._k = (self.deg,
                       tuple(sorted(((g.sort_key(), e) for g, e in self.pairs),
                                    reverse=True)))
        return self._k

    def __hash__(self):
        # generators are interned, so identity hashing is sound per process
        if self._h is None:
            self._h = hash(tuple((id(g), e) for g, e in self.pairs))
        return self._h

    def __eq__(self, other):
        if self is other:
            return True
        a, b = self.pairs, other.pairs
        if len(a) != len(b):
            return False
        for (x, e), (y, f) in zip(a, b):
            if x is not y or e != f:
                return False
        return True

    def __repr__(self):
        return "Mon(%s)" % (self.pairs,)


MON_ONE = Mon(())


def mon_make(pairs):
    pairs = tuple(sorted(((g, e) for g, e in pairs if e), key=lambda p: p[0].sort_key()))
    return Mon(pairs)


def _merge_pairs(p1, p2):
    """Two-pointer merge of sorted pair tuples; exponents added."""
    out = []
    i = j = 0
    n1, n2 = len(p1), len(p2)
    while i < n1 and j < n2:
        g1, e1 = p1[i]
        g2, e2 = p2[j]
        if g1 is g2:
            out.append((g1, e1 + e2))
            i += 1
            j += 1
        elif g1.k < g2.k:
            out.append((g1, e1))
            i += 1
        else:
            out.append((g2, e2))
            j += 1
    out.extend(p1[i:])
    out.extend(p2[j:])
    return out


def _needs_fold(pairs):
    seen_exp = False
    pow_bases = set()
    for g, e in pairs:
        t = g.tag
        if t == T_SIN and e >= 2:
            return True
        if t == T_EXP:
            if seen_exp or e != 1:
                return True
            seen_exp = True
        elif t == T_POW:
            bk = g.a.sort_key()
            if e != 1 or bk in pow_bases:
                return True
            pow_bases.add(bk)
    return False


def mon_mul(m1, m2):
    """Product of two normal-form monomials -> (Mon, None) or (None, Poly)."""
    merged = _merge_pairs(m1.pairs, m2.pairs)
    if not _needs_fold(merged):
        return Mon(tuple(merged)), None
    return None, mon_normal(merged)


def mon_normal(pairs):
    """Fold a raw pair list into a normal-form Poly (coefficient 1)."""
    plain = []
    exp_arg = None
    pows = {}
    sin_over = []
    for g, e in pairs:
        t = g.tag
        if t == T_EXP:
            a = g.a if e == 1 else g.a * e
            exp_arg = a if exp_arg is None else exp_arg + a
        elif t == T_POW:
            key = g.a.sort_key()
            base, tot = pows.get(key, (g.a, None))
            contrib = g.b if e == 1 else g.b * e
            pows[key] = (base, contrib if tot is None else tot + contrib)
        elif t == T_SIN and e >= 2:
            sin_over.append((g, e))
        else:
            plain.append((g, e))

    result = poly_const(ONE)
    if exp_arg is not None and not exp_arg.is_structural_zero:
        plain.append((g_exp(exp_arg), 1))
    for base, tot in pows.values():
        n, res = tot.split_integer()
        if not res.is_structural_zero:
            plain.append((g_pow(base, res), 1))
        if n:
            if n < 0:
                raise AssertionError("negative integer part in monomial fold")
            result = poly_mul(result, poly_pow(base, n))
    for g, e in sin_over:
        q, r = divmod(e, 2)
        if r:
            plain.append((g, 1))
        c = g_cos(g.a)
        one_minus_cos2 = poly_from_terms([(MON_ONE, ONE), (mon_make([(c, 2)]), -ONE)])
        result = poly_mul(result, poly_pow(one_minus_cos2, q))
    return poly_mul(result, poly_from_terms([(mon_make(plain), ONE)]))


class Poly:
    """Immutable sparse polynomial: dict Mon -> nonzero rational."""

    __slots__ = ("t", "_h", "_k", "_lm")

    def __init__(self, terms):
        self.t = terms
        self._h = None
        self._k = None
        self._lm = None

    def sort_key(self):
        if self._k is None:
            self._k = tuple(sorted((m.sort_key(), (int(c.numerator), int(c.denominator)))
                                   for m, c in self.t.items()))
        return self._k

    def __hash__(self):
        if self._h is None:
            self._h = hash(self.sort_key())
        return self._h

    def __eq__(self, other):
        return self is other or (isinstance(other, Poly) and self.t == other.t)

    @property
    def is_zero(self):
        return not self.t

    @property
    def is_constant(self):
        return not self.t or (len(self.t) == 1 and MON_ONE in self.t)

    def const_value(self):
        if not self.t:
            return ZERO
        return self.t[MON_ONE]

    def leading(self):
        """(monomial, coeff) maximal in graded-lex order."""
        if self._lm is None:
            m = max(self.t, key=Mon.sort_key)
            self._lm = (m, self.t[m])
        return self._lm

    def __repr__(self):
        return "Poly(%d terms)" % len(self.t)


POLY_ZERO = Poly({})
POLY_ONE = Poly({MON_ONE: ONE})


def poly_const(c):
    c = rat(c)
    return Poly({MON_ONE: c}) if c else POLY_ZERO


def poly_from_terms(terms):
    acc = {}
    for m, c in terms:
        if not c:
            continue
        prev = acc.get(m)
        s = c if prev is None else prev + c
        if s:
            acc[m] = s
        elif prev is not None:
            del acc[m]
    return Poly(acc)


def poly_gen(gen, exp=1):
    if gen.tag in (T_SIN,) and exp >= 2 or gen.tag in (T_EXP, T_POW) and exp != 1:
        return mon_normal([(gen, exp)])
    return Poly({mon_make([(gen, exp)]): ONE})


def poly_add(a, b):
    if a.is_zero:
        return b
    if b.is_zero:
        return a
    t = dict(a.t)
    for m, c in b.t.items():
        prev = t.get(m)
        s = c if prev is None else prev + c
        if s:
            t[m] = s
        elif prev is not None:
            del t[m]
    return Poly(t)


def poly_neg(a):
    return Poly({m: -c for m, c in a.t.items()})


def poly_sub(a, b):
    if b.is_zero:
        return a
    t = dict(a.t)
    for m, c in b.t.items():
        prev = t.get(m)
        s = -c if prev is None else prev - c
        if s:
            t[m] = s
        elif prev is not None:
            del t[m]
    return Poly(t)


def poly_scale(a, c):
    c = rat(c)
    if not c:
        return POLY_ZERO
    if c == ONE:
        return a
    return Poly({m: c * co for m, co in a.t.items()})


def poly_mul(a, b):
    if a.is_zero or b.is_zero:
        return POLY_ZERO
    if a.is_constant:
        return poly_scale(b, a.const_value())
    if b.is_constant:
        return poly_scale(a, b.const_value())
    acc = {}
    extras = []
    for m1, c1 in a.t.items():
        for m2, c2 in b.t.items():
            m, special = mon_mul(m1, m2)
            if m is not None:
                c = c1 * c2
                prev = acc.get(m)
                s = c if prev is None else prev + c
                if s:
                    acc[m] = s
                elif prev is not None:
                    del acc[m]
            else:
                extras.append(poly_scale(special, c1 * c2))
    out = Poly(acc)
    for p in extras:
        out = poly_add(out, p)
    return out


def poly_pow(a, n):
    if n < 0:
        raise ValueError("poly_pow wants n >= 0")
    result = POLY_ONE
    base = a
    while n:
        if n & 1:
            result = poly_mul(result, base)
        base = poly_mul(base, base) if n > 1 else base
        n >>= 1
    return result


# ---------------------------------------------------------------------------
# plain-ring helpers (atoms treated as independent variables, no folding);
# used by gcd / exact division where inputs are already in normal form.

class _GcdAbort(Exception):
    pass


_gcd_budget = [0]  # remaining pair-operations; 0 = unguarded


def _charge(n):
    if _gcd_budget[0]:
        _gcd_budget[0] -= n
        if _gcd_budget[0] <= 0:
            _gcd_budget[0] = -1
            raise _GcdAbort


def _plain_mon_mul(m1, m2):
    return Mon(tuple(_merge_pairs(m1.pairs, m2.pairs)))


def _plain_mul(a, b):
    _charge(len(a.t) * len(b.t))
    acc = {}
    for m1, c1 in a.t.items():
        for m2, c2 in b.t.items():
            m = _plain_mon_mul(m1, m2)
            c = c1 * c2
            prev = acc.get(m)
            s = c if prev is None else prev + c
            if s:
                acc[m] = s
            elif prev is not None:
                del acc[m]
    return Poly(acc)


def mon_div(m1, m2):
    """m1 / m2 or None if not divisible."""
    if not m2.pairs:
        return m1
    rem = dict()
    for g, e in m1.pairs:
        rem[g] = e
    out = []
    for g, e in m2.pairs:
        have = rem.get(g, 0)
        if have < e:
            return None
        if have > e:
            rem[g] = have - e
        else:
            del rem[g]
    for g, e in m1.pairs:
        if g in rem:
            out.append((g, rem[g]))
    return Mon(tuple(out))


def mon_gcd(m1, m2):
    e2 = {g: e for g, e in m2.pairs}
    out = []
    for g, e in m1.pairs:
        o = e2.get(g)
        if o:
            out.append((g, min(e, o)))
    return Mon(tuple(out))


def poly_mon_content(p):
    it = iter(p.t)
    try:
        m = next(it)
    except StopIteration:
        return MON_ONE
    for other in it:
        m = mon_gcd(m, other)
        if not m.pairs:
            return MON_ONE
    return m


def poly_div_mon(p, m):
    if not m.pairs:
        return p
    t = {}
    for mo, c in p.t.items():
        q = mon_div(mo, m)
        if q is None:
            raise ValueError("monomial does not divide all terms")
        t[q] = c
    return Poly(t)


def poly_rat_content(p):
    """Positive rational c with p/c having coprime integer coefficients."""
    from .rat import gcd_int
    num_g = 0
    den_l = 1
    for c in p.t.values():
        num_g = gcd_int(num_g, int(c.numerator))
        d = int(c.denominator)
        den_l = den_l * d // gcd_int(den_l, d)
    if num_g == 0:
        return ONE
    return rat(num_g, den_l)


def poly_primitive(p, positive=True):
    """(content, primitive part); content carries the leading sign if asked."""
    if p.is_zero:
        return ONE, p
    c = poly_rat_content(p)
    if positive and p.leading()[1] < 0:
        c = -c
    if c == ONE:
        return c, p
    inv = 1 / c
    return c, Poly({m: co * inv for m, co in p.t.items()})


def poly_exact_div(a, b):
    """a / b in the plain ring, or None."""
    if b.is_zero:
        raise ZeroDivisionError("polynomial division by zero")
    if a.is_zero:
        return POLY_ZERO
    if b.is_constant:
        return poly_scale(a, 1 / b.const_value())
    bm, bc = b.leading()
    q = {}
    r = dict(a.t)
    guard = len(a.t) * (len(b.t) + 2) + 16
    while r:
        rm = max(r, key=Mon.sort_key)
        m = mon_div(rm, bm)
        if m is None:
            return None
        c = r[rm] / bc
        q[m] = c
        for m2, c2 in b.t.items():
            mm = _plain_mon_mul(m, m2)
            prev = r.get(mm)
            s = -c * c2 if prev is None else prev - c * c2
            if s:
                r[mm] = s
            elif prev is not None:
                del r[mm]
        guard -= 1
        if guard < 0:
            return None
    return Poly(q)


def poly_deg_in(p, gen):
    d = 0
    for m in p.t:
        for g, e in m.pairs:
            if g is gen or g == gen:
                if e > d:
                    d = e
                break
    return d


def _as_uni(p, gen):
    """View p as univariate in gen: dict degree -> Poly coefficient."""
    out = {}
    for m, c in p.t.items():
        d = 0
        rest = []
        for g, e in m.pairs:
            if g is gen or g == gen:
                d = e
            else:
                rest.append((g, e))
        out.setdefault(d, {})[Mon(tuple(rest))] = c
    return {d: Poly(t) for d, t in out.items()}


def _from_uni(uni, gen):
    t = {}
    for d, coef in uni.items():
        for m, c in coef.t.items():
            if d:
                mm = Mon(tuple(_merge_pairs(m.pairs, ((gen, d),))))
            else:
                mm = m
            t[mm] = c
    return Poly(t)


def _gens_of(p):
    s = {}
    for m in p.t:
        for g, e in m.pairs:
            d = s.get(g, 0)
            if e > d:
                s[g] = e
    return s


def _prem(a, b, gen):
    """Pseudo-remainder of a by b w.r.t. gen (plain ring)."""
    ua = _as_uni(a, gen)
    ub = _as_uni(b, gen)
    db = max(ub)
    lcb = ub[db]
    r = ua
    dr = max(r) if r else -1
    guard = 4 * (dr + 2)
    while r and dr >= db:
        lcr = r[dr]
        # r := lcb*r - lcr*x^(dr-db)*b
        nr = {}
        for d, c in r.items():
            nr[d] = _plain_mul(lcb, c)
        for d, c in ub.items():
            dd = d + dr - db
            prod = _plain_mul(lcr, c)
            nr[dd] = poly_sub(nr.get(dd, POLY_ZERO), prod)
        r = {d: c for d, c in nr.items() if not c.is_zero}
        dr = max(r) if r else -1
        guard -= 1
        if guard < 0:
            raise RuntimeError("pseudo-division did not terminate")
    return _from_uni(r, gen)


def _uni_content(p, gen):
    u = _as_uni(p, gen)
    g = POLY_ZERO
    for c in u.values():
        g = poly_gcd(g, c)
        if g.is_constant and not g.is_zero:
            return POLY_ONE
    return g


# work budget for one top-level gcd attempt (pair operations); pathological
# PRS runs abort and fall back to divisibility probes
GCD_WORK_BUDGET = 400_000
GCD_PROBE_LIMIT = 60
# inputs larger than this skip the PRS attempt and go straight to probes
GCD_PRS_SIZE = 90


def poly_gcd(a, b):
    """GCD in the plain ring; primitive with positive leading coefficient.

    A full subresultant-style computation is attempted under a work budget;
    on blowup only monomial content and exact-divisibility probes are used,
    so the result is always a genuine common divisor (possibly partial).
    """
    if a.is_zero:
        return poly_primitive(b)[1]
    if b.is_zero:
        return poly_primitive(a)[1]
    ma = poly_mon_content(a)
    mb = poly_mon_content(b)
    mg = mon_gcd(ma, mb)
    a = poly_div_mon(a, ma)
    b = poly_div_mon(b, mb)
    _, a = poly_primitive(a)
    _, b = poly_primitive(b)
    gm = Poly({mg: ONE})
    if a.is_constant or b.is_constant:
        return gm
    if a == b:
        return _plain_mul(gm, a)
    if len(a.t) == 1 or len(b.t) == 1:
        # after content extraction a pure monomial shares nothing more
        return gm
    if len(a.t) < len(b.t):
        a, b = b, a
    # quick exact-divisibility probe (covers the structured denominators)
    if poly_exact_div(a, b) is not None:
        return _plain_mul(gm, b)
    g = None
    if len(a.t) <= GCD_PRS_SIZE:
        outermost = _gcd_budget[0] == 0
        if outermost:
            _gcd_budget[0] = GCD_WORK_BUDGET
        try:
            g = _gcd_prs(a, b)
        except _GcdAbort:
            if not outermost:
                raise
            g = None
        finally:
            if outermost:
                _gcd_budget[0] = 0
    if g is None:
        if len(b.t) <= GCD_PROBE_LIMIT:
            g = _probe_small_divisors(a, b)
        if g is None:
            return gm
    out = _plain_mul(gm, g)
    _, out = poly_primitive(out)
    return out


def _gcd_prs(a, b):
    ga = _gens_of(a)
    gb = _gens_of(b)
    common = [g for g in ga if g in gb]
    if not common:
        return POLY_ONE

    def var_cost(g):
        # prefer variables where the smaller poly has near-constant coeffs
        u = _as_uni(b, g)
        lc = u[max(u)]
        return (len(lc.t), min(ga[g], gb[g]), g.sort_key())

    gen = min(common, key=var_cost)
    if ga[gen] < gb[gen]:
        a, b = b, a
    ca = _uni_content(a, gen)
    cb = _uni_content(b, gen)
    cont = _gcd_prs_or_trivial(ca, cb)
    if not ca.is_constant:
        a = poly_exact_div(a, ca)
    if not cb.is_constant:
        b = poly_exact_div(b, cb)
    steps = 0
    while True:
        r = _prem(a, b, gen)
        if r.is_zero:
            g = b
            break
        if poly_deg_in(r, gen) == 0:
            g = POLY_ONE
            break
        _, r = poly_primitive(r)
        rc = _uni_content(r, gen)
        if not rc.is_constant:
            r = poly_exact_div(r, rc)
        a, b = b, r
        steps += 1
        if steps > 64:
            g = POLY_ONE
            break
    _, g = poly_primitive(g)
    return _plain_mul(cont, g)


def _gcd_prs_or_trivial(a, b):
    """gcd of univariate-contents; both already content-free of monomials."""
    if a.is_zero:
        return poly_primitive(b)[1]
    if b.is_zero:
        return poly_primitive(a)[1]
    ma = poly_mon_content(a)
    mb = poly_mon_content(b)
    mg = mon_gcd(ma, mb)
    a = poly_div_mon(a, ma)
    b = poly_div_mon(b, mb)
    _, a = poly_primitive(a)
    _, b = poly_primitive(b)
    gm = Poly({mg: ONE})
    if a.is_constant or b.is_constant:
        return gm
    if a == b:
        return _plain_mul(gm, a)
    if len(a.t) < len(b.t):
        a, b = b, a
    if poly_exact_div(a, b) is not None:
        return _plain_mul(gm, b)
    return _plain_mul(gm, _gcd_prs(a, b))


def _formal_diff(p, gen):
    """Derivative in the plain ring (atoms treated as independent)."""
    t = {}
    for m, c in p.t.items():
        for i, (g, e) in enumerate(m.pairs):
            if g is gen:
                rest = m.pairs[:i] + (((g, e - 1),) if e > 1 else ()) + m.pairs[i + 1:]
                mm = Mon(tuple(rest))
                prev = t.get(mm)
                val = c * e if prev is None else prev + c * e
                if val:
                    t[mm] = val
                elif prev is not None:
                    del t[mm]
                break
    return Poly(t)


_factor_memo = {}


def _small_factors(b, depth=0):
    """Coarse factor list of a small polynomial via squarefree splitting."""
    if b.is_constant or depth > 6:
        return [b] if not b.is_constant else []
    key = b.sort_key()
    got = _factor_memo.get(key)
    if got is not None:
        return got
    out = [b]
    for gen in _gens_of(b):
        db = _formal_diff(b, gen)
        if db.is_zero:
            continue
        g = poly_gcd(b, db)
        if not g.is_constant:
            q = poly_exact_div(b, g)
            if q is not None and not q.is_constant:
                out = _small_factors(g, depth + 1) + _small_factors(q, depth + 1)
        break
    if len(_factor_memo) < 4096:
        _factor_memo[key] = out
    return out


def _multiplicity(p, f, cap=None):
    n = 0
    q = poly_exact_div(p, f)
    while q is not None and (cap is None or n < cap):
        n += 1
        p = q
        q = poly_exact_div(p, f)
    return n, p


def _probe_small_divisors(a, b):
    """Common divisor of a and small b from b's coarse factors."""
    out = None
    seen = set()
    for f in _small_factors(b):
        _, f = poly_primitive(f)
        if f.is_constant:
            continue
        key = f.sort_key()
        if key in seen:
            continue
        seen.add(key)
        mb, _ = _multiplicity(b, f)
        if mb == 0:
            continue
        ma, a = _multiplicity(a, f, cap=mb)
        for _ in range(ma):
            out = f if out is None else _plain_mul(out, f)
    return out


def poly_gens(p):
    return _gens_of(p)
