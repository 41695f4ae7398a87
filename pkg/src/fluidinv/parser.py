"""Text grammar for expressions and vector fields, plus the pretty-printer.

Grammar (ASCII surface; a handful of Unicode aliases are accepted on input,
never emitted):

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base ('^' exponent)?
    base   := number | ident | '(' expr ')' | func '(' expr ')'
    func   in sin cos tan cot exp ln F F1 F2

Vector fields are sums of `coeff*d/dq` terms.  Jet coordinates use
underscore multi-indices (`u_xx`, `rho_ts`), normalized with t first and
the remaining index letters alphabetical.
"""

import re

from .kernel import (
    Expr, num_, var_, sin_, cos_, tan_, cot_, exp_, ln_, F_, sder_,
    expr_pow, rat, EXPR_ZERO,
)
from .kernel.poly import (
    T_VAR, T_SIN, T_COS, T_EXP, T_LN, T_FDER, T_SDER, T_POW,
)
from .kernel.rat import is_integer, as_int


class ParseError(Exception):
    def __init__(self, msg, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            msg = "%s (line %d, column %d)" % (msg, line, col)
        super().__init__(msg)


class UnknownIdentifierError(ParseError):
    pass


class NotAPointFieldError(Exception):
    pass


_UNICODE_ALIASES = {
    "ρ": "rho", "γ": "gamma", "η": "eta", "ζ": "zeta", "λ": "lam",
    "ξ": "xi", "μ": "mu", "α": "alpha", "β": "beta", "ς": "sig",
    "σ": "sigma", "ε": "eps", "Θ": "Theta", "θ": "theta", "τ": "tau",
    "κ": "kappa", "−": "-", "·": "*", "²": "^2", "³": "^3",
}

_FUNCS = {"sin", "cos", "tan", "cot", "exp", "ln", "F", "F1", "F2"}

# the named constants of the catalog formulas
STANDARD_PARAMS = frozenset(
    ["C", "C1", "C2", "k", "kgas", "gamma", "eta", "zeta", "g",
     "alpha", "beta", "s0", "poff", "alpha0", "beta0"]
    + ["lam%d" % i for i in range(1, 7)]
    + ["xi%d" % i for i in range(1, 7)]
    + ["mu%d" % i for i in range(1, 7)]
    + ["eta%d" % i for i in range(1, 7)]
    + ["alpha%d" % i for i in range(1, 7)]
    + ["beta%d" % i for i in range(1, 7)]
    + ["sig%d" % i for i in range(1, 4)])


class _Tok:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col


_NUM_RE = re.compile(r"\d+")
_IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9]*(?:_[A-Za-z0-9]+)?")


def _tokenize(text):
    for u, a in _UNICODE_ALIASES.items():
        if u in text:
            text = text.replace(u, a)
    toks = []
    line = 1
    bol = 0
    pos = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch == "\n":
            line += 1
            pos += 1
            bol = pos
            continue
        if ch.isspace():
            pos += 1
            continue
        col = pos - bol + 1
        if ch.isdigit():
            m = _NUM_RE.match(text, pos)
            toks.append(_Tok("num", m.group(), line, col))
            pos = m.end()
        elif ch.isalpha():
            m = _IDENT_RE.match(text, pos)
            toks.append(_Tok("ident", m.group(), line, col))
            pos = m.end()
        elif ch in "+-*/^(),<>=":
            toks.append(_Tok("op", ch, line, col))
            pos += 1
        else:
            raise ParseError("unexpected character %r" % ch, line, col)
    toks.append(_Tok("end", "", line, 0))
    return toks


class ParseContext:
    """Declared alphabet for identifier resolution.

    variables: plain variable names (base coordinates, parameters, ...).
    bindings:  names bound to whole expressions (substituted on parse).
    jet_deps / jet_indeps: enable underscore jet coordinates.
    max_order: reject jet coordinates above this order (None = unlimited).
    state_symbols: opaque state functions of (rho, s), e.g. {"P", "Theta"}.
    permissive: accept any unknown identifier as a fresh variable.
    """

    def __init__(self, variables=(), bindings=None, jet_deps=(), jet_indeps=(),
                 max_order=None, state_symbols=(), permissive=False):
        self.variables = set(variables)
        self.bindings = dict(bindings or {})
        self.jet_deps = tuple(jet_deps)
        self.jet_indeps = tuple(jet_indeps)
        self.max_order = max_order
        self.state_symbols = set(state_symbols)
        self.permissive = permissive

    def extended(self, **kw):
        out = ParseContext(self.variables, self.bindings, self.jet_deps,
                           self.jet_indeps, self.max_order, self.state_symbols,
                           self.permissive)
        for k, v in kw.items():
            if k in ("variables", "state_symbols"):
                getattr(out, k).update(v)
            elif k == "bindings":
                out.bindings.update(v)
            else:
                setattr(out, k, v)
        return out

    def alphabet(self):
        names = sorted(self.variables | set(self.bindings) | self.state_symbols)
        if self.jet_deps:
            names.append("<jets of %s in %s>" %
                         (",".join(self.jet_deps), ",".join(self.jet_indeps)))
        return names

    def jet_name(self, dep, letters):
        order = [i for i in self.jet_indeps]
        idx = sorted(letters, key=order.index)
        return dep + "_" + "".join(idx)

    def resolve(self, name, tok):
        if name in self.bindings:
            return self.bindings[name]
        if name in self.variables:
            return var_(name)
        if "_" in name:
            base, suffix = name.split("_", 1)
            if base in self.jet_deps and suffix and \
                    all(ch in self.jet_indeps for ch in suffix):
                if self.max_order is not None and len(suffix) > self.max_order:
                    raise ParseError(
                        "jet coordinate %r exceeds declared order %d"
                        % (name, self.max_order), tok.line, tok.col)
                return var_(self.jet_name(base, suffix))
            if base in self.state_symbols and suffix:
                rest = suffix
                dr = ds = 0
                ok = True
                while rest:
                    if rest.startswith("rho"):
                        dr += 1
                        rest = rest[3:]
                    elif rest.startswith("s"):
                        ds += 1
                        rest = rest[1:]
                    else:
                        ok = False
                        break
                if ok:
                    return sder_(base, dr, ds)
        if name in self.state_symbols:
            return sder_(name, 0, 0)
        if self.permissive:
            return var_(name)
        raise UnknownIdentifierError(
            "unknown identifier %r; declared: %s" % (name, ", ".join(self.alphabet())),
            tok.line, tok.col)


PERMISSIVE = ParseContext(permissive=True)


class _Parser:
    def __init__(self, toks, ctx):
        self.toks = toks
        self.i = 0
        self.ctx = ctx

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect_op(self, ch):
        t = self.next()
        if t.kind != "op" or t.text != ch:
            raise ParseError("expected %r, found %r" % (ch, t.text or "end of input"),
                             t.line, t.col)

    def parse_expr(self):
        t = self.peek()
        neg = False
        while t.kind == "op" and t.text in "+-":
            self.next()
            if t.text == "-":
                neg = not neg
            t = self.peek()
        e = self.parse_term()
        if neg:
            e = -e
        while True:
            t = self.peek()
            if t.kind == "op" and t.text in "+-":
                self.next()
                rhs = self.parse_term()
                e = e + rhs if t.text == "+" else e - rhs
            else:
                return e

    def parse_term(self):
        e = self.parse_factor()
        while True:
            t = self.peek()
            if t.kind == "op" and t.text in "*/":
                self.next()
                rhs = self.parse_factor()
                if t.text == "*":
                    e = e * rhs
                else:
                    if rhs.is_structural_zero:
                        raise ParseError("division by zero expression", t.line, t.col)
                    e = e / rhs
            else:
                return e

    def parse_factor(self):
        t = self.peek()
        if t.kind == "op" and t.text in "+-":
            self.next()
            f = self.parse_factor()
            return -f if t.text == "-" else f
        e = self.parse_base()
        t = self.peek()
        if t.kind == "op" and t.text == "^":
            self.next()
            ex = self.parse_exponent()
            e = expr_pow(e, ex)
        return e

    def parse_exponent(self):
        t = self.peek()
        if t.kind == "op" and t.text == "-":
            self.next()
            return -self.parse_exponent()
        if t.kind == "num":
            self.next()
            return num_(int(t.text))
        if t.kind == "ident":
            self.next()
            return self.ctx.resolve(t.text, t)
        if t.kind == "op" and t.text == "(":
            self.next()
            e = self.parse_expr()
            self.expect_op(")")
            return e
        raise ParseError("expected exponent, found %r" % (t.text or "end of input"),
                         t.line, t.col)

    def parse_base(self):
        t = self.next()
        if t.kind == "num":
            return num_(int(t.text))
        if t.kind == "op" and t.text == "(":
            e = self.parse_expr()
            self.expect_op(")")
            return e
        if t.kind == "ident":
            nxt = self.peek()
            if t.text in _FUNCS and nxt.kind == "op" and nxt.text == "(":
                self.next()
                arg = self.parse_expr()
                self.expect_op(")")
                return _apply_func(t.text, arg)
            return self.ctx.resolve(t.text, t)
        raise ParseError("unexpected token %r" % (t.text or "end of input"),
                         t.line, t.col)


def _apply_func(name, arg):
    if name == "sin":
        return sin_(arg)
    if name == "cos":
        return cos_(arg)
    if name == "tan":
        return tan_(arg)
    if name == "cot":
        return cot_(arg)
    if name == "exp":
        return exp_(arg)
    if name == "ln":
        return ln_(arg)
    if name == "F":
        return F_(0, arg)
    if name == "F1":
        return F_(1, arg)
    return F_(2, arg)


def parse_expr(text, context=PERMISSIVE):
    """Parse a single expression; the result is in canonical normal form."""
    toks = _tokenize(text)
    p = _Parser(toks, context)
    e = p.parse_expr()
    t = p.peek()
    if t.kind != "end":
        raise ParseError("trailing input starting at %r" % t.text, t.line, t.col)
    return e


def parse_vector_field(text, coords, context=PERMISSIVE):
    """Parse a sum of coeff*d/dq terms into {coordinate: Expr}."""
    toks = _tokenize(text)
    # fuse IDENT(d) '/' IDENT(d<q>) into one direction pseudo-token
    fused = []
    i = 0
    while i < len(toks):
        t = toks[i]
        if (t.kind == "ident" and t.text == "d" and i + 2 < len(toks)
                and toks[i + 1].kind == "op" and toks[i + 1].text == "/"
                and toks[i + 2].kind == "ident" and toks[i + 2].text.startswith("d")
                and len(toks[i + 2].text) > 1):
            q = toks[i + 2].text[1:]
            if q not in coords:
                raise ParseError("unknown coordinate %r in d/d%s; coordinates: %s"
                                 % (q, q, ", ".join(coords)), t.line, t.col)
            fused.append(_Tok("dir", q, t.line, t.col))
            i += 3
        else:
            fused.append(t)
            i += 1
    out = {c: EXPR_ZERO for c in coords}
    p = _Parser(fused, context)

    def parse_vf_term():
        coeff = num_(1)
        direction = None
        while True:
            t = p.peek()
            if t.kind == "dir":
                p.next()
                if direction is not None:
                    raise ParseError("two directions in one term", t.line, t.col)
                direction = t.text
            else:
                f = p.parse_factor()
                coeff = coeff * f
            t = p.peek()
            if t.kind == "op" and t.text in "*/":
                p.next()
                if t.text == "/":
                    nt = p.peek()
                    if nt.kind == "dir":
                        raise ParseError("cannot divide by a direction", nt.line, nt.col)
                    f = p.parse_factor()
                    coeff = coeff / f
                continue
            break
        if direction is None:
            t = p.peek()
            raise ParseError("vector-field term lacks a d/dq direction", t.line, t.col)
        return direction, coeff

    sign = 1
    t = p.peek()
    if t.kind == "op" and t.text in "+-":
        p.next()
        sign = -1 if t.text == "-" else 1
    while True:
        q, coeff = parse_vf_term()
        out[q] = out[q] + coeff * sign
        t = p.peek()
        if t.kind == "end":
            break
        if t.kind == "op" and t.text in "+-":
            p.next()
            sign = -1 if t.text == "-" else 1
        else:
            raise ParseError("expected '+' or '-' between terms, found %r" % t.text,
                             t.line, t.col)
    return out


# -- printing -----------------------------------------------------------------

def _fmt_rat(q):
    if q.denominator == 1:
        return str(q.numerator)
    return "%s/%s" % (q.numerator, q.denominator)


def _fmt_gen(g):
    t = g.tag
    if t == T_VAR:
        return g.a
    if t == T_SIN:
        return "sin(%s)" % print_expr(g.a)
    if t == T_COS:
        return "cos(%s)" % print_expr(g.a)
    if t == T_EXP:
        return "exp(%s)" % print_expr(g.a)
    if t == T_LN:
        return "ln(%s)" % print_expr(g.a)
    if t == T_FDER:
        name = ("F", "F1", "F2")[g.a]
        return "%s(%s)" % (name, print_expr(g.b))
    if t == T_SDER:
        if g.b == 0 and g.c == 0:
            return g.a
        return "%s_%s%s" % (g.a, "rho" * g.b, "s" * g.c)
    # T_POW
    base = _fmt_poly(g.a)
    if len(g.a.t) > 1 or not _is_bare_factor(g.a):
        base = "(%s)" % base
    return "%s^(%s)" % (base, print_expr(g.b))


def _is_bare_factor(p):
    if len(p.t) != 1:
        return False
    (m, c), = p.t.items()
    return c == 1 and len(m.pairs) == 1 and m.pairs[0][1] == 1


def _fmt_mon(m):
    parts = []
    for g, e in m.pairs:
        s = _fmt_gen(g)
        if e != 1:
            s += "^%d" % e
        parts.append(s)
    return "*".join(parts)


def _fmt_poly(p):
    if p.is_zero:
        return "0"
    terms = sorted(p.t.items(), key=lambda mc: mc[0].sort_key(), reverse=True)
    out = []
    for m, c in terms:
        neg = c < 0
        ac = -c if neg else c
        if not m.pairs:
            body = _fmt_rat(ac)
        elif ac == 1:
            body = _fmt_mon(m)
        else:
            body = "%s*%s" % (_fmt_rat(ac), _fmt_mon(m))
        if not out:
            out.append("-" + body if neg else body)
        else:
            out.append(("-" if neg else "+") + body)
    return "".join(out)


def print_expr(e):
    """Deterministic, reparseable rendering of an expression."""
    if not isinstance(e, Expr):
        return _fmt_rat(rat(e))
    num = e.num
    den = e.den
    ns = _fmt_poly(num)
    if den.is_constant and (den.is_zero or den.const_value() == 1):
        return ns
    if len(num.t) > 1:
        ns = "(%s)" % ns
    if len(den.t) == 1:
        (m, c), = den.t.items()
        if c == 1 and len(m.pairs) == 1:
            g, ex = m.pairs[0]
            gs = _fmt_gen(g)
            if g.tag == T_POW:
                gs = "(%s)" % gs
            return "%s/%s" % (ns, gs if ex == 1 else "%s^%d" % (gs, ex))
    return "%s/(%s)" % (ns, _fmt_poly(den))


def print_vector_field(coeffs, coords=None):
    coords = coords or list(coeffs)
    parts = []
    for q in coords:
        c = coeffs.get(q)
        if c is None or c.is_structural_zero:
            continue
        base = "d/d%s" % q
        if c.is_one:
            parts.append(base)
        else:
            cs = print_expr(c)
            if ("+" in cs[1:] or "-" in cs[1:]) and not (cs.startswith("(") and cs.endswith(")")):
                cs = "(%s)" % cs
            parts.append("%s*%s" % (cs, base))
    if not parts:
        return "0"
    out = parts[0]
    for p in parts[1:]:
        out += " - " + p[1:] if p.startswith("-") else " + " + p
    return out
