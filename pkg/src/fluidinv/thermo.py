"""Contact/symplectic thermodynamics: states, admissibility, symmetries.

A thermodynamic state is a Lagrangian surface in (p, rho, s, T) given
parametrically over the (rho, s) chart as p = P(rho, s), T = Theta(rho, s).
The classified state families of the inviscid and viscous systems are
instantiated here, with the theorems' parameter inequalities enforced.
"""

from fractions import Fraction

from .kernel import (
    Expr, EXPR_ZERO, EXPR_ONE, num_, var_, exp_, ln_, F_, sder_, expr_pow,
    differentiate, substitute, is_zero, eval_float, rat, is_rat,
    KernelError, ZeroDecision, ZERO_CERTIFIED,
)
from .kernel.rat import is_integer, as_int, gcd_int
from .kernel.poly import (
    T_VAR, T_SIN, T_COS, T_EXP, T_LN, T_FDER, T_SDER, T_POW,
    POLY_ONE, g_var,
)
from .kernel.expr import Expr as _ExprCls
from .parser import parse_expr, parse_vector_field, ParseContext
from .linalg import nullspace_expr

THERMO_COORDS = ("p", "rho", "s", "T")

RHO = var_("rho")
S = var_("s")


class FamilyConstraintError(KernelError):
    """A classification theorem's parameter inequality is violated."""


class DegenerateSampleError(KernelError):
    pass


class ThermoVectorField:
    """Vector field on the (p, rho, s, T) space."""

    def __init__(self, coeffs, name=None):
        self.coeffs = {c: e for c, e in coeffs.items()
                       if c in THERMO_COORDS and not e.is_structural_zero}
        bad = set(coeffs) - set(THERMO_COORDS)
        if bad:
            raise KernelError("unknown thermodynamic coordinates %s" % sorted(bad))
        self.name = name

    @classmethod
    def parse(cls, text, name=None):
        ctx = ParseContext(variables=set(THERMO_COORDS))
        return cls(parse_vector_field(text, THERMO_COORDS, ctx), name=name)

    def coeff(self, c):
        return self.coeffs.get(c, EXPR_ZERO)

    def apply(self, f):
        out = EXPR_ZERO
        for c, co in self.coeffs.items():
            d = differentiate(f, c)
            if not d.is_structural_zero:
                out = out + co * d
        return out

    def scaled(self, f):
        return ThermoVectorField({c: f * e for c, e in self.coeffs.items()},
                                 name=self.name)

    def plus(self, other):
        coeffs = dict(self.coeffs)
        for c, e in other.coeffs.items():
            coeffs[c] = coeffs.get(c, EXPR_ZERO) + e
        return ThermoVectorField(coeffs)

    def is_zero_field(self):
        return not self.coeffs

    def key(self):
        return tuple(sorted((c, e.sort_key()) for c, e in self.coeffs.items()))

    def __repr__(self):
        from .parser import print_vector_field
        body = print_vector_field(self.coeffs, THERMO_COORDS)
        return self.name and "%s = %s" % (self.name, body) or body


def thermo_combo(fields, weights):
    out = ThermoVectorField({})
    for f, w in zip(fields, weights):
        w = w if isinstance(w, Expr) else num_(w)
        if w.is_structural_zero:
            continue
        out = out.plus(f.scaled(w))
    return out


def thermo_bracket(Z1, Z2):
    coeffs = {}
    for c in THERMO_COORDS:
        e = Z1.apply(Z2.coeff(c)) - Z2.apply(Z1.coeff(c))
        if not e.is_structural_zero:
            coeffs[c] = e
    return ThermoVectorField(coeffs)


def poisson_bracket(f, g):
    """[f,g] = rho^2 (f_rho g_p - f_p g_rho) + f_s g_T - f_T g_s."""
    fr, fp = differentiate(f, "rho"), differentiate(f, "p")
    fs, fT = differentiate(f, "s"), differentiate(f, "T")
    gr, gp = differentiate(g, "rho"), differentiate(g, "p")
    gs, gT = differentiate(g, "s"), differentiate(g, "T")
    return RHO * RHO * (fr * gp - fp * gr) + fs * gT - fT * gs


class StateSurface:
    """p = P(rho, s), T = Theta(rho, s) with parameter bookkeeping.

    assumptions: [(Expr, '+'|'-')] sign facts granted by the defining
    theorem (parameter inequalities, domain positivity of bases).
    defining_algebra: ThermoVectorFields known to preserve the state.
    """

    def __init__(self, pressure, temperature, name="state", params=None,
                 assumptions=(), s_max=None, defining_algebra=(), energy=None,
                 anchor=None, expected_ht_dim=None):
        self.pressure = pressure
        self.temperature = temperature
        self.name = name
        self.params = dict(params or {})
        self.assumptions = list(assumptions)
        self.s_max = s_max
        self.defining_algebra = list(defining_algebra)
        self.energy = energy
        self.anchor = anchor
        self.expected_ht_dim = expected_ht_dim
        self._cache = {}

    @classmethod
    def generic(cls):
        """Fully symbolic state: opaque P(rho,s), Theta(rho,s)."""
        return cls(sder_("P"), sder_("Theta"), name="generic",
                   assumptions=[(sder_("Theta"), "+")])

    @classmethod
    def from_energy(cls, eps, **kw):
        """Structure equations T = eps_s, p = rho^2 eps_rho."""
        T = differentiate(eps, "s")
        P = RHO * RHO * differentiate(eps, "rho")
        return cls(P, T, energy=eps, **kw)

    @property
    def symbolic(self):
        return any(g.tag == T_SDER for p in (self.pressure.num, self.temperature.num)
                   for m in p.t for g, _ in m.pairs)

    def d(self, which, v):
        key = (which, v)
        got = self._cache.get(key)
        if got is None:
            base = self.pressure if which == "P" else self.temperature
            got = differentiate(base, v)
            self._cache[key] = got
        return got

    def subs_pt(self, e):
        """Restrict a (p,rho,s,T)-function to the surface."""
        return substitute(e, {"p": self.pressure, "T": self.temperature})

    def var_signs(self):
        signs = {"rho": "+"}
        if self.s_max is not None and self.s_max < 0:
            signs["s"] = "-"
        return signs

    def __repr__(self):
        return "StateSurface(%s)" % self.name


def ideal_gas():
    """T = rho^kgas e^(s/gamma)/gamma, p = kgas rho^(kgas+1) e^(s/gamma)."""
    kg = var_("kgas")
    gam = var_("gamma")
    es = exp_(S / gam)
    P = kg * expr_pow(RHO, kg + 1) * es
    T = expr_pow(RHO, kg) * es / gam
    return StateSurface(P, T, name="ideal-gas",
                        params={"kgas": None, "gamma": None},
                        assumptions=[(kg, "+"), (gam, "+")],
                        anchor="ideal gas state",
                        expected_ht_dim=2)


def check_lagrangian(L):
    """P_s = rho^2 Theta_rho, certified; cross-checked through the bracket."""
    residual = L.d("P", "s") - RHO * RHO * L.d("T", "rho")
    f = var_("p") - L.pressure
    g = var_("T") - L.temperature
    via_bracket = L.subs_pt(poisson_bracket(f, g))
    if not (via_bracket + residual).is_structural_zero:
        raise KernelError("pullback and Poisson-bracket routes disagree")
    return is_zero(residual)


class KappaForm:
    """kappa restricted to the state, in the (d rho, d s) co-frame."""

    def __init__(self, L):
        T = L.temperature
        self.matrix = (
            (-L.d("P", "rho") / (RHO * RHO * T), -L.d("T", "rho") / T),
            (-L.d("T", "rho") / T, -L.d("T", "s") / T),
        )
        # negative definiteness of kappa (with T > 0) is equivalent to
        # positivity of these two expressions
        self.conditions = (
            L.d("P", "rho"),
            L.d("T", "s") * L.d("P", "rho") - RHO * RHO * L.d("T", "rho") ** 2,
        )


def kappa(L):
    return KappaForm(L)


# -- symbolic sign certification ----------------------------------------------

def _gen_sign(g, known_vars, facts):
    """Sign of a single generator under the assumptions, or None."""
    t = g.tag
    if t == T_VAR:
        return known_vars.get(g.a)
    if t == T_EXP:
        return "+"
    if t == T_POW:
        base = _ExprCls(g.a, POLY_ONE)
        bs = sign_of(base, facts, known_vars)
        if bs == "+":
            return "+"
        if bs == "-":
            e = g.b
            if e.is_rational:
                q = e.rational_value()
                if int(q.denominator) % 2 == 1:
                    return "-" if int(q.numerator) % 2 else "+"
        return None
    return None


def _gf2_sign(target, knowns):
    """Express the odd-generator set as an XOR of known-sign vectors.

    Returns True (negative), False (positive) or None (not in the span).
    """
    basis = []  # (pivot, vec, neg)
    for vec, neg in knowns:
        v, n = vec, neg
        for pg, bv, bn in basis:
            if pg in v:
                v = v ^ bv
                n = n ^ bn
        if v:
            pivot = sorted(v, key=lambda g: g.sort_key())[0]
            basis.append((pivot, v, n))
    t, tn = target, False
    for pg, bv, bn in basis:
        if pg in t:
            t = t ^ bv
            tn = tn ^ bn
    if t:
        return None
    return tn


def _mon_sign(mon, coeff, known_vars, facts, parity_knowns):
    """Sign of coeff * monomial; uses GF(2) parity combinations of facts.

    Even powers of named quantities count as positive (they are nonzero
    generically / by the theorems' genericity assumptions).
    """
    sign_neg = coeff < 0
    odd = []
    for g, e in mon.pairs:
        gs = _gen_sign(g, known_vars, facts)
        if gs == "+":
            continue
        if gs == "-":
            if e % 2:
                sign_neg = not sign_neg
            continue
        if e % 2 == 0:
            if g.tag in (T_VAR, T_EXP, T_POW, T_FDER, T_SDER):
                continue
            return None
        if g.tag in (T_SIN, T_COS, T_LN):
            return None
        odd.append(g)
    if not odd:
        return "-" if sign_neg else "+"
    res = _gf2_sign(frozenset(odd), parity_knowns)
    if res is None:
        return None
    return "-" if (sign_neg ^ res) else "+"


def _parity_knowns(facts, known_vars):
    out = []
    for e, sg in facts:
        if e.den.is_constant and len(e.num.t) == 1:
            (m, c), = e.num.t.items()
            neg = (c < 0) ^ (sg == "-")
            vec = frozenset(g for g, ex in m.pairs if ex % 2)
            if vec:
                out.append((vec, neg))
    for v, sg in known_vars.items():
        out.append((frozenset([g_var(v)]), sg == "-"))
    return out


def _poly_sign(p, known_vars, facts, parity_knowns):
    if p.is_zero:
        return "0"
    signs = set()
    for m, c in p.t.items():
        s = _mon_sign(m, c, known_vars, facts, parity_knowns)
        if s is None:
            return None
        signs.add(s)
        if len(signs) > 1:
            return None
    return signs.pop()


def sign_of(e, facts=(), known_vars=None):
    """Certified sign of an expression: '+', '-', '0' or None (unknown).

    facts: [(Expr, '+'|'-')].  Single-monomial facts feed a GF(2) parity
    solver (products of known-sign quantities); other facts are matched as
    whole factors of the target.
    """
    known_vars = known_vars or {}
    if e.is_structural_zero:
        return "0"
    facts = list(facts)
    pk = _parity_knowns(facts, known_vars)
    ns = _poly_sign(e.num, known_vars, facts, pk)
    ds = _poly_sign(e.den, known_vars, facts, pk)
    if ns is not None and ds is not None and ds != "0":
        return _mul_sign(ns, ds)
    # try whole-factor matches against the non-monomial facts
    for fe, sg in facts:
        if fe.num.is_constant:
            continue
        try:
            ratio = e / fe
        except ZeroDivisionError:
            continue
        rs = sign_of(ratio, [f for f in facts if f[0] is not fe], known_vars)
        if rs in ("+", "-"):
            return _mul_sign(rs, sg)
    return None


def _mul_sign(a, b):
    if a == "0" or b == "0":
        return "0"
    return "+" if a == b else "-"


# -- admissibility -------------------------------------------------------------

class Admissibility:
    def __init__(self, verdict, failed=None, witness=None, details=None):
        self.verdict = verdict  # admissible | admissible-sampled | inadmissible | unknown
        self.failed = failed
        self.witness = witness
        self.details = details or {}

    @property
    def ok(self):
        return self.verdict in ("admissible", "admissible-sampled")

    def __repr__(self):
        extra = " (%s)" % self.failed if self.failed else ""
        return "Admissibility(%s%s)" % (self.verdict, extra)


def check_admissible(L, n_samples=200, seed=7):
    """Attempt symbolic sign certification of T > 0, P_rho > 0 and
    T_s P_rho - rho^2 T_rho^2 > 0; fall back to domain sampling."""
    kf = KappaForm(L)
    conds = [("T>0", L.temperature),
             ("p_rho>0", kf.conditions[0]),
             ("T_s*p_rho-rho^2*T_rho^2>0", kf.conditions[1])]
    signs = {}
    sampled = False
    vs = L.var_signs()
    for label, e in conds:
        sg = sign_of(e, L.assumptions, vs)
        signs[label] = sg
        if sg in ("-", "0"):
            return Admissibility("inadmissible", failed=label, details=signs)
    if all(signs[l] == "+" for l, _ in conds):
        return Admissibility("admissible", details=signs)
    # sampling fallback (floating point; this tier is explicitly weaker)
    import random
    if any(v is None for v in L.params.values()):
        return Admissibility("unknown", details=signs)
    rng = random.Random(seed)
    if L.s_max is None:
        smax = Fraction(5)
    else:
        smax = Fraction(int(L.s_max.numerator), int(L.s_max.denominator))
    tried = 0
    for _ in range(n_samples):
        assign = {
            "rho": Fraction(rng.randint(1, 400), 40),
            "s": smax - Fraction(rng.randint(1, 400), 40),
        }
        for name, val in L.params.items():
            assign[name] = Fraction(int(val.numerator), int(val.denominator))
        ok = True
        for label, e in conds:
            if signs[label] == "+":
                continue
            try:
                v = eval_float(e, assign)
            except (ZeroDivisionError, OverflowError, ValueError):
                ok = None
                break
            if not v > 0:
                return Admissibility("inadmissible", failed=label,
                                     witness=dict(assign), details=signs)
        if ok:
            tried += 1
    if tried == 0:
        raise DegenerateSampleError("no pole-free sample points in the domain")
    sampled = True
    return Admissibility("admissible-sampled", details=signs)


# -- tangency ------------------------------------------------------------------

def tangency_residual(Z, L):
    """Pullback components of iota_Z Omega on the (rho, s) chart."""
    zp = L.subs_pt(Z.coeff("p"))
    zr = L.subs_pt(Z.coeff("rho"))
    zs = L.subs_pt(Z.coeff("s"))
    zT = L.subs_pt(Z.coeff("T"))
    r2 = RHO * RHO
    comp_rho = zs * L.d("T", "rho") + (zr * L.d("P", "rho") - zp) / r2
    comp_s = zs * L.d("T", "s") - zT + zr * L.d("P", "s") / r2
    return comp_rho, comp_s


def state_symmetries(L, H, n_points=None, seed=11):
    """Basis of {lambda : sum lambda_i Y_i is tangent to L}.

    Exact rank over sampled (rho, s) points, then symbolic confirmation of
    every basis vector through tangency_residual.
    """
    residuals = [tangency_residual(Y, L) for Y in H]
    n = len(H)
    n_points = n_points or (n + 2)
    rows = []
    collected = 0
    t = 0
    while collected < n_points and t < 6 * n_points:
        pt = {"rho": num_(rat(2 + t, 1 + (t % 3))), "s": num_(rat(-3 - 2 * t, 2))}
        t += 1
        try:
            pair = [[substitute(residuals[i][comp], pt) for i in range(n)]
                    for comp in (0, 1)]
        except ZeroDivisionError:
            continue
        rows.extend(pair)
        collected += 1
    if collected < n_points:
        raise DegenerateSampleError("could not sample enough pole-free points")
    basis = nullspace_expr(rows, ncols=n)
    confirmed = []
    for vec in basis:
        Z = thermo_combo(H, vec)
        r1, r2 = tangency_residual(Z, L)
        if not (r1.is_structural_zero and r2.is_structural_zero):
            raise DegenerateSampleError(
                "sampled null vector fails symbolic tangency; degenerate sampling")
        confirmed.append(vec)
    return confirmed


# -- thermodynamic algebra presentations ---------------------------------------

def h_algebra(kind):
    """The thermodynamic algebra of each system family, as named fields."""
    mk = ThermoVectorField.parse
    if kind == "euler-plane":
        return [mk("d/ds", "Y1"), mk("d/dp", "Y2"), mk("rho*d/drho", "Y3"),
                mk("s*d/ds", "Y4"), mk("p*d/dp", "Y5"), mk("T*d/dT", "Y6")]
    if kind == "euler-sphere":
        return [mk("d/ds", "Y1"), mk("d/dp", "Y2"), mk("T*d/dT", "Y3"),
                mk("2*rho*d/drho - s*d/ds", "Y4"), mk("p*d/dp - rho*d/drho", "Y5")]
    if kind == "ns-plane":
        return [mk("d/ds", "Y1"), mk("d/dp", "Y2"),
                mk("rho*d/drho - T*d/dT", "Y3"), mk("p*d/dp + T*d/dT", "Y4")]
    if kind == "ns-sphere":
        return [mk("d/ds", "Y1"), mk("d/dp", "Y2"),
                mk("p*d/dp - rho*d/drho + 2*T*d/dT", "Y3")]
    raise KeyError(kind)


# -- classification families ----------------------------------------------------

def _as_rat(params, name):
    v = params.get(name)
    if v is None:
        raise FamilyConstraintError("parameter %r is required" % name)
    return rat(v)


def _require(cond, label):
    if not cond:
        raise FamilyConstraintError(label)


def _lowest_terms(q):
    n, d = int(q.numerator), int(q.denominator)
    g = gcd_int(n, d)
    return n // g, d // g


def _pow_base(base, expo_q):
    return expr_pow(base, num_(expo_q))


def family_euler2d_1d(params):
    """Plane/Euler states with a one-dimensional symmetry algebra."""
    lam = [_as_rat(params, "lam%d" % i) for i in range(1, 7)]
    C1 = _as_rat(params, "C1")
    C2 = _as_rat(params, "C2")
    s0 = _as_rat(params, "s0")
    l1, l2, l3, l4, l5, l6 = lam
    _require(l3 != 0 and l4 != 0 and l5 != 0, "genericity: lam3, lam4, lam5 nonzero")
    _require(l6 + l4 - l5 + l3 != 0, "genericity: lam6+lam4-lam5+lam3 != 0")
    _require(s0 < -l1 / l4, "s0 < -lam1/lam4")
    _require(C1 > 0, "C1 > 0")
    _require(l5 / l3 > 0, "lam5/lam3 > 0")
    _require(l2 / l5 < 0, "lam2/lam5 < 0")
    eT = l6 / l4
    _require(eT < 0, "lam6/lam4 < 0")
    m, k = _lowest_terms(-eT)
    if k % 2 == 0:
        _require(l4 < 0, "lam4 < 0 (even root)")
        _require(C2 > 0, "C2 > 0 (even root)")
    elif m % 2 == 0:
        _require(C2 > 0, "C2 > 0 (odd root, even power)")
    else:
        _require(C2 * l4 < 0, "C2*lam4 < 0 (odd root, odd power)")
    B = num_(l4) * S + num_(l1)
    P = num_(C1) * _pow_base(RHO, l5 / l3) - num_(l2 / l5)
    T = num_(C2) * _pow_base(B, eT)
    b_sign = "+" if l4 < 0 else "-"
    Z = thermo_combo(h_algebra("euler-plane"), [num_(x) for x in lam])
    Z.name = "Z"
    return StateSurface(
        P, T, name="euler2d-1d",
        params={("lam%d" % i): lam[i - 1] for i in range(1, 7)} | {"C1": C1, "C2": C2},
        assumptions=[(B, b_sign)], s_max=s0, defining_algebra=[Z],
        anchor="plane Euler states with a one-dimensional symmetry algebra",
        expected_ht_dim=1)


def family_euler2d_2dc(params):
    """Plane/Euler states with a two-dimensional commutative algebra."""
    b1 = _as_rat(params, "beta1")
    b2 = _as_rat(params, "beta2")
    b4 = _as_rat(params, "beta4")
    b5 = _as_rat(params, "beta5")
    b6 = _as_rat(params, "beta6")
    a4 = _as_rat(params, "alpha4")
    a5 = _as_rat(params, "alpha5")
    a6 = _as_rat(params, "alpha6")
    C1 = _as_rat(params, "C1")
    C2 = _as_rat(params, "C2")
    s0 = _as_rat(params, "s0")
    _require(b4 != 0 and b5 != 0, "genericity: beta4, beta5 nonzero")
    a1 = a4 * b1 / b4
    a2 = a5 * b2 / b5
    a3 = a5 - a4 - a6
    b3 = b5 - b4 - b6
    sig1 = a6 * b4 - a4 * b6
    sig2 = a4 * b5 - a5 * b4
    sig3 = a6 * b5 - a5 * b6
    _require(sig1 + sig2 != 0, "genericity: sig1+sig2 != 0")
    _require(sig3 != 0 and sig2 + sig3 != 0, "genericity: sig3, sig2+sig3 nonzero")
    _require(s0 < -b1 / b4, "s0 < -beta1/beta4")
    _require(b2 / b5 < 0, "beta2/beta5 < 0")
    _require(sig2 / sig3 < 0, "sig2/sig3 < 0")
    _require(sig1 / ((sig1 + sig2) * (sig2 + sig3)) < 0,
             "sig1/((sig1+sig2)*(sig2+sig3)) < 0")
    G = (sig3 + sig2) / (sig1 + sig2)
    E = sig2 / (sig1 + sig2)
    m, k = _lowest_terms(abs(G))
    if k % 2 == 0:
        _require(b4 < 0, "beta4 < 0 (even root)")
        _require(C1 > 0, "C1 > 0 (even root)")
        _require(C2 > 0, "C2 > 0 (even root)")
    elif m % 2 == 0:
        _require(C1 * b4 < 0, "C1*beta4 < 0 (odd root, even power)")
        _require(C2 > 0, "C2 > 0 (odd root, even power)")
    else:
        _require(C2 * b4 < 0, "C2*beta4 < 0 (odd root, odd power)")
        _require(C1 > 0, "C1 > 0 (odd root, odd power)")
    B = num_(b4) * S + num_(b1)
    P = num_(C1) * _pow_base(RHO, E) * _pow_base(B, G) - num_(b2 / b5)
    T = num_(C2) * _pow_base(RHO, E - 1) * _pow_base(B, G - 1)
    alphas = [a1, a2, a3, a4, a5, a6]
    betas = [b1, b2, b3, b4, b5, b6]
    hh = h_algebra("euler-plane")
    A = thermo_combo(hh, [num_(x) for x in alphas])
    Bf = thermo_combo(hh, [num_(x) for x in betas])
    A.name, Bf.name = "A", "B"
    b_sign = "+" if b4 < 0 else "-"
    return StateSurface(
        P, T, name="euler2d-2dc",
        params={"beta%d" % i: betas[i - 1] for i in range(1, 7)}
        | {"alpha%d" % i: alphas[i - 1] for i in range(1, 7)}
        | {"C1": C1, "C2": C2},
        assumptions=[(B, b_sign)], s_max=s0, defining_algebra=[A, Bf],
        anchor="plane Euler states with a two-dimensional commutative algebra",
        expected_ht_dim=2)


def family_euler_sphere_1d(params, scenario="euler-sphere"):
    """Sphere/layer Euler states with a one-dimensional algebra."""
    lam = [_as_rat(params, "lam%d" % i) for i in range(1, 6)]
    C1 = _as_rat(params, "C1")
    C2 = _as_rat(params, "C2")
    s0 = _as_rat(params, "s0")
    l1, l2, l3, l4, l5 = lam
    _require(l4 != 0 and l5 != 0 and 2 * l4 - l5 != 0,
             "genericity: lam4, lam5, 2*lam4-lam5 nonzero")
    _require(l3 + l4 - 2 * l5 != 0, "genericity: lam3+lam4-2*lam5 != 0")
    _require(s0 < l1 / l4, "s0 < lam1/lam4")
    _require(C1 > 0, "C1 > 0")
    _require(l2 / l5 < 0, "lam2/lam5 < 0")
    _require(l5 / (2 * l4 - l5) > 0, "lam5/(2*lam4-lam5) > 0")
    eT = l3 / l4
    _require(eT > 0, "lam3/lam4 > 0")
    m, k = _lowest_terms(eT)
    if k % 2 == 0:
        _require(l4 > 0, "lam4 > 0 (even root)")
        _require(C2 > 0, "C2 > 0 (even root)")
    elif m % 2 == 0:
        _require(C2 > 0, "C2 > 0 (odd root, even power)")
    else:
        _require(C2 * l4 > 0, "C2*lam4 > 0 (odd root, odd power)")
    B = num_(l1) - num_(l4) * S
    P = num_(C1) * _pow_base(RHO, l5 / (2 * l4 - l5)) - num_(l2 / l5)
    T = num_(C2) * _pow_base(B, -eT)
    Z = thermo_combo(h_algebra("euler-sphere"), [num_(x) for x in lam])
    Z.name = "Z"
    b_sign = "+" if l4 > 0 else "-"
    return StateSurface(
        P, T, name="%s-1d" % scenario,
        params={("lam%d" % i): lam[i - 1] for i in range(1, 6)} | {"C1": C1, "C2": C2},
        assumptions=[(B, b_sign)], s_max=s0, defining_algebra=[Z],
        anchor="sphere Euler states with a one-dimensional symmetry algebra",
        expected_ht_dim=1)


def family_euler_sphere_2dc(params, scenario="euler-sphere"):
    """Sphere/layer Euler, two-dimensional commutative special case.

    Under the stated special-case and commutativity relations the second
    basis vector is proportional to the first, so the preserved algebra is
    effectively one-dimensional; the surface itself follows the theorem.
    """
    b = [_as_rat(params, "beta%d" % i) for i in range(1, 6)]
    C1 = _as_rat(params, "C1")
    C2 = _as_rat(params, "C2")
    s0 = _as_rat(params, "s0")
    b1, b2, b3, b4, b5 = b
    _require(b4 != 0 and b5 != 0 and 2 * b4 - b5 != 0,
             "genericity: beta4, beta5, 2*beta4-beta5 nonzero")
    _require(s0 < b1 / b4, "s0 < beta1/beta4")
    _require(C1 > 0, "C1 > 0")
    _require(b2 / b5 < 0, "beta2/beta5 < 0")
    _require(b5 / (2 * b4 - b5) > 0, "beta5/(2*beta4-beta5) > 0")
    eT = b3 / b4
    _require(eT > 0, "beta3/beta4 = m/k > 0")
    m, k = _lowest_terms(eT)
    _require(k % 2 == 1, "beta3/beta4 with an odd root")
    if m % 2 == 0:
        _require(C2 > 0, "C2 > 0 (odd root, even power)")
    else:
        _require(C2 * b4 > 0, "C2*beta4 > 0 (odd root, odd power)")
    B = S - num_(b1 / b4)
    P = num_(C1) * _pow_base(RHO, b5 / (2 * b4 - b5)) - num_(b2 / b5)
    T = num_(C2) * _pow_base(B, -eT)
    Z = thermo_combo(h_algebra("euler-sphere"), [num_(x) for x in b])
    Z.name = "B"
    return StateSurface(
        P, T, name="%s-2dc" % scenario,
        params={("beta%d" % i): b[i - 1] for i in range(1, 6)} | {"C1": C1, "C2": C2},
        assumptions=[(B, "-")], s_max=s0, defining_algebra=[Z],
        anchor="sphere Euler states, two-dimensional commutative special case",
        expected_ht_dim=1)


def _opaque_or_given(params, arg):
    """F as opaque atoms or a concrete expression in the variable q."""
    f = params.get("F")
    if f is None:
        return F_(0, arg), F_(1, arg), F_(2, arg)
    if isinstance(f, str):
        f = parse_expr(f, ParseContext(variables={"q"},
                                       bindings={}, permissive=True))
    f1 = differentiate(f, "q")
    f2 = differentiate(f1, "q")
    sub = lambda e: substitute(e, {"q": arg})
    return sub(f), sub(f1), sub(f2)


def family_ns2d_1d(params):
    """Plane/space NS states with a one-dimensional algebra (free F)."""
    lam = [_as_rat(params, "lam%d" % i) for i in range(1, 5)]
    l1, l2, l3, l4 = lam
    _require(l3 != 0 and l4 != 0, "genericity: lam3, lam4 nonzero")
    _require(l4 - 2 * l3 != 0, "genericity: lam4-2*lam3 != 0")
    a = l4 / l3
    arg = S - num_(l1 / l3) * ln_(RHO)
    F0, F1x, F2x = _opaque_or_given(params, arg)
    T = _pow_base(RHO, a - 1) * F1x
    P = _pow_base(RHO, a) * (num_(a - 1) * F0 - num_(l1 / l3) * F1x) - num_(l2 / l4)
    assumptions = [(F1x, "+")]
    if params.get("F") is None:
        c1 = (num_(l1 * l1) * F2x + num_(l1 * (l3 - 2 * l4)) * F1x
              + num_(l4 * (l4 - l3)) * F0)
        c2 = (F2x * (num_(l4 * (l4 - l3)) * F0 - num_(l1 * l3) * F1x)
              - F1x * F1x * num_((l4 - l3) ** 2))
        assumptions += [(c1, "+"), (c2, "+")]
    Z = thermo_combo(h_algebra("ns-plane"), [num_(x) for x in lam])
    Z.name = "Z"
    return StateSurface(
        P, T, name="ns2d-1d",
        params={("lam%d" % i): lam[i - 1] for i in range(1, 5)},
        assumptions=assumptions, defining_algebra=[Z],
        anchor="NS states with a one-dimensional symmetry algebra",
        expected_ht_dim=1)


def family_ns2d_2dc(params):
    """Plane/space NS states with a two-dimensional commutative algebra."""
    alpha = _as_rat(params, "alpha")
    beta = _as_rat(params, "beta")
    C = _as_rat(params, "C")
    poff = _as_rat(params, "poff")  # -beta2/beta4
    _require(alpha > 0, "alpha > 0")
    _require(beta > 1, "beta > 1")
    _require(C > 0, "C > 0")
    _require(poff > 0, "beta2/beta4 < 0")
    es = exp_(num_(alpha) * S)
    P = num_(C * (beta - 1)) * es * _pow_base(RHO, beta) + num_(poff)
    T = num_(C * alpha) * es * _pow_base(RHO, beta - 1)
    hh = h_algebra("ns-plane")
    A = thermo_combo(hh, [num_(1), num_(-alpha * poff), num_(0), num_(alpha)])
    B = thermo_combo(hh, [num_(0), num_(-beta * poff), num_(1), num_(beta)])
    A.name, B.name = "A", "B"
    return StateSurface(
        P, T, name="ns2d-2dc",
        params={"alpha": alpha, "beta": beta, "C": C, "poff": poff},
        defining_algebra=[A, B],
        anchor="NS states with a two-dimensional commutative algebra",
        expected_ht_dim=2)


def family_ns_sphere_1d(params, scenario="ns-sphere"):
    """Sphere/layer NS states with a one-dimensional algebra (free F)."""
    lam = [_as_rat(params, "lam%d" % i) for i in range(1, 4)]
    l1, l2, l3 = lam
    _require(l3 != 0, "genericity: lam3 != 0")
    arg = S + num_(l1 / l3) * ln_(RHO)
    F0, F1x, F2x = _opaque_or_given(params, arg)
    T = F1x / (RHO * RHO)
    P = (num_(l1 / l3) * F1x - 2 * F0) / RHO - num_(l2 / l3)
    assumptions = [(F1x, "+")]
    if params.get("F") is None:
        r = num_(l1 / l3)
        c1 = r * r * F2x - 3 * r * F1x + 2 * F0
        c2 = F2x * (r * F1x + 2 * F0) - 4 * F1x * F1x
        assumptions += [(c1, "+"), (c2, "+")]
    Z = thermo_combo(h_algebra("ns-sphere"), [num_(x) for x in lam])
    Z.name = "Z"
    s0 = params.get("s0")
    return StateSurface(
        P, T, name="%s-1d" % scenario,
        params={("lam%d" % i): lam[i - 1] for i in range(1, 4)},
        assumptions=assumptions, defining_algebra=[Z],
        s_max=rat(s0) if s0 is not None else None,
        anchor="sphere NS states with a one-dimensional symmetry algebra",
        expected_ht_dim=1)


_FAMILIES = {
    ("euler-plane", "one_dim"): family_euler2d_1d,
    ("euler-plane", "two_dim_commutative"): family_euler2d_2dc,
    ("euler-sphere", "one_dim"): family_euler_sphere_1d,
    ("euler-sphere", "two_dim_commutative"): family_euler_sphere_2dc,
    ("euler-layer", "one_dim"): lambda p: family_euler_sphere_1d(p, "euler-layer"),
    ("euler-layer", "two_dim_commutative"): lambda p: family_euler_sphere_2dc(p, "euler-layer"),
    ("ns-plane", "one_dim"): family_ns2d_1d,
    ("ns-plane", "two_dim_commutative"): family_ns2d_2dc,
    ("ns-space3", "one_dim"): family_ns2d_1d,
    ("ns-space3", "two_dim_commutative"): family_ns2d_2dc,
    ("ns-sphere", "one_dim"): family_ns_sphere_1d,
    ("ns-layer", "one_dim"): lambda p: family_ns_sphere_1d(p, "ns-layer"),
}


def family_from_classification(scenario, case, params):
    """Instantiate a classified state family; validates the theorem's
    parameter inequalities and rejects violations by name."""
    try:
        builder = _FAMILIES[(scenario, case)]
    except KeyError:
        raise KeyError("no classified family for (%s, %s)" % (scenario, case)) from None
    return builder(params)


def noncommutative_search(scenario):
    """Case analysis for two-dimensional non-commutative subalgebras.

    Returns (branches, found) where each branch carries a certified reason
    why it yields no admissible state.
    """
    if scenario not in ("euler-plane", "euler-sphere", "euler-layer"):
        raise KeyError(scenario)
    branches = []
    a0, b0, c = var_("alpha0"), var_("beta0"), var_("C")
    # branch 1: A = alpha0 Y1 + beta0 Y2 with alpha0, beta0 nonzero.
    # Tangency of A forces T_s = 0, T_rho = beta0/(alpha0 rho^2), so
    # T = C - beta0/(alpha0 rho); the second kappa condition is negative.
    T = c - b0 / (a0 * RHO)
    m2 = differentiate(T, "s") * var_("Pr") - RHO * RHO * differentiate(T, "rho") ** 2
    sg = sign_of(m2, [], {"rho": "+"})
    branches.append({
        "branch": "alpha0 != 0, beta0 != 0",
        "condition": "T_s*p_rho - rho^2*T_rho^2",
        "sign": sg,
        "admissible": False,
    })
    assert sg == "-", "branch 1 must certify negative"
    # branch 2: beta0 = 0, so A = alpha0 Y1; tangency forces T constant and
    # the second condition vanishes identically.
    T2 = c
    m2b = differentiate(T2, "s") * var_("Pr") - RHO * RHO * differentiate(T2, "rho") ** 2
    branches.append({
        "branch": "beta0 = 0 (A = Y1)",
        "condition": "T_s*p_rho - rho^2*T_rho^2",
        "sign": sign_of(m2b, [], {"rho": "+"}),
        "admissible": False,
    })
    # branch 3: alpha0 = 0, A = beta0 Y2; iota_A Omega has the non-vanishing
    # -beta0/rho^2 d rho component, so A is never tangent.
    comp = -b0 / (RHO * RHO)
    branches.append({
        "branch": "alpha0 = 0 (A = Y2)",
        "condition": "iota_A Omega, d rho component",
        "sign": "nonzero",
        "admissible": False,
    })
    assert is_zero(comp).kind == "nonzero"
    return branches, False


# -- state files ----------------------------------------------------------------

def load_state(doc):
    """Build a StateSurface from the JSON state-file schema."""
    import json
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    params = {}
    for name, val in (doc.get("params") or {}).items():
        params[name] = None if val == "symbolic" else rat(str(val))
    ctx = ParseContext(variables={"rho", "s"} | set(params))
    P = parse_expr(doc["pressure"], ctx)
    T = parse_expr(doc["temperature"], ctx)
    subs = {k: num_(v) for k, v in params.items() if v is not None}
    if subs:
        P = substitute(P, subs)
        T = substitute(T, subs)
    assumptions = []
    for c in doc.get("constraints") or []:
        if ">" in c:
            lhs, _ = c.split(">", 1)
            assumptions.append((parse_expr(lhs, ctx), "+"))
        elif "<" in c:
            lhs, _ = c.split("<", 1)
            assumptions.append((parse_expr(lhs, ctx), "-"))
    dom = doc.get("domain") or {}
    s_max = dom.get("s_max")
    s_max = rat(str(s_max)) if s_max is not None else None
    return StateSurface(P, T, name=doc.get("name", "user-state"), params=params,
                        assumptions=assumptions, s_max=s_max)
