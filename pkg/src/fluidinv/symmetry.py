"""Symmetry verification: tangency of prolonged fields, theta, g_sym."""

from .kernel import (
    Expr, EXPR_ZERO, num_, var_, differentiate, substitute, is_zero,
    KernelError, rat,
)
from .jets import PointVectorField, prolong, bracket
from .thermo import (
    ThermoVectorField, thermo_combo, tangency_residual, state_symmetries,
    THERMO_COORDS,
)
from .linalg import solve_rat, rank_rat


class NotProjectableError(KernelError):
    """The field does not project to the thermodynamic (p,rho,s,T) space."""


def theta_hom(X):
    """theta(X) = X(rho) d_rho + X(s) d_s + X(p) d_p + X(T) d_T."""
    coeffs = {}
    bad_vars = set(X.bundle.indeps) | (set(X.bundle.deps) - {"rho", "s"})
    for c in THERMO_COORDS:
        e = X.coeff(c)
        if e.is_structural_zero:
            continue
        used = set(e.variables())
        if used & bad_vars:
            raise NotProjectableError(
                "theta coefficient on %s depends on %s" % (c, sorted(used & bad_vars)))
        coeffs[c] = e
    return ThermoVectorField(coeffs, name=("theta(%s)" % X.name) if X.name else None)


class SymmetryVerdict:
    def __init__(self, status, details=None, reason=None):
        self.status = status  # symmetry | probable-symmetry | not-symmetry
        self.details = details or {}
        self.reason = reason

    @property
    def ok(self):
        return self.status == "symmetry"

    def __repr__(self):
        return "SymmetryVerdict(%s%s)" % (
            self.status, ", %s" % self.reason if self.reason else "")


def is_symmetry(X, system):
    """Tangency of the prolonged field to the equation tower.

    Fields with thermodynamic components must additionally be tangent to
    the state surface (checked through theta); the kinematic projection is
    then tested on the reduced equations.
    """
    details = {}
    theta_part = {c: X.coeff(c) for c in ("p", "T", "rho", "s")}
    if any(not e.is_structural_zero for e in theta_part.values()):
        try:
            Z = theta_hom(X)
        except NotProjectableError as exc:
            return SymmetryVerdict("not-symmetry", reason=str(exc))
        if not Z.is_zero_field():
            r1, r2 = tangency_residual(Z, system.state)
            d1, d2 = is_zero(r1), is_zero(r2)
            details["state-tangency"] = (d1.kind, d2.kind)
            if d1.kind == "nonzero" or d2.kind == "nonzero":
                return SymmetryVerdict("not-symmetry", details,
                                       reason="state tangency fails")
    Xk = X.kinematic()
    worst = "symmetry"
    for q, E in system.equations_cleared():
        k = max((system.bundle.order_of(v) or 0) for v in E.variables())
        Xhat = prolong(Xk, max(k, 1))
        r = system.reduce(Xhat.apply(E), level=system.order)
        dec = is_zero(r)
        details[q] = dec.kind
        if dec.kind == "nonzero":
            return SymmetryVerdict("not-symmetry", details,
                                   reason="equation for %s" % q)
        if dec.kind == "zero-probable":
            worst = "probable-symmetry"
    return SymmetryVerdict(worst, details)


def express_in_basis(F, gens):
    """Rational constants c with F = sum c_i gens_i, or None.

    Works coefficient-function by coefficient-function, matching monomials
    of the canonical forms (coefficients must be rational multiples of a
    common denominator structure, which holds for the catalog algebras).
    """
    coords = set()
    for G in gens:
        coords.update(G.coeffs)
    if hasattr(F, "coords"):
        coords.update(F.coeffs)
    rows = []
    rhs = []

    def features(e):
        out = {}
        den_key = e.den.sort_key()
        for m, c in e.num.t.items():
            out[(den_key, m)] = c
        return out

    per_gen = []
    for G in gens:
        per_gen.append({c: features(G.coeff(c)) for c in sorted(coords)})
    target = {c: features(F.coeff(c)) for c in sorted(coords)}
    feats = {}
    for c in sorted(coords):
        keys = set(target[c])
        for pg in per_gen:
            keys |= set(pg[c])
        for kf in sorted(keys, key=repr):
            row = [pg[c].get(kf, 0) for pg in per_gen]
            rows.append(row)
            rhs.append(target[c].get(kf, 0))
    if not rows:
        return tuple(rat(0) for _ in gens)
    return solve_rat(rows, rhs)


class LieAlgebraPresentation:
    """Named generators plus the expected sparse bracket table.

    table: {(name_i, name_j): {name_k: rational}} for i < j; omitted pairs
    commute.
    """

    def __init__(self, generators, table):
        self.generators = list(generators)
        self.by_name = {g.name: g for g in generators}
        self.table = table

    def verify(self):
        """Check every bracket against the table; returns mismatches."""
        bad = []
        gens = self.generators
        for i in range(len(gens)):
            for j in range(i + 1, len(gens)):
                got = bracket(gens[i], gens[j])
                want = self.table.get((gens[i].name, gens[j].name), {})
                expect = {}
                for name, cf in want.items():
                    expect[name] = rat(cf)
                coeffs = express_in_basis(got, gens)
                if coeffs is None:
                    bad.append((gens[i].name, gens[j].name, "not in span"))
                    continue
                found = {gens[k].name: coeffs[k] for k in range(len(gens))
                         if coeffs[k] != 0}
                if found != {n: c for n, c in expect.items() if c != 0}:
                    bad.append((gens[i].name, gens[j].name,
                                "expected %s, computed %s" % (expect, found)))
        return bad


def thermo_express(Z, H):
    """Coefficients of a thermo field in the h basis (rational), or None."""
    rows = []
    rhs = []
    for c in THERMO_COORDS:
        keys = set()
        feats = []
        for Y in H:
            f = {}
            e = Y.coeff(c)
            for m, co in e.num.t.items():
                f[m] = co
            feats.append(f)
            keys |= set(f)
        tgt = {}
        for m, co in Z.coeff(c).num.t.items():
            tgt[m] = co
        keys |= set(tgt)
        for m in sorted(keys, key=lambda m: m.sort_key()):
            rows.append([f.get(m, 0) for f in feats])
            rhs.append(tgt.get(m, 0))
    if not rows:
        return tuple(rat(0) for _ in H)
    return solve_rat(rows, rhs)


def kernel_of_theta(generators, H):
    """(kernel dimension, image rank) of theta on the spanned algebra."""
    rows = []
    for X in generators:
        Z = theta_hom(X)
        coeffs = thermo_express(Z, H)
        if coeffs is None:
            raise KernelError("theta image of %s is outside the h span" % X.name)
        rows.append(list(coeffs))
    r = rank_rat(rows)
    return len(generators) - r, r


def lift_of(Z_coeffs, H, thermo_gens):
    """A combination of the scenario's thermodynamic generators with
    theta-image sum(Z_coeffs . H); coefficients may be symbolic."""
    from .linalg import solve_expr
    imgs = [thermo_express(theta_hom(X), H) for X in thermo_gens]
    if any(v is None for v in imgs):
        raise KernelError("thermodynamic generator outside the h span")
    rows = []
    rhs = []
    for k in range(len(H)):
        rows.append([num_(img[k]) for img in imgs])
        z = Z_coeffs[k]
        rhs.append(z if isinstance(z, Expr) else num_(z))
    sol = solve_expr(rows, rhs)
    if sol is None:
        raise KernelError("theta image not attainable from the generators")
    out = None
    for c, X in zip(sol, thermo_gens):
        if c.is_structural_zero:
            continue
        piece = X.scaled(c)
        out = piece if out is None else out + piece
    if out is None:
        out = PointVectorField(thermo_gens[0].bundle, {})
    return out


def assemble_gsym(scenario, L):
    """g_m generators plus lifts of a basis of the state's h_t."""
    ht = state_symmetries(L, scenario.h_fields)
    out = list(scenario.gm_fields)
    thermo_gens = [g for g in scenario.g_fields if g.name not in
                   {f.name for f in scenario.gm_fields}]
    for idx, vec in enumerate(ht):
        X = lift_of(vec, scenario.h_fields, thermo_gens)
        X.name = "lift%d" % (idx + 1)
        out.append(X)
    return out
