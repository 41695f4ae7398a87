"""Scenario catalog and verification of invariants, ranks and counts.

Scenario data lives in JSON files under fluidinv/catalog (override with the
FLUIDINV_CATALOG environment variable).  Every catalog entry carries an
anchor string; loading fails if one is missing.
"""

import json
import os
import random

from .kernel import (
    Expr, EXPR_ZERO, EXPR_ONE, num_, var_, rat, differentiate, substitute,
    is_zero, eval_at, eval_with_gradient, SamplePolicy, KernelError, PoleError,
)
from .kernel.expr import expr_sum
from .parser import parse_expr, ParseContext, STANDARD_PARAMS
from .jets import PointVectorField, TotalDerivation, prolong, bracket, derivation_commutator
from .geometry import chart, build_system
from .thermo import (
    StateSurface, ThermoVectorField, h_algebra, family_from_classification,
    ideal_gas, noncommutative_search,
)
from .linalg import rank_rat
from .symmetry import LieAlgebraPresentation, theta_hom, thermo_express


class CatalogError(KernelError):
    pass


class FrameDegenerateError(KernelError):
    pass


SCENARIO_NAMES = ("euler-plane", "euler-sphere", "euler-layer", "ns-plane",
                  "ns-space3", "ns-sphere", "ns-layer")


def catalog_dir():
    override = os.environ.get("FLUIDINV_CATALOG")
    if override:
        return override
    return os.path.join(os.path.dirname(__file__), "catalog")


def _need_anchor(entry, where):
    if isinstance(entry, dict) and not entry.get("anchor"):
        raise CatalogError("catalog entry lacks an anchor: %s" % where)


class Scenario:
    def __init__(self, doc):
        self.doc = doc
        self.name = doc["name"]
        _need_anchor(doc, self.name)
        self.chart = chart(doc["geometry"])
        self.kind = doc["kind"]
        self.bundle = self.chart.bundle()
        self.anchor = doc["anchor"]

        ctx = self.bundle.parse_ctx(variables=set(STANDARD_PARAMS) | {"p", "T"})
        self.g_fields = []
        for g in doc["generators"]:
            _need_anchor(g, "%s generator %s" % (self.name, g.get("name")))
            self.g_fields.append(PointVectorField.parse(
                g["field"], self.bundle, context=ctx, name=g["name"]))
        self.by_name = {f.name: f for f in self.g_fields}
        self.gm_fields = [self.by_name[n] for n in doc["g_m"]]
        self.h_fields = h_algebra(doc["h_kind"])
        self.h_by_name = {f.name: f for f in self.h_fields}

        self.structure_g = {(a, b): c for a, b, c in doc.get("structure_g", [])}
        self.structure_h = {(a, b): c for a, b, c in doc.get("structure_h", [])}
        self.theta_images = doc.get("theta_images", {})

        self.invariants0 = {}
        self.invariants1 = {}
        self.derivations = {}
        for d in doc.get("derivations", []):
            _need_anchor(d, "%s derivation %s" % (self.name, d.get("name")))
            coeffs = {i: parse_expr(t, ctx) for i, t in d["coeffs"].items()}
            self.derivations[d["name"]] = TotalDerivation(self.bundle, coeffs,
                                                          name=d["name"])
        for inv in doc.get("invariants0", []):
            _need_anchor(inv, "%s invariant %s" % (self.name, inv.get("name")))
            self.invariants0[inv["name"]] = parse_expr(inv["expr"], ctx)
        for inv in doc.get("invariants1", []):
            _need_anchor(inv, "%s invariant %s" % (self.name, inv.get("name")))
            if "expr" in inv:
                self.invariants1[inv["name"]] = parse_expr(inv["expr"], ctx)
            elif "apply" in inv:
                dname, base = inv["apply"]
                src = self.invariants0.get(base)
                if src is None:
                    src = parse_expr(base, ctx)
                self.invariants1[inv["name"]] = self.derivations[dname](src)
            else:
                raise CatalogError("invariant %s has no expression" % inv["name"])
        if doc.get("conjugation_frame"):
            mats = conjugation_invariants(self.chart, recenter=True)
            self.invariants1.update(mats)

        self.independence_condition = (
            parse_expr(doc["independence_condition"], ctx)
            if doc.get("independence_condition") else None)

        self.singular = doc.get("singular_sets", {})
        self.counts = doc.get("counts", {})
        self.hilbert = doc.get("hilbert", [])
        self.poincare = doc.get("poincare")
        self.derived_from = doc.get("derived_from", [])
        self.gsym_cases = doc.get("gsym_cases", [])
        for c in self.gsym_cases:
            _need_anchor(c, "%s gsym case" % self.name)
        self.families = doc.get("families", [])
        for f in self.families:
            _need_anchor(f, "%s family" % self.name)
        self.state_instances = doc.get("state_instances", [])
        self._systems = {}
        self._ctx = ctx

    # -- helpers -------------------------------------------------------------

    def parse(self, text, bindings=None):
        ctx = self._ctx
        if bindings:
            ctx = ctx.extended(bindings=bindings)
        return parse_expr(text, ctx)

    def invariant_bindings(self):
        out = dict(self.invariants0)
        out.update(self.invariants1)
        return out

    def system(self, state=None):
        if state is None:
            state = StateSurface.generic()
        key = (state.pressure, state.temperature)
        got = self._systems.get(key)
        if got is None:
            got = build_system(self.chart, self.kind, state)
            self._systems[key] = got
        return got

    def state_instance(self, spec_):
        if spec_.get("builtin") == "ideal-gas":
            return ideal_gas()
        params = dict(spec_.get("params", {}))
        return family_from_classification(self.name, spec_["family"], params)

    def algebra_presentation(self, which="g"):
        if which == "g":
            names = {}
            for (a, b), c in self.structure_g.items():
                names[(a, b)] = c
            return LieAlgebraPresentation(self.g_fields, names)
        table = {}
        for (a, b), c in self.structure_h.items():
            table[(a, b)] = c
        return _ThermoPresentation(self.h_fields, table)

    def __repr__(self):
        return "Scenario(%s)" % self.name


class _ThermoPresentation:
    def __init__(self, fields, table):
        self.fields = fields
        self.table = table

    def verify(self):
        from .thermo import thermo_bracket
        bad = []
        fs = self.fields
        for i in range(len(fs)):
            for j in range(i + 1, len(fs)):
                got = thermo_bracket(fs[i], fs[j])
                coeffs = thermo_express(got, fs)
                if coeffs is None:
                    bad.append((fs[i].name, fs[j].name, "not in span"))
                    continue
                found = {fs[k].name: coeffs[k] for k in range(len(fs)) if coeffs[k] != 0}
                want = {n: rat(c) for n, c in
                        self.table.get((fs[i].name, fs[j].name), {}).items()}
                want = {n: c for n, c in want.items() if c != 0}
                if found != want:
                    bad.append((fs[i].name, fs[j].name,
                                "expected %s, computed %s" % (want, found)))
        return bad


_scenarios = {}


def load_scenario(name):
    got = _scenarios.get(name)
    if got is not None:
        return got
    path = os.path.join(catalog_dir(), name.replace("-", "_") + ".json")
    with open(path) as fh:
        doc = json.load(fh)
    sc = Scenario(doc)
    if not os.environ.get("FLUIDINV_CATALOG"):
        _scenarios[name] = sc
    return sc


def all_scenarios():
    return [load_scenario(n) for n in SCENARIO_NAMES]


# -- conjugation-frame invariants (3D flat flows) ------------------------------

def conjugation_invariants(ch, recenter=True, gravity=None):
    """Rotation invariants from H^-1 V H plus the frame dot products.

    The frame columns are the gravity-adjusted acceleration, grad rho and
    grad s; `recenter` composes with the flow-box translation so t-jets
    appear in material form.
    """
    b = ch.bundle()
    g = gravity if gravity is not None else ch.gravity[2]
    u, v, w = (var_(n) for n in ch.velocities)
    xyz = ch.coords

    def mat(dep):
        return [var_(b.jet(dep, (c,))) for c in xyz]

    def tder(dep):
        e = var_(b.jet(dep, ("t",)))
        if recenter:
            vel = (u, v, w)
            for i, c in enumerate(xyz):
                e = e + vel[i] * var_(b.jet(dep, (c,)))
        return e

    a_g = [tder("u"), tder("v"), tder("w") - g]
    gr = mat("rho")
    gs = mat("s")
    V = [mat("u"), mat("v"), mat("w")]
    H = [[a_g[i], gr[i], gs[i]] for i in range(3)]

    def det3(m):
        return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))

    detH = det3(H)
    if detH.is_structural_zero:
        raise FrameDegenerateError("frame determinant is identically zero")
    # adjugate
    adj = [[None] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            r = [k for k in range(3) if k != j]
            c = [k for k in range(3) if k != i]
            minor = (H[r[0]][c[0]] * H[r[1]][c[1]] - H[r[0]][c[1]] * H[r[1]][c[0]])
            adj[i][j] = minor * ((-1) ** (i + j))
    VH = [[expr_sum(V[i][k] * H[k][j] for k in range(3)) for j in range(3)]
          for i in range(3)]
    M = [[expr_sum(adj[i][k] * VH[k][j] for k in range(3)) / detH for j in range(3)]
         for i in range(3)]

    def dot(a, bb):
        return expr_sum(a[i] * bb[i] for i in range(3))

    out = {}
    for i in range(3):
        for j in range(3):
            out["J%d%d" % (i + 1, j + 1)] = M[i][j]
    out["gradrho2"] = dot(gr, gr)
    out["grads2"] = dot(gs, gs)
    out["gradrho_grads"] = dot(gr, gs)
    out["ag2"] = dot(a_g, a_g)
    out["gradrho_ag"] = dot(gr, a_g)
    out["grads_ag"] = dot(gs, a_g)
    out["E1"] = tder("s")
    return out


# -- invariance and derivations -------------------------------------------------

def check_invariance(J, fields, system, level=None):
    """X^(k)(J) reduced on-shell for every field; conjunction verdict."""
    level = level or system.order
    k = max((system.bundle.order_of(v) or 0) for v in J.variables())
    k = max(k, 1)
    worst = "zero-certified"
    for X in fields:
        Xh = prolong(X.kinematic(), k)
        r = system.reduce(Xh.apply(J), level=level)
        dec = is_zero(r)
        if dec.kind == "nonzero":
            return dec, X.name
        if dec.kind == "zero-probable":
            worst = "zero-probable"
    return is_zero(EXPR_ZERO) if worst == "zero-certified" else _probable(), None


def _probable():
    from .kernel import ZeroDecision, ZERO_PROBABLE
    return ZeroDecision(ZERO_PROBABLE)


def check_derivations(scenario, state=None):
    """Commutators with g_m vanish on-shell; independence determinant is a
    jet-free multiple of the stated condition."""
    system = scenario.system(state)
    failures = []
    for dname, nab in scenario.derivations.items():
        for X in scenario.gm_fields:
            Xh = prolong(X.kinematic(), 2)
            C = derivation_commutator(Xh, nab)
            for i, ce in C.coeffs.items():
                r = system.reduce(ce, level=system.order)
                dec = is_zero(r)
                if not dec.is_zero:
                    failures.append((dname, X.name, i))
    # linear independence
    names = list(scenario.derivations)
    n = len(scenario.bundle.indeps)
    if len(names) == n and scenario.independence_condition is not None:
        rows = [[scenario.derivations[d].coeffs[i] for i in scenario.bundle.indeps]
                for d in names]
        det = _det_expr(rows)
        cond = scenario.independence_condition
        ratio = det / cond
        jet_vars = [v for v in ratio.variables()
                    if scenario.bundle.parse_coord(v) is not None]
        if jet_vars or is_zero(det).kind != "nonzero":
            failures.append(("independence", "det", tuple(jet_vars)))
    return failures


def _det_expr(rows):
    n = len(rows)
    if n == 1:
        return rows[0][0]
    total = EXPR_ZERO
    for j in range(n):
        a = rows[0][j]
        if a.is_structural_zero:
            continue
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        term = a * _det_expr(minor)
        total = total + (term if j % 2 == 0 else -term)
    return total


# -- exact on-shell sampling and ranks ------------------------------------------

def _param_values(names, rng):
    vals = {}
    for n in sorted(names):
        vals[n] = rat(rng.randint(1, 9), rng.randint(1, 4))
    return vals


def _principal_order(system, principal):
    def key(n):
        dep, midx = system.bundle.parse_coord(n)
        return (sum(1 for c in midx if c == "t"), len(midx))
    return sorted(principal, key=key)


def sample_with_gradients(system, exprs, level, seed, overrides=None,
                          max_attempts=8):
    """On-shell point plus chained gradients of exprs w.r.t. free coords."""
    coords = system.bundle.coords_upto(level)
    principal = [c for c in coords if system.is_principal(c, level)]
    free = [c for c in coords if not system.is_principal(c, level)]
    pnames = set()
    for rhs in system.solved.values():
        pnames |= set(rhs.variables())
    for e in exprs:
        pnames |= set(e.variables())
    pnames -= set(system.bundle.coords_upto(level + 2))
    wrt = frozenset(free) | frozenset(principal)
    for attempt in range(max_attempts):
        rng = random.Random((seed, attempt, "rank"))
        policy = SamplePolicy(seed=(seed, attempt))
        assign = _param_values(pnames, rng)
        for c in free:
            assign[c] = rat(rng.randint(-24, 24), rng.randint(1, 6))
        if overrides:
            assign.update(overrides)
        grads = {}
        try:
            for pcoord in _principal_order(system, principal):
                rhs = system.solved_rhs(pcoord)
                val, g = eval_with_gradient(rhs, assign, wrt, policy=policy)
                combined = {}
                for k, wv in g.items():
                    if k in grads:
                        for f, x in grads[k].items():
                            combined[f] = combined.get(f, rat(0)) + wv * x
                    else:
                        combined[k] = combined.get(k, rat(0)) + wv
                assign[pcoord] = val
                grads[pcoord] = combined
            rows = []
            for e in exprs:
                val, g = eval_with_gradient(e, assign, wrt, policy=policy)
                combined = {}
                for k, wv in g.items():
                    if k in grads:
                        for f, x in grads[k].items():
                            combined[f] = combined.get(f, rat(0)) + wv * x
                    else:
                        combined[k] = combined.get(k, rat(0)) + wv
                rows.append(combined)
            return assign, rows, free
        except (PoleError, ZeroDivisionError):
            continue
    raise KernelError("could not sample a pole-free on-shell point")


def independence_rank(exprs, system, level, seed, columns="all", retries=3):
    """Exact Jacobian rank at random on-shell points (max over retries).

    columns="all": every free coordinate up to the level;
    columns="top": only the free coordinates of pure top order.
    """
    best = 0
    for r in range(retries):
        assign, rows, free = sample_with_gradients(system, exprs, level,
                                                   seed=(seed, r))
        if columns == "top":
            cols = [c for c in free
                    if (system.bundle.order_of(c) or 0) == level]
        else:
            cols = free
        mat = [[row.get(c, rat(0)) for c in cols] for row in rows]
        rank = rank_rat(mat)
        if rank > best:
            best = rank
    return best


def orbit_dimension(scenario, level, seed, overrides=None, state=None,
                    retries=3):
    """Rank of the prolonged g_m generator values at an on-shell point."""
    system = scenario.system(state)
    coords = system.bundle.coords_upto(level)
    best = 0
    for r in range(retries):
        rng = random.Random((seed, r, "orbit"))
        policy = SamplePolicy(seed=(seed, r, "orbit"))
        pnames = set()
        for rhs in system.solved.values():
            pnames |= set(rhs.variables())
        pnames -= set(system.bundle.coords_upto(level + 2))
        params = _param_values(pnames, rng)
        try:
            assign = system.sample_point(level, rng, policy, params=params)
            if overrides:
                # re-sample with pinned values for some free coordinates
                assign = system.sample_point(level, rng, policy, params=params,
                                             overrides=overrides)
            rows = []
            for X in scenario.gm_fields:
                Xh = prolong(X.kinematic(), level)
                row = []
                for c in coords:
                    e = Xh.coeff(c)
                    row.append(eval_at(e, assign, policy=policy)
                               if not e.is_structural_zero else rat(0))
                rows.append(row)
            rank = rank_rat(rows)
            if rank > best:
                best = rank
        except (PoleError, ZeroDivisionError):
            continue
    return best


def singular_membership(assign, scenario, policy=None):
    """Evaluate the singular-set defining expressions at a point."""
    out = {}
    policy = policy or SamplePolicy()
    binds = scenario.invariant_bindings()
    for name, spec_ in scenario.singular.items():
        if "zero" in spec_:
            vals = [eval_at(scenario.parse(t, binds), assign, policy=policy)
                    for t in spec_["zero"]]
            out[name] = all(v == 0 for v in vals)
        elif "product_zero" in spec_:
            v = eval_at(scenario.parse(spec_["product_zero"], binds), assign,
                        policy=policy)
            out[name] = (v == 0)
    return out


# -- Hilbert / Poincare ----------------------------------------------------------

def _poly_coeffs_in_z(p):
    coeffs = {}
    for m, c in p.t.items():
        deg = 0
        for g, ex in m.pairs:
            if g.tag != 0 or g.a != "z":
                raise KernelError("Poincare function must be univariate in z")
            deg = ex
        coeffs[deg] = coeffs.get(deg, rat(0)) + c
    return coeffs


def poincare_series(text, k_max):
    """Coefficients a_0..a_kmax of a rational function of z."""
    e = parse_expr(text, ParseContext(variables={"z"}))
    num = _poly_coeffs_in_z(e.num)
    den = _poly_coeffs_in_z(e.den)
    d0 = den.get(0)
    if not d0:
        raise KernelError("Poincare denominator vanishes at z=0")
    out = []
    for k in range(k_max + 1):
        v = num.get(k, rat(0))
        for j in range(1, k + 1):
            dj = den.get(j)
            if dj:
                v -= dj * out[k - j]
        out.append(v / d0)
    return out


def hilbert_value(pieces, k):
    for kmin, kmax, formula in pieces:
        if k >= kmin and (kmax is None or k <= kmax):
            e = parse_expr(formula, ParseContext(variables={"k"}))
            return eval_at(e, {"k": rat(k)})
    raise KernelError("no Hilbert piece covers k=%d" % k)


def verify_hilbert_poincare(scenario, k_max=8, seed=5):
    """Series-vs-piecewise comparison plus the codimension cross-check."""
    series = poincare_series(scenario.poincare, k_max)
    mismatches = []
    for k in range(k_max + 1):
        want = hilbert_value(scenario.hilbert, k)
        if series[k] != want:
            mismatches.append((k, series[k], want))
    cross = []
    for level in (0, 1):
        dim = scenario.system().dim_eps(level)
        orb = orbit_dimension(scenario, level, seed=seed)
        want = sum(hilbert_value(scenario.hilbert, j) for j in range(level + 1))
        cross.append((level, dim - orb, want))
    ok = not mismatches and all(got == want for _, got, want in cross)
    return ok, mismatches, cross


# -- g_sym fields -----------------------------------------------------------------

def _gsym_context(scenario, params):
    binds = scenario.invariant_bindings()
    sub = {k: num_(rat(str(v))) for k, v in params.items()}
    return binds, sub


def check_gsym_field(scenario, case, params=None):
    """Verify a classified-symmetry invariant field case.

    (a) if the catalog stores the action of the thermodynamic generator on
    the kinematic invariants, re-derive and match it;
    (b) every listed combination is annihilated by the extended algebra;
    (c) every scaled derivation commutes with it (the geometric part follows
    from check_derivations plus invariance of the scale factors, which is
    also verified here).
    """
    spec_ = None
    for c in scenario.gsym_cases:
        if c["case"] == case:
            spec_ = c
            break
    if spec_ is None:
        raise KeyError("no gsym case %r in %s" % (case, scenario.name))
    params = dict(params or spec_["default_params"])
    binds, sub = _gsym_context(scenario, params)
    for gtext in spec_.get("genericity", []):
        val = substitute(scenario.parse(gtext, binds), sub)
        if val.is_structural_zero:
            raise KernelError("genericity violated: %s = 0" % gtext)
    for rtext in spec_.get("relations", []):
        val = substitute(scenario.parse(rtext, binds), sub)
        if not val.is_structural_zero:
            raise KernelError("relation violated: %s != 0" % rtext)
    system = scenario.system()
    fields = []
    for lift_text in spec_["lifts"]:
        combo = None
        for piece, coeff in _parse_lift(lift_text, scenario, sub):
            part = piece.scaled(coeff)
            combo = part if combo is None else combo + part
        fields.append(combo)
    failures = []
    # (a) stored action table
    action = spec_.get("action")
    if action:
        A = fields[0]
        Ah = prolong(A.kinematic(), 2)
        for name, text in action.items():
            target = substitute(scenario.parse(text, binds), sub)
            lhs = system.reduce(Ah.apply(binds.get(name, var_(name))),
                                level=system.order)
            if not is_zero(lhs - target).is_zero:
                failures.append(("action", name))
    # (b) annihilation of the listed combinations
    for text in spec_["invariants"]:
        J = substitute(scenario.parse(text, binds), sub)
        for A in fields:
            Ah = prolong(A.kinematic(), 2)
            r = system.reduce(Ah.apply(J), level=system.order)
            if not is_zero(r).certified:
                failures.append(("invariant", text, A.name or "A"))
    # (c) scaled derivations
    for ftext, dname in spec_["scaled_derivations"]:
        factor = substitute(scenario.parse(ftext, binds), sub)
        nab = scenario.derivations[dname].scaled(factor)
        for A in fields:
            Ah = prolong(A.kinematic(), 2)
            C = derivation_commutator(Ah, nab)
            for i, ce in C.coeffs.items():
                r = system.reduce(ce, level=system.order)
                if not is_zero(r).certified:
                    failures.append(("derivation", dname, A.name or "A", i))
        # geometric part: the scale factor must be g_m-invariant
        for X in scenario.gm_fields:
            Xh = prolong(X.kinematic(), 2)
            r = system.reduce(Xh.apply(factor), level=system.order)
            if not is_zero(r).certified:
                failures.append(("scale-factor", dname, X.name))
    return failures


def _parse_lift(text, scenario, sub):
    """Parse 'xi1*X7 + xi2*X8 + ...' into (field, substituted coeff) pairs."""
    out = []
    for chunk in text.replace("-", "+-").split("+"):
        chunk = chunk.strip()
        if not chunk:
            continue
        neg = chunk.startswith("-")
        if neg:
            chunk = chunk[1:]
        if "*" in chunk:
            coeff_text, name = chunk.rsplit("*", 1)
            coeff = scenario.parse(coeff_text)
        else:
            name = chunk
            coeff = EXPR_ONE
        coeff = substitute(coeff, sub)
        if neg:
            coeff = -coeff
        out.append((scenario.by_name[name.strip()], coeff))
    return out
