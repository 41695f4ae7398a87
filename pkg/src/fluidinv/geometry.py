"""Metric charts, tensor operators, and the flow systems built on them.

Four charts are wired in: the flat plane, the unit sphere (spherical
coordinates), the spherical layer (stereographic sphere times a line) and
flat 3-space.  Systems are built with pressure and temperature eliminated
through the thermodynamic state, so the equation manifolds are graphs over
the free jet coordinates.
"""

from .kernel import (
    Expr, EXPR_ZERO, EXPR_ONE, num_, var_, sin_, cos_, differentiate,
    substitute, eval_at, KernelError,
)
from .kernel.expr import expr_sum
from .jets import JetBundle


class DegenerateStateError(KernelError):
    pass


class MetricChart:
    """Spatial chart: metric, volume density, gravity, velocity names."""

    def __init__(self, name, coords, metric, sqrt_det, gravity, velocities):
        self.name = name
        self.coords = tuple(coords)
        self.metric = metric          # nested tuple of Expr
        self.sqrt_det = sqrt_det      # Expr, the volume-form density
        self.gravity = tuple(gravity)  # contravariant components, Expr
        self.velocities = tuple(velocities)
        self.dim = len(coords)
        self._inv = None
        self._christoffel = None

    def g(self, i, j):
        return self.metric[i][j]

    def det(self):
        if self.dim == 2:
            a, b = self.metric[0]
            c, d = self.metric[1]
        else:
            return _det3(self.metric)
        return a * d - b * c

    def ginv(self, i, j):
        if self._inv is None:
            d = self.det()
            if d.is_structural_zero:
                raise KernelError("metric on %r is degenerate" % self.name)
            if self.dim == 2:
                a, b = self.metric[0]
                _, dd = self.metric[1]
                self._inv = ((dd / d, -b / d), (-b / d, a / d))
            else:
                m = self.metric
                inv = []
                for r in range(3):
                    row = []
                    for c in range(3):
                        minor = [[m[i][j] for j in range(3) if j != r]
                                 for i in range(3) if i != c]
                        cof = minor[0][0] * minor[1][1] - minor[0][1] * minor[1][0]
                        row.append(cof * ((-1) ** (r + c)) / d)
                    inv.append(tuple(row))
                self._inv = tuple(inv)
        return self._inv[i][j]

    def bundle(self):
        return JetBundle(("t",) + self.coords, self.velocities + ("rho", "s"))

    def __repr__(self):
        return "MetricChart(%s)" % self.name


def _det3(m):
    return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))


_charts = {}


def chart(name):
    got = _charts.get(name)
    if got is not None:
        return got
    one = EXPR_ONE
    zero = EXPR_ZERO
    if name == "plane":
        ch = MetricChart("plane", ("x", "y"),
                         ((one, zero), (zero, one)), one,
                         (zero, zero), ("u", "v"))
    elif name == "sphere":
        sy = sin_(var_("y"))
        ch = MetricChart("sphere", ("x", "y"),
                         ((sy * sy, zero), (zero, one)), sy,
                         (zero, zero), ("u", "v"))
    elif name == "layer":
        x, y = var_("x"), var_("y")
        q = x * x + y * y + 1
        c = num_(4) / (q * q)
        ch = MetricChart("layer", ("x", "y", "z"),
                         ((c, zero, zero), (zero, c, zero), (zero, zero, one)),
                         c, (zero, zero, var_("g")), ("u", "v", "w"))
    elif name == "space3":
        ch = MetricChart("space3", ("x", "y", "z"),
                         ((one, zero, zero), (zero, one, zero), (zero, zero, one)),
                         one, (zero, zero, var_("g")), ("u", "v", "w"))
    else:
        raise KeyError("unknown chart %r" % name)
    _charts[name] = ch
    return ch


class ChristoffelTable:
    def __init__(self, chart, gamma):
        self.chart = chart
        self.gamma = gamma  # dict (k,i,j) -> Expr, symmetric in (i,j)

    def get(self, k, i, j):
        return self.gamma.get((k, i, j), EXPR_ZERO)

    def metricity_residuals(self):
        """nabla g = 0 componentwise; all must be structurally zero."""
        ch = self.chart
        n = ch.dim
        out = []
        for k in range(n):
            for i in range(n):
                for j in range(i, n):
                    r = differentiate(ch.g(i, j), ch.coords[k])
                    for l in range(n):
                        r = r - self.get(l, k, i) * ch.g(l, j)
                        r = r - self.get(l, k, j) * ch.g(i, l)
                    out.append(r)
        return out


def christoffel(ch):
    """Levi-Civita connection coefficients of the chart metric."""
    if ch._christoffel is not None:
        return ch._christoffel
    n = ch.dim
    dg = {}
    for i in range(n):
        for j in range(n):
            for k in range(n):
                dg[(i, j, k)] = differentiate(ch.g(i, j), ch.coords[k])
    gamma = {}
    for k in range(n):
        for i in range(n):
            for j in range(i, n):
                tot = EXPR_ZERO
                for l in range(n):
                    gl = ch.ginv(k, l)
                    if gl.is_structural_zero:
                        continue
                    tot = tot + gl * (dg[(j, l, i)] + dg[(i, l, j)] - dg[(i, j, l)])
                tot = tot / 2
                if not tot.is_structural_zero:
                    gamma[(k, i, j)] = tot
                    if i != j:
                        gamma[(k, j, i)] = tot
    table = ChristoffelTable(ch, gamma)
    ch._christoffel = table
    return table


class SymTensor2:
    """Symmetric covariant 2-tensor with Expr components."""

    def __init__(self, chart, comps):
        self.chart = chart
        self.comps = {}
        n = chart.dim
        for i in range(n):
            for j in range(n):
                e = comps.get((i, j), comps.get((j, i), EXPR_ZERO))
                other = comps.get((j, i), e)
                if not (e - other).is_structural_zero:
                    raise KernelError("tensor components not symmetric at %r" % ((i, j),))
                if not e.is_structural_zero:
                    self.comps[(i, j)] = e

    def get(self, i, j):
        return self.comps.get((i, j), EXPR_ZERO)

    def is_zero(self):
        return not self.comps

    def scaled(self, f):
        return SymTensor2(self.chart, {k: f * e for k, e in self.comps.items()})

    def plus(self, other):
        n = self.chart.dim
        return SymTensor2(self.chart, {(i, j): self.get(i, j) + other.get(i, j)
                                       for i in range(n) for j in range(n)})


def metric_tensor(ch):
    n = ch.dim
    return SymTensor2(ch, {(i, j): ch.g(i, j) for i in range(n) for j in range(n)})


def inner(A, B, ch):
    """<A,B> = A_ij B_kl g^ik g^jl."""
    n = ch.dim
    terms = []
    for i in range(n):
        for j in range(n):
            a = A.get(i, j)
            if a.is_structural_zero:
                continue
            for k in range(n):
                gik = ch.ginv(i, k)
                if gik.is_structural_zero:
                    continue
                for l in range(n):
                    b = B.get(k, l)
                    if b.is_structural_zero:
                        continue
                    gjl = ch.ginv(j, l)
                    if gjl.is_structural_zero:
                        continue
                    terms.append(a * b * gik * gjl)
    return expr_sum(terms)


def rate_of_deformation(ch, bundle=None):
    """D = (1/2) L_u g on the chart's velocity field."""
    b = bundle or ch.bundle()
    n = ch.dim
    comps = {}
    for i in range(n):
        for j in range(i, n):
            e = EXPR_ZERO
            for k in range(n):
                uk = var_(ch.velocities[k])
                dgk = differentiate(ch.g(i, j), ch.coords[k])
                if not dgk.is_structural_zero:
                    e = e + uk * dgk
                e = e + ch.g(k, j) * b.total_derivative(uk, ch.coords[i])
                e = e + ch.g(i, k) * b.total_derivative(uk, ch.coords[j])
            comps[(i, j)] = e / 2
    return SymTensor2(ch, comps)


def viscous_stress(D, ch, eta=None, zeta=None):
    """sigma' = 2 eta (D - <D,g>/<g,g> g) + zeta <D,g> g."""
    eta = eta if eta is not None else var_("eta")
    zeta = zeta if zeta is not None else var_("zeta")
    g = metric_tensor(ch)
    tr = inner(D, g, ch)            # <D,g>
    n = num_(ch.dim)                # <g,g>
    dev = D.plus(g.scaled(-tr / n))
    return dev.scaled(2 * eta).plus(g.scaled(zeta * tr))


def dissipation(sigma_p, D, ch):
    """Phi = <sigma', D>, the mechanical-energy dissipation rate."""
    return inner(sigma_p, D, ch)


def laplace_beltrami(f, ch, bundle=None):
    b = bundle or ch.bundle()
    n = ch.dim
    tot = EXPR_ZERO
    for i in range(n):
        inner_sum = EXPR_ZERO
        for j in range(n):
            gij = ch.ginv(i, j)
            if gij.is_structural_zero:
                continue
            inner_sum = inner_sum + gij * b.total_derivative(f, ch.coords[j])
        if inner_sum.is_structural_zero:
            continue
        tot = tot + b.total_derivative(ch.sqrt_det * inner_sum, ch.coords[i])
    return tot / ch.sqrt_det


def divergence_sym2(sigma, ch, bundle=None):
    """(div sigma)^l = g^{li} g^{jk} (D_k sigma_ij - Gamma terms)."""
    b = bundle or ch.bundle()
    n = ch.dim
    gam = christoffel(ch)
    # nabla_k sigma_ij
    nab = {}
    for i in range(n):
        for j in range(i, n):
            ds = b.total_derivatives(sigma.get(i, j), ch.coords)
            for k in range(n):
                terms = [ds[ch.coords[k]]]
                for m in range(n):
                    gk = gam.get(m, k, i)
                    if not gk.is_structural_zero:
                        terms.append(-(gk * sigma.get(m, j)))
                    gk = gam.get(m, k, j)
                    if not gk.is_structural_zero:
                        terms.append(-(gk * sigma.get(i, m)))
                nab[(k, i, j)] = nab[(k, j, i)] = expr_sum(terms)
    out = []
    for l in range(n):
        terms = []
        for i in range(n):
            gli = ch.ginv(l, i)
            if gli.is_structural_zero:
                continue
            for j in range(n):
                for k in range(n):
                    gjk = ch.ginv(j, k)
                    if gjk.is_structural_zero:
                        continue
                    terms.append(gli * gjk * nab[(k, i, j)])
        out.append(expr_sum(terms))
    return out


def grad_scalar(f, ch, bundle=None):
    b = bundle or ch.bundle()
    out = []
    for i in range(ch.dim):
        e = EXPR_ZERO
        for j in range(ch.dim):
            gij = ch.ginv(i, j)
            if not gij.is_structural_zero:
                e = e + gij * b.total_derivative(f, ch.coords[j])
        out.append(e)
    return out


def convective_terms(ch, bundle=None):
    """(nabla_u u)^i = u^j D_j u^i + Gamma^i_{jk} u^j u^k per component."""
    b = bundle or ch.bundle()
    gam = christoffel(ch)
    n = ch.dim
    out = []
    for i in range(n):
        ui = var_(ch.velocities[i])
        e = EXPR_ZERO
        for j in range(n):
            uj = var_(ch.velocities[j])
            e = e + uj * b.total_derivative(ui, ch.coords[j])
            for k in range(n):
                gk = gam.get(i, j, k)
                if not gk.is_structural_zero:
                    e = e + gk * uj * var_(ch.velocities[k])
        out.append(e)
    return out


class PDESystem:
    """A flow system in solved form over a jet bundle.

    `solved` maps the principal first-t-derivative coordinates (u_t, ...,
    rho_t, s_t) to right-hand sides free of principal coordinates.
    `eff_order` records the level of the equation tower at which each
    equation joins (continuity/inviscid momentum: 1; heat and viscous
    momentum: 2).
    """

    order = 2

    def __init__(self, chart, kind, state, solved, eff_order):
        self.chart = chart
        self.kind = kind
        self.state = state
        self.bundle = chart.bundle()
        self.solved = solved
        self.eff_order = eff_order
        self._rhs_cache = dict(solved)

    @property
    def equations(self):
        return [var_(q) - rhs for q, rhs in sorted(self.solved.items())]

    def equations_cleared(self):
        """Denominator-cleared equation list [(name, den * (q - rhs))].

        The cleared factor is a unit on the chart/state domain (powers of
        the metric conformal factor, rho, temperature), so tangency checks
        on these polynomials are equivalent and much cheaper.
        """
        from .kernel.expr import Expr as _E
        from .kernel.poly import POLY_ONE as _P1
        out = []
        for q, rhs in sorted(self.solved.items()):
            den = _E(rhs.den, _P1)
            out.append((q, var_(q) * den - _E(rhs.num, _P1)))
        return out

    # -- principal-coordinate bookkeeping ------------------------------------

    def principal_level(self, name):
        """Tower level at which this coordinate becomes principal (or None)."""
        c = self.bundle.parse_coord(name)
        if c is None:
            return None
        dep, midx = c
        base = self.bundle.jet(dep, ("t",))
        if base not in self.solved or "t" not in midx:
            return None
        return self.eff_order[base] + len(midx) - 1

    def is_principal(self, name, level):
        pl = self.principal_level(name)
        return pl is not None and pl <= level

    def solved_rhs(self, name):
        got = self._rhs_cache.get(name)
        if got is not None:
            return got
        dep, midx = self.bundle.parse_coord(name)
        rest = list(midx)
        rest.remove("t")
        rhs = self.solved[self.bundle.jet(dep, ("t",))]
        for i in rest:
            rhs = self.bundle.total_derivative(rhs, i)
        self._rhs_cache[name] = rhs
        return rhs

    def reduce(self, e, level=None):
        """Substitute solved forms (and their prolongations) to a fixpoint."""
        level = self.order if level is None else level
        for _ in range(64):
            targets = [v for v in sorted(e.variables()) if self.is_principal(v, level)]
            if not targets:
                return e
            e = substitute(e, {v: self.solved_rhs(v) for v in targets})
        raise KernelError("on-shell reduction did not close at level %d" % level)

    def principal_coords(self, level):
        out = []
        for name in self.bundle.coords_upto(level):
            if self.is_principal(name, level):
                out.append(name)
        return out

    def free_coords(self, level):
        return [n for n in self.bundle.coords_upto(level)
                if not self.is_principal(n, level)]

    def dim_eps(self, level):
        return len(self.bundle.coords_upto(level)) - len(self.principal_coords(level))

    def param_names(self, level=None):
        level = self.order if level is None else level
        coords = set(self.bundle.coords_upto(level + 2))
        names = set()
        for rhs in self.solved.values():
            names |= set(rhs.variables())
        return sorted(n for n in names if n not in coords)

    def sample_point(self, level, rng, policy, params=None, overrides=None):
        """Exact on-shell point: free coordinates random, principal solved."""
        assign = dict(params or {})
        principal = []
        for name in self.bundle.coords_upto(level):
            if self.is_principal(name, level):
                principal.append(name)
            else:
                assign[name] = _small_rat(rng)
        if overrides:
            for k, v in overrides.items():
                assign[k] = rat(v)
        def t_count(n):
            c = self.bundle.parse_coord(n)
            return (sum(1 for ch_ in c[1] if ch_ == "t"), len(c[1]))
        for name in sorted(principal, key=t_count):
            rhs = self.solved_rhs(name)
            assign[name] = eval_at(rhs, assign, policy)
        return assign


def _small_rat(rng):
    from .kernel import rat
    num = rng.randint(-32, 32)
    den = rng.randint(1, 8)
    return rat(num, den)


_system_cache = {}


def build_system(ch, kind, state):
    """Assemble the Euler or Navier-Stokes system on a chart with a state.

    Builds are memoized per (chart, kind, state) since the large charts
    are expensive to assemble.
    """
    key = (ch.name, kind, state.pressure, state.temperature)
    got = _system_cache.get(key)
    if got is not None:
        return got
    out = _build_system(ch, kind, state)
    _system_cache[key] = out
    return out


def _build_system(ch, kind, state):
    if kind not in ("euler", "navier_stokes"):
        raise KernelError("unknown system kind %r" % kind)
    b = ch.bundle()
    n = ch.dim
    rho = var_("rho")
    s = var_("s")
    P = state.pressure
    T = state.temperature
    if T.is_structural_zero:
        raise DegenerateStateError("temperature is identically zero")
    conv = convective_terms(ch, b)
    solved = {}
    eff = {}

    # continuity: rho_t + (1/sqrtg) sum D_i(rho sqrtg u^i) = 0
    cont = EXPR_ZERO
    for i in range(n):
        cont = cont + b.total_derivative(rho * ch.sqrt_det * var_(ch.velocities[i]),
                                         ch.coords[i])
    solved["rho_t"] = -cont / ch.sqrt_det
    eff["rho_t"] = 1

    # momentum
    D = sig_p = None
    if kind == "euler":
        gradP = grad_scalar(P, ch, b)
        for i in range(n):
            ut = b.jet(ch.velocities[i], ("t",))
            solved[ut] = -conv[i] - gradP[i] / rho + ch.gravity[i]
            eff[ut] = 1
    else:
        D = rate_of_deformation(ch, b)
        sig_p = viscous_stress(D, ch)
        sigma = sig_p.plus(metric_tensor(ch).scaled(-P))
        div = divergence_sym2(sigma, ch, b)
        for i in range(n):
            ut = b.jet(ch.velocities[i], ("t",))
            solved[ut] = -conv[i] + div[i] / rho + ch.gravity[i]
            eff[ut] = 2

    # heat
    us_grad = EXPR_ZERO
    for i in range(n):
        us_grad = us_grad + var_(ch.velocities[i]) * b.total_derivative(s, ch.coords[i])
    lap = laplace_beltrami(T, ch, b)
    k = var_("k")
    if kind == "euler":
        # T (s_t + u.grad s) - (k/rho) Lap T = 0
        solved["s_t"] = -us_grad + k * lap / (rho * T)
    else:
        # rho T (s_t + u.grad s) - Phi + k Lap T = 0
        phi = dissipation(sig_p, D, ch)
        solved["s_t"] = -us_grad + (phi - k * lap) / (rho * T)
    eff["s_t"] = 2

    return PDESystem(ch, kind, state, solved, eff)
