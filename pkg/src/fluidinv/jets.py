"""Jet bundles, total derivatives, prolongation, invariant derivations."""

from itertools import combinations_with_replacement

from .kernel import (
    Expr, EXPR_ZERO, EXPR_ONE, var_, differentiate, substitute, KernelError,
)
from .kernel.expr import gradient, expr_sum
from .parser import ParseContext, NotAPointFieldError, parse_vector_field


class JetBundle:
    """Coordinates for sections of a trivial bundle and their jets.

    Jet coordinates are named `dep + '_' + index`, the index letters sorted
    with t first and the rest alphabetical (mixed partials share a slot).
    Order is extended lazily; no cap is stored.
    """

    def __init__(self, indeps, deps):
        self.indeps = tuple(indeps)
        self.deps = tuple(deps)
        self._pos = {v: i for i, v in enumerate(self.indeps)}

    def __repr__(self):
        return "JetBundle(%s; %s)" % (",".join(self.indeps), ",".join(self.deps))

    def jet(self, dep, midx):
        if not midx:
            return dep
        letters = sorted(midx, key=self._pos.__getitem__)
        return dep + "_" + "".join(letters)

    def parse_coord(self, name):
        """(dep, midx tuple) for any coordinate name, or None."""
        if name in self.deps:
            return name, ()
        if "_" not in name:
            return None
        base, suffix = name.split("_", 1)
        if base not in self.deps or not suffix:
            return None
        if not all(ch in self._pos for ch in suffix):
            return None
        return base, tuple(sorted(suffix, key=self._pos.__getitem__))

    def order_of(self, name):
        c = self.parse_coord(name)
        if c is not None:
            return len(c[1])
        if name in self.indeps:
            return 0
        return None

    def multi_indices(self, order):
        return list(combinations_with_replacement(self.indeps, order))

    def coords0(self):
        return self.indeps + self.deps

    def jet_coords(self, order):
        """All jet coordinate names of exactly this order."""
        return [self.jet(d, J) for d in self.deps for J in self.multi_indices(order)]

    def coords_upto(self, order):
        out = list(self.coords0())
        for k in range(1, order + 1):
            out.extend(self.jet_coords(k))
        return out

    def parse_ctx(self, max_order=None, variables=(), bindings=None,
                  state_symbols=()):
        return ParseContext(
            variables=set(self.indeps) | set(self.deps) | set(variables),
            bindings=bindings, jet_deps=self.deps, jet_indeps=self.indeps,
            max_order=max_order, state_symbols=state_symbols)

    def total_derivative(self, e, i):
        """D_i e = de/dx_i + sum over jets u^a_{J,i} * de/du^a_J."""
        return self.total_derivatives(e, (i,))[i]

    def total_derivatives(self, e, dirs):
        """All requested D_i at once (the gradient is shared)."""
        for i in dirs:
            if i not in self._pos:
                raise KernelError("%r is not an independent variable" % i)
        wanted = set(dirs)
        coords = []
        for name in e.variables():
            c = self.parse_coord(name)
            if c is not None:
                coords.append((name, c))
                wanted.add(name)
        grads = gradient(e, wanted)
        out = {}
        for i in dirs:
            terms = []
            g0 = grads.get(i)
            if g0 is not None:
                terms.append(g0)
            for name, (dep, midx) in coords:
                d = grads.get(name)
                if d is not None:
                    terms.append(var_(self.jet(dep, midx + (i,))) * d)
            out[i] = expr_sum(terms)
        return out


def total_derivative(e, i, bundle):
    return bundle.total_derivative(e, i)


class PointVectorField:
    """Vector field on J0 coordinates (plus optional extra fiber slots).

    `coeffs` maps coordinate name -> Expr; missing entries are zero.  The
    extra slots (thermodynamic p, T) take part in brackets and the
    thermodynamic projection but are dropped before prolongation.
    """

    def __init__(self, bundle, coeffs, extra=("p", "T"), name=None):
        self.bundle = bundle
        self.extra = tuple(extra)
        self.name = name
        self.coords = bundle.coords0() + self.extra
        self.coeffs = {}
        jet_ok = set(self.coords)
        for c, e in coeffs.items():
            if c not in self.coords:
                raise NotAPointFieldError("unknown coordinate %r" % c)
            if e.is_structural_zero:
                continue
            for v in e.variables():
                o = bundle.order_of(v)
                if o is not None and o >= 1:
                    raise NotAPointFieldError(
                        "coefficient of d/d%s uses jet coordinate %r" % (c, v))
            self.coeffs[c] = e
        self._key = None

    @classmethod
    def parse(cls, text, bundle, context=None, extra=("p", "T"), name=None):
        if context is None:
            from .parser import STANDARD_PARAMS
            context = bundle.parse_ctx(variables=set(extra) | set(STANDARD_PARAMS))
        coords = bundle.coords0() + tuple(extra)
        coeffs = parse_vector_field(text, coords, context)
        return cls(bundle, coeffs, extra=extra, name=name)

    def coeff(self, c):
        return self.coeffs.get(c, EXPR_ZERO)

    def kinematic(self):
        """The field with thermodynamic p/T slots dropped."""
        if not any(c in self.coeffs for c in self.extra):
            return self
        coeffs = {c: e for c, e in self.coeffs.items() if c not in self.extra}
        return PointVectorField(self.bundle, coeffs, extra=self.extra, name=self.name)

    def apply0(self, e):
        """Directional derivative on functions of the J0 (+extra) coordinates."""
        grads = gradient(e, self.coeffs.keys())
        return expr_sum(self.coeffs[c] * d for c, d in grads.items())

    def key(self):
        if self._key is None:
            self._key = tuple(sorted((c, e.sort_key()) for c, e in self.coeffs.items()))
        return self._key

    def __hash__(self):
        return hash(self.key())

    def __eq__(self, other):
        return isinstance(other, PointVectorField) and self.key() == other.key()

    def __add__(self, other):
        coeffs = dict(self.coeffs)
        for c, e in other.coeffs.items():
            coeffs[c] = coeffs.get(c, EXPR_ZERO) + e
        return PointVectorField(self.bundle, coeffs, extra=self.extra)

    def scaled(self, factor):
        return PointVectorField(self.bundle,
                                {c: factor * e for c, e in self.coeffs.items()},
                                extra=self.extra, name=self.name)

    def is_zero_field(self):
        return not self.coeffs

    def __repr__(self):
        from .parser import print_vector_field
        body = print_vector_field(self.coeffs, self.coords)
        return self.name and "%s = %s" % (self.name, body) or body


def bracket(X, Y):
    """Lie bracket of point fields (including the extra thermodynamic slots)."""
    coeffs = {}
    for c in set(X.coeffs) | set(Y.coeffs):
        e = X.apply0(Y.coeff(c)) - Y.apply0(X.coeff(c))
        if not e.is_structural_zero:
            coeffs[c] = e
    return PointVectorField(X.bundle, coeffs, extra=X.extra)


class ProlongedVectorField:
    """Prolongation of a point field to jet coordinates of order <= k."""

    def __init__(self, base, order, coeffs):
        self.base = base
        self.bundle = base.bundle
        self.order = order
        self.coeffs = coeffs  # coordinate name -> Expr (zeros omitted)

    def coeff(self, c):
        return self.coeffs.get(c, EXPR_ZERO)

    def apply(self, e):
        """X^(k)(e); every coordinate present in e must be covered."""
        b = self.bundle
        for v in e.variables():
            o = b.order_of(v)
            if o is not None and o > self.order and b.parse_coord(v) is not None:
                raise KernelError(
                    "expression has order %d > prolongation order %d (%s)"
                    % (o, self.order, v))
        grads = gradient(e, self.coeffs.keys())
        return expr_sum(self.coeffs[v] * d for v, d in grads.items())

    def __repr__(self):
        return "Prolonged(%r, k=%d)" % (self.base.name or "X", self.order)


_prolong_cache = {}


def prolong(X, k):
    """Prolong via phi^a_{J,i} = D_i phi^a_J - sum_j D_i(xi^j) u^a_{J,j}."""
    key = (X.key(), k, id(X.bundle))
    got = _prolong_cache.get(key)
    if got is not None:
        return got
    b = X.bundle
    Xk = X.kinematic()
    coeffs = dict(Xk.coeffs)
    dxi = {}
    for i in b.indeps:
        for j in b.indeps:
            dxi[(i, j)] = b.total_derivative(Xk.coeff(j), i)
    prev = {(): {d: Xk.coeff(d) for d in b.deps}}
    for m in range(1, k + 1):
        cur = {}
        for J in b.multi_indices(m):
            Jp, i = J[:-1], J[-1]
            # J was produced in sorted form; strip the last letter
            src = prev[tuple(Jp)]
            cur_for = {}
            for dep in b.deps:
                phi = src[dep]
                val = b.total_derivative(phi, i)
                for j in b.indeps:
                    dj = dxi[(i, j)]
                    if dj.is_structural_zero:
                        continue
                    val = val - dj * var_(b.jet(dep, tuple(Jp) + (j,)))
                cur_for[dep] = val
                if not val.is_structural_zero:
                    coeffs[b.jet(dep, J)] = val
            cur[J] = cur_for
        prev = cur
    out = ProlongedVectorField(X, k, coeffs)
    _prolong_cache[key] = out
    return out


def apply(Xhat, e):
    return Xhat.apply(e)


class TotalDerivation:
    """nabla = sum A_i D_i with coefficients rational on some prolongation."""

    def __init__(self, bundle, coeffs, name=None):
        self.bundle = bundle
        self.coeffs = {i: coeffs.get(i, EXPR_ZERO) for i in bundle.indeps}
        self.name = name

    def __call__(self, e):
        dirs = [i for i in self.bundle.indeps
                if not self.coeffs[i].is_structural_zero]
        if not dirs:
            return EXPR_ZERO
        ds = self.bundle.total_derivatives(e, dirs)
        return expr_sum(self.coeffs[i] * ds[i] for i in dirs)

    def scaled(self, factor):
        return TotalDerivation(self.bundle,
                               {i: factor * c for i, c in self.coeffs.items()},
                               name=self.name)

    def __repr__(self):
        parts = []
        for i in self.bundle.indeps:
            c = self.coeffs[i]
            if not c.is_structural_zero:
                parts.append("(%r)*D_%s" % (c, i))
        return self.name or (" + ".join(parts) if parts else "0")


def derivation_commutator(Xhat, nabla):
    """[X^, nabla] as a total derivation: C^i = X^(A_i) - nabla(xi^i)."""
    b = nabla.bundle
    out = {}
    for i in b.indeps:
        xi = Xhat.base.coeff(i)
        out[i] = Xhat.apply(nabla.coeffs[i]) - nabla(xi)
    return TotalDerivation(b, out)
