"""Exact linear algebra over rationals and over symbolic expressions."""

from .kernel import rat, Expr, EXPR_ZERO, EXPR_ONE, num_


def rank_rat(rows):
    """Rank of a matrix of exact rationals (Gaussian elimination)."""
    m = [list(map(rat, r)) for r in rows]
    if not m:
        return 0
    ncols = len(m[0])
    rank = 0
    row = 0
    for col in range(ncols):
        piv = None
        for r in range(row, len(m)):
            if m[r][col] != 0:
                piv = r
                break
        if piv is None:
            continue
        m[row], m[piv] = m[piv], m[row]
        pv = m[row][col]
        for r in range(row + 1, len(m)):
            f = m[r][col]
            if f != 0:
                fr = f / pv
                mr = m[r]
                mp = m[row]
                for c in range(col, ncols):
                    mr[c] -= mp[c] * fr
        row += 1
        rank += 1
        if row == len(m):
            break
    return rank


def rref_rat(rows):
    """Reduced row echelon form; returns (matrix, pivot column list)."""
    m = [list(map(rat, r)) for r in rows]
    if not m:
        return m, []
    ncols = len(m[0])
    pivots = []
    row = 0
    for col in range(ncols):
        piv = None
        for r in range(row, len(m)):
            if m[r][col] != 0:
                piv = r
                break
        if piv is None:
            continue
        m[row], m[piv] = m[piv], m[row]
        pv = m[row][col]
        m[row] = [x / pv for x in m[row]]
        for r in range(len(m)):
            if r != row and m[r][col] != 0:
                f = m[r][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[row])]
        pivots.append(col)
        row += 1
        if row == len(m):
            break
    return m, pivots


def nullspace_rat(rows, ncols=None):
    """Basis of the right nullspace of a rational matrix."""
    if not rows:
        return [tuple(rat(1) if i == j else rat(0) for j in range(ncols or 0))
                for i in range(ncols or 0)]
    ncols = ncols or len(rows[0])
    m, pivots = rref_rat(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [rat(0)] * ncols
        v[f] = rat(1)
        for r, pc in enumerate(pivots):
            v[pc] = -m[r][f]
        basis.append(tuple(v))
    return basis


def solve_rat(rows, rhs):
    """One solution of A x = b over the rationals, or None."""
    if not rows:
        return None
    ncols = len(rows[0])
    aug = [list(map(rat, r)) + [rat(b)] for r, b in zip(rows, rhs)]
    m, pivots = rref_rat(aug)
    for r in range(len(m)):
        if all(x == 0 for x in m[r][:ncols]) and m[r][ncols] != 0:
            return None
    x = [rat(0)] * ncols
    for r, pc in enumerate(pivots):
        if pc == ncols:
            return None
        x[pc] = m[r][ncols]
    return tuple(x)


# -- symbolic (expression-entry) elimination ----------------------------------
# Entries are canonical expressions; an entry counts as zero exactly when its
# normal form is zero, which is sound for ranks over the coefficient field
# generated by independent atoms.

def _as_expr_matrix(rows):
    return [[e if isinstance(e, Expr) else num_(e) for e in r] for r in rows]


def rank_expr(rows):
    m = _as_expr_matrix(rows)
    if not m:
        return 0
    ncols = len(m[0])
    rank = 0
    row = 0
    for col in range(ncols):
        piv = None
        for r in range(row, len(m)):
            if not m[r][col].is_structural_zero:
                piv = r
                break
        if piv is None:
            continue
        m[row], m[piv] = m[piv], m[row]
        pv = m[row][col]
        for r in range(row + 1, len(m)):
            f = m[r][col]
            if not f.is_structural_zero:
                fr = f / pv
                m[r] = [a - fr * b for a, b in zip(m[r], m[row])]
        row += 1
        rank += 1
        if row == len(m):
            break
    return rank


def nullspace_expr(rows, ncols=None):
    """Right-nullspace basis for a matrix of expressions."""
    m = _as_expr_matrix(rows)
    if not m:
        return [tuple(EXPR_ONE if i == j else EXPR_ZERO for j in range(ncols or 0))
                for i in range(ncols or 0)]
    ncols = ncols or len(m[0])
    pivots = []
    row = 0
    for col in range(ncols):
        piv = None
        for r in range(row, len(m)):
            if not m[r][col].is_structural_zero:
                piv = r
                break
        if piv is None:
            continue
        m[row], m[piv] = m[piv], m[row]
        pv = m[row][col]
        m[row] = [a / pv for a in m[row]]
        for r in range(len(m)):
            if r != row and not m[r][col].is_structural_zero:
                f = m[r][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[row])]
        pivots.append(col)
        row += 1
        if row == len(m):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [EXPR_ZERO] * ncols
        v[f] = EXPR_ONE
        for r, pc in enumerate(pivots):
            v[pc] = -m[r][f]
        basis.append(tuple(v))
    return basis


def solve_expr(rows, rhs):
    """One solution of A x = b with expression entries, or None."""
    if not rows:
        return None
    ncols = len(rows[0])
    aug = [[e if isinstance(e, Expr) else num_(e) for e in r] + [b if isinstance(b, Expr) else num_(b)]
           for r, b in zip(rows, rhs)]
    m = aug
    pivots = []
    row = 0
    for col in range(ncols):
        piv = None
        for r in range(row, len(m)):
            if not m[r][col].is_structural_zero:
                piv = r
                break
        if piv is None:
            continue
        m[row], m[piv] = m[piv], m[row]
        pv = m[row][col]
        m[row] = [a / pv for a in m[row]]
        for r in range(len(m)):
            if r != row and not m[r][col].is_structural_zero:
                f = m[r][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[row])]
        pivots.append(col)
        row += 1
        if row == len(m):
            break
    for r in range(len(m)):
        if all(m[r][c].is_structural_zero for c in range(ncols)) and \
                not m[r][ncols].is_structural_zero:
            return None
    x = [EXPR_ZERO] * ncols
    for r, pc in enumerate(pivots):
        x[pc] = m[r][ncols]
    return tuple(x)
