"""Exact linear algebra over rational scalars.

All structural computations (spans, kernels, quotients) run over
``fractions.Fraction`` so that identities checked elsewhere are exact.
Vectors are plain tuples; matrices are tuples of row tuples.  Nothing
here mutates its inputs.
"""

from __future__ import annotations

from fractions import Fraction

Scalar = Fraction | int | float
Vector = tuple


def vadd(x, y):
    if len(x) != len(y):
        raise ValueError(f"dimension mismatch: {len(x)} vs {len(y)}")
    return tuple(a + b for a, b in zip(x, y))


def vsub(x, y):
    if len(x) != len(y):
        raise ValueError(f"dimension mismatch: {len(x)} vs {len(y)}")
    return tuple(a - b for a, b in zip(x, y))


def vscale(c, x):
    return tuple(c * a for a in x)


def vneg(x):
    return tuple(-a for a in x)


def zero_vector(n):
    return (Fraction(0),) * n


def is_zero(x, tol=0):
    if tol:
        return all(abs(a) <= tol for a in x)
    return all(a == 0 for a in x)


def as_exact(x):
    """Coerce a vector to Fraction entries; floats must be integral-valued."""
    out = []
    for a in x:
        if isinstance(a, float):
            if a != int(a):
                raise ValueError(f"cannot losslessly convert {a} to a rational")
            a = int(a)
        out.append(Fraction(a))
    return tuple(out)


def as_float(x):
    return tuple(float(a) for a in x)


def scalar_mode(x):
    """'exact' if every entry is int/Fraction, 'float' if every entry is float.

    Mixed vectors are rejected: operations never blend the two modes.
    """
    has_float = any(isinstance(a, float) for a in x)
    has_exact = any(isinstance(a, (int, Fraction)) for a in x)
    if has_float and has_exact:
        raise ValueError("mixed exact/float coordinates in one vector")
    return "float" if has_float else "exact"


def mat_vec(m, x):
    return tuple(sum(r[j] * x[j] for j in range(len(x))) for r in m)


def mat_mul(a, b):
    bt = tuple(zip(*b))
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in bt) for row in a)


def identity_matrix(n):
    return tuple(tuple(Fraction(1) if i == j else Fraction(0) for j in range(n)) for i in range(n))


def transpose(m):
    return tuple(zip(*m))


def rref(rows):
    """Reduced row-echelon form with zero rows dropped.

    Returns (rows, pivot_columns).  Exact over Fraction; float rows are
    accepted but then the reduction is only numerically meaningful.
    """
    work = [list(r) for r in rows]
    if not work:
        return (), ()
    ncols = len(work[0])
    pivots = []
    rank = 0
    for col in range(ncols):
        piv = None
        for r in range(rank, len(work)):
            if work[r][col] != 0:
                piv = r
                break
        if piv is None:
            continue
        work[rank], work[piv] = work[piv], work[rank]
        inv = work[rank][col]
        work[rank] = [a / inv for a in work[rank]]
        for r in range(len(work)):
            if r != rank and work[r][col] != 0:
                c = work[r][col]
                work[r] = [a - c * b for a, b in zip(work[r], work[rank])]
        pivots.append(col)
        rank += 1
        if rank == len(work):
            break
    return tuple(tuple(r) for r in work[:rank]), tuple(pivots)


def reduce_against(rows, pivots, x):
    """Subtract the span component of x determined by RREF rows.

    The result has zeros in every pivot coordinate; it is 0 iff x lies
    in the row span.
    """
    y = list(x)
    for row, p in zip(rows, pivots):
        c = y[p]
        if c != 0:
            for j in range(len(y)):
                y[j] -= c * row[j]
    return tuple(y)


def in_span(rows, pivots, x, tol=0):
    return is_zero(reduce_against(rows, pivots, x), tol=tol)


def span_coords(rows, pivots, x):
    """Coordinates of x in the RREF row basis; raises if x is outside the span."""
    coords = tuple(x[p] for p in pivots)
    if not is_zero(reduce_against(rows, pivots, x)):
        raise ValueError("vector does not lie in the subspace")
    return coords


def solve_exact(matrix_cols, target):
    """Solve sum_j c_j * col_j = target exactly; raises if inconsistent.

    ``matrix_cols`` is a sequence of column vectors.  Underdetermined
    systems return the solution with free variables set to zero.
    """
    ncols = len(matrix_cols)
    n = len(target)
    aug = [[Fraction(matrix_cols[j][i]) for j in range(ncols)] + [Fraction(target[i])] for i in range(n)]
    rows, pivots = rref(tuple(tuple(r) for r in aug))
    coeffs = [Fraction(0)] * ncols
    for row, p in zip(rows, pivots):
        if p == ncols:
            raise ValueError("inconsistent linear system")
        coeffs[p] = row[ncols]
    return tuple(coeffs)


def kernel_basis(rows):
    """Basis of the right kernel of the matrix given by rows (exact)."""
    if not rows:
        return ()
    ncols = len(rows[0])
    red, pivots = rref(rows)
    free = [j for j in range(ncols) if j not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, p in zip(red, pivots):
            v[p] = -row[f]
        basis.append(tuple(v))
    return tuple(basis)


def rank(rows):
    return len(rref(rows)[0])
