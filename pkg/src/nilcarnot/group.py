"""Group structure on a nilpotent Lie algebra via the BCH product.

The product ``x * y = exp^-1(exp x . exp y)`` is computed with the
Dynkin commutator series, truncated at the nilpotency step of the
algebra.  Coefficients are exact rationals, so in exact mode the
product is an oracle: associativity, inverses and the conjugation
formula hold with zero defect.

Also here: dilations ``delta_r`` (the automorphisms generated by the
diagonal derivation), the homogeneous quasi-norm, graded-automorphism
checks, and the affine-map calculus ``L_a o phi``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from . import linalg
from .algebra import GradedAlgebra, LinearMap, bracket, nilpotency_step
from .linalg import vadd, vneg, vscale

DEFAULT_DEGREE_CEILING = 6


class BchDegreeError(ValueError):
    """Raised when the nilpotency step exceeds the supported Dynkin degree."""


@lru_cache(maxsize=None)
def dynkin_words(max_degree: int):
    """Dynkin coefficients of the BCH series through the given degree.

    Returns a tuple of (word, coefficient) with word a tuple over
    {0, 1} (0 = X, 1 = Y); the word stands for the right-nested bracket
    [w0, [w1, [... [w_{n-2}, w_{n-1}]]]].  Words whose accumulated
    rational coefficient is zero are dropped.
    """
    coeffs: dict[tuple, Fraction] = defaultdict(Fraction)

    def extend(prefix_word, blocks, degree):
        # close the current block sequence as one Dynkin term
        m = len(blocks)
        if m:
            denom = degree
            for p, q in blocks:
                denom *= math.factorial(p) * math.factorial(q)
            coeffs[prefix_word] += Fraction((-1) ** (m - 1), m) / denom
        if degree == max_degree:
            return
        for p in range(max_degree - degree + 1):
            for q in range(max_degree - degree - p + 1):
                if p + q == 0:
                    continue
                word = prefix_word + (0,) * p + (1,) * q
                extend(word, blocks + ((p, q),), degree + p + q)

    extend((), (), 0)
    return tuple((w, c) for w, c in sorted(coeffs.items()) if c != 0)


def _right_nested(alg, word, x, y):
    acc = x if word[-1] == 0 else y
    for letter in reversed(word[:-1]):
        acc = bracket(alg, x if letter == 0 else y, acc)
    return acc


@lru_cache(maxsize=None)
def _dynkin_words_float(max_degree: int):
    return tuple((w, float(c)) for w, c in dynkin_words(max_degree))


def _bch_float(alg, x, y, step):
    from .algebra import bracket_float

    out = [0.0] * alg.dim
    for word, coef in _dynkin_words_float(step):
        if len(word) == 1:
            term = x if word[0] == 0 else y
        else:
            term = x if word[-1] == 0 else y
            for letter in reversed(word[:-1]):
                term = bracket_float(alg, x if letter == 0 else y, term)
        for i, a in enumerate(term):
            if a:
                out[i] += coef * a
    return tuple(out)


def bch(alg: GradedAlgebra, x, y, degree_ceiling: int = DEFAULT_DEGREE_CEILING):
    """The product x * y, exact in rational mode.

    The Dynkin series is truncated at the nilpotency step, where it is
    the whole product; steps above the ceiling are refused rather than
    silently truncated.  Float inputs take a float fast path.
    """
    step = nilpotency_step(alg)
    if step > degree_ceiling:
        raise BchDegreeError(
            f"nilpotency step {step} exceeds the supported Dynkin degree {degree_ceiling}"
        )
    if type(x[0]) is float and type(y[0]) is float:
        # vectors are homogeneous by construction; skip the full scan
        return _bch_float(alg, x, y, step)
    mx, my = linalg.scalar_mode(x), linalg.scalar_mode(y)
    if mx != my:
        raise ValueError(f"scalar modes differ: {mx} vs {my}")
    if mx == "float":
        return _bch_float(alg, x, y, step)
    out = list(linalg.zero_vector(alg.dim))
    for word, coef in dynkin_words(step):
        term = _right_nested(alg, word, x, y)
        for i, a in enumerate(term):
            if a != 0:
                out[i] += coef * a
    return tuple(out)


def inverse(x):
    """Group inverse: coordinate negation."""
    return vneg(x)


def conjugate_adjoint(alg: GradedAlgebra, y, x):
    """y * x * (-y) computed as sum_k (1/k!) (ad y)^k x."""
    step = nilpotency_step(alg)
    out = x
    term = x
    for k in range(1, step + 1):
        term = bracket(alg, y, term)
        out = vadd(out, vscale(Fraction(1, math.factorial(k)), term))
    return out


def dilate(alg: GradedAlgebra, r, x):
    """delta_r: scale the weight-lambda coordinate block by r**lambda.

    Exact when r is rational and all weights are integers; otherwise
    falls back to float powers.
    """
    if r <= 0:
        raise ValueError("dilation ratio must be positive")
    out = []
    exact_r = isinstance(r, (int, Fraction)) and not isinstance(r, bool)
    for i, a in enumerate(x):
        lam = alg.weights[i]
        if exact_r and lam.denominator == 1:
            factor = Fraction(r) ** int(lam)
        else:
            factor = float(r) ** float(lam)
        out.append(factor * a)
    return tuple(out)


def quasi_norm(alg: GradedAlgebra, x) -> float:
    """sum over layers of |x_lambda|^(1/lambda), |.| the Euclidean slice norm."""
    total = 0.0
    for w in alg.weight_set:
        sq = 0.0
        for i in alg.layer_indices(w):
            sq += float(x[i]) ** 2
        if sq:
            total += math.sqrt(sq) ** (1.0 / float(w))
    return total


def quasi_dist(alg: GradedAlgebra, x, y) -> float:
    """Left-invariant quasi-distance rho(x, y) = ||x^-1 * y||.

    When both points are exact the difference is computed exactly, so
    coinciding points report distance 0.0 instead of a rounding residue
    amplified by the fractional layer exponents.
    """
    if linalg.scalar_mode(x) == "exact" and linalg.scalar_mode(y) == "exact":
        return quasi_norm(alg, bch(alg, vneg(x), y))
    fx = linalg.as_float(x)
    fy = linalg.as_float(y)
    return quasi_norm(alg, bch(alg, vneg(fx), fy))


@dataclass(frozen=True)
class AutomorphismVerdict:
    homomorphism: bool
    layer_preserving: bool
    detail: str = ""

    @property
    def graded_automorphism(self):
        return self.homomorphism and self.layer_preserving


def is_lie_homomorphism(alg: GradedAlgebra, m: LinearMap) -> bool:
    basis = [alg.basis_vector(i) for i in range(alg.dim)]
    for i in range(alg.dim):
        for j in range(i + 1, alg.dim):
            lhs = m(bracket(alg, basis[i], basis[j]))
            rhs = bracket(alg, m(basis[i]), m(basis[j]))
            if lhs != rhs:
                return False
    return True


def is_graded_automorphism(alg: GradedAlgebra, m: LinearMap) -> AutomorphismVerdict:
    """Exact verdict: Lie homomorphism + layer preservation M(V_w) = V_w."""
    hom = is_lie_homomorphism(alg, m)
    layer = True
    detail = ""
    for w in alg.weight_set:
        idx = alg.layer_indices(w)
        block_rows = []
        for i in idx:
            img = m(alg.basis_vector(i))
            if any(img[j] != 0 for j in range(alg.dim) if j not in idx):
                layer = False
                detail = f"image of weight-{w} layer leaves the layer"
                break
            block_rows.append(tuple(img[j] for j in idx))
        if not layer:
            break
        if linalg.rank(tuple(block_rows)) != len(idx):
            layer = False
            detail = f"weight-{w} block is singular"
            break
    return AutomorphismVerdict(hom, layer, detail)


def dilation_matrix(alg: GradedAlgebra, r) -> LinearMap:
    n = alg.dim
    rows = []
    exact_r = isinstance(r, (int, Fraction)) and not isinstance(r, bool)
    for i in range(n):
        lam = alg.weights[i]
        if exact_r and lam.denominator == 1:
            factor = Fraction(r) ** int(lam)
        else:
            factor = float(r) ** float(lam)
        rows.append(tuple(factor if j == i else (0 * factor) for j in range(n)))
    return LinearMap(tuple(rows))


@dataclass(frozen=True)
class AffineMap:
    """L_a o phi with phi a Lie-algebra automorphism (checked on build)."""

    alg: GradedAlgebra
    translation: tuple
    auto: LinearMap

    def __post_init__(self):
        if not is_lie_homomorphism(self.alg, self.auto):
            raise ValueError("automorphism part is not a Lie algebra homomorphism")
        if linalg.rank(self.auto.matrix) != self.alg.dim:
            raise ValueError("automorphism part is singular")

    def __call__(self, g):
        return bch(self.alg, self.translation, self.auto(g))


def apply_affine(f: AffineMap, g):
    return f(g)


def compose_affine(f: AffineMap, g: AffineMap) -> AffineMap:
    """(L_a o phi) o (L_b o psi) = L_{a * phi(b)} o (phi psi)."""
    if f.alg is not g.alg and f.alg != g.alg:
        raise ValueError("affine maps live on different algebras")
    trans = bch(f.alg, f.translation, f.auto(g.translation))
    return AffineMap(f.alg, trans, LinearMap(linalg.mat_mul(f.auto.matrix, g.auto.matrix)))


def invert_matrix(m: LinearMap) -> LinearMap:
    n = len(m.matrix)
    cols = [tuple(m.matrix[i][j] for i in range(n)) for j in range(n)]
    unit = lambda i: tuple(Fraction(1) if k == i else Fraction(0) for k in range(n))
    inv_cols = [linalg.solve_exact(cols, unit(i)) for i in range(n)]
    return LinearMap(tuple(tuple(row) for row in zip(*inv_cols)))


def invert_affine(f: AffineMap) -> AffineMap:
    inv = invert_matrix(f.auto)
    return AffineMap(f.alg, inv(vneg(f.translation)), inv)
