"""Carnot-by-Carnot decomposition and horizontal-path machinery.

``decompose`` splits a validated algebra into the ideal generated by
the lowest weight layer, the Carnot quotient, the exponent ``alpha``,
the coordinate transversal, and the center layers of the ideal — all
exactly.  ``horizontal_connect`` builds zigzag paths out of horizontal
line segments using group-commutator words for nested brackets, and
``integrate_bracket_form`` integrates the bracket pairing of a
center-valued map against the horizontal tautological one-form along
such paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from . import linalg
from .algebra import (
    GradedAlgebra,
    LinearMap,
    Subspace,
    bracket,
    center,
    is_ideal,
    quotient,
    subalgebra_generated,
    subspace,
    validate_algebra,
    weight_slice,
)
from .group import bch, quasi_norm
from .linalg import as_float, span_coords, vadd, vneg, vscale
from .quadrature import integrate_vector


class DecompositionError(ValueError):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


class NotCarnotError(ValueError):
    pass


class ZigzagError(RuntimeError):
    """Endpoint tolerance missed after the deterministic pass (a bug, not input)."""


def carnot_layers(alg: GradedAlgebra):
    """Layer index (1..r) per basis vector if the algebra is Carnot-graded.

    Requires integer weight ratios; generation is checked separately.
    """
    w1 = min(alg.weights)
    layers = []
    for w in alg.weights:
        ratio = w / w1
        if ratio.denominator != 1:
            raise NotCarnotError(f"weight {w} is not an integer multiple of {w1}")
        layers.append(int(ratio))
    return tuple(layers)


def is_carnot(alg: GradedAlgebra) -> bool:
    """Weights are 1..r multiples of the smallest and each layer is generated."""
    try:
        layers = carnot_layers(alg)
    except NotCarnotError:
        return False
    r = max(layers)
    slices = {
        m: [alg.basis_vector(i) for i in range(alg.dim) if layers[i] == m]
        for m in range(1, r + 1)
    }
    if any(not slices[m] for m in range(1, r + 1)):
        return False
    current = subspace(alg, slices[1])
    for m in range(2, r + 1):
        gen = [
            bracket(alg, v, row)
            for v in slices[1]
            for row in current.rows
        ]
        nxt = subspace(alg, gen)
        target = subspace(alg, slices[m])
        if nxt.rows != target.rows:
            return False
        current = nxt
    return True


@lru_cache(maxsize=None)
def bracket_expressions(alg: GradedAlgebra):
    """Nested-bracket expressions of higher-layer basis vectors.

    For each basis index k of layer >= 2 returns a rational combination
    ``[(coeff, word), ...]`` where ``word`` is a tuple of first-layer
    basis indices standing for the right-nested bracket
    ``[e_w0, [e_w1, [...]]]``.
    """
    if not is_carnot(alg):
        raise NotCarnotError("bracket expressions require a Carnot algebra")
    layers = carnot_layers(alg)
    r = max(layers)
    first = [i for i in range(alg.dim) if layers[i] == 1]
    words = {1: [((i,), alg.basis_vector(i)) for i in first]}
    table = {}
    for m in range(2, r + 1):
        chosen = []
        rows = ()
        pivots = ()
        for i in first:
            for word, vec in words[m - 1]:
                v = bracket(alg, alg.basis_vector(i), vec)
                if linalg.is_zero(v):
                    continue
                if not linalg.in_span(rows, pivots, v):
                    chosen.append(((i,) + word, v))
                    rows, pivots = linalg.rref(rows + (v,))
        words[m] = chosen
        layer_idx = [k for k in range(alg.dim) if layers[k] == m]
        for k in layer_idx:
            target = alg.basis_vector(k)
            cols = [vec for _, vec in chosen]
            try:
                coeffs = linalg.solve_exact(cols, target)
            except ValueError as exc:
                raise NotCarnotError(f"layer {m} is not spanned by brackets") from exc
            table[k] = tuple(
                (c, chosen[t][0]) for t, c in enumerate(coeffs) if c != 0
            )
    return table


@dataclass(frozen=True)
class HorizontalPath:
    """Concatenation of horizontal line segments from a start point.

    Each segment is (direction, duration) with the direction in the
    first layer; the endpoint is start * prod exp(duration * direction).
    """

    alg: GradedAlgebra
    start: tuple
    segments: tuple
    endpoint: tuple

    @property
    def segment_count(self):
        return len(self.segments)

    @property
    def length(self):
        total = 0.0
        for direction, duration in self.segments:
            total += duration * math.sqrt(sum(float(d) ** 2 for d in direction))
        return total


def _word_segments(alg, word, t):
    """Segments whose product is exp(t^len(word) * nested_bracket(word) + higher)."""
    if len(word) == 1:
        return [(as_float(alg.basis_vector(word[0])), float(t))]
    head = [(as_float(alg.basis_vector(word[0])), float(t))]
    tail = _word_segments(alg, word[1:], t)
    inv = lambda segs: [(vneg(d), dur) for d, dur in reversed(segs)]
    return head + tail + inv(head) + inv(tail)


def horizontal_connect(alg: GradedAlgebra, g, tol: float = 1e-9) -> HorizontalPath:
    """Horizontal path from 0 to g by layerwise commutator-word cancellation.

    First a straight segment matches the layer-1 part; then for each
    layer m = 2..r the residual coefficients are cancelled with
    group-commutator words of nested-bracket expressions scaled by
    |c|^(1/m) (sign by swapping the innermost operands).  Corrections
    land strictly above the current layer, so one pass per layer
    suffices.
    """
    table = bracket_expressions(alg)
    layers = carnot_layers(alg)
    r = max(layers)
    gf = as_float(g)
    if any(not math.isfinite(a) for a in gf):
        raise ValueError("target must be finite")
    skip = 1e-13 * max(1.0, max(abs(a) for a in gf))

    segments = []
    endpoint = (0.0,) * alg.dim

    def push(direction, duration):
        nonlocal endpoint
        segments.append((direction, duration))
        endpoint = bch(alg, endpoint, vscale(duration, direction))

    v1 = tuple(gf[i] if layers[i] == 1 else 0.0 for i in range(alg.dim))
    if any(abs(a) > 0.0 for a in v1):
        push(v1, 1.0)

    for m in range(2, r + 1):
        for k in [i for i in range(alg.dim) if layers[i] == m]:
            residual = bch(alg, vneg(endpoint), gf)
            c = residual[k]
            if abs(c) <= skip:
                continue
            for q, word in table[k]:
                amount = float(q) * c
                if amount == 0.0:
                    continue
                t = abs(amount) ** (1.0 / m)
                if amount < 0:
                    word = word[:-2] + (word[-1], word[-2])
                for direction, duration in _word_segments(alg, word, t):
                    push(direction, duration)

    # the residual is measured on coordinates of endpoint^-1 * g: quasi-norm
    # residuals of order eps_machine^(1/r) are unavoidable in floats and
    # would drown the actual accuracy of the construction
    residual = bch(alg, vneg(endpoint), gf)
    residual_norm = max(abs(a) for a in residual)
    if residual_norm > tol * max(1.0, quasi_norm(alg, gf)):
        raise ZigzagError(
            f"endpoint residual {residual_norm:.3e} exceeds tolerance after the full pass"
        )
    return HorizontalPath(alg, (0.0,) * alg.dim, tuple(segments), endpoint)


def cc_upper_bound(alg: GradedAlgebra, g) -> float:
    """Length of the zigzag path: an upper bound for the CC distance to g."""
    return horizontal_connect(alg, g).length


@dataclass(frozen=True)
class CbCDecomposition:
    """The data of a Carnot-by-Carnot pair.

    * ``w``: the ideal generated by the lowest weight layer, exact RREF.
    * ``w_algebra``: that ideal as its own Carnot algebra (weights 1..m).
    * ``quotient`` / ``quotient_carnot``: the quotient with inherited
      weights, and with weights renormalized so it is Carnot.
    * ``alpha``: smallest quotient weight divided by the smallest weight.
    * ``transversal`` / ``h_layers``: the coordinate complement of the
      ideal and its per-layer slices (layer j sits at weight j*alpha).
    * ``center_w`` / ``z_layers``: the center of the ideal and its
      slices indexed by ideal layer.
    """

    base: GradedAlgebra
    lambda1: Fraction
    w: Subspace
    w_algebra: GradedAlgebra
    quotient: GradedAlgebra
    quotient_carnot: GradedAlgebra
    projection: LinearMap
    alpha: Fraction
    transversal: Subspace
    h_layers: dict
    center_w: Subspace
    z_layers: dict
    central_product: bool | None

    @property
    def alpha_is_integer(self) -> bool:
        return self.alpha.denominator == 1

    def project(self, x):
        return self.projection(x)

    def lift(self, qcoords):
        """Section of the projection through the transversal H."""
        keep = [i for i in range(self.base.dim) if i not in self.w.pivots]
        mode_zero = 0.0 if linalg.scalar_mode(qcoords) == "float" else Fraction(0)
        out = [mode_zero] * self.base.dim
        for pos, i in enumerate(keep):
            out[i] = qcoords[pos]
        return tuple(out)

    def w_coords(self, x):
        return span_coords(self.w.rows, self.w.pivots, x)

    def w_embed(self, coords):
        out = linalg.zero_vector(self.base.dim)
        for c, row in zip(coords, self.w.rows):
            out = vadd(out, vscale(c, row))
        return out

    def z_layer(self, j) -> Subspace | None:
        return self.z_layers.get(j)

    def max_z_layer(self) -> int:
        return max(self.z_layers) if self.z_layers else 0

    def w_layer_indices(self, j):
        lam = self.lambda1 * j
        return tuple(i for i in range(self.base.dim) if self.base.weights[i] == lam)

    def w_layer_project(self, x, j):
        lam = self.lambda1 * j
        zero = 0.0 if linalg.scalar_mode(x) == "float" else Fraction(0)
        return tuple(a if self.base.weights[i] == lam else zero for i, a in enumerate(x))


def decompose(alg: GradedAlgebra) -> CbCDecomposition:
    """Detect the Carnot-by-Carnot structure, verifying every invariant."""
    report = validate_algebra(alg)
    if not report.ok:
        failed = [n for n, ok, _ in report.checks if not ok]
        raise DecompositionError("invalid", f"algebra fails validation: {failed}")
    lam1 = min(alg.weights)
    v1 = weight_slice(alg, lam1)
    w = subalgebra_generated(alg, v1)
    if w.rank == alg.dim:
        raise DecompositionError(
            "carnot_type", "Carnot type: the lowest layer generates the whole algebra"
        )
    if not is_ideal(alg, w):
        raise DecompositionError("not_ideal", "the generated subalgebra is not an ideal")

    qalg, proj = quotient(alg, w)
    mu1 = min(qalg.weights)
    if mu1 <= lam1:
        raise DecompositionError("not_ideal", "quotient weights must exceed the base weight")
    alpha = mu1 / lam1
    normalized = [qw / mu1 for qw in qalg.weights]
    if any(q.denominator != 1 for q in normalized):
        raise DecompositionError(
            "derivation",
            "the induced derivation is not a multiple of a Carnot derivation",
        )
    quotient_carnot = GradedAlgebra(qalg.dim, qalg.labels, tuple(normalized), qalg.brackets)
    if not is_carnot(quotient_carnot):
        raise DecompositionError("quotient_not_carnot", "the quotient is not a Carnot algebra")

    # ideal as its own Carnot algebra, weights renormalized to 1..m
    w_weights = []
    for row in w.rows:
        met = {alg.weights[i] for i, a in enumerate(row) if a != 0}
        (wt,) = met
        ratio = wt / lam1
        if ratio.denominator != 1:
            raise DecompositionError("invalid", "ideal layer weights are not integral")
        w_weights.append(Fraction(int(ratio)))
    entries = []
    for i in range(w.rank):
        for j in range(i + 1, w.rank):
            v = bracket(alg, w.rows[i], w.rows[j])
            coords = span_coords(w.rows, w.pivots, v)
            for k, c in enumerate(coords):
                if c != 0:
                    entries.append((i, j, k, Fraction(c)))
    w_algebra = GradedAlgebra(
        w.rank,
        tuple(f"w{i}" for i in range(w.rank)),
        tuple(w_weights),
        tuple(sorted(entries)),
    )
    if not is_carnot(w_algebra):
        raise DecompositionError("invalid", "the ideal is not Carnot graded")

    keep = [i for i in range(alg.dim) if i not in w.pivots]
    transversal = subspace(alg, [alg.basis_vector(i) for i in keep])
    h_layers = {}
    for pos, i in enumerate(keep):
        ratio = alg.weights[i] / mu1
        j = int(ratio)
        h_layers.setdefault(j, []).append(alg.basis_vector(i))
    h_layers = {j: subspace(alg, vecs) for j, vecs in h_layers.items()}

    center_w, slices = center(alg, w)
    z_layers = {}
    for wt, sl in slices.items():
        z_layers[int(wt / lam1)] = sl

    # the center of the ideal must absorb brackets with the whole algebra
    for row in center_w.rows:
        for i in range(alg.dim):
            v = bracket(alg, alg.basis_vector(i), row)
            if not center_w.contains(v):
                raise DecompositionError(
                    "invalid", "[Z(w), n] does not stay inside Z(w)"
                )

    central_product = None
    if alpha.denominator != 1:
        h1 = h_layers.get(1)
        hsub = subalgebra_generated(alg, h1) if h1 else None
        central_product = hsub is not None and all(
            linalg.is_zero(bracket(alg, a, b)) for a in w.rows for b in hsub.rows
        )

    return CbCDecomposition(
        base=alg,
        lambda1=lam1,
        w=w,
        w_algebra=w_algebra,
        quotient=qalg,
        quotient_carnot=quotient_carnot,
        projection=proj,
        alpha=alpha,
        transversal=transversal,
        h_layers=h_layers,
        center_w=center_w,
        z_layers=z_layers,
        central_product=central_product,
    )


def integrate_bracket_form(dec: CbCDecomposition, component, path: HorizontalPath, tol: float = 1e-10):
    """Integral of [c(x), theta_H(x)] along a horizontal quotient path.

    ``component`` evaluates quotient coordinates to an ambient vector in
    a center layer Z_j; the result lands in Z_(j+alpha).  The bracket of
    a quotient vector against a central vector is computed through the
    transversal lift, which is exactly the well-defined pairing.
    Segments are integrated by adaptive Simpson and summed in order.
    """
    qc = dec.quotient_carnot
    if path.alg != qc:
        raise ValueError("path must live in the Carnot-renormalized quotient")
    j = component.layer
    zj = dec.z_layer(j)
    if zj is None:
        raise ValueError(f"no center layer at index {j}")
    zj_rows = tuple(as_float(r) for r in zj.rows)

    from .algebra import bracket_float

    def check_membership(point, val):
        resid = linalg.reduce_against(zj_rows, zj.pivots, val)
        scale = 1.0 + math.sqrt(sum(a * a for a in val))
        if math.sqrt(sum(a * a for a in resid)) > 1e-8 * scale:
            raise ValueError(f"component value escapes the center layer Z_{j} at {point}")

    total = (0.0,) * dec.base.dim
    pos = as_float(path.start)
    for direction, duration in path.segments:
        direction = as_float(direction)
        duration = float(duration)
        x_lift = as_float(dec.lift(direction))

        def integrand(t):
            point = bch(qc, pos, vscale(t, direction))
            val = as_float(component.eval(point))
            return bracket_float(dec.base, val, x_lift)

        # membership is spot-checked at the segment nodes, not per eval
        for t in (0.0, 0.5 * duration, duration):
            point = bch(qc, pos, vscale(t, direction))
            check_membership(point, as_float(component.eval(point)))
        piece = integrate_vector(integrand, 0.0, duration, tol=tol)
        total = vadd(total, piece)
        pos = bch(qc, pos, vscale(duration, direction))
    return tuple(total)


def p_alpha_data(dec: CbCDecomposition):
    """Quotient of the base algebra by the layers above weight alpha.

    Returns (algebra, kept_indices, project).  The image of every layer
    of weight >= alpha is checked central once here.
    """
    if not dec.alpha_is_integer:
        raise ValueError("the high-layer quotient requires an integer exponent")
    alg = dec.base
    threshold = dec.alpha * dec.lambda1
    keep = [i for i in range(alg.dim) if alg.weights[i] <= threshold]
    kill = [i for i in range(alg.dim) if alg.weights[i] > threshold]
    ideal = subspace(alg, [alg.basis_vector(i) for i in kill])
    qalg, proj = quotient(alg, ideal)
    # image of weight >= alpha must be central
    for pos, i in enumerate(keep):
        if alg.weights[i] >= threshold:
            img = proj(alg.basis_vector(i))
            for t in range(qalg.dim):
                if not linalg.is_zero(bracket(qalg, img, qalg.basis_vector(t))):
                    raise AssertionError("high-weight image is not central in the quotient")
    return qalg, tuple(keep), proj


def p_alpha_project(dec: CbCDecomposition, x):
    _, _, proj = _p_alpha_cached(dec)
    return proj(x)


_P_ALPHA_CACHE: dict = {}


def _p_alpha_cached(dec: CbCDecomposition):
    key = id(dec)
    if key not in _P_ALPHA_CACHE:
        _P_ALPHA_CACHE[key] = p_alpha_data(dec)
    return _P_ALPHA_CACHE[key]
