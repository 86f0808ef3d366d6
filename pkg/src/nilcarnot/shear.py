"""Shear maps g -> g * s(gbar) and their verification machinery.

A shear component is a map from quotient coordinates into one center
layer of the ideal.  Components at layers above the exponent are never
free: they are recursive lifts (path integrals of the bracket pairing)
of the base components, or vanish when the exponent is not an integer.
``build_shear`` assembles the full tower; the K-function, necessity
ratios and sampling estimators probe the biLipschitz property at desk
scale.

Lifted evaluators memoize per exact input coordinates; memo writes are
idempotent, so concurrent readers are safe.  All estimators draw from
the counter-based generator in :mod:`nilcarnot.rng` and are
deterministic per seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import linalg
from .algebra import GradedAlgebra
from .carnot import CbCDecomposition, HorizontalPath, horizontal_connect, integrate_bracket_form
from .exprlang import parse_expression
from .group import bch, dilate, quasi_dist
from .linalg import as_float, vadd, vneg, vscale
from .rng import CounterRng, SamplerConfig, sample_ball_point


class MembershipError(ValueError):
    """A component failed the closed-loop integral test."""


class PathDependenceError(RuntimeError):
    """Two independent horizontal paths gave different lift values."""


@dataclass(frozen=True, eq=False)
class ShearComponent:
    """A map from quotient coordinates into the center layer Z_j.

    ``eval`` returns an ambient coordinate vector; ``trees`` optionally
    holds one expression tree per RREF basis row of Z_j (enabling
    symbolic derivatives), and ``holder_hint`` an a-priori bound for the
    j/alpha-Holder norm.
    """

    layer: int
    eval: object
    trees: tuple | None = None
    holder_hint: float | None = None

    def scaled(self, factor):
        inner = self.eval
        return ShearComponent(
            self.layer,
            lambda q, _f=float(factor), _e=inner: vscale(_f, _e(q)),
            None,
            None if self.holder_hint is None else abs(factor) * self.holder_hint,
        )


def component_from_exprs(dec: CbCDecomposition, layer: int, exprs, holder_hint=None) -> ShearComponent:
    """Build a component from scalar expressions over q1..qn.

    One expression per RREF basis row of Z_layer, in order; a single
    string is accepted when the layer is one-dimensional.
    """
    z = dec.z_layer(layer)
    if z is None:
        raise ValueError(f"center layer {layer} is zero")
    if isinstance(exprs, str):
        exprs = [exprs]
    if len(exprs) != z.rank:
        raise ValueError(f"layer {layer} needs {z.rank} expression(s), got {len(exprs)}")
    qdim = dec.quotient.dim
    trees = tuple(
        parse_expression(e, qdim) if isinstance(e, str) else e for e in exprs
    )
    rows = tuple(as_float(r) for r in z.rows)

    def evaluate(q):
        out = (0.0,) * dec.base.dim
        for tree, row in zip(trees, rows):
            out = vadd(out, vscale(tree.eval(q), row))
        return out

    return ShearComponent(layer, evaluate, trees, holder_hint)


def zero_component(dec: CbCDecomposition, layer: int) -> ShearComponent:
    n = dec.base.dim
    return ShearComponent(layer, lambda q: (0.0,) * n, None, 0.0)


@dataclass(frozen=True)
class LoopVerdict:
    passed: bool
    loops_tested: int
    max_violation: float
    threshold: float


def loop_test_membership(
    dec: CbCDecomposition,
    component: ShearComponent,
    budget: SamplerConfig = SamplerConfig(seed=7, count=24, radius=4.0),
    tol_factor: float = 1e-8,
    quad_tol: float = 1e-10,
) -> LoopVerdict:
    """Falsification test for vanishing loop integrals.

    Integrates [c, theta_H] over commutator rectangles at random
    basepoints and scales, closed up by a zigzag path back to the
    basepoint.  Passing is evidence, not proof, of membership.
    """
    qc = dec.quotient_carnot
    rng = CounterRng(budget.seed)
    first = [i for i in range(qc.dim) if qc.weights[i] == min(qc.weights)]
    if len(first) == 1 and qc.dim == 1:
        # every horizontal loop is a backtrack: the integral vanishes for
        # any continuous component, so there is nothing to falsify
        return LoopVerdict(True, 0, 0.0, 0.0)
    hint = max(1.0, component.holder_hint or 1.0)
    worst = 0.0
    threshold = 0.0
    for _ in range(budget.count):
        base = sample_ball_point(rng, qc, budget.radius)
        t = budget.radius * (1.0 - rng.uniform())
        dir1 = [0.0] * qc.dim
        dir2 = [0.0] * qc.dim
        for i in first:
            dir1[i] = rng.symmetric()
            dir2[i] = rng.symmetric()
        n1 = math.sqrt(sum(a * a for a in dir1))
        n2 = math.sqrt(sum(a * a for a in dir2))
        if n1 < 1e-9 or n2 < 1e-9:
            continue
        d1 = tuple(a / n1 for a in dir1)
        d2 = tuple(a / n2 for a in dir2)
        segs = [(d1, t), (d2, t), (vneg(d1), t), (vneg(d2), t)]
        pos = base
        for direction, duration in segs:
            pos = bch(qc, pos, vscale(duration, direction))
        # close the rectangle word back to the basepoint
        rel = bch(qc, vneg(pos), base)
        closing = horizontal_connect(qc, rel)
        segs.extend(closing.segments)
        endpoint = pos
        for direction, duration in closing.segments:
            endpoint = bch(qc, endpoint, vscale(duration, direction))
        loop = HorizontalPath(qc, base, tuple(segs), endpoint)
        val = integrate_bracket_form(dec, component, loop, tol=quad_tol)
        size = math.sqrt(sum(a * a for a in val))
        bound = tol_factor * loop.length * hint
        threshold = max(threshold, bound)
        if size > bound:
            worst = max(worst, size)
    return LoopVerdict(worst == 0.0, budget.count, worst, threshold)


def lift(
    dec: CbCDecomposition,
    component: ShearComponent,
    quad_tol: float = 1e-10,
    waive_membership: bool = False,
    membership_budget: SamplerConfig = SamplerConfig(seed=7, count=24, radius=4.0),
) -> ShearComponent:
    """The next-layer component: integrate [c, theta_H] from 0 to p.

    Membership in the loop-integral space is tested first unless
    explicitly waived; a waiver switches on per-evaluation verification
    with a second independent path.  Over a one-dimensional quotient the
    evaluator chains from the nearest previously computed point (the
    integral is an antiderivative along the line), which keeps dense
    sampling cheap; values are memoized either way.
    """
    if not dec.alpha_is_integer:
        raise ValueError("lifts require an integer exponent")
    if not waive_membership:
        verdict = loop_test_membership(dec, component, membership_budget, quad_tol=quad_tol)
        if not verdict.passed:
            raise MembershipError(
                f"loop integrals do not vanish (max violation {verdict.max_violation:.3e})"
            )
    target_layer = component.layer + int(dec.alpha)
    qc = dec.quotient_carnot
    memo: dict = {}
    verify = waive_membership

    if qc.dim == 1 and not verify:
        # one-dimensional quotient: the integral is an antiderivative
        # along the line, so chain from the nearest cached point
        import bisect

        xs = [0.0]
        vals = {0.0: (0.0,) * dec.base.dim}

        def evaluate(q):
            key = float(q[0])
            hit = vals.get(key)
            if hit is not None:
                return hit
            pos = bisect.bisect_left(xs, key)
            candidates = [xs[i] for i in (pos - 1, pos) if 0 <= i < len(xs)]
            base = min(candidates, key=lambda x: abs(x - key))
            length = abs(key - base)
            direction = (1.0,) if key > base else (-1.0,)
            path = HorizontalPath(qc, (base,), ((direction, length),), (key,))
            delta = integrate_bracket_form(dec, component, path, tol=quad_tol)
            val = vadd(vals[base], delta)
            bisect.insort(xs, key)
            vals[key] = val
            return val

        return ShearComponent(target_layer, evaluate, None, None)

    def evaluate(q):
        key = tuple(float(a) for a in q)
        hit = memo.get(key)
        if hit is not None:
            return hit
        path = horizontal_connect(qc, key)
        val = integrate_bracket_form(dec, component, path, tol=quad_tol)
        if verify and any(a != 0.0 for a in key):
            mid = dilate(qc, 0.5, key)
            rel = bch(qc, vneg(mid), key)
            alt_segments = horizontal_connect(qc, mid).segments + horizontal_connect(qc, rel).segments
            pos = (0.0,) * qc.dim
            for direction, duration in alt_segments:
                pos = bch(qc, pos, vscale(duration, direction))
            alt = integrate_bracket_form(
                dec, component, HorizontalPath(qc, (0.0,) * qc.dim, alt_segments, pos), tol=quad_tol
            )
            gap = max(abs(a - b) for a, b in zip(val, alt))
            scale = max(1.0, max(abs(a) for a in val))
            if gap > 10.0 * quad_tol * scale:
                raise PathDependenceError(
                    f"independent paths to {key} disagree by {gap:.3e}"
                )
        memo[key] = val
        return val

    return ShearComponent(target_layer, evaluate, None, None)


def _pairing_vanishes(dec: CbCDecomposition, layer: int) -> bool:
    """Exact check that [Z_layer, n] = 0, which kills every further lift."""
    z = dec.z_layer(layer)
    if z is None:
        return True
    from .algebra import bracket

    for row in z.rows:
        for i in range(dec.base.dim):
            if not linalg.is_zero(bracket(dec.base, row, dec.base.basis_vector(i))):
                return False
    return True


@dataclass(frozen=True, eq=False)
class ShearMap:
    """F(g) = g * s(gbar) with s summed over center-layer components."""

    dec: CbCDecomposition
    components: dict

    def s_value(self, qcoords):
        out = (0.0,) * self.dec.base.dim
        q = as_float(qcoords)
        for comp in self.components.values():
            out = vadd(out, as_float(comp.eval(q)))
        return out

    def negated(self) -> "ShearMap":
        return ShearMap(
            self.dec, {j: c.scaled(-1.0) for j, c in self.components.items()}
        )

    def __call__(self, g):
        return apply_shear(self, g)


def build_shear(
    dec: CbCDecomposition,
    base_components: dict,
    quad_tol: float = 1e-10,
    waive_membership: bool = False,
) -> ShearMap:
    """Assemble the full shear tower from base components at layers <= alpha.

    Integer exponent: layers k*alpha + j are filled with iterated lifts
    until the center layer vanishes or the bracket pairing is zero.
    Non-integer exponent: components above alpha are identically zero.
    """
    components = {}
    for j, comp in base_components.items():
        if j > dec.alpha:
            raise ValueError(f"base component layer {j} exceeds the exponent {dec.alpha}")
        if dec.z_layer(j) is None:
            raise ValueError(f"base component at zero center layer {j}")
        if comp.layer != j:
            raise ValueError("component layer tag does not match its key")
        components[j] = comp
    if dec.alpha_is_integer:
        step = int(dec.alpha)
        for j in sorted(base_components):
            current = components[j]
            layer = j
            while True:
                if _pairing_vanishes(dec, layer):
                    break
                nxt = layer + step
                if dec.z_layer(nxt) is None:
                    break
                current = lift(dec, current, quad_tol=quad_tol, waive_membership=waive_membership)
                components[nxt] = current
                layer = nxt
    return ShearMap(dec, components)


def apply_shear(smap: ShearMap, g):
    gf = as_float(g)
    qbar = smap.dec.project(gf)
    return bch(smap.dec.base, gf, smap.s_value(qbar))


def k_function(dec: CbCDecomposition, smap: ShearMap, g1, g2):
    """K(g1bar, g2bar) = s(g2bar) * u^-1 * (-s(g1bar)) * u with u = g1^-1 * g2."""
    alg = dec.base
    g1f, g2f = as_float(g1), as_float(g2)
    u = bch(alg, vneg(g1f), g2f)
    s1 = smap.s_value(dec.project(g1f))
    s2 = smap.s_value(dec.project(g2f))
    out = bch(alg, s2, vneg(u))
    out = bch(alg, out, vneg(s1))
    return bch(alg, out, u)


@dataclass(frozen=True)
class NecessityReport:
    per_radius: dict
    cc_surrogate: str = "quotient quasi-norm distance in place of the Carnot metric"

    def max_ratio(self, radius):
        layer_map = self.per_radius[radius]
        return max(layer_map.values()) if layer_map else 0.0


def necessity_check(
    dec: CbCDecomposition,
    smap: ShearMap,
    seed: int = 42,
    count: int = 300,
    radii=(1.0, 10.0, 100.0),
    separation: float = 1.0,
) -> NecessityReport:
    """Per-layer ratios |pi_i K|^(1/i) / dbar^(1/alpha) over sampled pairs.

    Basepoints are drawn in balls of each radius; the second point sits
    at a unit-scale offset so that growth of the ratios with the radius
    is visible.  The quotient Carnot metric is replaced by the quotient
    quasi-norm distance (flagged in the report).
    """
    qc = dec.quotient_carnot
    alpha = float(dec.alpha)
    out = {}
    layers = sorted(dec.z_layers)
    for radius in radii:
        rng = CounterRng(seed)
        worst = {i: 0.0 for i in layers}
        for _ in range(count):
            q1 = sample_ball_point(rng, qc, radius)
            off = sample_ball_point(rng, qc, separation)
            q2 = bch(qc, q1, off)
            d = quasi_dist(qc, q1, q2)
            if d < 1e-9:
                continue
            k = k_function(dec, smap, dec.lift(q1), dec.lift(q2))
            for i in layers:
                comp = dec.w_layer_project(k, i)
                size = math.sqrt(sum(float(a) ** 2 for a in comp))
                if size == 0.0:
                    continue
                ratio = size ** (1.0 / i) / d ** (1.0 / alpha)
                worst[i] = max(worst[i], ratio)
        out[radius] = worst
    return NecessityReport(out)


def holder_norm_estimate(
    dec: CbCDecomposition, component: ShearComponent, sampler: SamplerConfig
) -> float:
    """Empirical lower bound for the j/alpha-Holder norm of a component."""
    qc = dec.quotient_carnot
    rng = CounterRng(sampler.seed)
    exponent = component.layer / float(dec.alpha)
    best = 0.0
    for _ in range(sampler.count):
        p = sample_ball_point(rng, qc, sampler.radius)
        q = sample_ball_point(rng, qc, sampler.radius)
        d = quasi_dist(qc, p, q)
        if d < 1e-12:
            continue
        vp = component.eval(p)
        vq = component.eval(q)
        num = math.sqrt(sum((float(a) - float(b)) ** 2 for a, b in zip(vp, vq)))
        best = max(best, num / d**exponent)
    return best


def bilip_estimate(alg: GradedAlgebra, f, sampler: SamplerConfig):
    """Empirical (sup, inf) of rho(F x, F y) / rho(x, y) over sampled pairs."""
    rng = CounterRng(sampler.seed)
    sup_ratio = 0.0
    inf_ratio = math.inf
    for _ in range(sampler.count):
        x = sample_ball_point(rng, alg, sampler.radius)
        y = sample_ball_point(rng, alg, sampler.radius)
        d = quasi_dist(alg, x, y)
        if d < 1e-9:
            continue
        ratio = quasi_dist(alg, f(x), f(y)) / d
        sup_ratio = max(sup_ratio, ratio)
        inf_ratio = min(inf_ratio, ratio)
    return sup_ratio, inf_ratio
