"""Rate-function layer: trajectory metric, moment neighborhoods, the
orbital-entropy Monte Carlo estimator, and the rate integrand

    I(tau, P; t) = tau^t(P) - sigma0^lib(P)
                   - (1/2) sum_k int_0^t || E(Pi^s(D_s^(k) P)) ||_{tau~,2}^2 ds

with the conditional expectation from freestate.conditional_expectation_prop81.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from . import ncalg, rmt
from .errors import UnsupportedState
from .freestate import LiberationState, TraceState, conditional_expectation_prop81
from .ncalg import NCPolynomial, Word, Xs

NEG_INF = "-inf"  # tagged value for log(0) outputs; never a float sentinel


# ---------------------------------------------------------------------------
# Word enumeration and evaluators


def words_up_to(n_rows, n_cols, max_len, times=(None,)):
    """All X-words with row indices <= n_rows, column indices <= n_cols,
    length 1..max_len; each letter takes every time in ``times`` (None = 0)."""
    out = []
    ids = [(i, j) for i in range(1, n_rows + 1) for j in range(1, n_cols + 1)]
    for length in range(1, max_len + 1):
        for combo in itertools.product(ids, repeat=length):
            for ts in itertools.product(times, repeat=length):
                out.append(
                    Word(tuple(Xs(i, j, 0 if t is None else t) for (i, j), t in zip(combo, ts)))
                )
    return out


class EmpiricalTrajectory:
    """Word-moment evaluator averaging matrix traces over one or more
    resolved paths (trajectories or Haar tuples) of a fixed initial family."""

    def __init__(self, family, resolvers):
        self.family = family
        self.resolvers = list(resolvers)

    def moment(self, word: Word) -> complex:
        vals = [rmt.evaluate_word_trace(word, self.family, r) for r in self.resolvers]
        return complex(np.mean(vals))


def _moment_of(evaluator, word):
    if isinstance(evaluator, TraceState):
        return evaluator.moment(word)
    if hasattr(evaluator, "moment"):
        return evaluator.moment(word)
    return evaluator(word)


# ---------------------------------------------------------------------------
# Trajectory metric (truncated)


def trajectory_metric_d(t1, t2, m_max, l_max, grid, gen_ids=None) -> float:
    """Truncated metric: sum over m <= m_max, l <= l_max of 2^{-m-l} times the
    max over words of length l (indices <= m) with letter times from ``grid``
    (restricted to [0, m]) of min(|Delta moment|, 1).

    ``gen_ids`` optionally restricts the generator alphabet (still filtered
    by the index cap m at each level)."""
    total = 0.0
    for m in range(1, m_max + 1):
        times_m = [t for t in grid if 0 <= t <= m]
        if gen_ids is None:
            ids = [(i, j) for i in range(1, m + 1) for j in range(1, m + 1)]
        else:
            ids = [(i, j) for (i, j) in gen_ids if i <= m and j <= m]
        if not ids or not times_m:
            continue
        for ell in range(1, l_max + 1):
            worst = 0.0
            for combo in itertools.product(ids, repeat=ell):
                for ts in itertools.product(times_m, repeat=ell):
                    w = Word(tuple(Xs(i, j, t) for (i, j), t in zip(combo, ts)))
                    delta = abs(_moment_of(t1, w) - _moment_of(t2, w))
                    worst = max(worst, min(delta, 1.0))
                    if worst >= 1.0:
                        break
                if worst >= 1.0:
                    break
            total += 2.0 ** (-m - ell) * worst
    return total


# ---------------------------------------------------------------------------
# Moment neighborhoods


class NeighborhoodSpec:
    __slots__ = ("m", "delta", "closed")

    def __init__(self, m, delta, closed=False):
        if m < 1:
            raise ValueError("m must be >= 1")
        if not delta > 0:
            raise ValueError("delta must be > 0")
        self.m = m
        self.delta = delta
        self.closed = closed


def neighborhood_member(sigma_prime, sigma, spec: NeighborhoodSpec, gen_ids=None) -> bool:
    """Membership of sigma' in O_{m,delta}(sigma) (strict) or F_{m,delta}
    (closed): all time-0 words of length <= m in the given generators
    (default: all (i, j) with i, j <= m)."""
    if gen_ids is None:
        words = words_up_to(spec.m, spec.m, spec.m)
    else:
        words = [
            Word(tuple(Xs(i, j, 0) for i, j in combo))
            for length in range(1, spec.m + 1)
            for combo in itertools.product(gen_ids, repeat=length)
        ]
    for w in words:
        gap = abs(_moment_of(sigma_prime, w) - _moment_of(sigma, w))
        if spec.closed:
            if gap > spec.delta:
                return False
        else:
            if gap >= spec.delta:
                return False
    return True


# ---------------------------------------------------------------------------
# chi_orb Monte Carlo


def chi_orb_mc(sigma, family, N, spec: NeighborhoodSpec, samples, base_seed, n_motions=None):
    """Estimate log nu_N({U tuples whose rotated trace lands in O_{m,delta}}).

    Returns (log_fraction, hits, samples) where log_fraction is the tagged
    NEG_INF on zero hits. Sample s draws its Haar tuple from seed
    base_seed ^ s (one stream, motions in index order).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if n_motions is None:
        n_motions = max(gid[0] for gid in family.entries)
    gen_ids = sorted(family.entries)
    hits = 0
    for s in range(samples):
        rng = np.random.default_rng(base_seed ^ s)
        tup = rmt.HaarTuple({i: rmt.sample_haar(N, rng) for i in range(1, n_motions + 1)})
        emp = EmpiricalTrajectory(family, [tup])
        if neighborhood_member(emp, sigma, spec, gen_ids=gen_ids):
            hits += 1
    log_fraction = NEG_INF if hits == 0 else math.log(hits / samples)
    return log_fraction, hits, samples


# ---------------------------------------------------------------------------
# Rate integrand


def rate_integrand_eq9(tau, P, t, s_points=8):
    """(value, breakdown) of the rate integrand at trajectory tau and test
    polynomial P, horizon t.

    breakdown = {"shifted": tau^t(P), "reference": sigma0^lib(P),
                 "quadratic": (1/2) sum_k int_0^t ||E||^2 ds}.
    The s-integral uses the trapezoid rule on each interval between kink
    points (word times), with ``s_points`` panels per interval.
    """
    if not isinstance(tau, LiberationState):
        if isinstance(tau, TraceState):
            ref = LiberationState(tau.sigma0, tau.n)
        else:
            raise UnsupportedState(
                "rate_integrand_eq9 needs an oracle TraceState (conditional "
                "expectations are not computable for empirical trajectories)"
            )
    else:
        ref = tau
    if isinstance(P, Word):
        P = NCPolynomial.from_word(P)
    t = ncalg._as_time(t)
    n = tau.n

    shifted = complex(tau.time_shifted_moment(P, t)).real
    reference = complex(ref.moment(P)).real

    # ||E(Pi^s(D_s^(k) P))||^2 summed over k, integrated over s in [0, t].
    # The integrand vanishes for s past the largest word time.
    max_t = max((w.max_time() for w in P.terms), default=Fraction(0))

    def integrand(s):
        if s >= max_t:
            return 0.0
        total = 0.0
        for k in range(1, n + 1):
            E = NCPolynomial.zero()
            for w, c in P.terms.items():
                E = E + conditional_expectation_prop81(w, k, s, tau) * c
            total += tau.norm2_squared(E)
        return total

    quad = 0.0
    kinks = _kink_times_capped(P, t)
    for a, b in zip(kinks, kinks[1:]):
        if a >= max_t:
            continue
        xs = [a + (b - a) * Fraction(q, s_points) for q in range(s_points + 1)]
        ys = [integrand(x) for x in xs]
        quad += float(np.trapezoid(ys, [float(x) for x in xs]))
    quad *= 0.5

    value = shifted - reference - quad
    breakdown = {"shifted": shifted, "reference": reference, "quadratic": quad}
    return value, breakdown


def _kink_times_capped(P: NCPolynomial, t: Fraction):
    kinks = {Fraction(0), t}
    for w in P.terms:
        for sym in w.letters:
            if 0 < sym.t < t:
                kinks.add(sym.t)
    return sorted(kinks)
