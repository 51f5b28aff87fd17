"""Exact large-N trace oracles.

The central device is a moment engine for families of mutually free "colors":
a word of letters, each tagged with a color and an element id, is evaluated by
the non-crossing cumulant sum restricted to color-homogeneous partitions
(mixed free cumulants vanish). Per-color joint cumulants are obtained by
Moebius inversion of per-color joint moments, which each color supplies:

- atomic components of the initial law give exact rational joint moments;
- a unitary Brownian motion color reduces multi-time words to words in its
  left increments (mutually free, single-time laws) and recurses;
- a single increment collapses words in g, g* to a power g^k by unitarity.

On top of the engine sit the oracle states sigma0^fr (free product, constant
in time) and sigma0^lib (liberation process), their free-BM extensions
tau-tilde, and the conditional-expectation expansion in terms of free
cumulants and the Kreweras complement.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import ncalg
from .errors import DegreeOverflow, SizeLimit, UnsupportedState, UnsupportedWord
from .ncalg import NCPolynomial, Word, Xs
from .ncpart import CumulantFunctional, _nc_cached, kreweras

WORD_LENGTH_CAP = 40


# ---------------------------------------------------------------------------
# Free unitary Brownian motion moments (large-N moment ODE)


@lru_cache(maxsize=None)
def _fubm_moments_upto(n_max: int, t: float):
    """Integrate m_j' = -(j/2) m_j - (j/2) sum_{k=1}^{j-1} m_k m_{j-k} to time t."""
    from scipy.integrate import solve_ivp

    if t == 0.0:
        return (1.0,) * n_max

    def rhs(_, m):
        out = np.empty(n_max)
        for j in range(1, n_max + 1):
            conv = sum(m[k - 1] * m[j - k - 1] for k in range(1, j))
            out[j - 1] = -0.5 * j * (m[j - 1] + conv)
        return out

    sol = solve_ivp(
        rhs, (0.0, t), np.ones(n_max), method="DOP853", rtol=1e-12, atol=1e-14
    )
    return tuple(sol.y[:, -1])


def free_ubm_moment(n: int, t) -> float:
    """n-th moment of one free unitary Brownian motion at time t."""
    if n < 0:
        raise ValueError("moment order must be >= 0")
    t = float(t)
    if t < 0:
        raise ValueError("time must be >= 0")
    if n == 0:
        return 1.0
    return _fubm_moments_upto(n, t)[n - 1]


# ---------------------------------------------------------------------------
# Initial laws


class AtomicComponent:
    """One freely-independent component of the initial law, with finite joint
    spectrum: atoms are value tuples over the component's generator ids."""

    def __init__(self, ids, atoms, weights):
        self.ids = tuple(tuple(g) for g in ids)
        self.atoms = [tuple(Fraction(v) if not isinstance(v, float) else v for v in a) for a in atoms]
        self.weights = [Fraction(w) if not isinstance(w, float) else w for w in weights]
        if any(len(a) != len(self.ids) for a in self.atoms):
            raise ValueError("atom arity must match generator count")
        if sum(self.weights) != 1:
            raise ValueError("weights must sum to 1")
        self._pos = {g: idx for idx, g in enumerate(self.ids)}

    def joint_moment(self, id_seq):
        total = 0
        for atom, w in zip(self.atoms, self.weights):
            prod = w
            for g in id_seq:
                prod = prod * atom[self._pos[g]]
            total = total + prod
        return total

    def mean(self, gid):
        return self.joint_moment((gid,))

    def centered_norm(self, gid):
        """Sup-norm of the centered generator (atomic law)."""
        mu = self.mean(gid)
        return max(abs(a[self._pos[gid]] - mu) for a in self.atoms)


class MomentComponent:
    """Single-generator component given only by its moment sequence."""

    def __init__(self, gid, moments, norm_bound):
        self.ids = (tuple(gid),)
        self._moments = list(moments)  # m_1, m_2, ...
        self.norm_bound = norm_bound

    def joint_moment(self, id_seq):
        k = len(id_seq)
        if k == 0:
            return 1
        if k > len(self._moments):
            raise DegreeOverflow("moment sequence supplied up to degree %d" % len(self._moments))
        return self._moments[k - 1]

    def mean(self, gid):
        return self.joint_moment((gid,))


class MarginalLaw:
    """Law of the generators attached to one algebra index i.

    Either atomic (atoms + weights per generator tuple) or a plain moment
    sequence with a declared norm bound.
    """

    def __init__(self, label, atoms=None, weights=None, moments=None, norm_bound=None, n_generators=1):
        self.label = label
        self.norm_bound = norm_bound
        if atoms is not None:
            vec_atoms = [a if isinstance(a, (tuple, list)) else (a,) for a in atoms]
            ids = [(label, j + 1) for j in range(len(vec_atoms[0]))]
            self.component = AtomicComponent(ids, vec_atoms, weights)
            if norm_bound is None:
                self.norm_bound = max(max(abs(v) for v in a) for a in vec_atoms)
        elif moments is not None:
            if n_generators != 1:
                raise ValueError("moment-sequence marginals support one generator")
            if norm_bound is None:
                raise ValueError("moment-sequence marginals need a norm bound")
            self.component = MomentComponent((label, 1), moments, norm_bound)
        else:
            raise ValueError("provide atoms+weights or moments")

    def moment(self, k: int):
        gid = self.component.ids[0]
        return self.component.joint_moment((gid,) * k)

    def hankel_psd(self, max_deg: int, tol=1e-10) -> bool:
        """Positive-semidefiniteness of the Hankel matrix of moments."""
        size = max_deg // 2 + 1
        m = [[float(self.moment(a + b)) if a + b > 0 else 1.0 for b in range(size)] for a in range(size)]
        eig = np.linalg.eigvalsh(np.array(m))
        return bool(eig.min() >= -tol)


class InitialLaw:
    """sigma0: a tracial state on the time-zero generators, presented as a
    free product of components (a single component may correlate generators
    across different algebra indices)."""

    def __init__(self, components):
        self.components = list(components)
        self._comp_of = {}
        for idx, comp in enumerate(self.components):
            for gid in comp.ids:
                if gid in self._comp_of:
                    raise ValueError("generator %r in two components" % (gid,))
                self._comp_of[gid] = idx

    @classmethod
    def free_product(cls, marginals):
        return cls([m.component for m in marginals])

    def component_index(self, gid):
        return self._comp_of[tuple(gid)]

    def component(self, gid):
        return self.components[self.component_index(gid)]

    @property
    def generator_ids(self):
        return [gid for comp in self.components for gid in comp.ids]


# ---------------------------------------------------------------------------
# The free-family moment engine


class FreeMomentEngine:
    """Moment evaluator for a family of mutually free colors.

    A letter is ``(color, elem)``. Colors:

    - ``('x', comp_idx)``: component of the initial law; elem is a generator id
    - ``('u', i)`` / ``('v', i)``: unitary BM motion; elem is ``(time, +-1)``
    - ``('inc', r, dt)``: one left increment (internal); elem is an exponent
    """

    def __init__(self, sigma0: InitialLaw | None):
        self.sigma0 = sigma0
        self._moment_memo = {}
        self._cumulants = {}  # color -> CumulantFunctional

    # -- public ------------------------------------------------------------

    def moment(self, letters) -> complex:
        letters = tuple(letters)
        if len(letters) > WORD_LENGTH_CAP:
            raise DegreeOverflow("word of %d letters exceeds cap %d" % (len(letters), WORD_LENGTH_CAP))
        return self._moment(letters)

    # -- engine ------------------------------------------------------------

    def _moment(self, letters):
        if not letters:
            return 1
        hit = self._moment_memo.get(letters)
        if hit is not None:
            return hit
        color0, elem0 = letters[0]
        positions = [p for p in range(1, len(letters)) if letters[p][0] == color0]
        total = 0
        for r in range(len(positions) + 1):
            for chosen in itertools.combinations(positions, r):
                block_elems = (elem0,) + tuple(letters[p][1] for p in chosen)
                kap = self._cumulant(color0, block_elems)
                if kap == 0:
                    continue
                prod = kap
                bounds = (0,) + chosen
                ok = True
                for a, b in zip(bounds, bounds[1:]):
                    sub = self._moment(letters[a + 1 : b])
                    if sub == 0:
                        ok = False
                        break
                    prod = prod * sub
                if not ok:
                    continue
                tail = self._moment(letters[bounds[-1] + 1 :])
                prod = prod * tail
                total = total + prod
        self._moment_memo[letters] = total
        return total

    def _cumulant(self, color, elems):
        cf = self._cumulants.get(color)
        if cf is None:
            cf = CumulantFunctional(lambda args, c=color: self._color_moment(c, args))
            self._cumulants[color] = cf
        return cf.kappa(elems)

    def _color_moment(self, color, elems):
        kind = color[0]
        if kind == "x":
            comp = self.sigma0.components[color[1]]
            return comp.joint_moment(elems)
        if kind == "xr":
            # One row's generators, freed from all other rows: their joint law
            # is sigma0 restricted to the row (free product across components,
            # joint within).
            return self._moment(
                tuple((("x", self.sigma0.component_index(g)), g) for g in elems)
            )
        if kind in ("u", "v"):
            return self._ubm_joint_moment(elems)
        if kind == "inc":
            power = sum(elems)
            return free_ubm_moment(abs(power), color[2])
        raise UnsupportedState("unknown color %r" % (color,))

    def _ubm_joint_moment(self, elems):
        """Joint moment of one motion's letters (time, exponent), via left
        multiplicative free increments: v(t_q) = g_q g_{q-1} ... g_1."""
        times = sorted({t for t, _ in elems if t > 0})
        boundaries = [Fraction(0)] + times
        inc_colors = [
            ("inc", r, float(boundaries[r] - boundaries[r - 1]))
            for r in range(1, len(boundaries))
        ]
        letters = []
        for t, e in elems:
            if t == 0:
                continue
            q = times.index(t) + 1
            if e == 1:
                seq = [(inc_colors[r - 1], 1) for r in range(q, 0, -1)]
            elif e == -1:
                seq = [(inc_colors[r - 1], -1) for r in range(1, q + 1)]
            else:
                raise UnsupportedWord("unitary letters carry exponent +-1")
            letters.extend(seq)
        merged = []
        for color, e in letters:
            if merged and merged[-1][0] == color:
                tot = merged[-1][1] + e
                if tot == 0:
                    merged.pop()
                else:
                    merged[-1] = (color, tot)
            else:
                merged.append((color, e))
        expanded = []
        for color, e in merged:
            step = 1 if e > 0 else -1
            expanded.extend((color, step) for _ in range(abs(e)))
        return self._moment(tuple(expanded))


# ---------------------------------------------------------------------------
# Oracle trace states


class TraceState:
    """Common interface: tau on X-words (with times) plus the free-BM-extended
    tau-tilde on mixed X/V words."""

    kind = "abstract"

    def __init__(self, sigma0: InitialLaw, n_motions: int):
        self.sigma0 = sigma0
        self.n = n_motions
        self.engine = FreeMomentEngine(sigma0)

    # Subclasses define how one X letter expands into engine letters.
    def _x_letters(self, sym):
        raise NotImplementedError

    def _letters(self, word: Word):
        out = []
        for sym in word.letters:
            if sym.kind == ncalg.X:
                out.extend(self._x_letters(sym))
            else:
                if sym.i > self.n:
                    continue  # v_{n+1} := 1
                e = 1 if sym.kind == ncalg.V else -1
                if sym.t > 0:
                    out.append((("v", sym.i), (sym.t, e)))
        return tuple(out)

    def extended_moment(self, p) -> complex:
        """tau-tilde of a mixed X/V polynomial."""
        if isinstance(p, Word):
            return self.engine.moment(self._letters(p))
        total = 0
        for word, coeff in p.terms.items():
            total = total + coeff * self.engine.moment(self._letters(word))
        return total

    def moment(self, p) -> complex:
        """tau of an X-polynomial (also accepts mixed words: tau-tilde)."""
        return self.extended_moment(p)

    def time_shifted_moment(self, p, t) -> complex:
        """tau^t(P) = tau-tilde(Pi^t(P))."""
        if isinstance(p, Word):
            p = NCPolynomial.from_word(p)
        return self.extended_moment(ncalg.pi_s_substitution(p, t, self.n))

    def norm2_squared(self, p) -> float:
        """||p||_{tau-tilde,2}^2 = tau-tilde(p* p)."""
        val = self.extended_moment(p.adjoint() * p)
        return float(complex(val).real)


class FreeProductState(TraceState):
    """sigma0^fr as a constant trajectory: x_{ij}(t) = x_{ij} for all t, with
    the rows (algebra indices i) freely independent; each row keeps its
    sigma0 joint law."""

    kind = "free-product"

    def _x_letters(self, sym):
        gid = (sym.i, sym.j)
        return [(("xr", sym.i), gid)]


class LiberationState(TraceState):
    """sigma0^lib: x_{ij}(t) = u_i(t) x_{ij} u_i(t)^* with the motions u_i
    free from the initial algebra and from each other; rows i > n are fixed."""

    kind = "liberation"

    def _x_letters(self, sym):
        gid = (sym.i, sym.j)
        xcol = (("x", self.sigma0.component_index(gid)), gid)
        if sym.i > self.n or sym.t == 0:
            return [xcol]
        ucol = ("u", sym.i)
        return [(ucol, (sym.t, 1)), xcol, (ucol, (sym.t, -1))]


def free_product_moment(marginals, word: Word) -> complex:
    """Moment of an X-word under the free product of the marginals."""
    sigma0 = InitialLaw.free_product(marginals)
    state = FreeProductState(sigma0, n_motions=0)
    return state.moment(word)


def free_product_limit_state(sigma0: InitialLaw, n_motions: int) -> FreeProductState:
    """sigma0^fr: the T -> infinity limit of the liberation process — the free
    product of the row marginals of sigma0, viewed as a constant trajectory.

    The rows become freely independent in the limit even when sigma0
    correlates them; the returned state therefore frees the rows.
    """
    return FreeProductState(sigma0, n_motions)


def liberation_state(sigma0: InitialLaw, n_motions: int) -> LiberationState:
    return LiberationState(sigma0, n_motions)


def liberation_state_moment(sigma0: InitialLaw, word: Word, n_motions: int) -> complex:
    """sigma0^lib(word): one-shot evaluation (construct LiberationState to
    batch many words against one cache)."""
    return LiberationState(sigma0, n_motions).moment(word)


def mixed_v_moment(word: Word, n_free: int) -> complex:
    """Moment of a word of V/V* letters under the free unitary BM family
    (v_i for i <= n_free, v_{n+1} = 1)."""
    for sym in word.letters:
        if sym.kind == ncalg.X:
            raise UnsupportedWord("mixed_v_moment takes V/V* words only")
    state = TraceState.__new__(TraceState)
    TraceState.__init__(state, InitialLaw([]), n_free)
    return state.extended_moment(word)


# ---------------------------------------------------------------------------
# Prop 8.1 conditional expectation


PROP81_LENGTH_CAP = 6


def conditional_expectation_prop81(word: Word, k: int, s, tau: TraceState) -> NCPolynomial:
    """Expansion of E_{N(tau)}(pi(Pi^s(D_s^(k) word))) as an X-polynomial.

    The coefficients are joint free cumulants kappa_pi[w_1..w_n] of the
    unitary words w_l = v_{i_{l-1}}((t_{l-1}-s)_+)^* v_{i_l}((t_l-s)_+)
    (cyclic convention i_0 = i_n, v index above n acts as 1), and the words
    come from the partitioned-moment combination C(tau; K(pi)) evaluated at
    the time-s letters, pushed through D_s^(k).
    """
    s = ncalg._as_time(s)
    letters = word.letters
    n = len(letters)
    if n > PROP81_LENGTH_CAP:
        raise SizeLimit("Prop 8.1 expansion capped at words of length %d" % PROP81_LENGTH_CAP)
    if not word.is_x_only():
        raise UnsupportedWord("Prop 8.1 applies to X-words")
    if n == 0:
        return NCPolynomial.zero()
    if not isinstance(tau, TraceState):
        raise UnsupportedState("tau must be an oracle TraceState")

    # engine letters of each w_l
    def v_letter(i, t, e):
        if i > tau.n or t == 0:
            return []
        return [(("v", i), (t, e))]

    shifted = [max(sym.t - s, Fraction(0)) for sym in letters]
    w_letters = []
    for ell in range(n):
        prev = (ell - 1) % n
        w = v_letter(letters[prev].i, shifted[prev], -1) + v_letter(
            letters[ell].i, shifted[ell], 1
        )
        w_letters.append(tuple(w))

    def w_moment(args):
        flat = tuple(letter for w in args for letter in w)
        return tau.engine.moment(flat)

    cf = CumulantFunctional(w_moment)

    sub_letters = [Xs(sym.i, sym.j, min(s, sym.t)) for sym in letters]

    total = NCPolynomial.zero()
    for pi in _nc_cached(n):
        kap = cf.kappa_pi(pi, tuple(w_letters))
        if kap == 0:
            continue
        kp = kreweras(pi)
        # C(tau; K(pi)) at the time-s letters
        block_words = [Word(tuple(sub_letters[e - 1] for e in b)) for b in kp.blocks]
        block_traces = [tau.moment(bw) for bw in block_words]
        comb = NCPolynomial.zero()
        for b_idx, bw in enumerate(block_words):
            prod = 1
            for o_idx, tr in enumerate(block_traces):
                if o_idx != b_idx:
                    prod = prod * tr
            comb = comb + NCPolynomial.from_word(bw, prod)
        total = total + ncalg.cyclic_derivative(comb, k, s) * complex(kap)
    return total


def lemma51_bound_check(sigma0: InitialLaw, entries, T):
    """Decay bound for alternating products of centered liberated elements.

    ``entries`` is a list of generator ids (i, j) with alternating motion
    indices i_k != i_{k+1}; each element is centered under sigma0. Returns
    (lhs, rhs) with

        lhs = |sigma0^lib( prod_k (X(i_k, j_k, T) - sigma0(x_{i_k j_k})) )|
        rhs = (2^{m-1} - 1) (sup_k ||x_k - tau(x_k)||)^m e^{-T/2}
    """
    m = len(entries)
    if m == 0:
        raise ValueError("need at least one entry")
    for a, b in zip(entries, entries[1:]):
        if a[0] == b[0]:
            raise ValueError("motion indices must alternate")
    n_motions = max(gid[0] for gid in entries)
    state = LiberationState(sigma0, n_motions)
    poly = NCPolynomial.scalar(1)
    norms = []
    for gid in entries:
        comp = sigma0.component(gid)
        mean = comp.mean(gid)
        norms.append(comp.centered_norm(gid))
        poly = poly * (NCPolynomial.from_word(Word((Xs(gid[0], gid[1], T),))) - complex(mean))
    lhs = abs(complex(state.moment(poly)))
    rhs = float((2 ** (m - 1) - 1) * max(norms) ** m) * float(np.exp(-float(T) / 2))
    return lhs, rhs
