"""Noncommutative word/polynomial algebra over x_{ij}(t) and v_i(t).

Letters carry exact rational times (``fractions.Fraction``) so that the
unitarity rewrite v_i(t) v_i(t)* -> 1 and the indicator in the liberation
derivation are decidable. Coefficients are complex floats.

Text forms: ``X[i,j;t]``, ``V[i;t]``, ``V*[i;t]``; juxtaposition for products,
``+`` between terms.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .errors import NonXPolynomial

X = "X"
V = "V"
VSTAR = "V*"

_COEFF_EPS = 0.0  # exact-zero pruning only; tiny float coefficients are kept


def _as_time(t) -> Fraction:
    if isinstance(t, Fraction):
        return t
    if isinstance(t, int):
        return Fraction(t)
    if isinstance(t, str):
        return Fraction(t)
    if isinstance(t, float):
        if not float(t).is_integer() and Fraction(t).limit_denominator(10**6) != Fraction(t):
            raise TypeError(
                "times must be exact rationals; got float %r (pass Fraction or str)" % t
            )
        return Fraction(t)
    raise TypeError("unsupported time type: %r" % (t,))


class GeneratorSymbol:
    """One letter: X(i,j,t), V(i,t) or VStar(i,t). Immutable and hashable."""

    __slots__ = ("kind", "i", "j", "t")

    def __init__(self, kind, i, j, t):
        if kind not in (X, V, VSTAR):
            raise ValueError("kind must be X, V or V*")
        t = _as_time(t)
        if t < 0:
            raise ValueError("time must be nonnegative")
        if i < 1:
            raise ValueError("index i must be >= 1")
        if kind == X:
            if j is None or j < 1:
                raise ValueError("X symbols need a column index j >= 1")
        else:
            if j is not None:
                raise ValueError("V symbols carry no column index")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "i", i)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "t", t)

    def __setattr__(self, *_):
        raise AttributeError("GeneratorSymbol is immutable")

    def _key(self):
        return (self.kind, self.i, self.j, self.t)

    def __eq__(self, other):
        return isinstance(other, GeneratorSymbol) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def adjoint(self):
        if self.kind == X:
            return self
        return GeneratorSymbol(V if self.kind == VSTAR else VSTAR, self.i, None, self.t)

    def __repr__(self):
        if self.kind == X:
            return "X[%d,%d;%s]" % (self.i, self.j, self.t)
        return "%s[%d;%s]" % (self.kind, self.i, self.t)


def Xs(i, j, t):
    return GeneratorSymbol(X, i, j, t)


def Vs(i, t):
    return GeneratorSymbol(V, i, None, t)


def VsStar(i, t):
    return GeneratorSymbol(VSTAR, i, None, t)


def _canonical(letters):
    """Drop V(i,0)/V*(i,0) and cancel adjacent inverse pairs (stack pass).

    The rewrite system is length-reducing and the stack construction applies
    it to a fixed point, so the result is independent of application order.
    """
    out = []
    for sym in letters:
        if sym.kind in (V, VSTAR) and sym.t == 0:
            continue
        if out:
            top = out[-1]
            if (
                sym.kind in (V, VSTAR)
                and top.kind in (V, VSTAR)
                and top.kind != sym.kind
                and top.i == sym.i
                and top.t == sym.t
            ):
                out.pop()
                continue
        out.append(sym)
    return tuple(out)


class Word:
    """A canonical product of letters; the empty word is the identity."""

    __slots__ = ("letters",)

    def __init__(self, letters=(), _canonicalize=True):
        letters = tuple(letters)
        if _canonicalize:
            letters = _canonical(letters)
        object.__setattr__(self, "letters", letters)

    def __setattr__(self, *_):
        raise AttributeError("Word is immutable")

    def __eq__(self, other):
        return isinstance(other, Word) and self.letters == other.letters

    def __hash__(self):
        return hash(self.letters)

    def __len__(self):
        return len(self.letters)

    def __mul__(self, other):
        if isinstance(other, Word):
            return Word(self.letters + other.letters)
        return NotImplemented

    def adjoint(self):
        return Word(tuple(sym.adjoint() for sym in reversed(self.letters)))

    def is_x_only(self):
        return all(sym.kind == X for sym in self.letters)

    def max_time(self):
        return max((sym.t for sym in self.letters), default=Fraction(0))

    def __repr__(self):
        if not self.letters:
            return "1"
        return "".join(repr(sym) for sym in self.letters)


EMPTY_WORD = Word()


class NCPolynomial:
    """Finite complex-linear combination of canonical words."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        clean = {}
        if terms:
            for word, coeff in terms.items():
                if not isinstance(word, Word):
                    word = Word(word)
                coeff = complex(coeff)
                if coeff != 0:
                    cur = clean.get(word)
                    if cur is None:
                        clean[word] = coeff
                    else:
                        cur += coeff
                        if cur == 0:
                            del clean[word]
                        else:
                            clean[word] = cur
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, *_):
        raise AttributeError("NCPolynomial is immutable")

    @classmethod
    def from_word(cls, word, coeff=1.0):
        return cls({word if isinstance(word, Word) else Word(word): coeff})

    @classmethod
    def scalar(cls, value):
        return cls({EMPTY_WORD: value})

    @classmethod
    def zero(cls):
        return cls({})

    def __eq__(self, other):
        return isinstance(other, NCPolynomial) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = NCPolynomial.scalar(other)
        if not isinstance(other, NCPolynomial):
            return NotImplemented
        out = dict(self.terms)
        for w, c in other.terms.items():
            cur = out.get(w, 0.0) + c
            if cur == 0:
                out.pop(w, None)
            else:
                out[w] = cur
        return NCPolynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return NCPolynomial({w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, float, complex)):
            other = NCPolynomial.scalar(other)
        return self + (-other)

    def __rsub__(self, other):
        return NCPolynomial.scalar(other) + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            return NCPolynomial({w: c * other for w, c in self.terms.items()})
        if not isinstance(other, NCPolynomial):
            return NotImplemented
        out = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                w = w1 * w2
                cur = out.get(w, 0.0) + c1 * c2
                if cur == 0:
                    out.pop(w, None)
                else:
                    out[w] = cur
        return NCPolynomial(out)

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex)):
            return self * other
        return NotImplemented

    def adjoint(self):
        return NCPolynomial({w.adjoint(): c.conjugate() for w, c in self.terms.items()})

    def is_zero(self):
        return not self.terms

    def is_x_only(self):
        return all(w.is_x_only() for w in self.terms)

    def is_selfadjoint(self, tol=0.0):
        diff = self - self.adjoint()
        return all(abs(c) <= tol for c in diff.terms.values())

    def max_time(self):
        return max((w.max_time() for w in self.terms), default=Fraction(0))

    def __repr__(self):
        return format_polynomial(self)


def multiply(p: NCPolynomial, q: NCPolynomial) -> NCPolynomial:
    return p * q


class TensorPolynomial:
    """Finite map (Word, Word) -> coefficient; target of the derivation."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        clean = {}
        if terms:
            for pair, coeff in terms.items():
                coeff = complex(coeff)
                if coeff != 0:
                    cur = clean.get(pair, 0.0) + coeff
                    if cur == 0:
                        clean.pop(pair, None)
                    else:
                        clean[pair] = cur
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, *_):
        raise AttributeError("TensorPolynomial is immutable")

    def __eq__(self, other):
        return isinstance(other, TensorPolynomial) and self.terms == other.terms

    def __add__(self, other):
        out = dict(self.terms)
        for pair, c in other.terms.items():
            cur = out.get(pair, 0.0) + c
            if cur == 0:
                out.pop(pair, None)
            else:
                out[pair] = cur
        return TensorPolynomial(out)

    def is_zero(self):
        return not self.terms

    def mul_left_first(self, word: Word):
        """(word otimes 1) . self"""
        return TensorPolynomial({(word * a, b): c for (a, b), c in self.terms.items()})

    def mul_right_second(self, word: Word):
        """self . (1 otimes word)"""
        return TensorPolynomial({(a, b * word): c for (a, b), c in self.terms.items()})

    def flip_multiply(self) -> NCPolynomial:
        """theta(a otimes b) = b a, extended linearly."""
        out = {}
        for (a, b), c in self.terms.items():
            w = b * a
            cur = out.get(w, 0.0) + c
            if cur == 0:
                out.pop(w, None)
            else:
                out[w] = cur
        return NCPolynomial(out)


def _delta_letter(sym: GeneratorSymbol, k: int, s: Fraction) -> TensorPolynomial:
    """delta_s^(k) on one X letter."""
    if sym.kind != X:
        raise NonXPolynomial("liberation derivation is defined on X-polynomials only")
    if sym.i != k or not (0 <= s <= sym.t):
        return TensorPolynomial({})
    v = Vs(k, sym.t - s)
    vstar = VsStar(k, sym.t - s)
    return TensorPolynomial(
        {
            (Word((sym, v)), Word((vstar,))): 1.0,
            (Word((v,)), Word((vstar, sym))): -1.0,
        }
    )


def liberation_derivation(p: NCPolynomial, k: int, s) -> TensorPolynomial:
    """delta_s^(k), extended to polynomials by linearity and Leibniz."""
    s = _as_time(s)
    if not p.is_x_only():
        raise NonXPolynomial("polynomial contains V/V* letters")
    total = TensorPolynomial({})
    for word, coeff in p.terms.items():
        letters = word.letters
        for idx, sym in enumerate(letters):
            d = _delta_letter(sym, k, s)
            if d.is_zero():
                continue
            prefix = Word(letters[:idx])
            suffix = Word(letters[idx + 1 :])
            d = d.mul_left_first(prefix).mul_right_second(suffix)
            total = total + TensorPolynomial(
                {pair: c * coeff for pair, c in d.terms.items()}
            )
    return total


def cyclic_derivative(p: NCPolynomial, k: int, s) -> NCPolynomial:
    """D_s^(k) = theta . delta_s^(k)."""
    return liberation_derivation(p, k, s).flip_multiply()


def cyclic_derivative_commutator_form(word: Word, k: int, s) -> NCPolynomial:
    """Closed form of D_s^(k) on a monomial: sum over qualifying letters l of

        v_k(t_l - s)^* [R_l, x_l] v_k(t_l - s)

    with R_l the cyclic rotation x_{l+1} ... x_{l-1} of the remaining letters.
    Provided as an independent route for cross-checking `cyclic_derivative`.
    """
    s = _as_time(s)
    if not word.is_x_only():
        raise NonXPolynomial("commutator form applies to X-words")
    letters = word.letters
    total = NCPolynomial.zero()
    for idx, sym in enumerate(letters):
        if sym.i != k or not (0 <= s <= sym.t):
            continue
        vstar = Word((VsStar(k, sym.t - s),))
        v = Word((Vs(k, sym.t - s),))
        rot = Word(letters[idx + 1 :] + letters[:idx])
        xw = Word((sym,))
        term = NCPolynomial.from_word(vstar * rot * xw * v) - NCPolynomial.from_word(
            vstar * xw * rot * v
        )
        total = total + term
    return total


def pi_s_substitution(p: NCPolynomial, s, n: int) -> NCPolynomial:
    """Homomorphic Pi^s with `n` motions.

    X(i,j,t) with i <= n maps to V(i,(t-s)v0) X(i,j,s^t) V*(i,(t-s)v0);
    X letters with i > n (the fixed row n+1) and all V letters are unchanged.
    """
    s = _as_time(s)
    terms = {}
    for word, coeff in p.terms.items():
        new_letters = []
        for sym in word.letters:
            if sym.kind != X or sym.i > n:
                new_letters.append(sym)
                continue
            shifted = max(sym.t - s, Fraction(0))
            inner = min(s, sym.t)
            new_letters.append(Vs(sym.i, shifted))
            new_letters.append(Xs(sym.i, sym.j, inner))
            new_letters.append(VsStar(sym.i, shifted))
        w = Word(new_letters)
        cur = terms.get(w, 0.0) + coeff
        if cur == 0:
            terms.pop(w, None)
        else:
            terms[w] = cur
    return NCPolynomial(terms)


pi_s = pi_s_substitution


# ---------------------------------------------------------------------------
# Text serialization


_SYM_RE = re.compile(
    r"X\[(\d+),(\d+);([0-9]+(?:/[0-9]+)?)\]|V(\*?)\[(\d+);([0-9]+(?:/[0-9]+)?)\]"
)


def format_word(word: Word) -> str:
    return repr(word)


def parse_word(text: str) -> Word:
    text = text.strip()
    if text == "1":
        return EMPTY_WORD
    letters = []
    pos = 0
    while pos < len(text):
        m = _SYM_RE.match(text, pos)
        if not m:
            raise ValueError("cannot parse word at %r" % text[pos:])
        if m.group(1) is not None:
            letters.append(Xs(int(m.group(1)), int(m.group(2)), Fraction(m.group(3))))
        else:
            kind = VSTAR if m.group(4) == "*" else V
            letters.append(
                GeneratorSymbol(kind, int(m.group(5)), None, Fraction(m.group(6)))
            )
        pos = m.end()
    return Word(letters)


def _format_coeff(c: complex) -> str:
    if c.imag == 0:
        r = c.real
        if r == int(r):
            return "%d" % int(r)
        return repr(r)
    s = repr(c)
    return s if s.startswith("(") else "(%s)" % s


def format_polynomial(p: NCPolynomial) -> str:
    if not p.terms:
        return "0"
    parts = []
    for word in sorted(p.terms, key=lambda w: (len(w), repr(w))):
        c = p.terms[word]
        w = format_word(word)
        if c == 1 and word.letters:
            parts.append(w)
        elif not word.letters:
            parts.append(_format_coeff(c))
        else:
            parts.append("%s*%s" % (_format_coeff(c), w))
    return " + ".join(parts)


def parse_polynomial(text: str) -> NCPolynomial:
    total = NCPolynomial.zero()
    for raw in _split_terms(text):
        raw = raw.strip()
        if not raw:
            continue
        if "*X[" in raw or "*V" in raw:
            coeff_txt, word_txt = raw.split("*", 1)
            coeff = complex(coeff_txt)
            total = total + NCPolynomial.from_word(parse_word(word_txt), coeff)
        elif raw.startswith(("X[", "V[", "V*[")):
            total = total + NCPolynomial.from_word(parse_word(raw), 1.0)
        else:
            total = total + NCPolynomial.scalar(complex(raw))
    return total


def _split_terms(text: str):
    # split on '+' at depth 0 (outside brackets/parens)
    depth = 0
    cur = []
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == "+" and depth == 0:
            yield "".join(cur)
            cur = []
        else:
            cur.append(ch)
    yield "".join(cur)
