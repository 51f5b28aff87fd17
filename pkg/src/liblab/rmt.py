"""Finite-N simulation: deterministic initial families, unitary Brownian
motion trajectories, Haar sampling, and empirical word traces.

Stepping scheme: U(t+h) = exp(i sqrt(h) H) U(t) with H a self-adjoint
Gaussian generator normalized so E tr_N H^2 = 1. The exponential of the
skew-Hermitian generator keeps every iterate exactly unitary; the matrix
exponential is taken through the eigendecomposition of H.

Determinism: Monte Carlo path p draws from ``default_rng(base_seed ^ p)``;
within a path the draw order is fixed (per step, motions in index order,
real part then imaginary part), so identical seeds give bit-identical runs.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from . import _kernels, ncalg
from .errors import GridMiss, IncompatibleN
from .freestate import InitialLaw, MarginalLaw, free_ubm_moment
from .ncalg import Word
from .ncpart import catalan


# ---------------------------------------------------------------------------
# Initial families


class SemicircleLaw(MarginalLaw):
    """Standard semicircle (mean 0, variance 1, support [-2, 2])."""

    def __init__(self, label, max_degree=16):
        moments = [0 if k % 2 else catalan(k // 2) for k in range(1, max_degree + 1)]
        super().__init__(label, moments=moments, norm_bound=2.0)

    @staticmethod
    def cdf(x: float) -> float:
        if x <= -2.0:
            return 0.0
        if x >= 2.0:
            return 1.0
        return 0.5 + (x * math.sqrt(4.0 - x * x) + 4.0 * math.asin(x / 2.0)) / (4.0 * math.pi)

    def quantile(self, q: float) -> float:
        lo, hi = -2.0, 2.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if self.cdf(mid) < q:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


class InitialFamily:
    """Deterministic self-adjoint matrices xi_{ij}(N), one per generator id."""

    def __init__(self, N, entries, norm_bound):
        self.N = N
        self.entries = dict(entries)
        self.norm_bound = norm_bound

    def matrix(self, gid):
        return self.entries[tuple(gid)]


def _atom_counts(weights, N, strict):
    exact = [Fraction(w) * N for w in weights]
    if all(c.denominator == 1 for c in exact):
        return [int(c) for c in exact]
    if strict:
        raise IncompatibleN(
            "weights %r not exactly realizable at N=%d" % ([str(w) for w in weights], N)
        )
    counts = [int(c) for c in exact]
    rema = sorted(range(len(exact)), key=lambda i: exact[i] - counts[i], reverse=True)
    for i in rema[: N - sum(counts)]:
        counts[i] += 1
    return counts


def build_initial_family(marginals, N, strict=True) -> InitialFamily:
    """Quantile-diagonal realization of the initial law at dimension N.

    ``marginals`` is a list of MarginalLaw (free-product components) or an
    InitialLaw (which may correlate generators inside one component). Atomic
    components are realized exactly when N times every weight is an integer;
    otherwise IncompatibleN in strict mode, largest-remainder rounding if not.
    """
    if isinstance(marginals, InitialLaw):
        components = marginals.components
        quantile_laws = {}
    else:
        components = [m.component for m in marginals]
        quantile_laws = {
            m.component.ids[0]: m for m in marginals if hasattr(m, "quantile")
        }

    entries = {}
    norm = 0.0
    for comp in components:
        if hasattr(comp, "atoms"):
            counts = _atom_counts(comp.weights, N, strict)
            for pos, gid in enumerate(comp.ids):
                vals = []
                for atom, c in zip(comp.atoms, counts):
                    vals.extend([float(atom[pos])] * c)
                vals.sort()
                entries[gid] = np.diag(np.array(vals, dtype=np.complex128))
                norm = max(norm, max(abs(v) for v in vals) if vals else 0.0)
        else:
            gid = comp.ids[0]
            law = quantile_laws.get(gid)
            if law is None:
                raise IncompatibleN(
                    "component %r has neither atoms nor a quantile function" % (gid,)
                )
            vals = [law.quantile((k + 0.5) / N) for k in range(N)]
            entries[gid] = np.diag(np.array(vals, dtype=np.complex128))
            norm = max(norm, max(abs(v) for v in vals))
    return InitialFamily(N, entries, norm)


# ---------------------------------------------------------------------------
# Gaussian generators and Haar sampling


def gaussian_generator(N, rng):
    """Self-adjoint Gaussian H with E tr_N H^2 = 1 (GUE normalization)."""
    A = rng.standard_normal((N, N))
    B = rng.standard_normal((N, N))
    return _kernels.assemble_gue(A, B)


def sample_haar(N, seed_or_rng):
    """Exactly Haar-distributed unitary: QR of a Ginibre matrix with the
    triangular factor's diagonal phases folded back in."""
    rng = (
        seed_or_rng
        if isinstance(seed_or_rng, np.random.Generator)
        else np.random.default_rng(seed_or_rng)
    )
    Z = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / math.sqrt(2.0)
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R)
    return Q * (d / np.abs(d))


# ---------------------------------------------------------------------------
# Batched stepping engine


class BatchedUBM:
    """P independent paths of n motions, stepped in lockstep.

    ``self.U[i]`` is the (P, N, N) stack of the current unitaries of motion i;
    ``self.time`` is the exact current time (a Fraction multiple of h).
    """

    def __init__(self, N, n_motions, h, paths, base_seed):
        self.N = N
        self.n = n_motions
        self.h = Fraction(h)
        self.paths = paths
        self.base_seed = base_seed
        self.rngs = [np.random.default_rng(base_seed ^ p) for p in range(paths)]
        eye = np.eye(N, dtype=np.complex128)
        self.U = {i: np.tile(eye, (paths, 1, 1)) for i in range(1, n_motions + 1)}
        self.steps_done = 0

    @property
    def time(self) -> Fraction:
        return self.h * self.steps_done

    def step(self):
        N, P = self.N, self.paths
        sh = math.sqrt(float(self.h))
        for i in range(1, self.n + 1):
            A = np.empty((P, N, N))
            B = np.empty((P, N, N))
            for p in range(P):
                A[p] = self.rngs[p].standard_normal((N, N))
                B[p] = self.rngs[p].standard_normal((N, N))
            H = _kernels.assemble_gue(A, B)
            w, V = np.linalg.eigh(H)
            E = _kernels.phase_scale(V, w, sh)
            self.U[i] = E @ self.U[i]
        self.steps_done += 1

    def run_until(self, t, snapshot_times=(), callback=None):
        """Step to time t; at each time in ``snapshot_times`` (exact h
        multiples) call ``callback(time, U_dict)``."""
        t = Fraction(t)
        snaps = {Fraction(x) for x in snapshot_times}
        if self.time in snaps and callback is not None:
            callback(self.time, self.U)
        while self.time < t:
            self.step()
            if self.time in snaps and callback is not None:
                callback(self.time, self.U)

    def traces(self, i, power=1):
        """Per-path normalized traces tr_N U_i(t)^power."""
        U = self.U[i]
        M = U
        for _ in range(power - 1):
            M = M @ U
        return np.trace(M, axis1=-2, axis2=-1) / self.N


# ---------------------------------------------------------------------------
# Single-path trajectories and word traces


class UnitaryTrajectory:
    """One path's unitaries at a stored set of grid times."""

    def __init__(self, N, n_motions, h, seed, snapshots):
        self.N = N
        self.n = n_motions
        self.h = Fraction(h)
        self.seed = seed
        self.snapshots = snapshots  # (i, time Fraction) -> matrix

    def unitary(self, i, t):
        t = Fraction(t)
        if t == 0:
            return np.eye(self.N, dtype=np.complex128)
        key = (i, t)
        if key not in self.snapshots:
            raise GridMiss("time %s of motion %d is not on the stored grid" % (t, i))
        return self.snapshots[key]

    def unitarity_defect(self):
        worst = 0.0
        for M in self.snapshots.values():
            worst = max(
                worst,
                np.linalg.norm(M.conj().T @ M - np.eye(self.N), ord=2),
            )
        return worst


def simulate_trajectory(N, n_motions, sample_times, h, base_seed, path=0) -> UnitaryTrajectory:
    """Simulate one path (seed = base_seed ^ path) and store the unitaries at
    ``sample_times`` (each an exact multiple of h)."""
    h = Fraction(h)
    times = sorted(Fraction(t) for t in sample_times)
    for t in times:
        if t % h != 0:
            raise GridMiss("sample time %s is not a multiple of h=%s" % (t, h))
    engine = BatchedUBM(N, n_motions, h, paths=1, base_seed=base_seed ^ path)
    snapshots = {}

    def grab(t, U):
        for i in range(1, n_motions + 1):
            snapshots[(i, t)] = U[i][0].copy()

    horizon = times[-1] if times else Fraction(0)
    engine.run_until(horizon, snapshot_times=times, callback=grab)
    return UnitaryTrajectory(N, n_motions, h, base_seed ^ path, snapshots)


class HaarTuple:
    """Constant-in-time unitaries, one per motion (for the chi_orb microstates)."""

    def __init__(self, unitaries):
        self.unitaries = dict(unitaries)  # i -> matrix
        self.n = max(unitaries) if unitaries else 0

    def unitary(self, i, t):
        return self.unitaries[i]


def evaluate_word_trace(word: Word, family: InitialFamily, resolver) -> complex:
    """Normalized trace of the word with X(i,j,t) -> U_i(t) xi_ij U_i(t)^*
    for i <= n (unconjugated for i > n) and V(i,t) -> U_i(t).

    ``resolver`` is a UnitaryTrajectory or HaarTuple; GridMiss propagates for
    off-grid times.
    """
    N = family.N
    M = np.eye(N, dtype=np.complex128)
    n = getattr(resolver, "n", 0)
    for sym in word.letters:
        if sym.kind == ncalg.X:
            xi = family.matrix((sym.i, sym.j))
            if sym.i <= n:
                U = resolver.unitary(sym.i, sym.t)
                M = M @ (U @ xi @ U.conj().T)
            else:
                M = M @ xi
        else:
            if sym.i > n:
                continue  # v_{n+1} := 1
            U = resolver.unitary(sym.i, sym.t)
            M = M @ (U if sym.kind == ncalg.V else U.conj().T)
    return complex(np.trace(M) / N)


# ---------------------------------------------------------------------------
# Oracle certification harness


def finite_n_moment_ode_check(n_max, T, N, paths, h=None, base_seed=0, sample_times=None):
    """Empirical E[tr_N U(t)^n] against the large-N moment ODE.

    Returns rows (n, t, empirical, ode, gap, stderr).
    """
    T = Fraction(T)
    if h is None:
        h = T / 200
    h = Fraction(h)
    if sample_times is None:
        sample_times = [T * q / 4 for q in range(5)]
    engine = BatchedUBM(N, 1, h, paths, base_seed)
    rows = []

    def grab(t, U):
        M = np.eye(N, dtype=np.complex128)[None].repeat(paths, axis=0)
        for n in range(1, n_max + 1):
            M = M @ U[1]
            vals = np.trace(M, axis1=-2, axis2=-1).real / N
            emp = float(vals.mean())
            se = float(vals.std(ddof=1) / math.sqrt(paths)) if paths > 1 else 0.0
            ode = free_ubm_moment(n, float(t))
            rows.append((n, float(t), emp, ode, emp - ode, se))

    engine.run_until(T, snapshot_times=sample_times, callback=grab)
    return rows
