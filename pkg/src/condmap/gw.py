"""Galton-Watson view of simply generated trees.

Admissible weights are tilted into an offspring law ``p^_i = w_i Z^{i-1}``
where ``Z`` is the smallest positive solution of ``z = g(z)``.  The module
also covers the two-type (white/black) description of mobiles, the law of
the second-generation offspring ``xi0`` and leaf counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

from . import _kernels as K
from .bijections import gn_inverse
from .trees import PlanarTree, enumerate_trees, exact_nu_distribution
from .weights import WeightSequence, _logsumexp

__all__ = [
    "NotAdmissibleError",
    "GWSpec",
    "Xi0Law",
    "probability_tilt",
    "solve_Z",
    "tilt",
    "two_type_offspring",
    "two_type_probability",
    "gw_probability",
    "xi0_law",
    "twig_decompose",
    "leaf_law",
    "xi0_progeny_law",
    "simulate_gw",
    "leaf_count_checks",
    "tilt_conditional_check",
]

MAX_TERMS = 1 << 22
XI0_TAIL = 1e-10
XI0_MAX_LEN = 1 << 20


class NotAdmissibleError(ValueError):
    """``z = g(z)`` has no positive solution inside the disc of convergence."""


def _series(ws: WeightSequence, z: float, k: int = 0) -> float:
    """``log sum_i i(i-1)...(i-k+1) w_i z^{i-k}``, the log of ``g^{(k)}(z)``.

    Terms are added until the second half of the window is negligible; at
    the radius itself the sum is cut at ``MAX_TERMS`` terms.
    """
    if z == 0:
        lw = ws.log_prefix(k)[k]
        return float(lw + math.lgamma(k + 1))
    lz = math.log(z)
    size = 1024
    while True:
        if ws.support_end is not None:
            size = ws.support_end + 1
        i = np.arange(size, dtype=float)
        terms = ws.log_prefix(size - 1) + (i - k) * lz
        if k:
            ff = gammaln(i + 1) - gammaln(np.maximum(i - k, 0) + 1)
            terms = np.where(i >= k, terms + ff, -np.inf)
        total = _logsumexp(terms)
        if ws.support_end is not None or size >= MAX_TERMS:
            return total
        if np.max(terms[size // 2:]) < total - 40:
            return total
        size = min(4 * size, MAX_TERMS)


def _g(ws, z, k=0) -> float:
    return math.exp(_series(ws, z, k))


def probability_tilt(ws: WeightSequence) -> WeightSequence:
    """Weights ``w_i x^i`` with ``x = 1/g(1)``, an admissible sequence with
    ``Z = g(1)`` whose tilt is the offspring law ``p_i = w_i / g(1)``.

    Simply generated trees are unchanged by this tilt, so it gives the
    Galton-Watson description of families that are not admissible
    themselves (such as ``w_0 = 1`` power laws).
    """
    g1 = ws.g(1.0)
    if not math.isfinite(g1):
        raise NotAdmissibleError(f"g(1) diverges for {ws.spec}")
    lg1 = math.log(g1)
    base = ws

    def log_p(i):
        return base._log_w(np.asarray(i)) - lg1

    out = WeightSequence.tilted_offspring(log_p=log_p)
    out._radius = ws.radius * g1
    out.spec = f"ptilt({ws.spec})"
    out.params = {"base": ws.spec}
    out.support_end = ws.support_end
    return out


def solve_Z(w: WeightSequence, tol: float = 1e-12) -> float:
    """Smallest positive root of ``g(z) = z`` on ``(0, R]``.

    ``g`` is convex, so the minimiser of ``g(z) - z`` is found first (the
    root of ``g'(z) = 1``) and the root is then bracketed to its left.  A
    tangential (critical) root is returned as the minimiser itself.
    """
    R = w.radius
    lw0 = float(w.log_prefix(0)[0])
    if R <= 1 and lw0 >= 0:
        raise NotAdmissibleError(f"g(z) >= w_0 >= 1 >= z on (0, R] for {w.spec}")
    if R == 0:
        raise NotAdmissibleError("radius of convergence is 0")
    upper = R
    if math.isinf(R):
        upper = 1.0
        while _g(w, upper, 1) < 1:
            upper *= 2
    # minimiser of g(z) - z
    if _g(w, upper, 1) <= 1:
        zstar = upper
    else:
        lo, hi = 0.0, upper
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if _g(w, mid, 1) < 1:
                lo = mid
            else:
                hi = mid
        zstar = 0.5 * (lo + hi)
    fz = _g(w, zstar) - zstar
    if fz > tol * zstar:
        raise NotAdmissibleError(f"g(z) > z on (0, R] for {w.spec}")
    if fz >= -tol * zstar:
        return zstar
    lo, hi = 0.0, zstar
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if _g(w, mid) - mid > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class GWSpec:
    """Offspring law ``p^`` (truncated array) with its moments and ``Z``."""

    offspring: np.ndarray
    tail_mass: float
    mean: float
    variance: float
    Z: float
    source: str
    exact: tuple | None = field(default=None, repr=False)

    @property
    def p0(self) -> float:
        return float(self.offspring[0])

    @property
    def critical(self) -> bool:
        return abs(self.mean - 1) < 1e-9

    @property
    def subcritical(self) -> bool:
        return self.mean < 1 - 1e-9

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.offspring)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        cdf = self.cdf()
        u = rng.random(size) * cdf[-1]
        return np.searchsorted(cdf, u, side="right")


def tilt(w: WeightSequence, Z: float | None = None, *, max_terms: int = MAX_TERMS) -> GWSpec:
    """Offspring law ``p^_i = w_i Z^{i-1}`` with mean ``g'(Z)`` and variance
    ``Z g''(Z) + g'(Z)(1 - g'(Z))``."""
    if Z is None:
        Z = solve_Z(w)
    lz = math.log(Z)
    size = 1024
    while True:
        if w.support_end is not None:
            size = w.support_end + 1
        i = np.arange(size, dtype=float)
        lp = w.log_prefix(size - 1) + (i - 1) * lz
        p = np.exp(lp)
        total = math.fsum(p[::-1])
        if w.support_end is not None or size >= max_terms or 1 - total < 1e-14:
            break
        size = min(4 * size, max_terms)
    mean = math.fsum((i * p)[::-1])
    if w.support_end is not None or _converges(w, Z, 2):
        g2 = _g(w, Z, 2)
        variance = Z * g2 + mean * (1 - mean)
    else:
        variance = math.inf
    exact = None
    try:
        ex = w.exact_prefix(min(size - 1, 64))
        zf = Fraction(Z).limit_denominator(1 << 20)
        if abs(float(zf) - Z) < 1e-15 * Z:
            exact = tuple(ex[j] * zf ** (j - 1) for j in range(len(ex)))
    except ValueError:
        pass
    return GWSpec(p, max(0.0, 1 - total), mean, variance, Z, w.spec, exact)


def _converges(w: WeightSequence, z: float, k: int) -> bool:
    """Whether ``g^{(k)}(z)`` is finite, judged from the decay of its terms."""
    if z < w.radius:
        return True
    i = np.arange(1, MAX_TERMS, 1 << 12, dtype=float)
    lw = w._log_w(i.astype(np.int64)) + i * math.log(z) + k * np.log(i)
    slope = np.polyfit(np.log(i[-64:]), lw[-64:], 1)[0]
    return bool(slope < -1.05)


def two_type_offspring(spec: GWSpec) -> tuple[np.ndarray, np.ndarray]:
    """Offspring laws of white vertices (geometric) and black vertices."""
    p0 = spec.p0
    q = 1 - p0
    kmax = int(math.ceil(math.log(1e-17) / math.log(q))) if q > 0 else 0
    white = p0 * q ** np.arange(kmax + 1)
    black = spec.offspring[1:] / q
    return white, black


def two_type_probability(t: PlanarTree, spec: GWSpec) -> float:
    """Probability of the coloured tree ``t`` under the two-type process."""
    white, black = two_type_offspring(spec)
    od = t.outdeg
    w = t.is_white
    return float(np.prod(white[od[w]]) * np.prod(black[od[~w]]))


def gw_probability(t: PlanarTree, spec: GWSpec) -> float:
    return float(np.prod(spec.offspring[t.outdeg]))


# -- xi0 --------------------------------------------------------------------


@dataclass(frozen=True)
class Xi0Law:
    """Law of ``xi0``: a geometric number of copies of ``(xi^ - 1 | xi^ > 0)``."""

    pmf: np.ndarray
    tail_mass: float
    spec: GWSpec

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(self.pmf.size), self.pmf))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Direct composition: ``zeta ~ Ge(p^_0)`` copies of the shifted law."""
        p0 = self.spec.p0
        zeta = rng.geometric(p0, size=size) - 1
        total = int(zeta.sum())
        cond = self.spec.offspring[1:]
        cdf = np.cumsum(cond)
        u = rng.random(total) * cdf[-1]
        draws = np.searchsorted(cdf, u, side="right")
        owner = np.repeat(np.arange(size), zeta)
        return K.gw_generation_sums(draws.astype(np.int64), owner, size)


def _compound_geometric(p0: float, psi: np.ndarray, size: int) -> np.ndarray:
    """First ``size`` coefficients of ``p0 / (1 - (1 - p0) Psi(x))`` for a
    law ``psi`` supported below ``size``, evaluated on a window of twice
    that length so that wrap-around only comes from sums of at least
    ``2 size``."""
    buf = np.zeros(2 * size)
    buf[: min(psi.size, size)] = psi[:size]
    f = np.fft.rfft(buf)
    a = np.fft.irfft(p0 / (1 - (1 - p0) * f), 2 * size)[:size]
    return np.clip(a, 0.0, None)


def xi0_law(spec: GWSpec, tail: float = XI0_TAIL, max_len: int = XI0_MAX_LEN) -> Xi0Law:
    """Law of ``xi0`` with pgf ``p^_0 / (1 - sum_{k>=1} p^_k x^{k-1})``.

    The window doubles until the mass it misses is below ``tail`` (or the
    window reaches ``max_len``); the missing mass is kept as ``tail_mass``.
    """
    p0 = spec.p0
    if not 0 < p0 < 1:
        raise ValueError("xi0 needs 0 < p^_0 < 1")
    psi = spec.offspring[1:] / (1 - p0)
    size = 1 << 12
    while True:
        a = _compound_geometric(p0, psi, size)
        missing = max(0.0, 1 - math.fsum(a))
        if missing < tail or size >= max_len:
            return Xi0Law(a, missing, spec)
        size *= 2


def _xi0_exact(p: list, n: int) -> list:
    """First ``n`` coefficients of the ``xi0`` law in exact arithmetic."""
    h = p[1:]
    a = []
    for m in range(n):
        acc = p[0] if m == 0 else 0
        for j in range(1, min(m, len(h) - 1) + 1):
            acc += h[j] * a[m - j]
        a.append(acc / (1 - h[0]))
    return a


# -- twigs and leaf counts ----------------------------------------------------


def twig_decompose(t: PlanarTree) -> PlanarTree:
    """Contract each twig (lexicographic run ending at a leaf) to a vertex.

    The parent of a twig is the twig holding the parent of its first vertex.
    """
    od = t.outdeg
    leaf = od == 0
    twig_of = np.concatenate([[0], np.cumsum(leaf)[:-1]])
    starts = np.flatnonzero(np.r_[True, leaf[:-1]])
    out = np.zeros(starts.size, dtype=np.int64)
    parents = twig_of[t.parent[starts[1:]]]
    np.add.at(out, parents, 1)
    return PlanarTree(out)


def _series_compose_powers(b: list, n: int):
    """Powers ``B^k`` truncated at degree ``n`` for a series with ``b[0] = 0``."""
    powers = [[1] + [0] * n]
    for _ in range(n):
        prev = powers[-1]
        nxt = [0] * (n + 1)
        for i, x in enumerate(prev):
            if x == 0:
                continue
            for j in range(1, n + 1 - i):
                if b[j]:
                    nxt[i + j] += x * b[j]
        powers.append(nxt)
    return powers


def leaf_law(spec: GWSpec, n_max: int, *, exact: bool = False) -> list:
    """``P(N0 = m)`` for ``m = 0..n_max``: leaves of a GW(p^) tree.

    Solves ``A = p^_0 x + sum_i p^_i A^i`` order by order.
    """
    p = list(spec.exact) if exact else spec.offspring[: n_max + 2].tolist()
    if exact and spec.exact is None:
        raise ValueError("no exact offspring law available")
    p = p + [0] * max(0, n_max + 2 - len(p))
    a = [0] * (n_max + 1)
    for m in range(1, n_max + 1):
        acc = p[0] if m == 1 else 0
        # contributions of A^i, i >= 2, use coefficients below m only
        powers = _series_compose_powers(a[:m] + [0] * (n_max + 1 - m), m)
        for i in range(2, m + 1):
            acc += p[i] * powers[i][m]
        a[m] = acc / (1 - p[1])
    return a


def xi0_progeny_law(spec: GWSpec, n_max: int, *, exact: bool = False) -> list:
    """``P(|T| = m)`` for a GW(xi0) tree, from ``B = x Phi(B)``."""
    if exact:
        if spec.exact is None:
            raise ValueError("no exact offspring law available")
        phi = _xi0_exact(list(spec.exact) + [0] * (n_max + 2), n_max + 1)
    else:
        phi = xi0_law(spec).pmf[: n_max + 1].tolist()
        phi += [0.0] * (n_max + 1 - len(phi))
    b = [0] * (n_max + 1)
    for m in range(1, n_max + 1):
        powers = _series_compose_powers(b[:m] + [0] * (n_max + 1 - m), m - 1)
        b[m] = sum(phi[k] * powers[k][m - 1] for k in range(m))
    return b


def simulate_gw(spec: GWSpec, draws: int, rng: np.random.Generator,
                max_generations: int = 100_000) -> tuple[np.ndarray, np.ndarray]:
    """Total progeny and leaf counts of ``draws`` independent GW(p^) trees,
    simulated generation by generation for all trees at once."""
    cdf = spec.cdf()
    pending = np.ones(draws, dtype=np.int64)
    total = np.zeros(draws, dtype=np.int64)
    leaves = np.zeros(draws, dtype=np.int64)
    for _ in range(max_generations):
        alive = np.flatnonzero(pending)
        if alive.size == 0:
            break
        counts = pending[alive]
        owner = np.repeat(np.arange(alive.size), counts)
        kids = np.searchsorted(cdf, rng.random(owner.size) * cdf[-1], side="right")
        total[alive] += counts
        leaves[alive] += K.gw_generation_sums((kids == 0).astype(np.int64), owner, alive.size)
        pending[:] = 0
        pending[alive] = K.gw_generation_sums(kids.astype(np.int64), owner, alive.size)
    else:
        raise RuntimeError("Galton-Watson simulation did not die out")
    return total, leaves


def _tv(a, b) -> float:
    return 0.5 * float(sum(abs(float(x) - float(y)) for x, y in zip(a, b)))


def leaf_count_checks(spec: GWSpec, n_max: int, *, draws: int = 0,
                      rng: np.random.Generator | None = None, beta: float | None = None,
                      tail_ns=(10, 20, 50, 100, 200, 500, 1000)) -> dict:
    """Leaf-count identities for a subcritical offspring law.

    (a) exact leaf law against the progeny law of GW(xi0) for ``m <= n_max``;
    (b) Monte Carlo means of progeny and leaves against ``1/(1-kappa)`` and
    ``p_0/(1-kappa)``; (c) the tail ratio ``P(N0 = n) n^beta / c`` as a
    trend table, with ``c`` built from the power-law constant.
    """
    if not spec.mean < 1:
        raise ValueError("leaf counts need a subcritical offspring law")
    kappa, p0 = spec.mean, spec.p0
    report: dict = {"kappa": kappa, "p0": p0}
    la = leaf_law(spec, n_max)
    lb = xi0_progeny_law(spec, n_max)
    report["leaf_law"] = la
    report["xi0_progeny_law"] = lb
    report["minami_tv"] = _tv(la[1:], lb[1:])
    if draws:
        if rng is None:
            raise ValueError("rng required for Monte Carlo checks")
        N, N0 = simulate_gw(spec, draws, rng)
        report["EN"] = {"estimate": float(N.mean()), "target": 1 / (1 - kappa),
                        "stderr": float(N.std(ddof=1) / math.sqrt(draws))}
        report["EN0"] = {"estimate": float(N0.mean()), "target": p0 / (1 - kappa),
                         "stderr": float(N0.std(ddof=1) / math.sqrt(draws))}
    if beta is not None:
        report["tail"] = _tail_table(spec, beta, tail_ns)
    return report


def _tail_table(spec: GWSpec, beta: float, ns) -> list[dict]:
    """``P(N0 = n) = P(S_n = n - 1) / n`` for sums of ``n`` copies of ``xi0``."""
    kappa, p0 = spec.mean, spec.p0
    c = p0 ** (beta - 1) * (1 - kappa) ** (-beta)
    # slowly varying part of p_i = L(i) i^-beta, read off the law itself
    i_ref = np.arange(1000, 2000)
    Lt = float(np.mean(spec.offspring[i_ref] * i_ref ** beta))
    phi = xi0_law(spec).pmf
    size = max(1 << 18, 1 << int(math.ceil(math.log2(64 * max(ns)))))
    buf = np.zeros(size)
    buf[: min(size, phi.size)] = phi[:size]
    f = np.fft.rfft(buf)
    rows = []
    for n in ns:
        s = np.fft.irfft(f ** n, size)
        prob = max(float(s[n - 1]), 0.0) / n
        rows.append({"n": n, "P": prob, "ratio": prob * n ** beta / (c * Lt)})
    return rows


def tilt_conditional_check(w: WeightSequence, n: int, spec: GWSpec | None = None) -> float:
    """Max elementwise gap between ``nu_n`` and GW(p^) conditioned on ``n`` edges."""
    if spec is None:
        spec = tilt(w)
    nu = exact_nu_distribution(n, w)
    probs = {t: gw_probability(t, spec) for t in enumerate_trees(n)}
    z = math.fsum(probs.values())
    return max(abs(nu[t] - probs[t] / z) for t in nu)


def two_type_check(spec: GWSpec, n: int) -> float:
    """Max gap between GW(p^) tree probabilities and the two-type
    probabilities of their images under the inverse of ``G_n``."""
    return max(abs(gw_probability(t, spec) - two_type_probability(gn_inverse(t), spec))
               for t in enumerate_trees(n))
