"""Weight sequences, generating-function analytics and regime classification.

A weight sequence is stored as ``log w_i`` so that superexponential
families such as ``w_i = (i!)**alpha`` never overflow.  Face weights ``q_i``
and vertex weights ``w_i`` are related by ``w_i = C(2i-1, i-1) q_i``.
"""

from __future__ import annotations

import enum
import json
import math
import threading
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln

__all__ = [
    "WeightSequence",
    "Regime",
    "RegimeReport",
    "RadiusEstimateWarning",
    "q_to_w",
    "w_to_q",
    "log_binom_central",
    "zeta",
    "analyze",
]

LOG_LINEAR_LIMIT = 700.0


class RadiusEstimateWarning(UserWarning):
    """Raised when a radius of convergence is only estimated by a ratio test."""


class Regime(str, enum.Enum):
    C1_CONDENSATION = "C1_condensation"
    C2_CONDENSATION = "C2_condensation"
    GENERIC_OR_CRITICAL = "generic_or_critical"
    TRIVIAL = "trivial"


# Bernoulli numbers B_2, B_4, ..., B_16 for the Euler-Maclaurin tail.
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510)


def zeta(s: float, n_terms: int = 64) -> float:
    """Riemann zeta for real ``s > 1`` by direct summation plus Euler-Maclaurin tail.

    The truncation error after eight Bernoulli corrections is far below
    double precision for ``n_terms >= 32``.
    """
    if s <= 1:
        return math.inf
    k = np.arange(1, n_terms, dtype=float)
    head = float(np.sum(k ** (-s)))
    N = float(n_terms)
    tail = N ** (1 - s) / (s - 1) + 0.5 * N ** (-s)
    rising = s  # s (s+1) ... (s+2j-2)
    fact = 2.0  # (2j)!
    power = N ** (-s - 1)
    for j, b in enumerate(_BERNOULLI, start=1):
        tail += b / fact * rising * power
        rising *= (s + 2 * j - 1) * (s + 2 * j)
        fact *= (2 * j + 1) * (2 * j + 2)
        power /= N * N
    return head + tail


def log_binom_central(i: np.ndarray | int) -> np.ndarray:
    """``log C(2i-1, i-1)`` for ``i >= 1`` (0 at ``i = 0`` by convention)."""
    i = np.asarray(i, dtype=float)
    out = gammaln(2 * i) - gammaln(i) - gammaln(i + 1)
    return np.where(i >= 1, out, 0.0)


def _logsumexp(a: np.ndarray) -> float:
    if a.size == 0:
        return -math.inf
    m = float(np.max(a))
    if not math.isfinite(m):
        return m
    return m + math.log(float(np.sum(np.exp(a - m))))


class WeightSequence:
    """Vertex weights ``(w_i)_{i>=0}`` of a simply generated tree.

    Use the family constructors (:meth:`power_law`, :meth:`factorial`,
    :meth:`explicit`, :meth:`tilted_offspring`, :meth:`sparse_example`) or
    :meth:`from_spec`.  Instances are immutable; the prefix cache is filled
    under a lock.
    """

    def __init__(
        self,
        kind: str,
        log_w: Callable[[np.ndarray], np.ndarray],
        params: dict,
        *,
        radius: float | None = None,
        support_end: int | None = None,
        exact: Callable[[int], list[Fraction]] | None = None,
        spec: str | None = None,
    ):
        self.kind = kind
        self.params = dict(params)
        self._log_w = log_w
        self._radius = radius
        self.support_end = support_end
        self._exact = exact
        self.spec = spec or f"{kind}:" + ",".join(f"{k}={v}" for k, v in params.items())
        self._cache = np.zeros(0)
        self._lock = threading.Lock()

    # -- constructors -----------------------------------------------------

    @classmethod
    def power_law(cls, beta: float, c: float = 1.0) -> "WeightSequence":
        """``w_0 = 1`` and ``w_i = c i^{-beta}``; radius 1."""
        if not beta > 2:
            raise ValueError(f"power_law needs beta > 2, got {beta}")
        if not c > 0:
            raise ValueError(f"power_law needs c > 0, got {c}")
        log_c = math.log(c)

        def log_w(i):
            i = np.asarray(i, dtype=float)
            with np.errstate(divide="ignore"):
                out = log_c - beta * np.log(i)
            return np.where(i == 0, 0.0, out)

        def exact(n):
            b = Fraction(beta)
            cc = Fraction(c)
            if b.denominator != 1:
                raise ValueError("exact weights need an integer beta")
            return [Fraction(1)] + [cc / Fraction(i) ** int(b) for i in range(1, n + 1)]

        return cls("power_law", log_w, {"beta": beta, "c": c}, radius=1.0, exact=exact,
                   spec=f"powerlaw:beta={_fmt(beta)},c={_fmt(c)}")

    @classmethod
    def factorial(cls, alpha: float) -> "WeightSequence":
        """``w_i = (i!)^alpha``; radius 0."""
        if not alpha > 0:
            raise ValueError(f"factorial needs alpha > 0, got {alpha}")

        def log_w(i):
            return alpha * gammaln(np.asarray(i, dtype=float) + 1)

        def exact(n):
            a = Fraction(alpha)
            if a.denominator != 1:
                raise ValueError("exact weights need an integer alpha")
            return [Fraction(math.factorial(i)) ** int(a) for i in range(n + 1)]

        return cls("factorial", log_w, {"alpha": alpha}, radius=0.0, exact=exact,
                   spec=f"factorial:alpha={_fmt(alpha)}")

    @classmethod
    def explicit(
        cls, values: Sequence, *, log: bool = False, allow_w0: bool = False
    ) -> "WeightSequence":
        """A finite prefix ``w_0, ..., w_K``; weights beyond ``K`` are zero.

        ``values`` may hold :class:`fractions.Fraction` entries, in which case
        exact arithmetic is available through :meth:`exact_prefix`.
        """
        vals = list(values)
        if not vals:
            raise ValueError("explicit weights need at least one value")
        exact_vals = None
        if log:
            lw = np.asarray(vals, dtype=float)
            if np.any(np.isnan(lw)) or np.any(lw == np.inf):
                raise ValueError("log weights must be finite or -inf")
        else:
            if any(v < 0 for v in vals):
                raise ValueError("weights must be non-negative")
            if all(isinstance(v, (int, Fraction)) for v in vals):
                exact_vals = [Fraction(v) for v in vals]
                lw = np.array([_log_fraction(v) for v in exact_vals])
            else:
                arr = np.asarray(vals, dtype=float)
                if not np.all(np.isfinite(arr)):
                    raise ValueError("weights must be finite")
                with np.errstate(divide="ignore"):
                    lw = np.log(arr)
        if not allow_w0 and lw[0] != 0.0:
            raise ValueError("w_0 must equal 1 (pass allow_w0=True to override)")
        if not np.any(np.isfinite(lw[2:])):
            raise ValueError("need w_k > 0 for some k >= 2")
        lw.setflags(write=False)
        K = len(lw) - 1

        def log_w(i):
            i = np.asarray(i, dtype=np.int64)
            out = np.full(i.shape, -np.inf)
            ok = i <= K
            out[ok] = lw[i[ok]]
            return out

        def exact(n):
            if exact_vals is None:
                raise ValueError("explicit weights were not given exactly")
            return [exact_vals[i] if i <= K else Fraction(0) for i in range(n + 1)]

        ws = cls("explicit", log_w, {"length": len(lw)}, support_end=K, exact=exact)
        ws._explicit_log = lw
        return ws

    @classmethod
    def tilted_offspring(
        cls, p: Callable | Sequence[float] | None = None, *, log_p: Callable | None = None
    ) -> "WeightSequence":
        """Weights ``w_i = p_0^{i-1} p_i`` built from an offspring law ``p``.

        ``p`` is either a vectorised callable ``i -> P(xi = i)`` or a finite
        sequence.  Pass ``log_p`` instead when the tail underflows in linear
        scale.  The resulting weights are admissible with ``Z = 1/p_0``.
        """
        support_end = None
        if log_p is not None:
            lp_fn = log_p
            name = getattr(log_p, "__name__", "callable")
        elif callable(p):
            def lp_fn(i, _p=p):
                with np.errstate(divide="ignore"):
                    return np.log(np.asarray(_p(i), dtype=float))
            name = getattr(p, "__name__", "callable")
        elif p is not None:
            arr = np.asarray(p, dtype=float)
            if np.any(arr < 0) or abs(arr.sum() - 1) > 1e-12:
                raise ValueError("offspring law must be a probability vector")
            support_end = len(arr) - 1
            with np.errstate(divide="ignore"):
                larr = np.log(arr)

            def lp_fn(i, _l=larr):
                out = np.full(i.shape, -np.inf)
                ok = i <= len(_l) - 1
                out[ok] = _l[i[ok]]
                return out

            name = "list"
        else:
            raise ValueError("tilted_offspring needs p or log_p")
        log_p0 = float(np.asarray(lp_fn(np.array([0], dtype=np.int64)))[0])
        if not -math.inf < log_p0 < 0:
            raise ValueError("offspring law needs 0 < p_0 < 1")

        def log_w(i):
            i = np.asarray(i, dtype=np.int64)
            lp = np.asarray(lp_fn(i), dtype=float)
            return np.where(i == 0, 0.0, (i - 1) * log_p0 + lp)

        return cls("tilted_offspring", log_w, {"p": name}, support_end=support_end,
                   spec=f"tilted:p={name}")

    @classmethod
    def geometric_tilt(cls, r: float = 0.5) -> "WeightSequence":
        """:meth:`tilted_offspring` of the geometric law ``p_i = (1-r) r^i``.

        Then ``w_i = ((1-r) r)^i`` and the radius is ``1/((1-r) r)``.
        """
        if not 0 < r < 1:
            raise ValueError("need 0 < r < 1")
        l1r, lr = math.log1p(-r), math.log(r)

        def log_p(i):
            return l1r + lr * np.asarray(i, dtype=float)

        ws = cls.tilted_offspring(log_p=log_p)
        ws.params = {"r": r}
        ws.spec = f"geomtilt:r={_fmt(r)}"
        ws._radius = 1.0 / ((1 - r) * r)
        rr = Fraction(r)
        base = (1 - rr) * rr

        def exact(n):
            return [base**i for i in range(n + 1)]

        ws._exact = exact
        return ws

    @classmethod
    def sparse_example(cls, alpha: float = 1.0) -> "WeightSequence":
        """Support ``{0} U {3^j}`` with ``w_{3^j} = ((3^j)!)^alpha``; radius 0."""
        if not alpha > 0:
            raise ValueError("need alpha > 0")

        def log_w(i):
            i = np.asarray(i, dtype=np.int64)
            out = np.full(i.shape, -np.inf)
            out[i == 0] = 0.0
            pos = i >= 1
            ip = i[pos]
            j = np.rint(np.log(ip) / math.log(3)).astype(np.int64)
            is_pow = 3 ** j == ip
            vals = np.where(is_pow, alpha * gammaln(ip + 1.0), -np.inf)
            out[pos] = vals
            return out

        return cls("sparse_example", log_w, {"alpha": alpha}, radius=0.0,
                   spec=f"sparse3:alpha={_fmt(alpha)}")

    @classmethod
    def from_spec(cls, spec: str) -> "WeightSequence":
        """Parse ``powerlaw:beta=3,c=1``, ``factorial:alpha=1``,
        ``explicit:file=w.json``, ``sparse3:alpha=1`` or ``geomtilt:r=0.5``."""
        name, _, rest = spec.partition(":")
        kw = {}
        for part in filter(None, rest.split(",")):
            key, eq, val = part.partition("=")
            if not eq:
                raise ValueError(f"malformed family parameter {part!r} in {spec!r}")
            kw[key.strip()] = val.strip()
        name = name.strip().lower()
        try:
            if name in ("powerlaw", "power_law"):
                return cls.power_law(float(kw.get("beta", 3)), float(kw.get("c", 1)))
            if name == "factorial":
                return cls.factorial(float(kw.get("alpha", 1)))
            if name in ("sparse3", "sparse"):
                return cls.sparse_example(float(kw.get("alpha", 1)))
            if name == "geomtilt":
                return cls.geometric_tilt(float(kw.get("r", 0.5)))
            if name == "explicit":
                ws = cls.from_json(kw["file"])
                ws.spec = spec
                return ws
        except KeyError as exc:
            raise ValueError(f"missing parameter {exc} in family spec {spec!r}") from None
        raise ValueError(f"unknown weight family {name!r}")

    @classmethod
    def from_json(cls, path: str | Path) -> "WeightSequence":
        payload = json.loads(Path(path).read_text())
        if isinstance(payload, list):
            values, domain = payload, "linear"
        else:
            values, domain = payload["values"], payload.get("domain", "linear")
        if domain not in ("linear", "log"):
            raise ValueError(f"unknown domain tag {domain!r}")
        vals = [-math.inf if v is None else v for v in values]
        return cls.explicit(vals, log=domain == "log")

    # -- access -----------------------------------------------------------

    def log_prefix(self, N: int) -> np.ndarray:
        """Read-only ``log w_0 .. log w_N``."""
        if N < 0:
            raise ValueError("N must be non-negative")
        cache = self._cache
        if cache.size <= N:
            with self._lock:
                if self._cache.size <= N:
                    size = max(N + 1, 2 * self._cache.size)
                    arr = np.asarray(self._log_w(np.arange(size)), dtype=float)
                    arr.setflags(write=False)
                    self._cache = arr
                cache = self._cache
        return cache[: N + 1]

    def prefix(self, N: int) -> np.ndarray:
        """Linear ``w_0 .. w_N`` (entries above ``exp(700)`` become ``inf``)."""
        with np.errstate(over="ignore"):
            return np.exp(self.log_prefix(N))

    def exact_prefix(self, N: int) -> list[Fraction]:
        if self._exact is None:
            raise ValueError(f"{self.kind} weights have no exact representation")
        return self._exact(N)

    @property
    def log_domain(self) -> bool:
        """Whether values beyond ``exp(700)`` occur (checked on a 1024 prefix)."""
        return bool(np.nanmax(self.log_prefix(1023)) > LOG_LINEAR_LIMIT)

    @property
    def radius(self) -> float:
        if self._radius is not None:
            return self._radius
        return self._estimate_radius()[0]

    @property
    def radius_estimated(self) -> bool:
        return self._radius is None

    def _estimate_radius(self) -> tuple[float, bool]:
        if self.support_end is not None:
            lw = self.log_prefix(self.support_end)
        else:
            lw = self.log_prefix(4095)
        idx = np.flatnonzero(np.isfinite(lw))
        idx = idx[idx >= 1]
        if idx.size < 2:
            return math.inf, True
        tail = idx[idx.size // 2:]
        if tail.size < 2:
            tail = idx[-2:]
        slope = np.polyfit(tail.astype(float), lw[tail], 1)[0]
        return float(math.exp(-slope)), True

    def __repr__(self):
        return f"WeightSequence({self.spec!r})"

    def __eq__(self, other):
        if not isinstance(other, WeightSequence):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(
            self.log_prefix(64), other.log_prefix(64)
        )

    def __hash__(self):
        return hash(self.spec)

    # -- analytic helpers ---------------------------------------------------

    def _moment_sums(self, t: float, orders=(0, 1, 2), max_terms: int = 1 << 22):
        """``log sum_i i^j w_i t^i`` for ``j`` in ``orders`` (``t < R`` or finite support)."""
        if t <= 0:
            return {j: (0.0 if j == 0 else -math.inf) for j in orders}
        log_t = math.log(t)
        size = 256
        while True:
            if self.support_end is not None:
                size = self.support_end + 1
            i = np.arange(size, dtype=float)
            base = self.log_prefix(size - 1) + i * log_t
            with np.errstate(divide="ignore"):
                logi = np.log(i)
            out = {}
            for j in orders:
                terms = base + (j * logi if j else 0.0)
                if j:
                    terms = np.where(i == 0, -np.inf, terms)
                out[j] = _logsumexp(terms)
            if self.support_end is not None:
                return out
            last = base[size // 2:] + max(orders) * logi[size // 2:]
            top = max(v for v in out.values() if math.isfinite(v)) if any(
                math.isfinite(v) for v in out.values()) else 0.0
            if np.max(last) < top - 45 or size >= max_terms:
                if size >= max_terms and np.max(last) >= top - 45:
                    out = {j: math.inf for j in orders}
                return out
            size *= 4

    def _power_law_sums(self):
        beta, c = self.params["beta"], self.params["c"]
        g1 = 1 + c * zeta(beta)
        dg1 = c * zeta(beta - 1) if beta > 2 else math.inf
        d2 = c * (zeta(beta - 2) - zeta(beta - 1)) if beta > 3 else math.inf
        return g1, dg1, d2

    def g(self, t: float) -> float:
        """Generating function ``sum w_i t^i`` (``inf`` where it diverges)."""
        if self.kind == "power_law" and t == 1.0:
            return self._power_law_sums()[0]
        if self.kind == "power_law" and t > 1:
            return math.inf
        return math.exp(self._moment_sums(t, orders=(0,))[0])


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def _log_fraction(v: Fraction) -> float:
    if v == 0:
        return -math.inf
    return math.log(v.numerator) - math.log(v.denominator)


# -- q <-> w ----------------------------------------------------------------


def q_to_w(q: Sequence, *, log: bool = False) -> WeightSequence:
    """Face weights ``(q_1, q_2, ...)`` to vertex weights with ``w_0 = 1``.

    ``log=True`` means ``q`` holds ``log q_i``.  Exact (Fraction/int) input
    gives an exactly represented sequence.
    """
    vals = list(q)
    if not log and all(isinstance(v, (int, Fraction)) for v in vals):
        if any(v < 0 for v in vals):
            raise ValueError("face weights must be non-negative")
        w = [Fraction(1)] + [math.comb(2 * i - 1, i - 1) * Fraction(v)
                             for i, v in enumerate(vals, start=1)]
        return WeightSequence.explicit(w)
    arr = np.asarray(vals, dtype=float)
    if log:
        lq = arr
    else:
        if np.any(arr < 0):
            raise ValueError("face weights must be non-negative")
        if not np.all(np.isfinite(arr)):
            raise ValueError("face weights must be finite")
        with np.errstate(divide="ignore"):
            lq = np.log(arr)
    i = np.arange(1, len(arr) + 1)
    lw = np.concatenate([[0.0], log_binom_central(i) + lq])
    return WeightSequence.explicit(lw, log=True)


def w_to_q(w: WeightSequence | Sequence, N: int | None = None, *, log: bool = False,
           exact: bool = False):
    """Inverse of :func:`q_to_w`: returns ``(q_1, ..., q_N)``.

    ``exact=True`` returns Fractions; ``log=True`` returns ``log q_i``.
    """
    if isinstance(w, WeightSequence):
        if N is None:
            if w.support_end is None:
                raise ValueError("N is required for infinite weight sequences")
            N = w.support_end
        if exact:
            ws = w.exact_prefix(N)
            return [ws[i] / math.comb(2 * i - 1, i - 1) for i in range(1, N + 1)]
        lw = np.asarray(w.log_prefix(N))
    else:
        vals = list(w)
        if N is None:
            N = len(vals) - 1
        if exact or all(isinstance(v, (int, Fraction)) for v in vals):
            if vals[0] != 1:
                raise ValueError("w_0 must equal 1")
            return [Fraction(vals[i]) / math.comb(2 * i - 1, i - 1) for i in range(1, N + 1)]
        arr = np.asarray(vals[: N + 1], dtype=float)
        if np.any(arr < 0):
            raise ValueError("weights must be non-negative")
        with np.errstate(divide="ignore"):
            lw = np.log(arr)
    if lw[0] != 0.0:
        raise ValueError("w_0 must equal 1")
    lq = lw[1:] - log_binom_central(np.arange(1, N + 1))
    if log:
        return lq
    with np.errstate(over="ignore"):
        return np.exp(lq)


# -- analysis ---------------------------------------------------------------


@dataclass(frozen=True)
class RegimeReport:
    radius: float
    kappa: float
    regime: Regime
    p0: float
    sigma2: float
    radius_estimated: bool = False
    kappa_converged: bool = True
    notes: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "radius": self.radius,
            "kappa": self.kappa,
            "regime": self.regime.value,
            "p0": self.p0,
            "sigma2": self.sigma2,
            "radius_estimated": self.radius_estimated,
            "kappa_converged": self.kappa_converged,
            "notes": list(self.notes),
        }


def _kappa_limit(ws: WeightSequence, R: float, tol: float, k_max: int = 60):
    """``lim_{t -> R} t g'(t) / g(t)`` along ``t_k = R (1 - 2^-k)``.

    Returns ``(kappa, converged)``; ``kappa`` is ``inf`` when the sequence
    grows geometrically.
    """
    prev = prev_rich = None
    growth = 0
    for k in range(1, k_max + 1):
        t = R * (1 - 2.0**-k)
        s = ws._moment_sums(t, orders=(0, 1))
        if not (math.isfinite(s[0]) and math.isfinite(s[1])):
            return math.inf, True
        val = math.exp(s[1] - s[0])
        if prev is not None:
            growth = growth + 1 if val > 1.5 * prev and val > 1e3 else 0
            if growth >= 3:
                return math.inf, True
            rich = 2 * val - prev
            if abs(val - prev) < tol:
                return val, True
            if prev_rich is not None and abs(rich - prev_rich) < tol:
                return rich, True
            prev_rich = rich
        prev = val
        if ws.support_end is None and (1 << k) * 64 > (1 << 22):
            break
    return (prev_rich if prev_rich is not None else prev), False


def analyze(ws: WeightSequence, tol: float = 1e-10) -> RegimeReport:
    """Radius, ``kappa``, ``p_0``, offspring variance and condensation regime."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    notes = []
    lw = ws.log_prefix(max(ws.support_end or 0, 64))
    if not np.any(np.isfinite(lw[2:])):
        return RegimeReport(ws.radius, math.nan, Regime.TRIVIAL, 1.0, math.nan)

    R = ws.radius
    estimated = ws.radius_estimated
    if estimated:
        warnings.warn(f"radius of {ws.spec} estimated by ratio test", RadiusEstimateWarning,
                      stacklevel=2)
        notes.append("radius estimated by ratio test")

    converged = True
    if ws.kind == "power_law":
        g1, dg1, d2 = ws._power_law_sums()
        kappa = dg1 / g1
        p0 = 1 / g1
        sigma2 = d2 / g1 + kappa * (1 - kappa) if math.isfinite(d2) else math.inf
    elif R == 0:
        kappa, p0, sigma2 = 0.0, 1.0, math.inf
    elif math.isinf(R):
        # polynomial: t g'/g -> degree
        kappa = float(np.flatnonzero(np.isfinite(lw))[-1])
        p0, sigma2 = _offspring_stats(ws, 1.0)
    else:
        kappa, converged = _kappa_limit(ws, R, tol)
        if not converged:
            notes.append("kappa limit not converged to tol")
        if R >= 1 and not (R == 1 and estimated):
            p0, sigma2 = _offspring_stats(ws, 1.0 if R > 1 else R * (1 - 1e-12))
        else:
            p0, sigma2 = _offspring_stats(ws, R * (1 - 1e-12))

    if R == 0:
        regime = Regime.C2_CONDENSATION
    elif 0 < R < math.inf and kappa < 1:
        regime = Regime.C1_CONDENSATION
    else:
        regime = Regime.GENERIC_OR_CRITICAL
    return RegimeReport(R, kappa, regime, p0, sigma2, estimated, converged, tuple(notes))


def _offspring_stats(ws: WeightSequence, t: float) -> tuple[float, float]:
    """``(p_0, variance)`` of the offspring law ``p_i = w_i t^i / g(t)``."""
    s = ws._moment_sums(t)
    if not math.isfinite(s[0]):
        return math.nan, math.inf
    p0 = math.exp(-s[0])
    m1 = math.exp(s[1] - s[0])
    m2 = math.exp(s[2] - s[0]) if math.isfinite(s[2]) else math.inf
    return p0, m2 - m1 * m1
