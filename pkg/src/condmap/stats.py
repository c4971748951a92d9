"""Condensate correspondences, distortion bounds and the Monte Carlo
experiments behind the scaling statements.

Every experiment is a pure function of ``(family, n, reps, seed)``:
replicate ``r`` draws from its own stream ``replicate_rng(seed, r)``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats as sps

from .bijections import Mobile, bdg_inverse, gn_inverse
from .labels import distance_process, label_process, sample_labels, sample_mobile, \
    star_label_process
from .planarmap import PlanarMap, all_pairs_distances, degree_profile, face_degrees
from .rng import RNG_ALGORITHM, replicate_rng
from .trees import CondensateView, PlanarTree, condensate_view, sample_tree
from .weights import Regime, WeightSequence, analyze

__all__ = [
    "Statistic",
    "ExperimentSummary",
    "Correspondence",
    "RegimeError",
    "pi_map",
    "star_map",
    "correspondence",
    "distortion_K",
    "exact_distortion",
    "excursion_oracle",
    "run_prop_scgw",
    "run_prop_super",
    "run_thm_inv",
    "run_thm_dinv",
    "lemma_dis_instance",
    "run_lemma_dis",
    "run_k_trend",
    "run_label_moments",
    "run_degree_profile",
]

DISTORTION_CAP = 500


class RegimeError(ValueError):
    """The weight family is not in the regime an experiment requires."""


# -- correspondence machinery -----------------------------------------------


def pi_map(cv: CondensateView, tree: PlanarTree) -> np.ndarray:
    """``pi(i)`` for the white vertices ``v_0..v_{N}`` (``v_N = v_0``).

    Vertices of ``tau_{n,j}`` with ``1 <= j < Delta`` go to ``j``; the rest of
    ``tau_{n,0}`` goes to 0 up to and including ``s_0`` and to ``Delta``
    after it; ``pi(0) = 0`` and ``pi(N) = Delta``.
    """
    whites = tree.white_vertices
    comp = cv.component_of(tree)[whites]
    s0 = int(cv.neighbors[0])
    out = np.where(comp >= 1, comp, np.where(whites <= s0, 0, cv.delta_n))
    out = np.append(out, cv.delta_n)
    out[0] = 0
    return out


def star_map(m: Mobile, cv: CondensateView) -> tuple[Mobile, PlanarMap]:
    """Trim the mobile to ``s`` and its white neighbours and map it.

    The trimmed mobile is rooted at ``s_0``; its labels are relative to
    ``l(s_0)``, which is kept as ``label_offset``.
    """
    d = cv.delta_n
    outdeg = np.zeros(d + 1, dtype=np.int64)
    outdeg[0] = 1
    outdeg[1] = d - 1
    lab = np.zeros(d + 1, dtype=np.int64)
    base = int(m.labels[cv.neighbors[0]])
    lab[2:] = m.labels[cv.neighbors[1:]] - base
    trimmed = Mobile(PlanarTree(outdeg, check=False), lab, m.epsilon, label_offset=base)
    return trimmed, bdg_inverse(trimmed)


@dataclass(frozen=True)
class Correspondence:
    """Pairs ``(x, y)`` of vertex ids in the full map and the star map."""

    left: np.ndarray
    right: np.ndarray


def correspondence(m: Mobile, cv: CondensateView) -> Correspondence:
    """Pairs ``(v_i, s*_{pi(i) mod Delta})`` plus ``(rho, rho*)`` using the
    vertex numbering of :func:`~condmap.bijections.bdg_inverse`."""
    pi = pi_map(cv, m.tree)[:-1]
    n_white = pi.size
    left = np.append(np.arange(n_white), n_white)
    right = np.append(pi % cv.delta_n, cv.delta_n)
    return Correspondence(left, right)


def distortion_K(m: Mobile, cv: CondensateView) -> int:
    """``max_i max_{v in tau_{n,i}} |l(v) - l(s_i)|`` over white ``v``."""
    t = m.tree
    whites = t.white_vertices
    comp = cv.component_of(t)[whites]
    ref = m.labels[cv.neighbors[np.maximum(comp, 0)]]
    return int(np.max(np.abs(m.labels[whites] - ref)))


def exact_distortion(full: PlanarMap, star: PlanarMap, corr: Correspondence,
                     cap: int = DISTORTION_CAP) -> int:
    """``sup |d(x, x') - d*(y, y')|`` over pairs of correspondence pairs."""
    if full.n_edges > cap or star.n_edges > cap:
        raise ValueError(f"exact distortion is capped at {cap} edges")
    d1 = all_pairs_distances(full)
    d2 = all_pairs_distances(star)
    a = d1[np.ix_(corr.left, corr.left)]
    b = d2[np.ix_(corr.right, corr.right)]
    return int(np.max(np.abs(a - b)))


# -- summaries ----------------------------------------------------------------


@dataclass
class Statistic:
    estimate: float
    stderr: float | None = None
    target: float | None = None
    ks_stat: float | None = None
    p_value: float | None = None


@dataclass
class ExperimentSummary:
    experiment: str
    family: str
    n: int
    replicates: int
    seed: int
    stats: dict[str, Statistic] = field(default_factory=dict)
    rows: list[dict] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "experiment": self.experiment,
            "family": self.family,
            "n": self.n,
            "replicates": self.replicates,
            "seed": self.seed,
            "rng": RNG_ALGORITHM,
            "stats": {k: asdict(v) for k, v in sorted(self.stats.items())},
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_json_default)

    def rows_csv(self) -> str:
        if not self.rows:
            return ""
        buf = io.StringIO()
        keys = list(self.rows[0])
        w = csv.DictWriter(buf, fieldnames=["replicate", *keys], lineterminator="\n")
        w.writeheader()
        for i, r in enumerate(self.rows):
            w.writerow({"replicate": i, **r})
        return buf.getvalue()


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    raise TypeError(type(x))


def _mean_stat(x, target=None) -> Statistic:
    x = np.asarray(x, dtype=float)
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else None
    return Statistic(float(x.mean()), se, target)


def _resolve(family) -> WeightSequence:
    return family if isinstance(family, WeightSequence) else WeightSequence.from_spec(family)


def _replicates(fn: Callable[[np.random.Generator], dict], reps: int, seed: int,
                threads: int = 1) -> list[dict]:
    if reps < 1:
        raise ValueError("need at least one replicate")

    def one(r):
        return fn(replicate_rng(seed, r))

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(one, range(reps)))
    return [one(r) for r in range(reps)]


def _require(ws: WeightSequence, allowed: Sequence[Regime]):
    rep = analyze(ws)
    if rep.regime not in allowed:
        raise RegimeError(f"{ws.spec} is in regime {rep.regime.value}, "
                          f"need one of {[r.value for r in allowed]}")
    return rep


def _ks_normal(x, var) -> Statistic:
    x = np.asarray(x, dtype=float)
    res = sps.kstest(x, "norm", args=(0.0, math.sqrt(var)))
    return Statistic(float(x.var(ddof=1)), None, var, float(res.statistic), float(res.pvalue))


# -- experiments --------------------------------------------------------------


def run_prop_scgw(family, n: int, reps: int, seed: int, *, tightness_n: int | None = None,
                  threads: int = 1) -> ExperimentSummary:
    """Condensate size, white-vertex density and tightness of ``|tau_{n,1}|``."""
    ws = _resolve(family)
    rep = _require(ws, [Regime.C1_CONDENSATION])

    def sizes(nn):
        def one(rng):
            tau = gn_inverse(sample_tree(nn, ws, rng))
            cv = condensate_view(tau)
            return {
                "delta_over_n": cv.delta_n / nn,
                "white_over_n": cv.N_white / nn,
                "tau1_edges": int(cv.subtree_sizes[1]) if cv.delta_n > 1 else 0,
                "sup_white": int(cv.white_counts.max()),
            }
        return one

    rows = _replicates(sizes(n), reps, seed, threads)
    out = ExperimentSummary("prop-scgw", ws.spec, n, reps, seed, rows=rows)
    out.stats["delta_over_n"] = _mean_stat([r["delta_over_n"] for r in rows], 1 - rep.kappa)
    out.stats["white_over_n"] = _mean_stat([r["white_over_n"] for r in rows], rep.p0)
    tau1 = np.array([r["tau1_edges"] for r in rows])
    out.stats["tau1_p99"] = Statistic(float(np.percentile(tau1, 99)))
    out.stats["sup_white_mean"] = _mean_stat([r["sup_white"] for r in rows])
    if tightness_n is not None:
        small = _replicates(sizes(tightness_n), reps, seed + 1, threads)
        p_small = float(np.percentile([r["tau1_edges"] for r in small], 99))
        out.stats["tau1_p99_small_n"] = Statistic(p_small)
        hi, lo = max(p_small, out.stats["tau1_p99"].estimate), \
            min(p_small, out.stats["tau1_p99"].estimate)
        out.stats["tau1_p99_ratio"] = Statistic(hi / lo if lo > 0 else math.inf)
        out.notes["tightness_n"] = tightness_n
    return out


def run_prop_super(alpha: float, n: int, reps: int, seed: int, *,
                   threads: int = 1) -> ExperimentSummary:
    """Law of ``n - Delta_n`` for factorial weights and the shape near the root."""
    ws = WeightSequence.factorial(alpha)
    bound = max(math.floor(1 / alpha), 1)

    def one(rng):
        tau = gn_inverse(sample_tree(n, ws, rng))
        cv = condensate_view(tau)
        s = cv.s_index
        return {
            "gap": n - cv.delta_n,
            "unique_child": bool(tau.parent[s] == 0 and tau.outdeg[0] == 1),
            "sup_white": int(cv.white_counts.max()),
        }

    rows = _replicates(one, reps, seed, threads)
    gap = np.array([r["gap"] for r in rows], dtype=float)
    out = ExperimentSummary("prop-super", ws.spec, n, reps, seed, rows=rows)
    out.stats["gap_mean"] = _mean_stat(gap, 1.0 if alpha == 1 else None)
    out.stats["gap_var"] = Statistic(float(gap.var(ddof=1)), None, 1.0 if alpha == 1 else None)
    out.stats["gap_zero_freq"] = Statistic(float(np.mean(gap == 0)))
    out.stats["unique_child_freq"] = Statistic(float(np.mean([r["unique_child"] for r in rows])))
    out.stats["sup_white_bound_freq"] = Statistic(
        float(np.mean([r["sup_white"] <= bound for r in rows])))
    out.notes["sup_white_bound"] = bound
    return out


def run_thm_inv(family, n: int, reps: int, t_grid: Sequence[float], seed: int, *,
                threads: int = 1) -> ExperimentSummary:
    """KS tests of the rescaled label and star processes against bridge marginals."""
    ws = _resolve(family)
    rep = _require(ws, [Regime.C1_CONDENSATION, Regime.C2_CONDENSATION])
    ts = [float(t) for t in t_grid]

    def one(rng):
        m = sample_mobile(n, ws, rng)
        cv = condensate_view(m.tree)
        L = label_process(m, rep.kappa)
        Ls = star_label_process(m, cv, rep.kappa)
        row = {}
        for t in ts:
            row[f"L@{t:g}"] = float(L.rescaled(t))
            row[f"Lstar@{t:g}"] = float(Ls.rescaled(t))
        return row

    rows = _replicates(one, reps, seed, threads)
    out = ExperimentSummary("thm-inv", ws.spec, n, reps, seed, rows=rows)
    for t in ts:
        for key in (f"L@{t:g}", f"Lstar@{t:g}"):
            out.stats[key] = _ks_normal([r[key] for r in rows], t * (1 - t))
    out.notes["kappa"] = rep.kappa
    return out


def excursion_oracle(m: int, draws: int, rng: np.random.Generator, *,
                     t: float = 0.5, chunk: int = 256) -> dict[str, np.ndarray]:
    """Discrete reference for the normalised Brownian excursion.

    A uniform +-1 bridge of ``2m`` steps is rotated at its first minimum and
    divided by ``sqrt(2m)``; returns its maximum and its value at ``t``.
    """
    if m < 1:
        raise ValueError("m must be positive")
    L = 2 * m
    j = int(round(t * L))
    mx = np.empty(draws)
    val = np.empty(draws)
    base = np.concatenate([np.ones(m, dtype=np.int8), -np.ones(m, dtype=np.int8)])
    done = 0
    while done < draws:
        k = min(chunk, draws - done)
        steps = np.tile(base, (k, 1))
        steps = rng.permuted(steps, axis=1)
        S = np.cumsum(steps, axis=1, dtype=np.int32)
        S = np.concatenate([np.zeros((k, 1), dtype=np.int32), S[:, :-1]], axis=1)
        first_min = np.argmin(S, axis=1)
        lo = S[np.arange(k), first_min]
        mx[done:done + k] = S.max(axis=1) - lo
        val[done:done + k] = S[np.arange(k), (first_min + j) % L] - lo
        done += k
    scale = math.sqrt(L)
    return {"max": mx / scale, "at_t": val / scale}


def oracle_rng(seed: int) -> np.random.Generator:
    """Stream for reference draws, disjoint from the replicate streams."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 0, 1])))


def run_thm_dinv(family, n: int, reps: int, seed: int, *, oracle_m: int = 10_000,
                 oracle_draws: int = 500, threads: int = 1) -> ExperimentSummary:
    """Normalised radius and mid-profile of the map against the excursion oracle."""
    ws = _resolve(family)
    rep = _require(ws, [Regime.C1_CONDENSATION, Regime.C2_CONDENSATION])

    def one(rng):
        m = sample_mobile(n, ws, rng)
        pm = bdg_inverse(m, check=False)
        dist = pm.bfs(pm.rho)
        D, _ = distance_process(m, rep.kappa)
        return {
            "radius": float(dist.max() / D.amplitude_scale),
            "radius_raw": int(dist.max()),
            "D@0.5": float(D.rescaled(0.5)),
            "D_min": int(D.values.min()),
        }

    rows = _replicates(one, reps, seed, threads)
    ref = excursion_oracle(oracle_m, oracle_draws, oracle_rng(seed))
    out = ExperimentSummary("thm-dinv", ws.spec, n, reps, seed, rows=rows)
    for key, rkey in (("radius", "max"), ("D@0.5", "at_t")):
        x = np.array([r[key] for r in rows])
        res = sps.ks_2samp(x, ref[rkey])
        out.stats[key] = Statistic(float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)),
                                   float(ref[rkey].mean()), float(res.statistic),
                                   float(res.pvalue))
    out.stats["min_radius_raw"] = Statistic(float(min(r["radius_raw"] for r in rows)))
    out.stats["min_D"] = Statistic(float(min(r["D_min"] for r in rows)))
    out.notes.update(kappa=rep.kappa, oracle_m=oracle_m, oracle_draws=oracle_draws)
    return out


def lemma_dis_instance(m: Mobile) -> dict:
    """Distortion of the correspondence, ``K`` and the star-map shape for one mobile."""
    cv = condensate_view(m.tree)
    full = bdg_inverse(m, check=False)
    _, star = star_map(m, cv)
    dis = exact_distortion(full, star, correspondence(m, cv))
    K = distortion_K(m, cv)
    dist = star.bfs(0)
    acyclic = bool(np.all(dist >= 0) and star.n_edges == star.n_vertices - 1)
    return {
        "dis": dis,
        "K": K,
        "bound_holds": dis <= 10 * K,
        "delta": cv.delta_n,
        "star_edges": star.n_edges,
        "star_faces": star.n_faces,
        "star_acyclic": acyclic,
        "star_ok": acyclic and star.n_edges == cv.delta_n and star.n_faces == 1,
    }


def run_lemma_dis(family, n: int, reps: int, seed: int, *, threads: int = 1) -> ExperimentSummary:
    """Exact check of ``dis <= 10 K`` and of the star map's tree shape."""
    ws = _resolve(family)

    def one(rng):
        return lemma_dis_instance(sample_mobile(n, ws, rng))

    rows = _replicates(one, reps, seed, threads)
    out = ExperimentSummary("lemma-dis", ws.spec, n, reps, seed, rows=rows)
    out.stats["bound_holds_freq"] = Statistic(float(np.mean([r["bound_holds"] for r in rows])))
    out.stats["star_ok_freq"] = Statistic(float(np.mean([r["star_ok"] for r in rows])))
    out.stats["max_dis_over_K"] = Statistic(float(max(
        (r["dis"] / r["K"] if r["K"] else (0.0 if r["dis"] == 0 else math.inf)) for r in rows)))
    return out


def run_k_trend(family, ns: Sequence[int], reps: int, seed: int, *,
                threads: int = 1) -> ExperimentSummary:
    """Median of ``K / sqrt(n)`` at each ``n``."""
    ws = _resolve(family)
    out = ExperimentSummary("k-trend", ws.spec, int(max(ns)), reps, seed)
    for k, n in enumerate(ns):
        def one(rng, n=n):
            m = sample_mobile(n, ws, rng)
            return {"n": n, "K_over_sqrt_n": distortion_K(m, condensate_view(m.tree)) / math.sqrt(n)}
        rows = _replicates(one, reps, seed + k, threads)
        out.rows.extend(rows)
        out.stats[f"median@{n}"] = Statistic(float(np.median([r["K_over_sqrt_n"] for r in rows])))
    return out


def run_label_moments(family, ns: Sequence[int], trees: int, resamples: int, seed: int, *,
                      p: float = 3.0, threads: int = 1) -> ExperimentSummary:
    """``E sup |l|^p / n^{p/2}`` with labels resampled on each tree."""
    ws = _resolve(family)
    out = ExperimentSummary("label-moments", ws.spec, int(max(ns)), trees, seed)
    values = []
    for k, n in enumerate(ns):
        def one(rng, n=n):
            tau = gn_inverse(sample_tree(n, ws, rng))
            sup = [np.abs(sample_labels(tau, rng)).max() ** p for _ in range(resamples)]
            return {"n": n, "mean_sup_p": float(np.mean(sup))}
        rows = _replicates(one, trees, seed + k, threads)
        out.rows.extend(rows)
        v = float(np.mean([r["mean_sup_p"] for r in rows])) / n ** (p / 2)
        values.append(v)
        out.stats[f"moment@{n}"] = Statistic(v)
    out.stats["max_over_min"] = Statistic(max(values) / min(values))
    out.notes.update(p=p, resamples=resamples)
    return out


def run_degree_profile(family, n: int, reps: int, seed: int, *,
                       threads: int = 1) -> ExperimentSummary:
    """Largest face degree over ``2n`` and its multiplicity."""
    ws = _resolve(family)
    rep = analyze(ws)

    def one(rng):
        pm = bdg_inverse(sample_mobile(n, ws, rng), check=False)
        hist, mx, mult = degree_profile(pm)
        second = sorted(face_degrees(pm).tolist())[-2] if pm.n_faces > 1 else 0
        return {"max_face_over_2n": mx / (2 * n), "multiplicity": mult,
                "second_face_over_2n": second / (2 * n)}

    rows = _replicates(one, reps, seed, threads)
    out = ExperimentSummary("degree-profile", ws.spec, n, reps, seed, rows=rows)
    target = 1 - rep.kappa if rep.regime is not Regime.GENERIC_OR_CRITICAL else None
    out.stats["max_face_over_2n"] = _mean_stat([r["max_face_over_2n"] for r in rows], target)
    out.stats["unique_max_freq"] = Statistic(float(np.mean([r["multiplicity"] == 1 for r in rows])))
    out.stats["second_face_over_2n"] = _mean_stat([r["second_face_over_2n"] for r in rows])
    return out
