"""Exhaustive exact checks over small objects.

:func:`run_verify` drives every small-size oracle in the package and returns
a :class:`VerifyReport`; the first failing instance of each check is kept
in serialised form.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import gw
from .bijections import Mobile, bdg_forward, bdg_inverse, gn_forward, gn_inverse
from .labels import count_labelings, enumerate_labelings, sample_mobile
from .planarmap import face_degrees, validate
from .rng import replicate_rng
from .stats import lemma_dis_instance
from .trees import enumerate_trees
from .weights import WeightSequence, w_to_q

__all__ = ["CheckResult", "VerifyReport", "run_verify", "all_mobiles", "CHECKS"]


@dataclass
class CheckResult:
    name: str
    instances: int = 0
    failures: int = 0
    counterexample: dict | None = None
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0
    gating: bool = True

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def fail(self, example: dict) -> None:
        self.failures += 1
        if self.counterexample is None:
            self.counterexample = example

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "gating": self.gating,
                "instances": self.instances, "failures": self.failures,
                "counterexample": self.counterexample, "detail": self.detail,
                "seconds": round(self.seconds, 3)}


@dataclass
class VerifyReport:
    checks: list[CheckResult]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks if c.gating)

    def to_dict(self) -> dict:
        return {"schema_version": 1, "ok": self.ok, "checks": [c.to_dict() for c in self.checks]}


def all_mobiles(n: int, signs=(1, -1)):
    """Every labelled mobile with ``n`` edges, for each sign in ``signs``."""
    for tp in enumerate_trees(n):
        t = gn_inverse(tp)
        for lab in enumerate_labelings(t):
            for e in signs:
                yield Mobile(t, lab, e)


def _catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


# -- individual checks ----------------------------------------------------------


def check_catalan(max_n: int = 8) -> CheckResult:
    r = CheckResult("catalan_counts")
    for n in range(max_n + 1):
        got = len(enumerate_trees(n))
        r.instances += 1
        r.detail[str(n)] = got
        if got != _catalan(n):
            r.fail({"n": n, "count": got, "expected": _catalan(n)})
    return r


def check_gn_roundtrip(max_n: int = 7) -> CheckResult:
    r = CheckResult("gn_roundtrip")
    for n in range(max_n + 1):
        count = 0
        for t in enumerate_trees(n):
            tau = gn_inverse(t)
            count += 1
            if gn_forward(tau) != t or gn_inverse(gn_forward(tau)) != tau \
                    or int(tau.is_white.sum()) != t.leaves.size:
                r.fail({"tree": t.to_dict()})
        r.instances += count
        r.detail[str(n)] = count
    return r


def check_labelings(max_n: int = 4) -> CheckResult:
    r = CheckResult("labelings")
    for n in range(1, max_n + 1):
        for tp in enumerate_trees(n):
            t = gn_inverse(tp)
            labs = list(enumerate_labelings(t))
            r.instances += 1
            distinct = len({x.tobytes() for x in labs})
            valid = all(Mobile(t, x).is_valid() for x in labs)
            if len(labs) != count_labelings(t) or distinct != len(labs) or not valid:
                r.fail({"tree": t.to_dict(), "enumerated": len(labs),
                        "formula": count_labelings(t)})
    return r


def check_bdg_roundtrip(max_n: int = 4) -> CheckResult:
    r = CheckResult("bdg_roundtrip")
    for n in range(1, max_n + 1):
        count = 0
        for m in all_mobiles(n):
            count += 1
            pm = bdg_inverse(m)
            rep = validate(pm)
            deg = face_degrees(pm)
            blacks = m.tree.outdeg[m.tree.black_vertices] + 1
            ok = rep.ok and pm.n_edges == n and sorted(deg.tolist()) == sorted((2 * blacks).tolist())
            if not ok or bdg_forward(pm) != m:
                r.fail({"mobile": m.to_dict(), "validation": rep.failures()})
        r.instances += count
        r.detail[str(n)] = count
    return r


def _distance_ok(m: Mobile) -> bool:
    pm = bdg_inverse(m, check=False)
    d = pm.bfs(pm.rho)
    wl = m.white_labels()
    return bool(np.array_equal(d[:wl.size], wl - wl.min() + 1) and d[pm.rho] == 0)


def check_distance_identity(max_n: int = 4, sampled_n: int = 500, sampled: int = 10,
                            seed: int = 0) -> CheckResult:
    r = CheckResult("distance_identity")
    for n in range(1, max_n + 1):
        for m in all_mobiles(n, signs=(1,)):
            r.instances += 1
            if not _distance_ok(m):
                r.fail({"mobile": m.to_dict()})
    for fam in ("powerlaw:beta=3", "factorial:alpha=1"):
        ws = WeightSequence.from_spec(fam)
        for k in range(sampled):
            m = sample_mobile(sampled_n, ws, replicate_rng(seed, k))
            r.instances += 1
            if not _distance_ok(m):
                r.fail({"family": fam, "n": sampled_n, "replicate": k, "seed": seed,
                        "mobile": m.to_dict()})
    r.detail["sampled"] = {"n": sampled_n, "per_family": sampled, "seed": seed}
    return r


def check_weight_transport(max_n: int = 5, beta: int = 3) -> CheckResult:
    """Exact: total map weight of all BDG images is twice the total tree weight."""
    r = CheckResult("weight_transport")
    ws = WeightSequence.power_law(beta)
    wex = ws.exact_prefix(max_n + 1)
    q = [Fraction(0)] + list(w_to_q(ws, max_n + 1, exact=True))
    for n in range(1, max_n + 1):
        trees = enumerate_trees(n)
        tree_side = sum(math.prod(wex[d] for d in t.outdeg.tolist()) for t in trees)
        map_side = Fraction(0)
        count = 0
        for m in all_mobiles(n):
            pm = bdg_inverse(m, check=False)
            map_side += math.prod(q[d // 2] for d in face_degrees(pm).tolist())
            count += 1
        r.instances += count
        r.detail[str(n)] = {"maps": count, "tree_side": str(tree_side)}
        if map_side != 2 * tree_side:
            r.fail({"n": n, "map_side": str(map_side), "tree_side": str(tree_side)})
    return r


def check_lemma_dis(max_n: int = 5) -> list[CheckResult]:
    """Distortion bound and star-map shape on every mobile with ``n <= max_n``.

    Gating: the star map is a tree with ``Delta`` edges and one face, and
    ``dis <= 10 K + 2``.  The bare ``dis <= 10 K`` is reported without
    gating: with ``K = 0`` two equal-label vertices of one subtree at map
    distance 2 already give ``dis = 2``.
    """
    star = CheckResult("star_map_shape")
    bound = CheckResult("distortion_bound_additive")
    bare = CheckResult("distortion_bound_bare", gating=False)
    for n in range(1, max_n + 1):
        for m in all_mobiles(n, signs=(1,)):
            res = lemma_dis_instance(m)
            ex = {"mobile": m.to_dict(), "dis": res["dis"], "K": res["K"]}
            for chk, ok in ((star, res["star_ok"]), (bound, res["dis"] <= 10 * res["K"] + 2),
                            (bare, res["bound_holds"])):
                chk.instances += 1
                if not ok:
                    chk.fail(ex)
    return [star, bound, bare]


def check_twigs(max_n: int = 8) -> CheckResult:
    r = CheckResult("twig_decomposition")
    for n in range(max_n + 1):
        for t in enumerate_trees(n):
            r.instances += 1
            c = gw.twig_decompose(t)
            if c.n_vertices != t.leaves.size:
                r.fail({"tree": t.to_dict(), "twigs": c.n_vertices})
    return r


def _gw_specs():
    geo = gw.tilt(WeightSequence.geometric_tilt(0.5))
    pl = gw.tilt(gw.probability_tilt(WeightSequence.power_law(3)))
    return {"geomtilt:r=0.5": geo, "powerlaw:beta=3": pl}


def check_minami(n_max: int = 8, tol: float = 1e-10) -> CheckResult:
    r = CheckResult("minami_leaf_law")
    geo = gw.tilt(WeightSequence.geometric_tilt(0.25))
    # exact rational comparison for a rational offspring law
    if geo.exact is not None:
        a = gw.leaf_law(geo, n_max, exact=True)
        b = gw.xi0_progeny_law(geo, n_max, exact=True)
        r.instances += 1
        r.detail["exact_rational"] = a[1:] == b[1:]
        if a[1:] != b[1:]:
            r.fail({"law": "geomtilt:r=0.25", "leaf": [str(x) for x in a],
                    "xi0": [str(x) for x in b]})
    spec = gw.tilt(gw.probability_tilt(WeightSequence.power_law(3)))
    a = gw.leaf_law(spec, n_max)
    b = gw.xi0_progeny_law(spec, n_max)
    tv = gw._tv(a[1:], b[1:])
    r.instances += 1
    r.detail["tv_powerlaw_beta3"] = tv
    if not tv < tol:
        r.fail({"law": "powerlaw:beta=3", "tv": tv})
    return r


def check_tilt_conditional(max_n: int = 6, tol: float = 1e-10) -> CheckResult:
    r = CheckResult("tilt_conditional_law")
    for fam in ("powerlaw:beta=3", "powerlaw:beta=4", "geomtilt:r=0.5"):
        ws = WeightSequence.from_spec(fam)
        base = ws if fam.startswith("geomtilt") else gw.probability_tilt(ws)
        spec = gw.tilt(base)
        for n in range(1, max_n + 1):
            gap = gw.tilt_conditional_check(ws, n, spec)
            r.instances += 1
            r.detail[f"{fam}@{n}"] = gap
            if not gap < tol:
                r.fail({"family": fam, "n": n, "gap": gap})
    return r


def check_two_type(max_n: int = 5, tol: float = 1e-10) -> CheckResult:
    r = CheckResult("two_type_law")
    for name, spec in _gw_specs().items():
        for n in range(1, max_n + 1):
            gap = gw.two_type_check(spec, n)
            r.instances += 1
            if not gap < tol:
                r.fail({"law": name, "n": n, "gap": gap})
    return r


def check_solve_z(tol: float = 1e-12) -> CheckResult:
    r = CheckResult("solve_z")
    ws = WeightSequence.geometric_tilt(0.5)
    Z = gw.solve_Z(ws)
    slope = gw._g(ws, Z, 1)
    r.instances += 1
    r.detail.update(Z=Z, g_prime=slope)
    if not (abs(Z - 2) < tol * 2 and abs(slope - 1) < 1e-10):
        r.fail({"Z": Z, "g_prime": slope})
    try:
        gw.solve_Z(WeightSequence.power_law(3))
        r.fail({"family": "powerlaw:beta=3", "error": "expected not admissible"})
    except gw.NotAdmissibleError:
        pass
    r.instances += 1
    return r


CHECKS: dict[str, Callable[[], CheckResult | list[CheckResult]]] = {
    "catalan": check_catalan,
    "gn": check_gn_roundtrip,
    "labelings": check_labelings,
    "bdg": check_bdg_roundtrip,
    "distance": check_distance_identity,
    "transport": check_weight_transport,
    "lemma-dis": check_lemma_dis,
    "twigs": check_twigs,
    "minami": check_minami,
    "tilt": check_tilt_conditional,
    "two-type": check_two_type,
    "solve-z": check_solve_z,
}


def run_verify(only: list[str] | None = None, progress: Callable[[str], None] | None = None
               ) -> VerifyReport:
    names = list(CHECKS) if not only else only
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ValueError(f"unknown checks {unknown}; choose from {list(CHECKS)}")
    out: list[CheckResult] = []
    for name in names:
        t0 = time.perf_counter()
        res = CHECKS[name]()
        res = res if isinstance(res, list) else [res]
        dt = time.perf_counter() - t0
        for c in res:
            c.seconds = dt / len(res)
            out.append(c)
            if progress:
                progress(f"{c.name}: {'ok' if c.passed else 'FAIL'} ({c.instances} instances)")
    return VerifyReport(out)
