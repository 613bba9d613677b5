"""
Acceptance suites behind `invperm verify`. Every detail string is built
from deterministic quantities only, so two runs with the same seed print
identical reports.
"""
import os
from dataclasses import asdict, dataclass
from fractions import Fraction
from itertools import permutations
from typing import *

import numpy as np
from tqdm import tqdm

from lib.invperm import qcount, sampler, stats
from lib.invperm.config import ExperimentReport, ExperimentSpec, load_spec
from lib.invperm.experiments import run_experiment
from lib.invperm.permcore import (
    Permutation,
    format_permutation,
    from_inv_sequence,
    inv_count,
    inv_count_pairs,
    parse_permutation,
    psi_shift,
    psi_unshift,
    standardize,
    to_inv_sequence,
    total_displacement,
    window_pattern,
)
from lib.invperm.plot import permutation_svg
from lib.invperm.rng import RngStream
from lib.invperm.utils import format_decimal, logger

from .shared import CONFIGS_DIR

BRUTE_FORCE_MAX_N = 8
IDENTITY_MAX_N = 12
UNIFORMITY_DRAWS = 1_000_000
UNIFORMITY_SIGNIFICANCE = 1e-3


@dataclass(frozen=True)
class CheckResult:
    suite: str
    check: str
    passed: bool
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class SuiteContext:
    seed: Optional[int] = None
    streams: Optional[int] = None
    exact_budget: Optional[int] = None
    progress: bool = True

    def spec(self, name: str) -> ExperimentSpec:
        return load_spec(
            os.path.join(CONFIGS_DIR, f"{name}.conf"),
            seed=self.seed,
            streams=self.streams,
            exact_budget=self.exact_budget,
        )

    def budget(self) -> int:
        return qcount.EXACT_CELL_BUDGET if self.exact_budget is None else self.exact_budget


def report_checks(suite: str, report: ExperimentReport) -> List[CheckResult]:
    results = []
    for row in report.rows:
        if row.passed is None:
            continue
        name = row.label + (f"[{row.param}]" if row.param else f"[k={row.k}]")
        fields = [("n", row.n), ("m", row.m), ("estimate", row.estimate), ("reference", row.reference),
                  ("se", row.se), ("count", row.count), ("check", row.count_check)]
        detail = " ".join(f"{key}={format_decimal(value)}" for key, value in fields if value is not None)
        if row.approximate:
            detail += " (approximate sampler)"
        results.append(CheckResult(suite, name, bool(row.passed), detail))
    return results


def _run(suite: str, ctx: SuiteContext, name: str) -> List[CheckResult]:
    return report_checks(suite, run_experiment(ctx.spec(name), progress=ctx.progress))


# ---------------------------------------------------------------------------


def suite_identities(ctx: SuiteContext) -> List[CheckResult]:
    results = []
    for n in tqdm(range(BRUTE_FORCE_MAX_N + 1), desc="brute force", disable=not ctx.progress, leave=False):
        results.extend(_brute_force(n))
    for n in tqdm(range(IDENTITY_MAX_N + 1), desc="identities", disable=not ctx.progress, leave=False):
        results.extend(_structural(n))
    return results


def _brute_force(n: int) -> List[CheckResult]:
    by_inv: Dict[int, int] = {}
    by_prefix: Dict[Tuple[Tuple[int, ...], int], int] = {}
    gaps: Dict[Tuple[int, int, bool], int] = {}
    for values in permutations(range(1, n + 1)):
        p = Permutation(values)
        m = inv_count_pairs(p)
        by_inv[m] = by_inv.get(m, 0) + 1
        for k in range(1, min(4, n) + 1):
            key = (standardize(values[:k]).values, m)
            by_prefix[key] = by_prefix.get(key, 0) + 1
        for k in range(1, n):
            key = (m, k, values[0] > values[k])
            gaps[key] = gaps.get(key, 0) + 1

    top = qcount.max_inversions(n)
    mahonian_ok = all(qcount.mahonian(n, m) == by_inv.get(m, 0) for m in range(top + 2))

    prefix_ok = probs_ok = True
    for k in range(1, min(4, n) + 1):
        for tau_values in permutations(range(1, k + 1)):
            tau = Permutation(tau_values)
            ell = inv_count(tau)
            for m in range(top + 1):
                observed = by_prefix.get((tau.values, m), 0)
                prefix_ok &= qcount.prefix_count(n, m, k, ell) == observed
                probs_ok &= qcount.exact_pattern_prob(n, m, tau).fraction == Fraction(observed, by_inv[m])

    gap_ok = True
    for k in range(1, n):
        for m in range(top + 1):
            up, down = qcount.gap_counts(n, m, k)
            gap_ok &= (up, down) == (gaps.get((m, k, False), 0), gaps.get((m, k, True), 0))
            gap_ok &= qcount.exact_gap_prob(n, m, k).fraction == Fraction(down, by_inv[m])

    return [
        CheckResult("identities", f"mahonian[n={n}]", mahonian_ok, "brute force"),
        CheckResult("identities", f"prefix_count[n={n}]", prefix_ok, "brute force, k <= 4"),
        CheckResult("identities", f"gap_counts[n={n}]", gap_ok, "brute force, all k"),
        CheckResult("identities", f"probabilities[n={n}]", probs_ok and gap_ok, "exact rationals"),
    ]


def _structural(n: int) -> List[CheckResult]:
    top = qcount.max_inversions(n)
    row = qcount.mahonian_row(n)
    prefix_ok = True
    for k in range(n + 1):
        small = qcount.mahonian_row(k)
        for m in range(top + 1):
            total = sum(small[ell] * qcount.prefix_count(n, m, k, ell) for ell in range(qcount.max_inversions(k) + 1))
            prefix_ok &= total == row[m]
    gap_ok = all(
        sum(qcount.gap_counts(n, m, k)) == row[m] for k in range(1, n) for m in range(top + 1)
    )
    return [
        CheckResult("identities", f"prefix_partition[n={n}]", prefix_ok, "sum over l of M(k,l) N(k,l) = M(n,m)"),
        CheckResult("identities", f"gap_partition[n={n}]", gap_ok, "N_up + N_down = M(n,m)"),
    ]


def suite_bijection(ctx: SuiteContext) -> List[CheckResult]:
    n = 5
    images = set()
    inv_ok = inverse_ok = shift_ok = True
    for values in permutations(range(1, n + 1)):
        p = Permutation(values)
        q = psi_shift(p)
        images.add(q.values)
        inv_ok &= inv_count(q) == inv_count(p)
        inverse_ok &= psi_unshift(q) == p
        for k in range(1, n):
            for j in range(1, n - k + 1):
                shift_ok &= window_pattern(p, j, k) == window_pattern(q, j + 1, k)

    code = (0, 1, 1, 0, 3, 2, 6, 0, 7)
    decoded = from_inv_sequence(code)
    figure = parse_permutation("714592683")
    shifted = psi_shift(figure)
    pattern = parse_permutation("2341")
    return [
        CheckResult("bijection", "preserves_inversions[S_5]", inv_ok),
        CheckResult("bijection", "invertible[S_5]", inverse_ok and len(images) == 120, f"{len(images)} images"),
        CheckResult("bijection", "shifts_patterns[S_5]", shift_ok),
        CheckResult(
            "bijection", "inversion_sequence[735846192]",
            format_permutation(decoded, compact=True) == "735846192"
            and to_inv_sequence(decoded).terms == code
            and inv_count(decoded) == 20,
            f"inv={inv_count(decoded)} td={total_displacement(decoded)}",
        ),
        CheckResult(
            "bijection", "shift[714592683]",
            format_permutation(shifted, compact=True) == "761349258"
            and window_pattern(figure, 3, 4) == pattern
            and window_pattern(shifted, 4, 4) == pattern,
            format_permutation(shifted),
        ),
    ]


def suite_sampler(ctx: SuiteContext) -> List[CheckResult]:
    n, m = 6, 5
    cells = qcount.mahonian(n, m)
    results = []
    for stream, method in enumerate(("dp", "tilted")):
        rng = RngStream(ctx.seed or 0, stream)
        codes = sampler.sample_codes(n, m, UNIFORMITY_DRAWS, rng, method, exact_budget=ctx.budget())
        sums_ok = bool((codes.sum(axis=1) == m).all())
        _, counts = np.unique(codes, axis=0, return_counts=True)
        observed = np.concatenate([counts, np.zeros(cells - len(counts))])
        chi = stats.chi_square(observed, np.full(cells, UNIFORMITY_DRAWS / cells))
        results.append(
            CheckResult(
                "sampler", f"uniformity[{method}]",
                sums_ok and len(counts) <= cells and chi.p_value >= UNIFORMITY_SIGNIFICANCE,
                f"cells={cells} chi2={chi.statistic:.6f} dof={chi.dof} p={chi.p_value:.6g}",
            )
        )
        logger.info(f"{method}: chi2={chi.statistic:.3f} p={chi.p_value:.4g}")
    return results


def suite_thm1(ctx: SuiteContext) -> List[CheckResult]:
    exact = qcount.exact_pattern_prob(4, 2, parse_permutation("21"))
    results = [CheckResult("thm1", "exact[n=4,m=2,tau=21]", exact.fraction == Fraction(2, 5), str(exact))]
    return results + _run("thm1", ctx, "thm1")


def suite_thm2(ctx: SuiteContext) -> List[CheckResult]:
    results = _run("thm2", ctx, "thm2_k2") + _run("thm2", ctx, "thm2_k3")
    report = run_experiment(ctx.spec("thm2_exact"), progress=ctx.progress)
    results += report_checks("thm2", report)
    results += _run("thm2", ctx, "thm2_dense")
    scaled = {row.param: row.estimate for row in report.rows if row.label == "scaled_pattern"}
    if "12" in scaled and "21" in scaled:
        results.append(
            CheckResult(
                "thm2", "brackets_one", scaled["21"] < 1 < scaled["12"],
                f"12: {format_decimal(scaled['12'])} 21: {format_decimal(scaled['21'])}",
            )
        )
    return results


def suite_thm5(ctx: SuiteContext) -> List[CheckResult]:
    return _run("thm5", ctx, "thm5") + _run("thm5", ctx, "thm5_exact")


def suite_prop3(ctx: SuiteContext) -> List[CheckResult]:
    return _run("prop3", ctx, "prop3")


def suite_prop8(ctx: SuiteContext) -> List[CheckResult]:
    return _run("prop8", ctx, "prop8")


def suite_eq1(ctx: SuiteContext) -> List[CheckResult]:
    results = []
    for name in ("eq1", "eq1_wide"):
        rows = report_checks("eq1", run_experiment(ctx.spec(name), progress=ctx.progress))
        failed = [r for r in rows if not r.passed]
        results.append(CheckResult("eq1", name, not failed and bool(rows), f"{len(rows) - len(failed)}/{len(rows)} equal"))
        results.extend(failed)
    return results


def suite_fig1(ctx: SuiteContext) -> List[CheckResult]:
    spec = ctx.spec("fig1")
    results = report_checks("fig1", run_experiment(spec, progress=ctx.progress))
    rng = RngStream(spec.seed, 0)
    p = sampler.sample_perms(spec.n, spec.m, 1, rng, spec.sampler, spec.exact_budget)[0]
    svg = permutation_svg(p)
    results.append(CheckResult("fig1", "svg", svg.lstrip().startswith("<?xml") and "<svg" in svg, f"{len(svg)} bytes"))
    return results


SUITES: Dict[str, Callable[[SuiteContext], List[CheckResult]]] = {
    "identities": suite_identities,
    "bijection": suite_bijection,
    "sampler": suite_sampler,
    "thm1": suite_thm1,
    "thm2": suite_thm2,
    "thm5": suite_thm5,
    "prop3": suite_prop3,
    "prop8": suite_prop8,
    "eq1": suite_eq1,
    "fig1": suite_fig1,
}


def run_suites(name: str, ctx: SuiteContext) -> List[CheckResult]:
    names = list(SUITES) if name == "all" else [name]
    results = []
    for suite in names:
        logger.info(f"suite {suite}")
        results.extend(SUITES[suite](ctx))
    return results
