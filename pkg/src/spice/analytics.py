"""Usability-study statistics: normality testing, paired comparisons, and
the summary table of condition means and percentage differences.

The statistical routines are self-contained implementations: Shapiro-Wilk
follows the Royston AS R94 approximation, the Wilcoxon signed-rank test
enumerates the exact null distribution for small samples (via its
generating function) and falls back to a tie- and continuity-corrected
normal approximation, and the paired t-test evaluates the Student-t CDF
through the regularized incomplete beta function.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from statistics import NormalDist

ALPHA = 0.05
METRICS = ("efficiency", "confidence", "taste", "difficulty", "duration_secs", "stops")
STOP_CLUSTER_GAP_S = 2.0

_NORMAL = NormalDist()


class SampleTooSmall(ValueError):
    """Fewer observations than the test can handle."""


class ZeroVariance(ValueError):
    """All observations identical; the statistic is undefined."""


class AllZeroDifferences(ValueError):
    """Every paired difference is zero; no signed ranks exist."""


class MissingCell(ValueError):
    """A group-by-condition cell required for the table has no records."""


# ---------------------------------------------------------------------------
# Shapiro-Wilk (Royston's AS R94 approximation)
# ---------------------------------------------------------------------------


def _shapiro_weights(n: int) -> list[float]:
    # Blom scores for the expected normal order statistics
    m = [_NORMAL.inv_cdf((i - 0.375) / (n + 0.25)) for i in range(1, n + 1)]
    msq = sum(v * v for v in m)
    rsn = 1.0 / math.sqrt(n)
    c = [v / math.sqrt(msq) for v in m]

    # polynomial corrections to the two outermost weights
    a_n = (
        c[-1]
        + 0.221157 * rsn
        - 0.147981 * rsn**2
        - 2.071190 * rsn**3
        + 4.434685 * rsn**4
        - 2.706056 * rsn**5
    )
    if n > 5:
        a_n1 = (
            c[-2]
            + 0.042981 * rsn
            - 0.293762 * rsn**2
            - 1.752461 * rsn**3
            + 5.682633 * rsn**4
            - 3.582633 * rsn**5
        )
        phi = (msq - 2.0 * m[-1] ** 2 - 2.0 * m[-2] ** 2) / (1.0 - 2.0 * a_n**2 - 2.0 * a_n1**2)
        a = [v / math.sqrt(phi) for v in m]
        a[-1] = a_n
        a[-2] = a_n1
        a[0] = -a_n
        a[1] = -a_n1
    else:
        phi = (msq - 2.0 * m[-1] ** 2) / (1.0 - 2.0 * a_n**2)
        a = [v / math.sqrt(phi) for v in m]
        a[-1] = a_n
        a[0] = -a_n
    return a


def shapiro_wilk(sample) -> tuple[float, float]:
    """W statistic and upper-tail p for the normality null, 3 <= n <= 50."""
    x = sorted(float(v) for v in sample)
    n = len(x)
    if n < 3:
        raise SampleTooSmall("Shapiro-Wilk needs at least 3 observations")
    if n > 50:
        raise ValueError("Shapiro-Wilk supported up to n = 50")
    mean = sum(x) / n
    ssq = sum((v - mean) ** 2 for v in x)
    if ssq == 0.0:
        raise ZeroVariance("constant sample")

    if n == 3:
        a = [math.sqrt(0.5), 0.0, -math.sqrt(0.5)]
        w = (sum(ai * xi for ai, xi in zip(a, reversed(x)))) ** 2 / ssq
        w = min(w, 1.0)
        # exact distribution for n = 3
        p = (6.0 / math.pi) * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        return w, max(0.0, min(1.0, p))

    a = _shapiro_weights(n)
    w = sum(ai * xi for ai, xi in zip(a, x)) ** 2 / ssq
    w = min(w, 1.0)

    if n <= 11:
        gamma = -2.273 + 0.459 * n
        mu = 0.5440 - 0.39978 * n + 0.025054 * n**2 - 0.0006714 * n**3
        sigma = math.exp(1.3822 - 0.77857 * n + 0.062767 * n**2 - 0.0020322 * n**3)
        arg = gamma - math.log(1.0 - w)
        if arg <= 0:
            return w, 0.0
        z = (-math.log(arg) - mu) / sigma
    else:
        ln = math.log(n)
        mu = -1.5861 - 0.31082 * ln - 0.083751 * ln**2 + 0.0038915 * ln**3
        sigma = math.exp(-0.4803 - 0.082676 * ln + 0.0030302 * ln**2)
        z = (math.log(1.0 - w) - mu) / sigma
    return w, 1.0 - _NORMAL.cdf(z)


# ---------------------------------------------------------------------------
# Wilcoxon signed-rank
# ---------------------------------------------------------------------------

EXACT_WILCOXON_LIMIT = 20


def _signed_ranks(diffs: list[float]) -> tuple[list[float], list[int], list[int]]:
    """Average ranks of |d|, plus tie-group sizes. Zeros must be gone."""
    order = sorted(range(len(diffs)), key=lambda i: abs(diffs[i]))
    ranks = [0.0] * len(diffs)
    ties = []
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and abs(diffs[order[j + 1]]) == abs(diffs[order[i]]):
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        ties.append(j - i + 1)
        i = j + 1
    signs = [1 if d > 0 else -1 for d in diffs]
    return ranks, signs, ties


def _exact_wilcoxon_distribution(doubled_ranks: list[int]) -> list[int]:
    """Counts of each achievable doubled W+ over all 2^m sign assignments.

    Convolving {0, 2r_i} per observation equals full enumeration, just
    factored; ties double the ranks so every sum stays integral.
    """
    total = sum(doubled_ranks)
    counts = [0] * (total + 1)
    counts[0] = 1
    for dr in doubled_ranks:
        for s in range(total, dr - 1, -1):
            if counts[s - dr]:
                counts[s] += counts[s - dr]
    return counts


def wilcoxon_signed_rank(differences, method: str = "auto") -> tuple[float, float]:
    """Two-sided signed-rank test. Returns (W, p) with W = min(W+, W-).

    Zero differences are dropped. Exact p by enumeration for m <= 20,
    otherwise a normal approximation with tie and continuity corrections;
    ``method`` forces one path ("exact"/"approx") for cross-checking.
    """
    if method not in ("auto", "exact", "approx"):
        raise ValueError(f"unknown method {method!r}")
    diffs = [float(d) for d in differences if float(d) != 0.0]
    m = len(diffs)
    if m == 0:
        raise AllZeroDifferences("no nonzero differences to rank")

    ranks, signs, ties = _signed_ranks(diffs)
    w_plus = sum(r for r, s in zip(ranks, signs) if s > 0)
    w_minus = m * (m + 1) / 2.0 - w_plus
    w = min(w_plus, w_minus)

    exact = m <= EXACT_WILCOXON_LIMIT if method == "auto" else method == "exact"
    if exact:
        doubled = [int(round(2.0 * r)) for r in ranks]
        counts = _exact_wilcoxon_distribution(doubled)
        total = float(2**m)
        dw = int(round(2.0 * w_plus))
        p_le = sum(counts[: dw + 1]) / total
        p_ge = sum(counts[dw:]) / total
        p = min(1.0, 2.0 * min(p_le, p_ge))
        return w, p

    mean = m * (m + 1) / 4.0
    var = m * (m + 1) * (2 * m + 1) / 24.0 - sum(t**3 - t for t in ties) / 48.0
    sd = math.sqrt(var)
    # continuity correction shrinks the deviation by half a step
    z = (w - mean + 0.5) / sd
    p = min(1.0, 2.0 * _NORMAL.cdf(z))
    return w, p


# ---------------------------------------------------------------------------
# Student-t via the regularized incomplete beta function
# ---------------------------------------------------------------------------


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    front = math.exp(
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    # symmetry: I_x(a,b) = 1 - I_{1-x}(b,a); pick the branch where the
    # continued fraction converges fast
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_cdf(t: float, df: float) -> float:
    """P(T <= t) for Student's t with df degrees of freedom."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if t == 0.0:
        return 0.5
    x = df / (df + t * t)
    tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x)
    return 1.0 - tail if t > 0 else tail


def paired_t(differences) -> tuple[float, float, int]:
    """Two-sided paired t-test on the differences: (t, p, df)."""
    d = [float(v) for v in differences]
    n = len(d)
    if n < 2:
        raise SampleTooSmall("paired t-test needs at least 2 differences")
    mean = sum(d) / n
    var = sum((v - mean) ** 2 for v in d) / (n - 1)
    if var == 0.0:
        raise ZeroVariance("differences have zero variance")
    t = mean / math.sqrt(var / n)
    df = n - 1
    p = 2.0 * (1.0 - student_t_cdf(abs(t), df))
    return t, min(1.0, p), df


# ---------------------------------------------------------------------------
# Trial records and the summary table
# ---------------------------------------------------------------------------

GROUPS = ("experiment", "validation")
CONDITIONS = ("smartphone", "spice")
CSV_HEADER = [
    "participant_id",
    "group",
    "condition",
    "efficiency",
    "confidence",
    "taste",
    "difficulty",
    "duration_secs",
    "stops",
]


@dataclass(frozen=True)
class TrialRecord:
    participant_id: str
    group: str
    condition: str
    efficiency: float
    confidence: float
    taste: float
    difficulty: float
    duration_secs: float
    stops: int

    def __post_init__(self):
        if self.group not in GROUPS:
            raise ValueError(f"unknown group {self.group!r}")
        if self.condition not in CONDITIONS:
            raise ValueError(f"unknown condition {self.condition!r}")
        for name in ("efficiency", "confidence", "taste", "difficulty"):
            v = getattr(self, name)
            if not 1.0 <= v <= 10.0:
                raise ValueError(f"{name} rating {v} outside 1-10")
        if self.duration_secs < 0:
            raise ValueError("negative duration")
        if self.stops < 0:
            raise ValueError("negative stop count")


@dataclass(frozen=True)
class TestReport:
    metric: str
    test: str  # "paired-t" or "wilcoxon"
    statistic: float
    p_value: float
    normality_p: float
    alpha: float = ALPHA


@dataclass(frozen=True)
class SummaryRow:
    metric: str
    mean_smartphone: float
    mean_spice: float
    mean_validation: float
    pct_difference: float  # validation vs experiment-smartphone


@dataclass(frozen=True)
class SummaryTable:
    rows: tuple[SummaryRow, ...]


def load_trials(path) -> list[TrialRecord]:
    """Read the study CSV; validates per-participant condition structure."""
    records = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        for row in reader:
            records.append(
                TrialRecord(
                    participant_id=row["participant_id"],
                    group=row["group"],
                    condition=row["condition"],
                    efficiency=float(row["efficiency"]),
                    confidence=float(row["confidence"]),
                    taste=float(row["taste"]),
                    difficulty=float(row["difficulty"]),
                    duration_secs=float(row["duration_secs"]),
                    stops=int(row["stops"]),
                )
            )
    by_participant: dict[str, set[str]] = {}
    groups: dict[str, str] = {}
    for r in records:
        by_participant.setdefault(r.participant_id, set()).add(r.condition)
        if groups.setdefault(r.participant_id, r.group) != r.group:
            raise ValueError(f"participant {r.participant_id} appears in two groups")
    for pid, conditions in by_participant.items():
        if groups[pid] == "experiment" and conditions != {"smartphone", "spice"}:
            raise ValueError(f"experiment participant {pid} must have both conditions")
        if groups[pid] == "validation" and conditions != {"spice"}:
            raise ValueError(f"validation participant {pid} must have only the spice condition")
    return records


def _cell(records, group, condition, metric) -> list[float]:
    vals = [float(getattr(r, metric)) for r in records if r.group == group and r.condition == condition]
    if not vals:
        raise MissingCell(f"no records for {group}/{condition}")
    return vals


def summarize(records) -> SummaryTable:
    """Means per cell and the validation-vs-smartphone percentage difference."""
    rows = []
    for metric in METRICS:
        a = _cell(records, "experiment", "smartphone", metric)
        s = _cell(records, "experiment", "spice", metric)
        b = _cell(records, "validation", "spice", metric)
        mean_a = sum(a) / len(a)
        mean_s = sum(s) / len(s)
        mean_b = sum(b) / len(b)
        rows.append(
            SummaryRow(
                metric=metric,
                mean_smartphone=mean_a,
                mean_spice=mean_s,
                mean_validation=mean_b,
                pct_difference=100.0 * (mean_b - mean_a) / mean_a,
            )
        )
    return SummaryTable(rows=tuple(rows))


def paired_differences(records, metric) -> list[float]:
    """Per-participant spice minus smartphone values in the experiment group."""
    smartphone = {
        r.participant_id: float(getattr(r, metric))
        for r in records
        if r.group == "experiment" and r.condition == "smartphone"
    }
    spice = {
        r.participant_id: float(getattr(r, metric))
        for r in records
        if r.group == "experiment" and r.condition == "spice"
    }
    if set(smartphone) != set(spice):
        raise ValueError("unpaired experiment records")
    return [spice[pid] - smartphone[pid] for pid in sorted(smartphone)]


def run_metric_tests(records) -> list[TestReport]:
    """Shapiro-Wilk on the paired differences picks the comparison test."""
    reports = []
    for metric in METRICS:
        diffs = paired_differences(records, metric)
        _, normality_p = shapiro_wilk(diffs)
        if normality_p < ALPHA:
            stat, p = wilcoxon_signed_rank(diffs)
            test = "wilcoxon"
        else:
            stat, p, _df = paired_t(diffs)
            test = "paired-t"
        reports.append(
            TestReport(metric=metric, test=test, statistic=stat, p_value=p, normality_p=normality_p)
        )
    return reports


def count_stops(log, gap_s: float = STOP_CLUSTER_GAP_S) -> int:
    """Attention stops: clusters of nav/look events separated by > gap_s."""
    times = sorted(t for t, kind in log if kind.startswith("nav:") or kind == "look")
    stops = 0
    last = None
    for t in times:
        if last is None or t - last > gap_s:
            stops += 1
        last = t
    return stops


# ---------------------------------------------------------------------------
# Report rendering
# ---------------------------------------------------------------------------

_METRIC_TITLES = {
    "efficiency": "Efficiency",
    "confidence": "Confidence",
    "taste": "Taste",
    "difficulty": "Difficulty",
    "duration_secs": "Total duration",
    "stops": "Number of stops",
}


def render_report_text(table: SummaryTable, reports: list[TestReport]) -> str:
    """Aligned plain-text table in the study-report layout."""
    by_metric = {r.metric: r for r in reports}
    header = f"{'Metric':<16} {'A: phone':>10} {'SPICE':>10} {'B: valid':>10} {'% diff':>9}  {'test':<9} {'p':>8}"
    lines = [header, "-" * len(header)]
    for row in table.rows:
        rep = by_metric[row.metric]
        lines.append(
            f"{_METRIC_TITLES[row.metric]:<16} {row.mean_smartphone:>10.3f} {row.mean_spice:>10.3f} "
            f"{row.mean_validation:>10.3f} {row.pct_difference:>+8.2f}%  {rep.test:<9} {rep.p_value:>8.4f}"
        )
    lines.append("")
    lines.append("A = experiment group, smartphone condition; B = validation group.")
    lines.append("% diff = 100 x (B - A) / A. Test chosen by Shapiro-Wilk at alpha 0.05.")
    return "\n".join(lines)


def report_payload(table: SummaryTable, reports: list[TestReport]) -> dict:
    """Machine-readable report (stable structure for the CLI's --json)."""
    return {
        "metrics": [
            {
                "metric": row.metric,
                "mean_experiment_smartphone": row.mean_smartphone,
                "mean_experiment_spice": row.mean_spice,
                "mean_validation": row.mean_validation,
                "pct_difference": row.pct_difference,
            }
            for row in table.rows
        ],
        "tests": [
            {
                "metric": r.metric,
                "test": r.test,
                "statistic": r.statistic,
                "p_value": r.p_value,
                "normality_p": r.normality_p,
                "alpha": r.alpha,
            }
            for r in reports
        ],
    }
