"""The study report: normality gate, test selection, summary table.

Loads the bundled synthetic trials, prints the rendered report, and shows
the Shapiro-Wilk gate deciding between the paired t-test and Wilcoxon.
"""

from pathlib import Path

from spice.analytics import (
    load_trials,
    paired_differences,
    render_report_text,
    run_metric_tests,
    shapiro_wilk,
    summarize,
    wilcoxon_signed_rank,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def main():
    records = load_trials(FIXTURES / "synthetic_trials.csv")
    print(f"{len(records)} trial records loaded\n")
    print(render_report_text(summarize(records), run_metric_tests(records)))

    diffs = paired_differences(records, "stops")
    w_stat, normality_p = shapiro_wilk(diffs)
    print(f"\nstops differences: Shapiro-Wilk W={w_stat:.4f}, p={normality_p:.2e}")
    wilcoxon_w, p = wilcoxon_signed_rank(diffs)
    print(f"non-normal, so Wilcoxon signed-rank: W={wilcoxon_w}, p={p:.2e}")
    assert normality_p < 0.05

    # The exact small-sample distribution is enumerable: a textbook case.
    w5, p5 = wilcoxon_signed_rank([1.0, 2.0, 3.0, 4.0, 5.0])
    print(f"all-positive n=5 sanity check: W={w5}, p={p5} (2 * 1/32)")
    assert p5 == 0.0625


if __name__ == "__main__":
    main()
