"""Type-coverage accounting and regression significance machinery.

Univariate OLS with F-test, Pearson correlation, and the regularized
incomplete beta function used for both tail probabilities.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

from .errors import DegenerateInputError, DomainError, EmptyTestSetError
from .prompts import Prompt, count_prompt_tokens
from .textproc import extract_types


@dataclass(frozen=True)
class CoverageReport:
    setting: str
    direction: tuple[str, str]
    oov_count: int
    coverage_pct: float
    prompt_tokens: int

    def to_json(self) -> dict:
        return {
            "setting": self.setting,
            "direction": list(self.direction),
            "oov": self.oov_count,
            "coverage_pct": round(self.coverage_pct, 1),
            "prompt_tokens": self.prompt_tokens,
        }


def coverage(prompt: Prompt, test_target_texts: Sequence[str]) -> CoverageReport:
    """Fraction of test-set target-language types present in the prompt's
    data sections."""
    test_types = extract_types(test_target_texts)
    if not test_types:
        raise EmptyTestSetError("no types in test texts")
    prompt_types = extract_types([prompt.data_text()])
    covered = test_types & prompt_types
    oov = len(test_types) - len(covered)
    return CoverageReport(
        setting=prompt.setting_name,
        direction=prompt.direction,
        oov_count=oov,
        coverage_pct=100.0 * len(covered) / len(test_types),
        prompt_tokens=count_prompt_tokens(prompt),
    )


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b).

    Continued-fraction evaluation (modified Lentz), using the reflection
    I_x(a,b) = 1 - I_{1-x}(b,a) for the slowly-converging region.
    """
    if a <= 0 or b <= 0:
        raise DomainError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise DomainError("x must be in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    if x > (a + 1.0) / (a + b + 2.0):
        return 1.0 - reg_inc_beta(b, a, 1.0 - x)
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    return math.exp(ln_front) * _beta_contfrac(a, b, x) / a


def _beta_contfrac(a: float, b: float, x: float, max_iter: int = 500,
                   tol: float = 1e-16) -> float:
    tiny = 1e-300
    f = 1.0
    c = 1.0
    d = 0.0
    for i in range(max_iter + 1):
        m = i // 2
        if i == 0:
            num = 1.0
        elif i % 2 == 0:
            num = m * (b - m) * x / ((a + 2 * m - 1) * (a + 2 * m))
        else:
            num = -(a + m) * (a + b + m) * x / ((a + 2 * m) * (a + 2 * m + 1))
        d = 1.0 + num * d
        if abs(d) < tiny:
            d = tiny
        d = 1.0 / d
        c = 1.0 + num / c
        if abs(c) < tiny:
            c = tiny
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < tol:
            break
    return f - 1.0


def f_sf(f_stat: float, dfn: int, dfd: int) -> float:
    """Survival function of the F distribution via reg_inc_beta."""
    if f_stat <= 0:
        return 1.0
    x = dfd / (dfd + dfn * f_stat)
    return reg_inc_beta(dfd / 2.0, dfn / 2.0, x)


def t_sf_two_sided(t_stat: float, df: int) -> float:
    """Two-sided tail probability of Student's t via reg_inc_beta."""
    x = df / (df + t_stat * t_stat)
    return reg_inc_beta(df / 2.0, 0.5, x)


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    r_squared: float
    f_stat: float
    f_p_value: float
    n: int
    pearson_r: float
    pearson_p: float

    def to_json(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "f_stat": self.f_stat,
            "f_p_value": float(f"{self.f_p_value:.1e}"),
            "n": self.n,
            "pearson_r": self.pearson_r,
            "pearson_p": float(f"{self.pearson_p:.1e}"),
        }


def pearson(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Sample correlation with a two-sided t-test p-value."""
    n = len(x)
    if n < 3 or len(y) != n:
        raise DegenerateInputError("need n >= 3 with equal lengths")
    mx = sum(x) / n
    my = sum(y) / n
    sxx = sum((xi - mx) ** 2 for xi in x)
    syy = sum((yi - my) ** 2 for yi in y)
    if sxx == 0 or syy == 0:
        raise DegenerateInputError("constant input vector")
    sxy = sum((xi - mx) * (yi - my) for xi, yi in zip(x, y))
    r = sxy / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return r, t_sf_two_sided(abs(t), n - 2)


def ols_fit(x: Sequence[float], y: Sequence[float]) -> RegressionResult:
    """Closed-form univariate least squares with F-test and Pearson fields."""
    n = len(x)
    if n < 3 or len(y) != n:
        raise DegenerateInputError("need n >= 3 with equal lengths")
    mx = sum(x) / n
    my = sum(y) / n
    sxx = sum((xi - mx) ** 2 for xi in x)
    if sxx == 0:
        raise DegenerateInputError("constant x")
    sxy = sum((xi - mx) * (yi - my) for xi, yi in zip(x, y))
    slope = sxy / sxx
    intercept = my - slope * mx
    sst = sum((yi - my) ** 2 for yi in y)
    sse = sum((yi - (slope * xi + intercept)) ** 2 for xi, yi in zip(x, y))
    r_squared = 1.0 - sse / sst if sst > 0 else 1.0
    if sse <= 0:
        f_stat = math.inf
        f_p = 0.0
    else:
        f_stat = (sst - sse) / (sse / (n - 2))
        f_p = f_sf(f_stat, 1, n - 2)
    try:
        r, r_p = pearson(x, y)
    except DegenerateInputError:
        r, r_p = (1.0 if slope >= 0 else -1.0), 0.0
    return RegressionResult(
        slope=slope, intercept=intercept, r_squared=r_squared,
        f_stat=f_stat, f_p_value=f_p, n=n, pearson_r=r, pearson_p=r_p,
    )


def token_regression(settings: Sequence[tuple[float, float]]) -> RegressionResult:
    """OLS of ChrF++ on prompt token counts."""
    x = [s[0] for s in settings]
    y = [s[1] for s in settings]
    return ols_fit(x, y)


def load_published_points() -> dict:
    """Published (coverage, ChrF++) and (tokens, ChrF++) fixture points."""
    text = resources.files("grambook.data").joinpath("regression_points.json").read_text()
    return json.loads(text)


def coverage_table(reports: Sequence[CoverageReport]) -> str:
    """Aligned-column text table of coverage reports."""
    rows = [("Setting", "OOV", "Coverage (%)", "Prompt Tokens")]
    for r in reports:
        rows.append((r.setting, str(r.oov_count), f"{r.coverage_pct:.1f}",
                     str(r.prompt_tokens)))
    widths = [max(len(row[i]) for row in rows) for i in range(4)]
    lines = []
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) if i == 0 else cell.rjust(widths[i])
                               for i, cell in enumerate(row)))
    return "\n".join(lines)


def scatter_csv(x: Sequence[float], y: Sequence[float],
                result: RegressionResult, n_band: int = 50) -> str:
    """CSV export of points, fit line, and 95% confidence band for plotting."""
    n = result.n
    mx = sum(x) / n
    sxx = sum((xi - mx) ** 2 for xi in x)
    sse = sum((yi - (result.slope * xi + result.intercept)) ** 2
              for xi, yi in zip(x, y))
    s2 = sse / (n - 2)
    # t critical value via bisection on the two-sided tail
    lo, hi = 0.0, 100.0
    for _ in range(200):
        mid = (lo + hi) / 2
        if t_sf_two_sided(mid, n - 2) > 0.05:
            lo = mid
        else:
            hi = mid
    t_crit = (lo + hi) / 2

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["kind", "x", "y", "y_lo", "y_hi"])
    for xi, yi in zip(x, y):
        writer.writerow(["point", xi, yi, "", ""])
    xmin, xmax = min(x), max(x)
    for i in range(n_band):
        xi = xmin + (xmax - xmin) * i / max(n_band - 1, 1)
        yhat = result.slope * xi + result.intercept
        half = t_crit * math.sqrt(s2 * (1.0 / n + (xi - mx) ** 2 / sxx))
        writer.writerow(["fit", xi, yhat, yhat - half, yhat + half])
    return buf.getvalue()
