"""Association test and inter-annotator agreement coefficients.

Implements the 2x2 chi-square test with an exact tail probability, plus
the standard agreement measures for categorical judgments: percentage
agreement, Cohen's kappa, Fleiss' kappa, Krippendorff's alpha (nominal),
and Kendall's tau-b.  Degenerate cases (no variability to agree about)
return ``None`` rather than dividing by zero, so callers can surface them.

All functions are pure and reentrant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence


class ZeroMarginalError(ValueError):
    """A margin of the contingency table is zero; the test is undefined."""


class NoCoRatedItemsError(ValueError):
    """No item carries two or more ratings; agreement is undefined."""


@dataclass(frozen=True)
class ContingencyTable:
    """2x2 cross-counts: rows = output outcome good/bad, columns = input good/bad."""

    a: int  # output good, input good
    b: int  # output good, input bad
    c: int  # output bad, input good
    d: int  # output bad, input bad

    def __post_init__(self) -> None:
        for cell in (self.a, self.b, self.c, self.d):
            if cell < 0:
                raise ValueError("contingency cells must be non-negative")
        if self.n < 1:
            raise ValueError("contingency table must count at least one observation")

    @property
    def n(self) -> int:
        return self.a + self.b + self.c + self.d

    def transposed(self) -> "ContingencyTable":
        return ContingencyTable(self.a, self.c, self.b, self.d)


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    dof: int
    expected: tuple[tuple[float, float], tuple[float, float]]
    yates_correction: bool = False
    low_expected_warning: bool = False


def chi_square_2x2(table: ContingencyTable, yates_correction: bool = False) -> TestResult:
    """Pearson chi-square test of independence on a 2x2 table.

    The statistic is sum((O - E)^2 / E) with expectations from the margins;
    with ``yates_correction`` each |O - E| is reduced by 0.5 (floored at 0).
    One degree of freedom.
    """
    row1 = table.a + table.b
    row2 = table.c + table.d
    col1 = table.a + table.c
    col2 = table.b + table.d
    if 0 in (row1, row2, col1, col2):
        raise ZeroMarginalError("a zero marginal row or column leaves the test undefined")
    n = table.n
    expected = (
        (row1 * col1 / n, row1 * col2 / n),
        (row2 * col1 / n, row2 * col2 / n),
    )
    observed = ((table.a, table.b), (table.c, table.d))
    statistic = 0.0
    for i in range(2):
        for j in range(2):
            diff = abs(observed[i][j] - expected[i][j])
            if yates_correction:
                diff = max(diff - 0.5, 0.0)
            statistic += diff * diff / expected[i][j]
    return TestResult(
        statistic=statistic,
        p_value=chi_square_sf(statistic, 1),
        dof=1,
        expected=expected,
        yates_correction=yates_correction,
        low_expected_warning=any(e < 5 for row in expected for e in row),
    )


def chi_square_sf(x: float, dof: int) -> float:
    """Upper-tail probability P(X >= x) of the chi-square distribution.

    Evaluates the regularized upper incomplete gamma function Q(dof/2, x/2)
    in closed form: a finite Poisson sum for even dof, and an erfc-anchored
    half-integer ladder  Q(a+1, y) = Q(a, y) + y^a e^-y / Gamma(a+1)  for
    odd dof.  Both accumulate only positive terms, so the result is
    accurate to near machine precision on the tested domain.
    """
    if x < 0:
        raise ValueError("chi-square statistic must be non-negative")
    if dof < 1:
        raise ValueError("degrees of freedom must be a positive integer")
    if x == 0:
        return 1.0
    y = x / 2.0
    if dof % 2 == 0:
        term = math.exp(-y)
        total = term
        for i in range(1, dof // 2):
            term *= y / i
            total += term
    else:
        total = math.erfc(math.sqrt(y))
        term = 2.0 * math.sqrt(y / math.pi) * math.exp(-y)  # y^(1/2) e^-y / Gamma(3/2)
        a = 0.5
        for _ in range(dof // 2):
            total += term
            a += 1.0
            term *= y / a
    return min(max(total, 0.0), 1.0)


@dataclass
class RatingsMatrix:
    """Categorical ratings of items by raters; missing cells allowed.

    ``values`` maps (item_id, rater_id) to a category token.  ``levels``
    fixes the category order for ordinal data; nominal data needs none.
    """

    items: list[str]
    raters: list[str]
    values: dict[tuple[str, str], str]
    scale: str = "nominal"
    levels: tuple[str, ...] | None = None
    categories: tuple[str, ...] | None = field(default=None)

    def __post_init__(self) -> None:
        item_set = set(self.items)
        rater_set = set(self.raters)
        for (item, rater), value in self.values.items():
            if item not in item_set:
                raise ValueError(f"rating references undeclared item {item!r}")
            if rater not in rater_set:
                raise ValueError(f"rating references undeclared rater {rater!r}")
            if self.categories is not None and value not in self.categories:
                raise ValueError(f"value {value!r} outside declared categories {self.categories}")

    def item_ratings(self, item: str) -> list[str]:
        return [self.values[(item, r)] for r in self.raters if (item, r) in self.values]

    def co_rated_units(self) -> list[list[str]]:
        units = [self.item_ratings(item) for item in self.items]
        return [u for u in units if len(u) >= 2]


def percentage_agreement(ratings: RatingsMatrix) -> float:
    """Fraction of agreeing rater pairs over all co-rated pairs."""
    agree = 0
    pairs = 0
    for unit in ratings.co_rated_units():
        for i in range(len(unit)):
            for j in range(i + 1, len(unit)):
                pairs += 1
                agree += unit[i] == unit[j]
    if pairs == 0:
        raise NoCoRatedItemsError("no item has two or more ratings")
    return agree / pairs


def cohens_kappa(ratings: RatingsMatrix) -> float:
    """Chance-corrected two-rater agreement.

    kappa = (p_o - p_e) / (1 - p_e), with p_e from the per-rater marginal
    category frequencies over co-rated items.  When p_e is 1 both raters
    used a single shared category, which forces p_o = 1; that degenerate
    case is reported as perfect agreement.
    """
    if len(ratings.raters) != 2:
        raise ValueError(f"cohens_kappa needs exactly 2 raters, got {len(ratings.raters)}")
    rater1, rater2 = ratings.raters
    pairs = [
        (ratings.values[(item, rater1)], ratings.values[(item, rater2)])
        for item in ratings.items
        if (item, rater1) in ratings.values and (item, rater2) in ratings.values
    ]
    if not pairs:
        raise NoCoRatedItemsError("the two raters share no rated items")
    n = len(pairs)
    p_observed = sum(v1 == v2 for v1, v2 in pairs) / n
    categories = sorted({v for pair in pairs for v in pair})
    p_expected = 0.0
    for category in categories:
        f1 = sum(v1 == category for v1, _ in pairs) / n
        f2 = sum(v2 == category for _, v2 in pairs) / n
        p_expected += f1 * f2
    if p_expected == 1.0:
        return 1.0
    return (p_observed - p_expected) / (1.0 - p_expected)


def fleiss_kappa(counts: Sequence[Sequence[int]], raters_per_item: int) -> float | None:
    """Multi-rater agreement from an item x category count matrix.

    Every row must sum to ``raters_per_item``.  Returns ``None`` when the
    chance agreement is 1 (a single category used everywhere), where the
    coefficient is undefined (0/0).
    """
    if raters_per_item < 2:
        raise ValueError("fleiss_kappa needs at least 2 raters per item")
    if not counts:
        raise ValueError("fleiss_kappa needs at least one item row")
    width = len(counts[0])
    for row_no, row in enumerate(counts):
        if len(row) != width:
            raise ValueError(f"row {row_no} has {len(row)} categories, expected {width}")
        if sum(row) != raters_per_item:
            raise ValueError(
                f"row {row_no} sums to {sum(row)}, expected raters_per_item={raters_per_item}"
            )
        if any(c < 0 for c in row):
            raise ValueError(f"row {row_no} has a negative count")
    n_items = len(counts)
    n = raters_per_item
    per_item = [
        (sum(c * c for c in row) - n) / (n * (n - 1))
        for row in counts
    ]
    p_bar = sum(per_item) / n_items
    proportions = [sum(row[j] for row in counts) / (n_items * n) for j in range(width)]
    p_expected = sum(p * p for p in proportions)
    if p_expected == 1.0:
        return None
    return (p_bar - p_expected) / (1.0 - p_expected)


def krippendorff_alpha(ratings: RatingsMatrix, metric: str = "nominal") -> float | None:
    """Krippendorff's alpha via the coincidence-matrix formulation.

    alpha = 1 - D_o / D_e with the nominal distance (0 for equal values,
    1 otherwise).  Items with fewer than two ratings are ignored; returns
    ``None`` when D_e is 0 (no variability among pairable values).
    """
    if metric != "nominal":
        raise ValueError(f"only the nominal metric is supported, got {metric!r}")
    units = ratings.co_rated_units()
    if not units:
        raise NoCoRatedItemsError("no item has two or more ratings")

    coincidence: dict[tuple[str, str], float] = {}
    for unit in units:
        m_u = len(unit)
        for i, v_i in enumerate(unit):
            for j, v_j in enumerate(unit):
                if i != j:
                    key = (v_i, v_j)
                    coincidence[key] = coincidence.get(key, 0.0) + 1.0 / (m_u - 1)

    categories = sorted({c for pair in coincidence for c in pair})
    totals = {c: sum(coincidence.get((c, k), 0.0) for k in categories) for c in categories}
    n = sum(totals.values())
    observed_disagreement = sum(
        coincidence.get((c, k), 0.0) for c in categories for k in categories if c != k
    )
    expected_disagreement = sum(
        totals[c] * totals[k] for c in categories for k in categories if c != k
    ) / (n - 1)
    if expected_disagreement == 0.0:
        return None
    return 1.0 - observed_disagreement / expected_disagreement


def kendall_tau(x: Sequence, y: Sequence) -> float | None:
    """Kendall's tau-b (tie corrected) between two equal-length ordinal sequences.

    Returns ``None`` when either sequence is entirely tied (denominator 0).
    """
    if len(x) != len(y):
        raise ValueError(f"sequences differ in length: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 2:
        raise ValueError("kendall_tau needs at least 2 observations")
    concordant = discordant = ties_x = ties_y = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = (x[i] > x[j]) - (x[i] < x[j])
            dy = (y[i] > y[j]) - (y[i] < y[j])
            if dx == 0:
                ties_x += 1
            if dy == 0:
                ties_y += 1
            if dx == 0 or dy == 0:
                continue
            if dx == dy:
                concordant += 1
            else:
                discordant += 1
    n0 = n * (n - 1) // 2
    denom_x = n0 - ties_x
    denom_y = n0 - ties_y
    if denom_x == 0 or denom_y == 0:
        return None
    return (concordant - discordant) / math.sqrt(denom_x * denom_y)


def contingency_from_cells(cells: Sequence[int]) -> ContingencyTable:
    """Build a table from four counts given row-major: a, b, c, d."""
    if len(cells) != 4:
        raise ValueError(f"expected exactly 4 cells, got {len(cells)}")
    return ContingencyTable(*cells)
