# coding: utf-8

# # Reports: funnels, time savings, and agreement statistics
#
# All reports are pure functions of (campaign, journal).  Here a scripted
# random policy stands in for human evaluators so there is something to
# report on.

import random

from hiereval import (
    Evaluator,
    Item,
    RatingsMatrix,
    chi_square_2x2,
    chi_square_sf,
    cohens_kappa,
    create_campaign,
    fleiss_kappa,
    funnel,
    kendall_tau,
    krippendorff_alpha,
    load_bundled_tree,
    percentage_agreement,
    time_savings,
)
from hiereval.scoring import composite_cross_table, render_report, render_report_text
from hiereval.simulate import run_policy

# ## Simulate a 40-item campaign with two judges per item

campaign = create_campaign(
    campaign_id="demo-reports",
    input_tree=load_bundled_tree("question_tree"),
    output_tree=load_bundled_tree("answer_tree"),
    items=[Item(id=f"item_{k:02d}", input_text=f"question {k}", output_text=f"answer {k}",
                explanation_text=f"passage {k}") for k in range(1, 41)],
    evaluators=[Evaluator(id=f"coach_{j}", display_name=f"Coach {j}", token=f"tok-{j}") for j in (1, 2, 3)],
    redundancy=2,
    shuffle_seed=7,
)
state = run_policy(campaign, "seeded_random", seed=2024)
print(f"{len(state.records)} judgments recorded\n")

# ## The evaluation funnel
#
# presented = how many traversals reached the node; every row conserves
# flow (presented = stopped + continued = sum of answer counts).

print(render_report_text(render_report(campaign, state.records, "funnel_input")), "\n")

# ## Early termination pays off
#
# The flat baseline judges every characteristic of every assigned item.

savings = time_savings(campaign, state.records, "input")
print(f"hierarchical={savings.hierarchical_judgments}  flat={savings.flat_judgments}  "
      f"saved={savings.saved} ({savings.saved_fraction:.1%})\n")

# ## Input/output quality association
#
# The 2x2 cross table pairs each traversal's input and output composites;
# the chi-square test asks whether output quality depends on input quality.

table = composite_cross_table(campaign, state.records)
result = chi_square_2x2(table)
print(f"table a={table.a} b={table.b} c={table.c} d={table.d}")
print(f"chi-square={result.statistic:.3f}  p={result.p_value:.4f}")
print("tail probabilities are exact:", chi_square_sf(3.841, 1), "\n")

# ## Inter-annotator agreement
#
# With redundancy 2 every item has two independent judgments, so agreement
# coefficients are meaningful.  Build a ratings matrix of input composites
# per (item, evaluator) and compare the judges.

from hiereval import composite_outcomes

outcomes = composite_outcomes(campaign, state.records)
by_item: dict[str, dict[str, str]] = {}
for (item_id, evaluator_id, target), outcome in outcomes.items():
    if target == "input":
        by_item.setdefault(item_id, {})[evaluator_id] = outcome.label

raters = sorted({r for ratings in by_item.values() for r in ratings})
matrix = RatingsMatrix(
    items=sorted(by_item),
    raters=raters,
    values={(item, rater): label for item, ratings in by_item.items() for rater, label in ratings.items()},
)
print("percentage agreement:", round(percentage_agreement(matrix), 3))
print("krippendorff alpha:  ", round(krippendorff_alpha(matrix), 3))

# Cohen's kappa needs exactly two raters; restrict to items the first two
# judges share.

pair = RatingsMatrix(
    items=matrix.items,
    raters=raters[:2],
    values={(i, r): v for (i, r), v in matrix.values.items() if r in raters[:2]},
)
print("cohen's kappa:       ", round(cohens_kappa(pair), 3))

# Fleiss' kappa works from an item x category count matrix; Kendall's
# tau-b compares two ordinal sequences (here: synthetic difficulty marks).

counts = [[3, 0], [2, 1], [0, 3], [3, 0]]
print("fleiss kappa:        ", round(fleiss_kappa(counts, raters_per_item=3), 3))
print("kendall tau-b:       ", kendall_tau([1, 2, 3, 3], [1, 3, 2, 3]))
