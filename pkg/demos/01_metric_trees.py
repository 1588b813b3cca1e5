# coding: utf-8

# # Defining and querying hierarchical evaluation metrics
#
# A metric is a decision tree: each node judges one characteristic of an
# item, and each answer either routes to the next characteristic or stops
# the evaluation with a composite outcome (good/bad).  This walkthrough
# uses the two bundled metrics: one for system inputs (posed questions)
# and one for system outputs (retrieved answers).

from hiereval import (
    enumerate_paths,
    flat_judgment_count,
    load_bundled_tree,
    parse_tree,
    route,
    serialize_tree,
    validate_tree,
)

# ## Loading and inspecting the bundled question metric

question_tree = load_bundled_tree("question_tree")
print("tree:", question_tree.id, "| target:", question_tree.target, "| root:", question_tree.root)
for node_id, node in question_tree.nodes.items():
    print(f"  {node_id:<16} {node.prompt}  answers={node.answers}")

# A valid tree has no violations: every route lands somewhere, the graph
# is acyclic, every node is reachable, and every path ends at a terminal.
print("violations:", validate_tree(question_tree))

# ## Routing queries
#
# route() is a pure lookup: given a node and an answer, where does the
# evaluation go next?

print(route(question_tree, "relevant", "yes"))      # continues to 'factoid'
print(route(question_tree, "relevant", "no"))       # terminal bad, failed_at='relevant'
print(route(question_tree, "difficulty", "easy"))   # terminal good

# ## Every possible evaluation path
#
# The question metric has 8 root-to-terminal paths: one failure per gate
# characteristic plus the three difficulty levels of a fully good question.

for answers, outcome in enumerate_paths(question_tree):
    print(f"  {'-'.join(answers):<28} -> {outcome.label}"
          + (f" (failed at {outcome.failed_at})" if outcome.label == "bad" else ""))

# Early termination is the point: a conventional flat design would judge
# every characteristic for every item.

print("judgments per item under a flat design:", flat_judgment_count(question_tree))

# ## The answer metric has two branches
#
# When the short answer is unclear (or clear but not relevant), evaluation
# moves to the explanation passage instead of stopping.

answer_tree = load_bundled_tree("answer_tree")
print("answer tree paths:", len(enumerate_paths(answer_tree)))
print("explanation-branch nodes:",
      [n for n, node in answer_tree.nodes.items() if node.uses_explanation])

# ## Round-tripping the file format
#
# Trees are stored as JSON documents; canonical serialization sorts node
# ids so re-serializing a parsed tree is byte-stable.

document = serialize_tree(question_tree)
assert parse_tree(document) == question_tree
assert serialize_tree(parse_tree(document)) == document
print("canonical document bytes:", len(document))
