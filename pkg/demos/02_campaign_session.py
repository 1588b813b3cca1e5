# coding: utf-8

# # Running an evaluation campaign
#
# A campaign pairs the two metrics with collected items and an evaluator
# roster.  Each assigned (item, evaluator) pair owns two traversals:
# the input metric is judged first, then the output metric.  Every
# judgment is appended to a journal from which the whole campaign state
# replays deterministically.

from hiereval import Evaluator, Item, create_campaign, load_bundled_tree, new_state, replay_records
from hiereval.campaign import record_to_line

# ## Campaign setup

items = [
    Item(id="item_01", input_text="How much earlier should I stop drinking coffee before bedtime?",
         output_text="about six hours before bedtime", explanation_text="Caffeine has a half-life..."),
    Item(id="item_02", input_text="Reminder to send the weekly grocery list",
         output_text="(no good span found)", explanation_text="(retrieved passage)"),
]
evaluators = [Evaluator(id="coach_01", display_name="Coach 01", token="demo-token")]

campaign = create_campaign(
    campaign_id="demo",
    input_tree=load_bundled_tree("question_tree"),
    output_tree=load_bundled_tree("answer_tree"),
    items=items,
    evaluators=evaluators,
    redundancy=1,      # one judge per item, the default
    shuffle_seed=42,   # presentation order is a seeded shuffle per evaluator
)
print("assignment:", dict(campaign.assignments))

# ## A live session, one judgment at a time

state = new_state(campaign)
item, tree_target, node = state.next_task("coach_01")
print("first task:", item.id, tree_target, node.id, node.answers)

# The first question is off-topic for this corpus: answering "no" at the
# root terminates the input traversal immediately with a bad composite.
traversal = state.submit_judgment("coach_01", item.id, tree_target, node.id, "no", elapsed_seconds=3.5)
print("status:", traversal.status, "| outcome:", traversal.outcome)

# The same item's output metric is judged next; the input side never
# resumes (no judgment below a failed node).
item2, target2, node2 = state.next_task("coach_01")
print("next task:", item2.id, target2, node2.id)

# ## The journal
#
# One canonical JSON line per judgment, strictly increasing sequence_no,
# append-only.  Numbers are written positionally (no exponents).

for record in state.records:
    print(record_to_line(record))

# ## Deterministic replay
#
# Replaying the journal reconstructs exactly the live state, after every
# prefix.  This is what makes the journal the single source of truth.

replayed = replay_records(campaign, state.records)
assert replayed.digest() == state.digest()
print("replay digest matches:", replayed.digest()[:16], "...")
