"""Build preference pairs (teacher chosen over student), filter out copies
and degenerate rewrites, slice them into disjoint training iterations, and
evaluate odds-ratio / contrastive preference objectives on scored pairs.

Run:  python demos/04_preference_pairs.py
"""

from dialogkit.alignment import (
    PreferencePair,
    ScoredSequence,
    build_pair,
    cpo_terms,
    extract_continuation_prompt,
    orpo_terms,
    reward_accuracy,
    slice_iterations,
)
from dialogkit.ingest import Dialogue, Turn

# one corpus round becomes a continuation prompt ending in the next-speaker
# prefix (round-robin back to the round's first speaker)
dialogue = Dialogue("demo", [
    Turn("A", "did you see the game last night", 0),
    Turn("B", "no we cooked dinner and talked for hours", 1),
    Turn("A", "you missed a great one", 2),
    Turn("B", "there is always another game", 3),
])
prompt = extract_continuation_prompt(dialogue, 0)
print("continuation prompt:")
print("  " + prompt.replace("\n", "\n  "))

# the teacher's rewrite is `chosen`, the student draft `rejected`
student_text = "game good we watch it more game yes"
teacher_text = "I did, the ending was close and the crowd loved every minute."
result = build_pair(prompt, student_text, teacher_text)
print(f"\nfilters: {dict(result.filters)}")

# a copying teacher is rejected with the rule named
copied = build_pair(prompt, student_text, student_text)
print(f"copy attempt -> rejected by {copied.failed_rules}")

# accepted pairs are shuffled (seeded) and dealt into disjoint slices
pairs = [PreferencePair(prompt=f"p{i}", chosen=f"good answer {i}", rejected=f"draft {i}")
         for i in range(7)]
slices = slice_iterations(pairs, k=5, seed=0)
print(f"\n7 pairs over 5 slices -> sizes {[len(s) for s in slices]}")

# preference-objective evaluation over token logprobs (no training here,
# just the reward algebra)
chosen = ScoredSequence((-0.2, -0.1, -0.3))
rejected = ScoredSequence((-1.1, -0.8, -1.4))
orpo = orpo_terms(chosen, rejected)
cpo = cpo_terms(chosen, rejected, beta=0.1)
print("\nodds-ratio objective:")
print(f"  log odds ratio {orpo.log_odds_ratio:.4f}, loss {orpo.or_loss:.4f}, "
      f"margin {orpo.margin:.4f}")
print("contrastive objective:")
print(f"  preference loss {cpo.preference_loss:.4f}, nll {cpo.nll:.4f}, "
      f"margin {cpo.margin:.4f}")
print(f"reward accuracy over this pair set: "
      f"{reward_accuracy([orpo.margin, -0.05, 0.0]):.3f}")
