"""Rerank generator candidates toward a target proficiency level: the score
combines the generator's own ranking with the distance between each
candidate's predicted level and the target.

Run:  python demos/05_level_targeted_reranking.py
"""

from dialogkit import load_default_bundle
from dialogkit.alignment import Candidate, predict_cefr_level, rerank
from dialogkit.lexicons import CefrLevel

bundle = load_default_bundle()

CANDIDATES = [
    "The dialectic of hegemony pervades contemporary discourse.",
    "We can talk about your day and what made you happy.",
    "Mom and dad play with the cat.",
    "The methodological synthesis corroborates the hypothesis.",
    "Do you want to tell me a story about your dog?",
]

print("lexicon-mean level estimates:")
predictions = []
for text in CANDIDATES:
    pred = predict_cefr_level(text, bundle.cefr)
    predictions.append(pred)
    print(f"  {pred.level.name} (coverage {pred.coverage:.0%})  {text}")

candidates = [
    Candidate(text=text, original_rank=i, predicted_level=pred.level)
    for i, (text, pred) in enumerate(zip(CANDIDATES, predictions))
]

for target in (CefrLevel.A1, CefrLevel.C1):
    ranked = rerank(candidates, target)
    print(f"\ntarget {target.name}: best candidate is "
          f"(rank {ranked[0].original_rank}, score {ranked[0].score:.2f})")
    print(f"  {ranked[0].text}")

# with beta=0 the level penalty vanishes and the original order survives
ranked = rerank(candidates, CefrLevel.C2, beta=0.0)
print("\nbeta=0 keeps the generator's order:",
      [c.original_rank for c in ranked])
