"""A tour of the individual complexity metrics: lexical richness, discourse
connectives, syntactic shape, cohesion, and the rated-lexicon means.

Run:  python demos/02_complexity_metrics.py
"""

from dialogkit import load_default_bundle, profile
from dialogkit.metrics import (
    adjacent_overlap,
    cohesion_composite,
    count_connectives,
    mattr,
    mean_clauses_per_sentence,
    mean_sentence_length,
    rated_mean,
    ttr,
    verb_tense_repetition,
)
from dialogkit.textcore import Pos, analyze, lemmatize_tokens, pos_tag, tokenize

bundle = load_default_bundle()

TEXT = (
    "The cat sat on the warm chair. The cat watched birds because they sang. "
    "However, the dog slept and also dreamed about food. The kids laughed too."
)

tokens = lemmatize_tokens(pos_tag(tokenize(TEXT)))
sentences = analyze(TEXT)

print("lexical richness")
print(f"  TTR        {ttr(tokens):.3f}")
print(f"  noun TTR   {ttr(tokens, Pos.NOUN):.3f}")
print(f"  MATTR(10)  {mattr(tokens, window=10):.3f}   (sliding window tames text length)")

print("\ndiscourse connectives")
counts = count_connectives(tokens, bundle.connectives)
print(f"  total {counts.total}: additive {counts.additive}, "
      f"adversative {counts.adversative}, causal {counts.causal}")

print("\nsyntactic shape")
print(f"  tokens/sentence  {mean_sentence_length(sentences):.2f}")
print(f"  clauses/sentence {mean_clauses_per_sentence(sentences):.2f}")

print("\ncohesion between adjacent sentences")
print(f"  content-word overlap {adjacent_overlap(sentences, 'content'):.3f}")
print(f"  verb overlap         {adjacent_overlap(sentences, 'verb'):.3f}")
print(f"  tense repetition     {verb_tense_repetition(sentences):.3f}")

print("\nrated-lexicon means (unknown words are skipped, never imputed)")
for name in ("aoa", "cefr", "familiarity", "polysemy"):
    mean, coverage = rated_mean(tokens, bundle.rated(name if name != "familiarity" else name))
    print(f"  {name:<12} {mean:6.2f}   coverage {coverage:.0%}")

print("\none-call profile and the cohesion composite")
prof = profile(TEXT, bundle)
composite = cohesion_composite(prof)
print(f"  profile length {prof.length} tokens, concept density {prof.cd:.2f}")
print(f"  cohesion composite {composite.value:.3f} "
      f"over {len(composite.components)} components (complete={composite.complete})")
