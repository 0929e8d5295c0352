"""Segment a raw two-speaker transcript into turns, sample fixed-length
dialogues, and attach a full complexity profile to each one.

Run:  python demos/01_segment_and_profile.py
"""

import json

from dialogkit import load_default_bundle, parse_transcript, segment_turns
from dialogkit.ingest import dialogue_to_dict, iter_dialogues
from dialogkit.metrics import dialogue_meta

TRANSCRIPT = """\
A\twell, the weather was {F uh} really nice today.
A\tso we walked to the park together.
B\tthat sounds good. did the kids play games there?
A\tyes, they played for hours because the sun was warm.
B\twe stayed home and cooked a big dinner instead.
A\tnice. what did you make?
B\twe made fish and a little cake. the cake was too sweet.
A\tha, my kids love sweet cake and cold juice.
B\tmine too. they always want more and more.
A\tnext weekend we should visit the beach together.
B\tgood idea. i hope the weather stays warm.
A\tme too. see you then.
"""

# 1. parse: speaker-tagged utterances; the {F uh} disfluency markup is
#    stripped by the default pre-clean pass
utterances = parse_transcript(TRANSCRIPT)
print(f"parsed {len(utterances)} utterances")

# 2. merge consecutive same-speaker utterances into alternating turns
turns = segment_turns(utterances)
print(f"segmented into {len(turns)} turns:")
for turn in turns[:4]:
    print(f"  {turn.speaker}: {turn.utterance[:60]}")

# 3. sample dialogues with (up to) three turns per speaker, streaming
#    across the whole transcript; the remainder is kept and flagged short
dialogues = list(iter_dialogues(turns, per_speaker=3, source_stem="demo"))
print(f"\nsampled {len(dialogues)} dialogue(s): "
      + ", ".join(f"{d.dialog_id}({len(d.turns)} turns, short={d.short})" for d in dialogues))

# 4. profile each dialogue; the meta block mirrors the alignment-dataset
#    JSON layout (per-dialogue stats plus per-segment type-token records)
bundle = load_default_bundle()
for dialogue in dialogues:
    dialogue.meta = dialogue_meta(dialogue, bundle)

first = dialogues[0]
print(f"\n{first.dialog_id}: length={first.meta['length']} tokens, "
      f"noun TTR={first.meta['ttr']['noun']:.3f}, "
      f"{len(first.meta['type_token_ratios'])} segment records")
print("\nfull JSON record:")
print(json.dumps(dialogue_to_dict(first), indent=2)[:800], "...")
