"""Simulate a multi-turn teacher-student dialogue offline with scripted
generators, showing response cleaning, degeneracy retries and the persisted
JSON layout. Swap in HttpGenerator to talk to a live chat-completions
endpoint.

Run:  python demos/03_teacher_student_simulation.py
"""

import json

from dialogkit.dialogue import (
    ScriptedGenerator,
    clean_response,
    is_degenerate,
    load_starters,
    render_meta_prompt,
    run_dialogue,
)

# cleaning strips role markers, caps punctuation runs, truncates at banned
# tokens, and is idempotent
print("cleaning:")
for raw in ("Teacher: Hello there!!", "hi!!!!!!", "ok <|endoftext|> junk"):
    print(f"  {raw!r:38} -> {clean_response(raw)!r}")

# the degeneracy filter rejects short, repetitive or echoed turns
print("\ndegeneracy checks:")
for text in ("yes", "a b c d a b c d a b c d", "a perfectly fine answer about it"):
    verdict = is_degenerate(text)
    print(f"  {text!r:38} -> degenerate={verdict.degenerate} ({verdict.reason})")

# scripted generators replay a fixture line per call; the second student
# line is degenerate, so the harness retries and logs the attempt
student = ScriptedGenerator(
    [
        "me like summer lots it is warm and bright",
        "ok",  # too short: triggers a retry
        "we swim in the sea and eat cold fruit all day",
        "my dog runs with me on the sand every morning",
    ],
    role="student",
    name="demo-student",
)
teacher = ScriptedGenerator(
    [
        "That sounds lovely, what do you like to do most on a warm day?",
        "A morning run on the sand sounds like a happy routine for you both.",
    ],
    role="teacher",
    name="demo-teacher",
)

starter = load_starters()[5]  # the weather starter
print(f"\nstarter: {starter!r}")
dialogue = run_dialogue(starter, student, teacher, n_turns=4, seed=7)
print(f"aborted={dialogue.aborted}; transcript:")
for turn in dialogue.turns:
    print(f"  [{turn.index}] {turn.role}: {turn.clean_text}")

print("\npersisted JSON metadata:")
print(json.dumps(dialogue.metadata, indent=2))

# the caregiver meta-prompt used to steer an instruction-following teacher
print("\ncaregiver meta-prompt for a 2-3 year old:")
print(render_meta_prompt("2-3 years"))
