"""Small worked numbers: severity scores, segment counts, and relative flagging."""
import math

from chainscope.segments import Granularity, segment_bounds
from chainscope.suspects import ThresholdMode, flag_suspects
from chainscope.vulns import Severity, VulnFinding, load_vocabulary, normalize_finding, severity_score

H, M, L = Severity.HIGH, Severity.MEDIUM, Severity.LOW

vocab = load_vocabulary()
for tool, name in [("slither", "reentrancy-eth"), ("mythril", "Exception State"), ("oyente", "Transaction-Ordering Dependence (TOD)"), ("oyente", "made-up-check")]:
    try:
        f = normalize_finding(tool, name, vocab)
        e = vocab[f.vocab_name]
        print(f"{tool:>8} {name!r:<42} -> {f.vocab_name} CWE-{e.cwe} severity {f.severity.name}")
    except Exception as exc:
        print(f"{tool:>8} {name!r:<42} -> {type(exc).__name__}")

profile = [VulnFinding("ponzi", f"v{i}", "Slither", s) for i, s in enumerate([H, M, M, M, L, L])]
print(f"\nscore of 1 high, 3 medium, 2 low: {severity_score(profile).score:.6f} (11/6 = {11 / 6:.6f})")

last = 10_747_845
for g in Granularity:
    segs = segment_bounds(g, last)
    print(f"{g.value:>7}: {len(segs):5d} segments, last spans {segs[-1].start}..{segs[-1].end}")

vecs = [[1.0, 0.0]] + [[c, math.sqrt(1 - c * c)] for c in (0.74, 0.73)]
for mode in ThresholdMode:
    flags = flag_suspects(["bad", "a", "b"], vecs, [True, False, False], 1e-7, mode)
    print(f"{mode.name:<16} " + ", ".join(f"{f.address}={f.max_similarity:.2f}{'*' if f.flagged else ''}" for f in flags))
