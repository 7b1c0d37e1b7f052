# SPDX-License-Identifier: Apache-2.0
"""Independent reference for the lexical fixture values frozen in test_metrics.cpp.

Run: python3 tests/oracles/lexical_oracle.py
"""
import math
import re
from collections import Counter
from fractions import Fraction


def tok(s):
    return re.findall(r"[0-9a-z\x80-￿]+", s.lower())


def grams(t, n):
    return Counter(tuple(t[i:i + n]) for i in range(len(t) - n + 1))


def bleu(c, r, max_n):
    c, r = tok(c), tok(r)
    if not c:
        return 0.0
    logs = []
    for n in range(1, max_n + 1):
        cg, rg = grams(c, n), grams(r, n)
        m = sum((cg & rg).values())
        total = max(len(c) - n + 1, 0)
        if n == 1:
            if m == 0:
                return 0.0
            logs.append(math.log(m / total))
        else:
            logs.append(math.log((m + 1) / (total + 1)))
    bp = math.exp(min(0.0, 1 - len(r) / len(c)))
    return bp * math.exp(sum(logs) / max_n)


def prf(o, ct, rt):
    p = Fraction(o, ct) if ct else Fraction(0)
    r = Fraction(o, rt) if rt else Fraction(0)
    f = 2 * p * r / (p + r) if p + r else Fraction(0)
    return float(p), float(r), float(f)


def rouge2(c, r):
    c, r = tok(c), tok(r)
    return prf(sum((grams(c, 2) & grams(r, 2)).values()), max(len(c) - 1, 0), max(len(r) - 1, 0))


def lcs(a, b):
    best = {}
    for i in range(len(a) + 1):
        for j in range(len(b) + 1):
            if i == 0 or j == 0:
                best[i, j] = 0
            elif a[i - 1] == b[j - 1]:
                best[i, j] = best[i - 1, j - 1] + 1
            else:
                best[i, j] = max(best[i - 1, j], best[i, j - 1])
    return best[len(a), len(b)]


def rougeL(c, r):
    c, r = tok(c), tok(r)
    return prf(lcs(c, r), len(c), len(r))


def meteor_basic(c, r):
    c, r = tok(c), tok(r)
    # Greedy left-to-right alignment: extend the running chunk when the next
    # reference word matches, else take the leftmost unused occurrence.
    align = []  # (cand index, ref index)
    taken = set()
    for i, w in enumerate(c):
        j = None
        if align and align[-1][0] == i - 1:
            k = align[-1][1] + 1
            if k < len(r) and k not in taken and r[k] == w:
                j = k
        if j is None:
            j = next((k for k, x in enumerate(r) if x == w and k not in taken), None)
        if j is not None:
            taken.add(j)
            align.append((i, j))
    m = len(align)
    if m == 0:
        return 0.0
    chunks = 1 + sum(1 for a, b in zip(align, align[1:]) if not (b[0] == a[0] + 1 and b[1] == a[1] + 1))
    p, rc = m / len(c), m / len(r)
    f = 10 * p * rc / (rc + 9 * p)
    return f * (1 - 0.5 * (chunks / m) ** 3)


def f1(c, r):
    c, r = Counter(tok(c)), Counter(tok(r))
    o = sum((c & r).values())
    if o == 0:
        return 0.0
    p, rc = o / sum(c.values()), o / sum(r.values())
    return 2 * p * rc / (p + rc)


FIXTURES = [
    ("bleu1", lambda: bleu("the cat sat", "the cat sat down", 1)),
    ("bleu4", lambda: bleu("the cat sat on the mat", "the cat is on the mat", 4)),
    ("bleu2", lambda: bleu("a fight breaks out near the door", "a fight starts near the door", 2)),
    ("rouge2_f1", lambda: rouge2("a b c", "a b d")[2]),
    ("rouge2_p", lambda: rouge2("the man runs across the road", "a man runs across a busy road")[0]),
    ("rougeL_f1", lambda: rougeL("the man runs across the road", "a man runs across a busy road")[2]),
    ("rougeL_r", lambda: rougeL("police arrive after the crash", "after the crash police arrive")[1]),
    ("meteor_identical", lambda: meteor_basic("a b", "a b")),
    ("meteor_reordered", lambda: meteor_basic("the cat sat on the mat", "on the mat the cat sat")),
    ("meteor_partial", lambda: meteor_basic("a person falls down the stairs", "someone falls down stairs")),
    ("token_f1", lambda: f1("a fight breaks out", "a fight starts")),
]

if __name__ == "__main__":
    for name, fn in FIXTURES:
        print(f"{name:18s} {fn():.12f}")
