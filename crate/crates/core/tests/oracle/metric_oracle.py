"""Freeze reference BLEU / ROUGE / iBLEU values for tests/metric_oracle.rs.

BLEU comes from sacrebleu (no tokenization, no smoothing) and is checked
against a direct count-based computation; ROUGE-n F1 comes from rouge-score with a
whitespace tokenizer and is averaged per pair. Run from the crate root:

    python3 tests/oracle/metric_oracle.py > tests/data/metric_cases.json
"""
import json
import math
import sys
import warnings

import sacrebleu
from collections import Counter
from rouge_score import rouge_scorer

warnings.filterwarnings("ignore")


class Whitespace:
    def tokenize(self, text):
        return text.split()


def sb_bleu(cands, refs, n):
    metric = sacrebleu.metrics.BLEU(tokenize="none", smooth_method="none", max_ngram_order=n, force=True)
    return metric.corpus_score(cands, [refs]).score


def grams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def direct_bleu(cands, refs, n):
    matches = [0] * n
    totals = [0] * n
    c_len = r_len = 0
    for c, r in zip(cands, refs):
        c, r = c.split(), r.split()
        c_len += len(c)
        r_len += len(r)
        for k in range(1, n + 1):
            cg, rg = grams(c, k), grams(r, k)
            matches[k - 1] += sum(min(v, rg[g]) for g, v in cg.items())
            totals[k - 1] += max(len(c) - k + 1, 0)
    if min(matches) == 0:
        return 0.0
    log_p = sum(math.log(m / t) for m, t in zip(matches, totals)) / n
    bp = 1.0 if c_len >= r_len else math.exp(1.0 - r_len / c_len)
    return 100.0 * bp * math.exp(log_p)


def bleu(cands, refs, n):
    a = sb_bleu(cands, refs, n)
    b = direct_bleu(cands, refs, n)
    assert math.isclose(a, b, abs_tol=1e-9), (cands, refs, n, a, b)
    return a


def rouge(cands, refs, n):
    scorer = rouge_scorer.RougeScorer([f"rouge{n}"], tokenizer=Whitespace())
    scores = [scorer.score(r, c)[f"rouge{n}"].fmeasure for c, r in zip(cands, refs)]
    return 100.0 * sum(scores) / len(scores)


CASES = [
    ("identical", ["the cat sat on the mat"], ["the cat sat on the mat"], None, 0.9),
    ("disjoint", ["a b c d"], ["e f g h"], None, 0.9),
    ("one_word_swap", ["the cat sat on a mat"], ["the cat sat on the mat"], None, 0.9),
    ("brevity_penalty", ["the cat sat"], ["the cat sat on the mat"], None, 0.9),
    ("longer_candidate", ["the cat sat on the mat today"], ["the cat sat on the mat"], None, 0.9),
    ("clipped_repeats", ["the the the the"], ["the cat the mat"], None, 0.9),
    ("no_bigram_overlap", ["mat the on sat cat"], ["cat sat on the mat"], None, 0.9),
    ("two_pairs", ["a quick brown fox", "jumps over the dog"], ["the quick brown fox", "jumped over the lazy dog"], None, 0.9),
    ("three_pairs_mixed_length", ["x y z", "how are you doing today", "i like green tea"],
     ["x y w", "how are you today", "i really like green tea"], None, 0.8),
    ("short_candidate_below_order", ["hello", "what a lovely day it is"], ["hello there", "what a lovely day it was"], None, 0.9),
    ("alpha_one", ["the cat sat on a mat"], ["the cat sat on the mat"], ["a cat was on the mat"], 1.0),
    ("alpha_zero", ["the cat sat on a mat"], ["the cat sat on the mat"], ["a cat was on the mat"], 0.0),
    ("alpha_half", ["the cat sat on a mat"], ["the cat sat on the mat"], ["a cat was on the mat"], 0.5),
    ("copy_input", ["where can i buy cheap flights online"], ["where do i find low cost flights online"],
     ["where can i buy cheap flights online"], 0.9),
    ("copy_input_corpus", ["how do i learn to cook rice", "what is the best way to lose weight"],
     ["how can i cook rice well", "what is the fastest way to lose weight"],
     ["how do i learn to cook rice", "what is the best way to lose weight"], 0.9),
    ("paraphrase_vs_source", ["how can i improve my english"], ["how do i get better at english"],
     ["how can i get better at english"], 0.9),
    ("repeated_ngrams_reference", ["a a b b a b"], ["a b a b a b"], None, 0.9),
    ("equal_length_partial", ["one two three four five six"], ["one two three seven eight nine"], None, 0.9),
    ("many_pairs", [
        "is it safe to travel alone",
        "what are good books to read",
        "how to make money fast",
        "why is the sky blue",
        "best laptop for programming",
    ], [
        "is it safe to travel by myself",
        "which books are good to read",
        "how can i make money quickly",
        "why does the sky look blue",
        "what is the best laptop for coding",
    ], None, 0.9),
    ("unigram_only_overlap", ["cat dog bird fish"], ["fish bird dog cat"], None, 0.9),
    ("single_shared_bigram", ["red apple pie"], ["green apple pie"], None, 0.9),
    ("source_equals_reference", ["the cat is here"], ["the cat is there"], ["the cat is there"], 0.9),
]


def main():
    out = []
    for name, cands, refs, srcs, alpha in CASES:
        srcs = srcs or refs
        b4_src = bleu(cands, srcs, 4)
        b4 = bleu(cands, refs, 4)
        out.append({
            "name": name,
            "candidates": cands,
            "references": refs,
            "sources": srcs,
            "alpha": alpha,
            "bleu2": bleu(cands, refs, 2),
            "bleu4": b4,
            "rouge1": rouge(cands, refs, 1),
            "rouge2": rouge(cands, refs, 2),
            "ibleu": alpha * b4 - (1.0 - alpha) * b4_src,
        })
    json.dump({"sacrebleu": sacrebleu.__version__, "cases": out}, sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
