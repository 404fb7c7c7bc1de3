"""Generates the 200-sample golden fixture and its frozen expected mixture.

The expected output is computed by the independent reference in
mixdown_ref.py, never by the C++ binary. Re-running this script rewrites
tests/fixtures/golden/ (or the directory given as the first argument) from
scratch; the result is deterministic.
"""

import hashlib
import json
import math
import random
import re
import sys
from pathlib import Path

import mixdown_ref as ref

ROOT = Path(__file__).resolve().parents[2]
OUT = ROOT / "tests" / "fixtures" / "golden"

CORPORA = ROOT / "data" / "langid"
EN_SENTENCES = [x.strip() for x in re.split(r"(?<=[.!?])\s+", (CORPORA / "en.txt").read_text(encoding="utf-8"))
                if x.strip()]
ZH_SENTENCES = [x.strip() for x in re.split(r"(?<=[。！？])", (CORPORA / "zh.txt").read_text(encoding="utf-8"))
                if x.strip()]
ODD_CHARS = list("ξψωλμνπρστφχ")

RECIPE = """# Golden fixture recipe: thresholds sized for the built-in mock scorer.
length_min = 20
length_max = 400
lang_threshold = 0.2
lang_allowed = ["en", "zh"]
banned_words = ["forbidden"]
ppl_min = {ppl_min}
ppl_max = {ppl_max}
ifd_min = {ifd_min}
ifd_max = {ifd_max}
vote_max_deviation = {vote}
quota_target = {quota}
token_budget = {budget}
kcenter_reductions = [{{ lang = "zh", target = {kcenter} }}]

[[sources]]
name = "alpha"
path = "alpha.jsonl"

[[sources]]
name = "beta"
path = "beta.jsonl"

[[sources]]
name = "gamma"
path = "gamma.jsonl"

[scorer_base]
url = "mock"
batch_size = 4
max_in_flight = 4

[scorer_tuned]
url = "mock:tuned"
batch_size = 4
max_in_flight = 4

[embedder]
url = "mock"
dimension = 64
"""

THRESHOLDS = dict(ppl_min=3.2, ppl_max=6.4, ifd_min=0.75, ifd_max=1.3, vote=0.3, quota=90, budget=5000, kcenter=20)


def en_words(rng, lo, hi):
    words = rng.choice(EN_SENTENCES).split()
    n = rng.randint(lo, hi)
    start = rng.randint(0, max(0, len(words) - n))
    return " ".join(words[start:start + n])


def zh_chars(rng, lo, hi):
    sent = rng.choice(ZH_SENTENCES)
    n = rng.randint(lo, hi)
    start = rng.randint(0, max(0, len(sent) - n))
    return sent[start:start + n]


def make_sample(rng, kind):
    if kind == "en":
        rec = {"instruction": en_words(rng, 4, 24),
               "input": en_words(rng, 2, 8) if rng.random() < 0.4 else "",
               "output": en_words(rng, 1, 2)[: rng.randint(2, 7)]}
    elif kind == "zh":
        rec = {"instruction": zh_chars(rng, 8, 40),
               "input": zh_chars(rng, 3, 10) if rng.random() < 0.3 else "",
               "output": zh_chars(rng, 2, 6)}
    elif kind == "odd":
        rec = {"instruction": "".join(rng.choice(ODD_CHARS) for _ in range(rng.randint(20, 40))),
               "input": "", "output": "".join(rng.choice(ODD_CHARS) for _ in range(4))}
    elif kind == "short":
        rec = {"instruction": "Hi", "input": "", "output": "ok"}
    elif kind == "long":
        rec = {"instruction": " ".join(en_words(rng, 30, 40) for _ in range(4)), "input": "", "output": "done"}
    else:
        rec = {"instruction": "Please write the forbidden " + en_words(rng, 4, 8), "input": "", "output": "no"}
    return rec


def generate():
    rng = random.Random(20240611)
    plan = {"alpha": (70, ["en"] * 8 + ["zh"] * 2 + ["short", "odd", "banned"]),
            "beta": (70, ["zh"] * 8 + ["en"] * 2 + ["long", "odd"]),
            "gamma": (60, ["en"] * 5 + ["zh"] * 5 + ["short", "banned"])}
    sources = {}
    seen = []
    for name, (count, kinds) in plan.items():
        lines = []
        while len(lines) < count:
            r = rng.random()
            if r < 0.10 and seen:
                lines.append(json.dumps(rng.choice(seen), ensure_ascii=False))
            elif r < 0.13:
                lines.append(rng.choice(['{"instruction": "broken', '[1, 2, 3]', '{"instruction": "x", "input": ""}',
                                         '{"instruction": "no answer", "output": ""}']))
            else:
                rec = make_sample(rng, rng.choice(kinds))
                seen.append(rec)
                lines.append(json.dumps(rec, ensure_ascii=False))
        sources[name] = lines
    return sources


# ---- reference pipeline ------------------------------------------------------

def parse(line):
    try:
        j = json.loads(line)
    except ValueError:
        return "parse_error", None
    if not isinstance(j, dict):
        return "schema_error", None
    ins, out, inp = j.get("instruction"), j.get("output"), j.get("input")
    if not isinstance(ins, str) or not isinstance(out, str) or out == "":
        return "schema_error", None
    if inp is not None and not isinstance(inp, str):
        return "schema_error", None
    return "ok", {"instruction": ins, "input": inp or "", "output": out}


def run_reference(sources, t):
    profiles = {code: ref.train_profile((ROOT / "data" / "langid" / f"{code}.txt").read_text(encoding="utf-8"))
                for code in ("en", "zh")}
    recs = []
    for name in ("alpha", "beta", "gamma"):
        for line in sources[name]:
            status, s = parse(line)
            if status == "ok":
                s["id"] = len(recs)
                s["source"] = name
                recs.append(s)

    seen, deduped = set(), []
    for r in recs:
        h = hashlib.md5(ref.rendered_text(r).encode("utf-8")).hexdigest()
        if h not in seen:
            seen.add(h)
            deduped.append(r)

    low = []
    for r in deduped:
        text = ref.rendered_text(r)
        r["text_length"] = len(text)
        r["lang"] = ref.score_languages(text, profiles)
        if not 20 <= r["text_length"] <= 400:
            continue
        if not any(r["lang"][c] > 0.2 for c in ("en", "zh")):
            continue
        if "forbidden" in text.lower():
            continue
        low.append(r)

    scored = []
    for r in low:
        r["ppl"] = ref.ppl(ref.rendered_text(r))
        r["ifd_base"] = ref.ifd(r)
        r["ifd_tuned"] = ref.ifd(r, "tuned")
        r["token_count"] = len(ref.rendered_text(r))
        scored.append(r)

    # Keep every score clear of its threshold so the frozen answer cannot hinge
    # on last-bit rounding differences.
    for r in scored:
        for v, edges in ((r["ppl"], (t["ppl_min"], t["ppl_max"])), (r["ifd_base"], (t["ifd_min"], t["ifd_max"])),
                         (abs(r["ifd_tuned"] - r["ifd_base"]) / r["ifd_base"], (t["vote"],))):
            assert all(abs(v - e) > 1e-9 for e in edges), (r["id"], v)
    for r in deduped:
        assert all(abs(v - 0.2) > 1e-9 for v in r["lang"].values()), r["id"]

    high = [r for r in scored
            if t["ppl_min"] <= r["ppl"] <= t["ppl_max"]
            and t["ifd_min"] <= r["ifd_base"] <= t["ifd_max"]
            and abs(r["ifd_tuned"] - r["ifd_base"]) / r["ifd_base"] <= t["vote"]]

    by_src = {}
    for r in high:
        by_src.setdefault(r["source"], []).append(r)
    means = {}
    for s in sorted(by_src):
        acc = 0.0
        for r in by_src[s]:
            acc += r["ifd_base"]
        means[s] = acc / len(by_src[s])
    total = 0.0
    for s in sorted(means):
        total += means[s]
    chosen = []
    for s in sorted(by_src):
        share = t["quota"] * means[s] / total
        assert abs(share - round(share)) > 1e-9, s
        q = min(int(math.floor(share)), len(by_src[s]))
        ranked = sorted(by_src[s], key=lambda r: (-r["ifd_base"], r["id"]))
        chosen.extend(ranked[:q])
    chosen.sort(key=lambda r: r["id"])

    def top_lang(r):
        best, best_code = -1.0, None
        for code in sorted(r["lang"]):
            if r["lang"][code] > best:
                best, best_code = r["lang"][code], code
        return best_code

    zh = [r for r in chosen if top_lang(r) == "zh"]
    if len(zh) > t["kcenter"]:
        pts = [ref.embed(ref.rendered_text(r), 64) for r in zh]
        keep_ids = {zh[i]["id"] for i in ref.kcenter_greedy(pts, t["kcenter"])}
        chosen = [r for r in chosen if top_lang(r) != "zh" or r["id"] in keep_ids]

    total_tokens = sum(r["token_count"] for r in chosen)
    evicted = set()
    for r in sorted(chosen, key=lambda r: (r["ifd_base"], -r["id"])):
        if total_tokens <= t["budget"]:
            break
        total_tokens -= r["token_count"]
        evicted.add(r["id"])
    chosen = [r for r in chosen if r["id"] not in evicted]
    chosen.sort(key=lambda r: (-r["ppl"], r["id"]))
    stats = dict(ingested=len(recs), deduped=len(deduped), low=len(low), high=len(high), zh=len(zh),
                 evicted=len(evicted), final=len(chosen), tokens=total_tokens)
    return chosen, stats


def main():
    sources = generate()
    n_lines = sum(len(v) for v in sources.values())
    assert n_lines == 200, n_lines
    chosen, stats = run_reference(sources, THRESHOLDS)
    print(json.dumps(stats), file=sys.stderr)
    if "--dry-run" in sys.argv:
        return
    args = [a for a in sys.argv[1:] if not a.startswith("--")]
    out = Path(args[0]) if args else OUT
    out.mkdir(parents=True, exist_ok=True)
    for name, lines in sources.items():
        (out / f"{name}.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (out / "recipe.toml").write_text(RECIPE.format(**THRESHOLDS), encoding="utf-8")
    with open(out / "expected.jsonl", "w", encoding="utf-8") as f, \
            open(out / "expected.metrics.jsonl", "w", encoding="utf-8") as m:
        for r in chosen:
            f.write(json.dumps({k: r[k] for k in ("instruction", "input", "output")},
                               ensure_ascii=False, separators=(",", ":")) + "\n")
            m.write(json.dumps({"id": r["id"], "source": r["source"], "text_length": r["text_length"],
                                "lang": r["lang"], "ppl": r["ppl"], "ifd_base": r["ifd_base"],
                                "ifd_tuned": r["ifd_tuned"], "token_count": r["token_count"]},
                               ensure_ascii=False, separators=(",", ":")) + "\n")


if __name__ == "__main__":
    main()
