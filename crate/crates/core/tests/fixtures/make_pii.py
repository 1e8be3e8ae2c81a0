"""Regenerate pii_cases.jsonl: 50 synthetic PII strings with expected scrubbed text."""
import json
import random
import re

PATTERNS = [
    ("email", "[EMAIL]", r"[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}"),
    ("phone", "[PHONE]", r"(\+?\d{1,3}[\s.-]?)?(\(?\d{3}\)?[\s.-]?)\d{3}[\s.-]?\d{4}"),
    ("handle", "[HANDLE]", r"@[A-Za-z0-9_]{2,15}"),
]


def scrub(text):
    counts = {}
    while True:
        before = text
        for name, ph, pat in PATTERNS:
            text, n = re.subn(pat, ph, text)
            if n:
                counts[name] = counts.get(name, 0) + n
        if text == before:
            return text, counts


rng = random.Random(20241016)
names = ["maya", "leo", "sam.lee", "r_kumar", "anna-b", "t.o.m", "kid_reporter", "jo99"]
domains = ["example.com", "school.org", "mail.co.uk", "kids-news.net", "story.io"]
frames = [
    "Write to {} for more stories.",
    "My teacher said to contact {} after class.",
    "You can reach the club at {} on weekends.",
    "Send your drawings to {} by Friday!",
    "{} is the number on the poster.",
]


def email():
    return f"{rng.choice(names)}@{rng.choice(domains)}"


def phone():
    a, b, c = rng.randint(200, 999), rng.randint(200, 999), rng.randint(1000, 9999)
    style = rng.randrange(5)
    return [
        f"{a}-{b}-{c}",
        f"({a}) {b}-{c}",
        f"+1 {a}-{b}-{c}",
        f"{a}.{b}.{c}",
        f"+44 {a} {b} {c}",
    ][style]


def handle():
    return "@" + rng.choice(["kidreporter", "zoo_fan", "MayaDraws", "space_kid7", "BookWorm"])


makers = [email, phone, handle]
cases = []
for i in range(50):
    k = 1 + (i % 3 == 0)
    items = [makers[(i + j) % 3]() for j in range(k)]
    text = rng.choice(frames).format(" or ".join(items))
    clean, counts = scrub(text)
    cases.append({"id": f"pii-{i:02}", "text": text, "pii": items, "expected": clean, "counts": counts})

with open("pii_cases.jsonl", "w") as f:
    for c in cases:
        f.write(json.dumps(c, sort_keys=True) + "\n")
