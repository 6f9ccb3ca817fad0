#!/usr/bin/env python3
"""Recomputes the report CSVs for the bundled fixture corpus from scratch.

This is a deliberately separate implementation (stdlib only) of the
counting and measurement rules, used to produce the golden files the
end-to-end test compares against:

    python3 scripts/recompute_goldens.py [--check]

Inputs:  crates/core/tests/data/fixture_corpus/{corpus.jsonl,responses/}
Outputs: crates/core/tests/data/fixture_corpus/golden/*.csv and golden/ecdf/

With --check the golden files are not written; per-seed cosines are
printed instead so they can be compared by eye with report.json.
"""

import argparse
import hashlib
import json
import math
import re
import sys
from collections import OrderedDict, defaultdict
from datetime import date, datetime, timezone
from email.utils import parsedate_to_datetime
from html.parser import HTMLParser
from pathlib import Path
from urllib.parse import urljoin, urlsplit, urlunsplit

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "crates" / "core" / "tests" / "data" / "fixture_corpus"

THRESHOLD = 0.25
REFERENCE_SOURCE = "google"
MAX_REDIRECTS = 10
DEPTH_LIMIT = 3

# NLTK 3.8 English list.
STOPWORDS = set("""
i me my myself we our ours ourselves you you're you've you'll you'd your yours yourself
yourselves he him his himself she she's her hers herself it it's its itself they them their
theirs themselves what which who whom this that that'll these those am is are was were be been
being have has had having do does did doing a an the and but if or because as until while of
at by for with about against between into through during before after above below to from up
down in out on off over under again further then once here there when where why how all any
both each few more most other some such no nor not only own same so than too very s t can
will just don don't should should've now d ll m o re ve y ain aren aren't couldn couldn't
didn didn't doesn doesn't hadn hadn't hasn hasn't haven haven't isn isn't ma mightn mightn't
mustn mustn't needn needn't shan shan't shouldn shouldn't wasn wasn't weren weren't won won't
wouldn wouldn't
""".split())
assert len(STOPWORDS) == 179, len(STOPWORDS)

SOURCE_ORDER = ["reddit", "twitter", "twitter_moments", "scoopit"]
VERTICAL_ORDER = ["relevance", "top", "new", "comments", "latest", "scoops", "topics", "moments"]
BASE_CLASSES = ["P1A1", "PnA1", "PnAn", "P1An"]
LABEL_ORDER = ["P1A1", "MC", "PnA1", "PnAn", "P1An"]
BINS = ["1", "2", "3-4", "5+"]
KINDS = ["all", "html", "nonhtml"]


def enum_key(value, order):
    return (0, order.index(value), "") if value in order else (1, 0, value)


def cell_key(cell):
    topic, source, vertical = cell
    return (topic, enum_key(source, SOURCE_ORDER), enum_key(vertical, VERTICAL_ORDER))


def fmt(v):
    if v is None:
        return "NA"
    s = f"{v:.4f}"
    return "0.0000" if s == "-0.0000" else s


# ---------------------------------------------------------------- fetching


class Response:
    def __init__(self, status, headers, body):
        self.status = status
        self.headers = headers
        self.body = body

    def header(self, name):
        for k, v in self.headers:
            if k.lower() == name:
                return v
        return None


def serialize(uri):
    parts = urlsplit(uri)
    path = parts.path or "/"
    return urlunsplit((parts.scheme.lower(), parts.netloc.lower(), path, parts.query, ""))


def load_response(uri):
    path = DATA / "responses" / (hashlib.sha256(serialize(uri).encode()).hexdigest() + ".response")
    if not path.exists():
        return None
    raw = path.read_bytes()
    head, _, body = raw.partition(b"\r\n\r\n")
    lines = head.decode().split("\r\n")
    if lines[0].startswith("TRANSPORT-ERROR"):
        return None
    status = int(lines[0].split(" ")[1])
    headers = [tuple(x.strip() for x in line.split(":", 1)) for line in lines[1:] if line]
    return Response(status, headers, body)


class Fetched:
    def __init__(self, request, final, response):
        self.request = request
        self.final = final
        self.response = response

    @property
    def ok(self):
        return self.response is not None and 200 <= self.response.status < 300

    @property
    def media_type(self):
        ct = self.response.header("content-type") if self.response else None
        return ct.split(";")[0].strip().lower() if ct else None


_fetch_cache = {}


def fetch(uri):
    if uri in _fetch_cache:
        return _fetch_cache[uri]
    current = serialize(uri)
    response = None
    for _ in range(MAX_REDIRECTS + 1):
        response = load_response(current)
        if response is None or response.status not in (301, 302, 303, 307, 308):
            break
        location = response.header("location")
        if not location:
            break
        current = serialize(urljoin(current, location))
    result = Fetched(serialize(uri), current, response)
    _fetch_cache[uri] = result
    return result


# ---------------------------------------------------------------- URIs

URI_IN_TEXT = re.compile(r"https?://[^\s<>\"'`“”]+", re.I)
TRACKING = re.compile(r"^(utm_.*|fbclid|gclid)$", re.I)


def trim_uri(u):
    u = u.replace("&amp;", "&")
    while u:
        last = u[-1]
        if last in ".,;:!?'\"…*":
            u = u[:-1]
            continue
        pairs = {")": "(", "]": "[", "}": "{", ">": "<"}
        if last in pairs and u.count(last) > u.count(pairs[last]):
            u = u[:-1]
            continue
        break
    return u


def uris_of_post(post):
    return list(post["raw_links"]) + [trim_uri(m.group(0)) for m in URI_IN_TEXT.finditer(post["text"])]


def canonical(uri):
    parts = urlsplit(uri.strip())
    if parts.scheme.lower() not in ("http", "https") or not parts.hostname:
        return None
    params = sorted(p for p in parts.query.split("&") if p and not TRACKING.match(p.split("=")[0]))
    path = "" if parts.path in ("", "/") else parts.path
    return urlunsplit((parts.scheme.lower(), parts.netloc.lower(), path, "&".join(params), ""))


def hostname(uri):
    return urlsplit(uri).hostname.lower()


def platform_post(uri):
    p = urlsplit(uri)
    host = (p.hostname or "").lower()
    if host.startswith("www."):
        host = host[4:]
    if host in ("twitter.com", "x.com", "mobile.twitter.com") and re.match(r"^/(\w+/status|i/web/status)/\d+", p.path):
        return "twitter"
    if host.endswith("reddit.com") and re.match(r"^/r/[^/]+/comments/", p.path):
        return "reddit"
    if host == "redd.it":
        return "reddit"
    if host.endswith("scoop.it") and re.match(r"^/t/[^/]+/p/", p.path):
        return "scoopit"
    return None


def platform_host(uri, platform):
    host = (urlsplit(uri).hostname or "").lower()
    return {
        "twitter": host.endswith("twitter.com") or host.endswith("x.com"),
        "reddit": host.endswith("reddit.com") or host == "redd.it",
        "scoopit": host.endswith("scoop.it"),
    }[platform]


PLATFORM_OF = {"twitter": "twitter", "twitter_moments": "twitter", "reddit": "reddit", "scoopit": "scoopit"}


class AnchorCollector(HTMLParser):
    """Hrefs inside post-body containers (falls back to all anchors)."""

    BODY_CLASSES = {"tweet-text", "js-tweet-text", "usertext-body", "post-body"}

    def __init__(self):
        super().__init__()
        self.depth = 0
        self.stack = []
        self.scoped = []
        self.all = []

    def handle_starttag(self, tag, attrs):
        a = dict(attrs)
        classes = set((a.get("class") or "").split())
        is_body = bool(classes & self.BODY_CLASSES) or a.get("data-testid") == "tweetText"
        self.stack.append(is_body)
        if is_body:
            self.depth += 1
        if tag == "a" and a.get("href"):
            self.all.append(a["href"])
            if self.depth:
                self.scoped.append(a["href"])

    def handle_endtag(self, tag):
        if self.stack and self.stack.pop():
            self.depth -= 1


def substitute(uri, platform):
    out, seen = [], {uri}
    frontier = [uri]
    for _ in range(DEPTH_LIMIT):
        nxt = []
        for u in frontier:
            r = fetch(u)
            if not r.ok:
                out.append(u)
                continue
            p = AnchorCollector()
            p.feed(r.response.body.decode("utf-8", "replace"))
            for href in p.scoped or p.all:
                c = canonical(urljoin(r.final, href))
                if c is None or c in seen:
                    continue
                seen.add(c)
                if platform_post(c) == platform:
                    nxt.append(c)
                elif platform_host(c, platform):
                    continue
                else:
                    out.append(c)
        frontier = nxt
        if not frontier:
            break
    out.extend(frontier)
    return out


def kind_of(uri):
    r = fetch(uri)
    if not r.ok:
        return "Unknown"
    mt = r.media_type
    if mt in ("text/html", "application/xhtml+xml"):
        return "HTML"
    if mt:
        return "NonHTML"
    return "HTML"


def post_seeds(post):
    expanded = []
    platform = PLATFORM_OF.get(post["source"])
    for raw in uris_of_post(post):
        c = canonical(raw)
        if c is None:
            continue
        if platform and platform_post(c) == platform:
            expanded.extend(substitute(c, platform))
        else:
            expanded.append(c)
    seeds, seen = [], set()
    for c in expanded:
        if c in seen:
            continue
        seen.add(c)
        seeds.append({"canonical": c, "kind": kind_of(c), "hostname": hostname(c)})
    return seeds


# ---------------------------------------------------------------- text


class MainText(HTMLParser):
    """Text of <article> if present, else body text outside page furniture."""

    SKIP = {"script", "style", "nav", "footer", "header", "aside", "noscript", "head", "title"}

    def __init__(self):
        super().__init__()
        self.skip = 0
        self.in_article = 0
        self.article, self.body = [], []

    def handle_starttag(self, tag, attrs):
        if tag in self.SKIP:
            self.skip += 1
        if tag == "article":
            self.in_article += 1

    def handle_endtag(self, tag):
        if tag in self.SKIP:
            self.skip -= 1
        if tag == "article":
            self.in_article -= 1

    def handle_data(self, data):
        if self.skip:
            return
        self.body.append(data)
        if self.in_article:
            self.article.append(data)

    def text(self):
        return " ".join(self.article or self.body)


def main_text(body):
    p = MainText()
    p.feed(body.decode("utf-8", "replace"))
    return p.text()


def tokens(text):
    for t in re.split(r"[^\w]|_", text):
        t = t.lower()
        if len(t) > 1 and t not in STOPWORDS:
            yield t


def tf(texts):
    counts = defaultdict(int)
    for text in texts:
        for t in tokens(text):
            counts[t] += 1
    total = sum(counts.values())
    return {t: n / total for t, n in counts.items()} if total else {}


def cosine(a, b):
    if not a or not b:
        return 0.0
    dot = sum(w * b.get(t, 0.0) for t, w in a.items())
    na = math.sqrt(sum(w * w for w in a.values()))
    nb = math.sqrt(sum(w * w for w in b.values()))
    return max(0.0, min(1.0, dot / (na * nb)))


class ReferenceLinks(HTMLParser):
    def __init__(self):
        super().__init__()
        self.inside = 0
        self.hrefs = []

    def handle_starttag(self, tag, attrs):
        a = dict(attrs)
        if tag == "ol" and "references" in (a.get("class") or "").split():
            self.inside += 1
        elif tag == "a" and self.inside and a.get("href"):
            self.hrefs.append(a["href"])

    def handle_endtag(self, tag):
        if tag == "ol" and self.inside:
            self.inside -= 1


def gold_vector(topic):
    page = fetch(topic["reference_page"])
    p = ReferenceLinks()
    p.feed(page.response.body.decode())
    texts = []
    for href in p.hrefs:
        uri = urljoin(page.final, href)
        if hostname(uri).endswith("wikipedia.org"):
            continue
        r = fetch(uri)
        if r.ok and r.media_type == "text/html":
            texts.append(main_text(r.response.body))
    return tf(texts)


# ---------------------------------------------------------------- dates

META_DATE = re.compile(
    r"<meta[^>]+(?:property|name|itemprop)=\"(?:article:published_time|og:published_time|datePublished|date)\"[^>]*content=\"([^\"]+)\"",
    re.I,
)


def parse_date(value):
    value = value.strip()
    try:
        return parsedate_to_datetime(value).astimezone(timezone.utc).date()
    except (TypeError, ValueError):
        pass
    try:
        return datetime.fromisoformat(value.replace("Z", "+00:00")).astimezone(timezone.utc).date()
    except ValueError:
        pass
    m = re.search(r"(\d{4})[-/.](\d{1,2})[-/.](\d{1,2})", value)
    return date(int(m[1]), int(m[2]), int(m[3])) if m else None


def publication_date(r):
    m = META_DATE.search(r.response.body.decode("utf-8", "replace"))
    if m and parse_date(m[1]):
        return parse_date(m[1])
    for u in (r.final, r.request):
        path = urlsplit(u).path
        m = re.search(r"/(\d{4})/(\d{1,2})/(\d{1,2})(?:/|$)", path)
        if m:
            return date(int(m[1]), int(m[2]), int(m[3]))
        m = re.search(r"/(\d{4})/(\d{1,2})(?:/|$)", path)
        if m:
            return date(int(m[1]), int(m[2]), 1)
    lm = r.response.header("last-modified")
    return parse_date(lm) if lm else None


def quantile(xs, p):
    h = (len(xs) - 1) * p
    lo, hi = math.floor(h), math.ceil(h)
    return xs[lo] + (h - lo) * (xs[hi] - xs[lo])


# ---------------------------------------------------------------- segmentation


def segment(posts):
    """Groups per (cell, class) in tree order."""
    by_id = {p["id"]: p for p in posts}
    kids = defaultdict(list)
    roots = []
    for p in posts:
        if p["parent_id"] is None:
            roots.append(p)
        else:
            kids[p["parent_id"]].append(p)

    def order(p):
        return (p["created_at"] is not None, p["created_at"] or "", p["id"])

    for v in kids.values():
        v.sort(key=order)

    def cell(p):
        return (p["topic_id"], p["source"], p["vertical"])

    roots.sort(key=lambda p: (cell_key(cell(p)), order(p)))

    groups = defaultdict(list)
    for root in roots:
        c = cell(root)
        preorder, stack = [], [root]
        while stack:
            node = stack.pop()
            preorder.append(node["id"])
            stack.extend(reversed(kids[node["id"]]))
        authors = {by_id[i]["author"] for i in preorder}
        if root["serp_visible"]:
            groups[(c, "P1A1")].append([root["id"]])
        # Every maximal root-anchored path whose posts share the root's author.
        chains = []

        def walk(path):
            nxt = [k for k in kids[path[-1]] if k["author"] == root["author"]]
            if not nxt:
                if len(path) > 1:
                    chains.append(path)
                return
            for k in nxt:
                walk(path + [k["id"]])

        walk([root["id"]])
        for chain in chains:
            groups[(c, "PnA1")].append(chain)
        if len(preorder) >= 2 and len(authors) >= 2:
            groups[(c, "PnAn")].append(preorder)
    return groups


# ---------------------------------------------------------------- report


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--check", action="store_true")
    args = ap.parse_args()

    lines = (DATA / "corpus.jsonl").read_text().splitlines()
    topics = json.loads(lines[0])["topics"]
    posts = [json.loads(l) for l in lines[1:] if json.loads(l)["kind"] == "post"]
    by_id = {p["id"]: p for p in posts}

    base = segment(posts)

    # Labeled view: base classes plus MC = PnA1 groups then PnAn groups.
    labeled = {}
    for (c, cls), gs in base.items():
        labeled[(c, cls)] = gs
    for cls in ("PnA1", "PnAn"):
        for (c, k), gs in base.items():
            if k == cls:
                labeled.setdefault((c, "MC"), []).extend(gs)
    label_key = lambda k: (cell_key(k[0]), LABEL_ORDER.index(k[1]))
    keys = sorted(labeled, key=label_key)

    seeds_of = {}
    for gs in base.values():
        for g in gs:
            for pid in g:
                if pid not in seeds_of:
                    seeds_of[pid] = post_seeds(by_id[pid])

    def collection(c, cls):
        seen, out = set(), []
        for g in base.get((c, cls), []):
            for pid in g:
                for s in seeds_of[pid]:
                    if s["canonical"] not in seen:
                        seen.add(s["canonical"])
                        out.append(dict(s, post_id=pid))
        return out

    collections = {}
    for c, cls in keys:
        if cls == "MC":
            merged, seen = [], set()
            for part in ("PnA1", "PnAn"):
                for s in collection(c, part):
                    if s["canonical"] not in seen:
                        seen.add(s["canonical"])
                        merged.append(s)
            collections[(c, cls)] = merged
        else:
            collections[(c, cls)] = collection(c, cls)

    golds = {t["topic_id"]: gold_vector(t) for t in topics}

    relevant = {}
    for pid, seeds in seeds_of.items():
        post = by_id[pid]
        gold = golds[post["topic_id"]]
        flags = []
        for s in seeds:
            if s["kind"] == "HTML":
                text = main_text(fetch(s["canonical"]).response.body)
            elif s["kind"] == "NonHTML":
                text = post["text"]
            else:
                text = ""
            cos = cosine(tf([text]), gold)
            if args.check:
                print(f"{pid}\t{s['canonical']}\t{cos:.4f}")
            flags.append(cos > THRESHOLD)
        relevant[pid] = flags

    accepts = {
        "all": lambda k: True,
        "html": lambda k: k == "HTML",
        "nonhtml": lambda k: k == "NonHTML",
    }

    def precision(pid, kind):
        flags = [f for s, f in zip(seeds_of[pid], relevant[pid]) if accepts[kind](s["kind"])]
        return sum(flags) / len(flags) if flags else None

    def count(pid, kind):
        return sum(1 for s in seeds_of[pid] if accepts[kind](s["kind"]))

    def bin_of(k):
        return None if k == 0 else "1" if k == 1 else "2" if k == 2 else "3-4" if k <= 4 else "5+"

    tables = OrderedDict()
    tables["partition.csv"] = [["topic", "source", "vertical", "class", "groups", "posts"]]
    tables["uri_counts.csv"] = [
        ["topic", "source", "vertical", "class", "link_posts", "all", "html", "nonhtml", "unknown", "dedup"]
    ]
    tables["precision.csv"] = [["topic", "source", "vertical", "class", "avg_precision", "post_count", "kind"]]
    for c, cls in keys:
        members = [pid for g in labeled[(c, cls)] for pid in g]
        tables["partition.csv"].append([*c, cls, len(labeled[(c, cls)]), len(members)])
        coll = collections[(c, cls)]
        kinds = [s["kind"] for s in coll]
        tables["uri_counts.csv"].append([
            *c, cls, sum(1 for m in members if seeds_of[m]), len(coll),
            kinds.count("HTML"), kinds.count("NonHTML"), kinds.count("Unknown"), "per_collection",
        ])
        for kind in KINDS:
            ps = [p for p in (precision(m, kind) for m in members) if p is not None]
            tables["precision.csv"].append([*c, cls, fmt(sum(ps) / len(ps) if ps else None), len(ps), kind])

    # Source-level columns.
    columns = defaultdict(list)
    for c, cls in keys:
        entries = [(c[0], pid) for g in labeled[(c, cls)] for pid in g]
        columns[(c[1], cls)].extend(entries)
        if cls != "MC":
            columns[(c[1], "All")].extend(entries)
    col_order = sorted(columns, key=lambda k: (enum_key(k[0], SOURCE_ORDER), LABEL_ORDER.index(k[1]) if k[1] != "All" else 99))

    dist_files = {"html": "distribution.csv", "all": "distribution_all.csv", "nonhtml": "distribution_nonhtml.csv"}
    for f in dist_files.values():
        tables[f] = [["bin", "source", "class", "probability", "mode"]]
    tables["conditional_relevance.csv"] = [["source", "class", "bin", "probability", "post_count"]]
    for source, cls in col_order:
        entries = columns[(source, cls)]
        for kind, f in dist_files.items():
            tally = defaultdict(int)
            for _, pid in entries:
                b = bin_of(count(pid, kind))
                if b:
                    tally[b] += 1
            total = sum(tally.values())
            for b in BINS:
                tables[f].append([b, source, cls, fmt(tally[b] / total if total else None), "normalized"])
        sums, ns = defaultdict(float), defaultdict(int)
        for _, pid in entries:
            p = precision(pid, "html")
            b = bin_of(count(pid, "html"))
            if p is not None and b:
                sums[b] += p
                ns[b] += 1
        for b in BINS:
            tables["conditional_relevance.csv"].append(
                [source, cls, b, fmt(sums[b] / ns[b] if ns[b] else None), ns[b]]
            )

    reference = defaultdict(set)
    for (c, cls), coll in collections.items():
        if c[1] == REFERENCE_SOURCE and cls != "MC":
            reference[c[0]].update(s["canonical"] for s in coll)

    tables["age.csv"] = [["topic", "source", "vertical", "class", "min", "q1", "median", "q3", "max", "samples", "flagged"]]
    tables["diversity.csv"] = [["topic", "source", "vertical", "class", "seeds", "hosts", "diversity"]]
    tables["overlap.csv"] = [["topic", "source", "vertical", "class", "candidate", "shared", "overlap", "reference_source"]]
    ecdfs = {}
    for c, cls in keys:
        coll = collections[(c, cls)]
        ages, flagged = [], 0
        for s in coll:
            r = fetch(s["canonical"])
            if not r.ok:
                continue
            d = publication_date(r)
            if d is None:
                continue
            retrieved = datetime.fromisoformat(by_id[s["post_id"]]["retrieved_at"].replace("Z", "+00:00")).date()
            days = (retrieved - d).days
            if days < 0:
                flagged += 1
            else:
                ages.append(days / 365.25)
        ages.sort()
        samples = len(ages) + flagged
        if ages:
            summary = [ages[0], quantile(ages, 0.25), quantile(ages, 0.5), quantile(ages, 0.75), ages[-1]]
            name = "__".join(re.sub(r"[^A-Za-z0-9_-]", "_", x) for x in c) + f"__{cls}.csv"
            rows = [["age_years", "fraction"]]
            for i, x in enumerate(ages):
                if i + 1 == len(ages) or ages[i + 1] != x:
                    rows.append([fmt(x), fmt((i + 1) / len(ages))])
            ecdfs[name] = rows
        else:
            summary = [None] * 5
        tables["age.csv"].append([*c, cls, *map(fmt, summary), samples, flagged])

        hosts = [s["hostname"] for s in coll]
        n, u = len(hosts), len(set(hosts))
        tables["diversity.csv"].append([*c, cls, n, u, fmt((u - 1) / (n - 1) if n >= 2 else None)])

        if c[1] == REFERENCE_SOURCE:
            continue
        cand = {s["canonical"] for s in coll}
        ref = reference.get(c[0])
        shared = len(cand & ref) if ref else 0
        ov = shared / len(cand) if ref is not None and cand else None
        tables["overlap.csv"].append([*c, cls, len(coll), shared, fmt(ov), REFERENCE_SOURCE])

    tables["seeds.csv"] = [["topic", "source", "vertical", "post_class", "canonical_uri", "kind", "hostname", "post_id", "retrieved_at"]]
    base_keys = sorted(base, key=lambda k: (cell_key(k[0]), BASE_CLASSES.index(k[1])))
    for c, cls in base_keys:
        for s in collection(c, cls):
            tables["seeds.csv"].append(
                [*c, cls, s["canonical"], s["kind"], s["hostname"], s["post_id"], by_id[s["post_id"]]["retrieved_at"]]
            )

    if args.check:
        return
    out = DATA / "golden"
    (out / "ecdf").mkdir(parents=True, exist_ok=True)
    for old in list(out.glob("*.csv")) + list((out / "ecdf").glob("*.csv")):
        old.unlink()
    for name, rows in tables.items():
        write_csv(out / name, rows)
    for name, rows in ecdfs.items():
        write_csv(out / "ecdf" / name, rows)
    print(f"wrote {len(tables)} tables and {len(ecdfs)} ECDF files to {out}", file=sys.stderr)


def write_csv(path, rows):
    import csv

    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        for row in rows:
            w.writerow([str(x) for x in row])


if __name__ == "__main__":
    main()
