#!/usr/bin/env python3
"""Writes the bundled offline fixture corpus.

Output goes to crates/core/tests/data/fixture_corpus/:
  corpus.jsonl            topics record followed by post records
  responses/*.response    one recorded response per request URI

Re-running is deterministic. Response file names are the SHA-256 of the
serialized request URI, so every URI below is written in the form the url
crate serializes it (explicit path, lowercase host).
"""

import hashlib
import json
import shutil
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "crates" / "core" / "tests" / "data" / "fixture_corpus"
RETRIEVED = "2018-11-06T12:00:00Z"

responses = {}


def respond(uri, status=200, reason="OK", headers=None, body=b""):
    if isinstance(body, str):
        body = body.encode("utf-8")
    head = f"HTTP/1.1 {status} {reason}\r\n"
    for k, v in (headers or {}).items():
        head += f"{k}: {v}\r\n"
    responses[uri] = head.encode() + b"\r\n" + body


def transport_error(uri, message):
    responses[uri] = f"TRANSPORT-ERROR {message}\r\n\r\n".encode()


def html_page(uri, title, paragraphs, meta_date=None, last_modified=None, extra_head=""):
    head = f"<title>{title}</title>{extra_head}"
    if meta_date:
        head += f'<meta property="article:published_time" content="{meta_date}">'
    body = "".join(f"<p>{p}</p>" for p in paragraphs)
    doc = (
        "<!DOCTYPE html><html><head><meta charset=\"utf-8\">" + head + "</head><body>"
        "<nav><a href=\"/\">Home</a> <a href=\"/news\">News</a> <a href=\"/sport\">Sport</a></nav>"
        f"<article><h1>{title}</h1>{body}</article>"
        "<footer>Copyright the publisher. All rights reserved.</footer>"
        "</body></html>"
    )
    headers = {"Content-Type": "text/html; charset=utf-8"}
    if last_modified:
        headers["Last-Modified"] = last_modified
    respond(uri, headers=headers, body=doc)


def reference_page(uri, title, refs):
    items = "".join(f'<li><a class="external" href="{r}">{r}</a></li>' for r in refs)
    doc = (
        "<!DOCTYPE html><html><head><title>" + title + "</title></head><body>"
        f"<div id=\"content\"><h1>{title}</h1><p>Encyclopedia article about {title}.</p>"
        "<p>See also <a href=\"https://en.wikipedia.org/wiki/Main_Page\">Main page</a>.</p>"
        f"<h2>References</h2><ol class=\"references\">{items}</ol></div></body></html>"
    )
    respond(uri, headers={"Content-Type": "text/html; charset=utf-8"}, body=doc)


def pdf(uri):
    respond(uri, headers={"Content-Type": "application/pdf"}, body=b"%PDF-1.4\n%\xe2\xe3\xcf\xd3\n1 0 obj\n<<>>\nendobj\n")


def not_found(uri):
    respond(uri, 404, "Not Found", {"Content-Type": "text/html"}, "<html><body><p>Not found</p></body></html>")


def redirect(uri, location, status=301):
    respond(uri, status, "Moved Permanently", {"Location": location}, b"")


def tweet_page(uri, text, links):
    anchors = " ".join(f'<a href="{l}">{l}</a>' for l in links)
    doc = (
        "<html><head><title>Tweet</title></head><body>"
        "<div class=\"nav\"><a href=\"https://twitter.com/home\">Home</a> "
        "<a href=\"https://twitter.com/explore\">Explore</a></div>"
        f"<div class=\"tweet\"><p class=\"tweet-text\">{text} {anchors}</p></div>"
        "</body></html>"
    )
    respond(uri, headers={"Content-Type": "text/html; charset=utf-8"}, body=doc)


# Topic vocabularies. Reference documents and relevant candidates share them.
TOPICS = {
    "ebola": {
        "text_query": "ebola virus outbreak",
        "hashtag_query": "#ebola",
        "expectation": "unexpected",
        "recurrence": {"kind": "non_recurring"},
        "start_definition": "2013-12",
        "end_definition": "2016-06",
        "reference_page": "https://en.wikipedia.org/wiki/Ebola_virus_epidemic_in_West_Africa",
        "words": ["ebola", "virus", "outbreak", "guinea", "liberia", "sierra", "leone", "epidemic",
                  "patients", "health", "vaccine", "cases", "treatment", "who", "infection"],
    },
    "harvey": {
        "text_query": "hurricane harvey",
        "hashtag_query": "#hurricaneharvey",
        "expectation": "expected",
        "recurrence": {"kind": "recurring", "regularity": "seasonal"},
        "start_definition": "2017-08-17",
        "end_definition": "2017-09-02",
        "reference_page": "https://en.wikipedia.org/wiki/Hurricane_Harvey",
        "words": ["hurricane", "harvey", "houston", "texas", "flooding", "rainfall", "storm",
                  "evacuation", "landfall", "category", "damage", "rescue", "shelters", "gulf", "coast"],
    },
    "vegas": {
        "text_query": "las vegas shooting",
        "hashtag_query": "#vegasshooting",
        "expectation": "unexpected",
        "recurrence": {"kind": "non_recurring"},
        "start_definition": "2017-10-01",
        "end_definition": "2017-10-01",
        "reference_page": "https://en.wikipedia.org/wiki/2017_Las_Vegas_shooting",
        "words": ["vegas", "shooting", "gunman", "mandalay", "bay", "festival", "victims",
                  "police", "concert", "strip", "hotel", "paddock", "wounded", "country", "music"],
    },
}

FILLER = ["recipe", "football", "garden", "stock", "market", "fashion", "travel", "guitar",
          "cooking", "movie", "celebrity", "basketball", "weather", "sunny", "holiday"]


def sentences(words, n, offset=0):
    """Topical prose built from a vocabulary."""
    out = []
    for i in range(n):
        picked = [words[(offset + i * 3 + j) % len(words)] for j in range(6)]
        out.append("The " + " and the ".join(picked) + " were reported again.")
    return out


def chatter(n, offset=0):
    """Off-topic prose sharing no template words with `sentences`."""
    return [
        f"My {FILLER[(offset + i) % len(FILLER)]} beats your {FILLER[(offset + i + 7) % len(FILLER)]} any day."
        for i in range(n)
    ]


topics_record = []
posts = []


def post(pid, source, vertical, topic, author, text, *, parent=None, serp=True, created=None,
         raw_links=(), query_kind="text"):
    t = TOPICS[topic]
    posts.append({
        "kind": "post",
        "id": pid,
        "source": source,
        "vertical": vertical,
        "query": t["hashtag_query"] if query_kind == "hashtag" else t["text_query"],
        "query_kind": query_kind,
        "topic_id": topic,
        "author": author,
        "parent_id": parent,
        "serp_visible": serp,
        "created_at": created,
        "retrieved_at": RETRIEVED,
        "text": text,
        "raw_links": list(raw_links),
        "platform_uri": None,
    })


for tid, t in TOPICS.items():
    topics_record.append({k: v for k, v in t.items() if k != "words"} | {"topic_id": tid})
    words = t["words"]
    host = {"ebola": "health", "harvey": "weather", "vegas": "crime"}[tid]

    # Reference list and its documents.
    refs = [f"https://{host}-news{i}.example/{tid}/ref{i}.html" for i in range(3)]
    refs.append(f"https://gov.example/{tid}/report.pdf")  # non-HTML reference, fails
    reference_page(t["reference_page"], tid.title(), refs + ["https://en.wikipedia.org/wiki/Virus"])
    for i, r in enumerate(refs[:3]):
        html_page(r, f"{tid} reference {i}", sentences(words, 4, offset=i))
    pdf(refs[3])

    # Candidate pages.
    rel1 = f"https://{host}-daily.example/2017/09/01/{tid}-story.html"
    html_page(rel1, f"{tid} story", sentences(words, 3, offset=1))
    rel2 = f"https://news-{tid}.example/article/{tid}-update"
    html_page(rel2, f"{tid} update", sentences(words, 2, offset=2) + chatter(1),
              meta_date="2017-09-03T08:00:00Z")
    rel3 = f"https://blog-{tid}.example/posts/eyewitness"
    html_page(rel3, "eyewitness", sentences(words[:8], 2, offset=4) + chatter(2, offset=5),
              last_modified="Mon, 02 Oct 2017 10:00:00 GMT")
    offtopic = f"https://lifestyle-{tid}.example/recipes/2016/05/cake"
    html_page(offtopic, "cake", chatter(4))
    weak = f"https://forum-{tid}.example/thread/99"
    html_page(weak, "forum", chatter(3, offset=2) + [f"Someone mentioned {words[0]} {words[1]} once."])
    doc_pdf = f"https://docs-{tid}.example/briefing.pdf"
    pdf(doc_pdf)
    missing = f"https://gone-{tid}.example/deleted-page"
    not_found(missing)
    moved = f"https://short-{tid}.example/abc"
    redirect(moved, rel1)
    down = f"https://down-{tid}.example/page"
    transport_error(down, "connection refused")
    tracked = f"https://{host}-daily.example/2017/09/01/{tid}-story.html?utm_source=twitter&utm_medium=social"

    # Reddit: P1A1 posts, a self-reply thread and a conversation.
    post(f"r-{tid}-1", "reddit", "relevance", tid, f"{tid}_watcher",
         f"Latest on {t['text_query']}: {rel1}.", created="2017-09-01T10:00:00Z")
    post(f"r-{tid}-2", "reddit", "relevance", tid, f"{tid}_skeptic",
         "Not related but fun", created="2017-09-01T11:00:00Z", raw_links=[offtopic])
    post(f"r-{tid}-3", "reddit", "new", tid, f"{tid}_curator",
         f"Thread collecting sources ({rel2})", created="2017-09-02T09:00:00Z")
    post(f"r-{tid}-3a", "reddit", "new", tid, f"{tid}_curator",
         f"More: {doc_pdf} and {rel3}", parent=f"r-{tid}-3", serp=False, created="2017-09-02T09:05:00Z")
    post(f"r-{tid}-3b", "reddit", "new", tid, f"{tid}_curator",
         f"Also {missing}!", parent=f"r-{tid}-3a", serp=False, created="2017-09-02T09:10:00Z")
    post(f"r-{tid}-3c", "reddit", "new", tid, f"{tid}_reader",
         f"Thanks, see {weak}", parent=f"r-{tid}-3", serp=False, created="2017-09-02T09:20:00Z")
    post(f"r-{tid}-3d", "reddit", "new", tid, f"{tid}_curator",
         "You're welcome", parent=f"r-{tid}-3c", serp=False, created="2017-09-02T09:25:00Z")
    post(f"r-{tid}-4", "reddit", "relevance", tid, f"{tid}_mod",
         "No links here, just discussion.", created="2017-09-03T09:00:00Z")

    # Twitter: direct links, an intra-site permalink and a self-thread.
    status = f"https://twitter.com/{tid}_desk/status/90000{len(topics_record)}"
    tweet_page(status, f"Breaking {words[0]} update", [rel2, f"https://twitter.com/{tid}_desk"])
    post(f"t-{tid}-1", "twitter", "top", tid, f"{tid}_desk",
         f"Breaking: {tracked}", created="2017-09-01T12:00:00Z", query_kind="hashtag")
    post(f"t-{tid}-2", "twitter", "top", tid, f"{tid}_fan",
         f"RT this {status}", created="2017-09-01T13:00:00Z", query_kind="hashtag")
    post(f"t-{tid}-3", "twitter", "latest", tid, f"{tid}_local",
         f"1/ Our coverage {moved}", created="2017-09-02T14:00:00Z")
    post(f"t-{tid}-3a", "twitter", "latest", tid, f"{tid}_local",
         f"2/ live page {down} and {rel3}", parent=f"t-{tid}-3", serp=False, created="2017-09-02T14:01:00Z")
    post(f"t-{tid}-3b", "twitter", "latest", tid, f"{tid}_other",
         f"@{tid}_local thanks, also {offtopic}", parent=f"t-{tid}-3a", serp=False,
         created="2017-09-02T14:30:00Z")

    # Posts with several links, to populate the larger k bins.
    n = len(topics_record)
    multi = [rel1, f"(see {rel2}).", offtopic][: 1 + n]
    post(f"r-{tid}-5", "reddit", "relevance", tid, f"{tid}_linker",
         "Roundup: " + " ".join(multi), created="2017-09-03T12:00:00Z")
    many = [rel1, rel2, rel3, weak, offtopic, doc_pdf][: 2 + n]
    post(f"t-{tid}-4", "twitter", "top", tid, f"{tid}_aggregator",
         "Everything so far", created="2017-09-03T15:00:00Z", raw_links=many, query_kind="hashtag")

    # Scoop.it topics.
    post(f"s-{tid}-1", "scoopit", "scoops", tid, f"{tid}_scooper",
         f"Scooped: {t['text_query']}", created="2017-09-04T08:00:00Z", raw_links=[rel1, weak])
    post(f"s-{tid}-2", "scoopit", "scoops", tid, f"{tid}_scooper2",
         "Briefing document", created="2017-09-05T08:00:00Z", raw_links=[doc_pdf])

    # Web search SERP entries used as the overlap reference.
    for rank, uri in enumerate([rel1, rel2, refs[0]]):
        post(f"g-{tid}-{rank}", "google", "relevance", tid, "google",
             f"result {rank + 1}", created=None, raw_links=[uri])


def main():
    if OUT.exists():
        shutil.rmtree(OUT)
    (OUT / "responses").mkdir(parents=True)
    with open(OUT / "corpus.jsonl", "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps({"kind": "topics", "topics": topics_record}, separators=(",", ":")) + "\n")
        for p in posts:
            f.write(json.dumps(p, separators=(",", ":"), ensure_ascii=False) + "\n")
    for uri, data in sorted(responses.items()):
        name = hashlib.sha256(uri.encode()).hexdigest() + ".response"
        (OUT / "responses" / name).write_bytes(data)
    with open(OUT / "uris.txt", "w", encoding="utf-8", newline="\n") as f:
        for uri in sorted(responses):
            f.write(uri + "\n")
    print(f"{len(posts)} posts, {len(responses)} responses -> {OUT}")


if __name__ == "__main__":
    main()
