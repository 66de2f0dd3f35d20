"""Independent count oracle for the rule fixtures.

Reads a TSV rule export and prints record, quarantine, node, edge and
checkmark counts as JSON. Written without reference to the Rust code; the
numbers it prints are frozen into the Rust tests.
"""
import datetime
import json
import re
import sys

TYPES = {"Select", "Derive", "Text rule"}
CODE = re.compile(r"^SBB[0-9A-Z]+\s+")
BRACKET_CODE = re.compile(r"\[(SBB[0-9A-Z]+)\]\s*$")


def clean(name):
    name = name.strip().strip(".").strip()
    name = re.sub(r"\s+", " ", name)
    words = name.split(" ")
    # "DVI++DP I": a lone trailing letter after a punctuated token is a typo
    if len(words) > 1 and re.fullmatch(r"[A-Za-z]", words[-1]) and re.search(r"[^A-Za-z]", words[-2]) and re.search(r"[A-Za-z0-9]", words[-2]):
        name = " ".join(words[:-1])
    return name


def part(text):
    text = text.replace("✓", "").strip()
    text = CODE.sub("", text)
    return clean(text)


def load(path):
    rows, bad = [], 0
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    for line in lines[1:]:
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 9:
            bad += 1
            continue
        try:
            datetime.date.fromisoformat(cols[7])
        except ValueError:
            bad += 1
            continue
        if cols[4] not in TYPES:
            bad += 1
            continue
        rows.append(cols)
    return rows, bad


def members(body):
    m = re.match(r"^Group -- (One|0-1) from \[(.*)\]$", body)
    if not m or not m.group(2).strip():
        return None
    return [part(x) for x in m.group(2).split(", ")]


def derive_items(body):
    return [part(x) for x in re.findall(r"✓((?:[^✓&|()]|\([^()]*\))*)", body)]


def text_sides(body):
    m = re.match(r"(?i)^if\s+(.+?)[\s,]+then\s+(.+)$", body)
    if not m:
        return None
    cons = re.match(r"^(.*?)\s+(should not|should NOT|can't|should)\s+(?:be\s+)?(.*)$", m.group(2))
    if not cons:
        return None
    attr, pol, targets = cons.groups()
    polarity = "Should" if pol == "should" else "ShouldNot"
    conds = []
    for atom in re.split(r"\s+(?:AND|OR)\s+", m.group(1)):
        a, v = re.match(r"^(.*?)\s+is\s+(.*)$", atom.strip().rstrip(",")).groups()
        conds.append(leaf(a, v))
    tgts = [leaf(attr, t) for t in re.split(r"\s+OR\s+|\s+AND\s+|, ", targets)]
    return conds, tgts, polarity


def leaf(attr, value):
    value = value.strip()
    m = BRACKET_CODE.search(value)
    if m:
        return clean(value[: m.start()])
    return clean(attr) + "=" + clean(value)


def main(path):
    rows, bad = load(path)
    nodes, edges, parse_bad, checks, groups, derivs = [], set(), 0, 0, 0, 0
    seen = set()

    def node(name, project):
        key = (name.casefold(), project)
        if key not in seen:
            seen.add(key)
            nodes.append(key)
        return key

    for cols in rows:
        summary, body, kind, project = cols[1], cols[3], cols[4], cols[5]
        if kind == "Select":
            ms = members(body)
            if ms is None:
                parse_bad += 1
                continue
            groups += 1
            for name in ms:
                node(name, project)
        elif kind == "Derive":
            checks += body.count("✓")
            items = derive_items(body)
            derivs += 1
            ants = [node(i, project) for i in items]
            cons = node(re.sub(r"\s+is must select one$", "", summary), project)
            for a in ants:
                edges.add((a, cons, "Should"))
        else:
            sides = text_sides(body)
            if sides is None:
                parse_bad += 1
                continue
            conds, tgts, pol = sides
            cs = [node(c, project) for c in conds]
            ts = [node(t, project) for t in tgts]
            for c in cs:
                for t in ts:
                    edges.add((c, t, pol))
    print(json.dumps({
        "records": len(rows),
        "load_quarantined": bad,
        "parse_quarantined": parse_bad,
        "nodes": len(nodes),
        "edges": len(edges),
        "groups": groups,
        "derivations": derivs,
        "checkmarks": checks,
    }, sort_keys=True))


if __name__ == "__main__":
    main(sys.argv[1])
