"""Script twin of the native insertArgPrinting query, under its own name so
the built-in does not shadow it.

Emits edit tuples asking the host to prepend print("m") and one
print("p", p) per parameter to every input method, then echoes the methods.
"""
import json
import sys


def text(name, value):
    return {"name": name, "kind": "string", "value": value}


def node(name, value):
    return {"name": name, "kind": "node", "value": value}


def main():
    req = json.loads(sys.stdin.readline())
    by_id = {n["id"]: n for n in req["astSummary"]}
    params = {}
    for n in req["astSummary"]:
        if n["kind"] == "Parameter":
            params.setdefault(n["parentId"], []).append(n)

    edits, methods = [], []
    for t in req["input"] or []:
        ids = [e["value"] for e in t["elements"] if e["kind"] == "node"]
        if not ids or by_id.get(ids[0], {}).get("kind") != "Method":
            json.dump({"output": None, "error": "not a method: %s" % (ids[0] if ids else t["tag"]), "warnings": []}, sys.stdout)
            return
        m = by_id[ids[0]]
        op = [text("op", "insertPrintFront"), node("node", m["id"])]
        edits.append({"tag": "edit", "elements": op + [text("a0", m["name"])]})
        for p in params.get(m["id"], []):
            edits.append({"tag": "edit", "elements": op + [text("a0", p["name"]), node("a1", p["id"])]})
        methods.append({"tag": "node", "elements": [node("node", m["id"])]})

    json.dump({"output": edits + methods, "error": None, "warnings": []}, sys.stdout, separators=(",", ":"))


main()
