"""Keeps input tuples whose node is an if statement with a non-empty else branch."""
import json
import sys


def main():
    req = json.loads(sys.stdin.readline())
    kinds = {}
    parents = set()
    for n in req["astSummary"]:
        kinds[n["id"]] = n["kind"]
        if n["parentId"] is not None:
            parents.add(n["parentId"])

    def first_node(t):
        for e in t["elements"]:
            if e["kind"] == "node":
                return e["value"]
        return None

    def keep(t):
        node = first_node(t)
        return kinds.get(node) == "IfStatement" and (node + "/else") in parents

    out = [t for t in (req["input"] or []) if keep(t)]
    json.dump({"output": out, "error": None, "warnings": []}, sys.stdout, separators=(",", ":"))


main()
