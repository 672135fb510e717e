"""Regenerate tests/golden/search_tree_n{1,2}_d4.jsonl.

The labels are produced by a direct replay of the tree construction that
shares nothing with SearchTree beyond the formula and stage primitives, so
the golden files act as an independent oracle for it.
"""
import json
import sys
from pathlib import Path

from kpcollapse.hfset import EMPTY, And, Ex, Or, All, eval_delta0, hf, instance, is_delta0, is_prime, negate, set_to_sexpr, to_sexpr
from kpcollapse.lhier import build_stages
from kpcollapse.searchtree import kp_axiom

OUT = Path(__file__).resolve().parents[1] / "tests" / "golden"
U = hf(EMPTY, hf(EMPTY))
ZERO, ONE = EMPTY, hf(EMPTY)


def replay(n: int, depth: int):
    S = build_stages(U, n=n)
    alphabet = sorted(S.stages[n], key=lambda a: S.order_key(a))
    u_list = list(S.enumeration)
    rows = {(): ()}
    todo = [()]
    while todo:
        path = todo.pop()
        if len(path) >= depth:
            continue
        label = rows[path]
        kids = []
        if len(path) % 2 == 0:
            kids = [(ZERO, label + (negate(kp_axiom(len(path) // 2)),))]
        elif any(is_delta0(f) and eval_delta0(f) for f in label):
            kids = []
        elif all(is_prime(f) for f in label):
            kids = [(ZERO, label)]
        else:
            i = next(j for j, f in enumerate(label) if not is_prime(f))
            phi, rest = label[i], label[:i] + label[i + 1:]
            if isinstance(phi, And):
                kids = [(ZERO, rest + (phi, phi.l)), (ONE, rest + (phi, phi.r))]
            elif isinstance(phi, Or):
                kids = [(ZERO, rest + (phi, phi.r if phi.l in label else phi.l))]
            elif isinstance(phi, All):
                kids = [(a, rest + (phi, instance(phi, a))) for a in alphabet]
            else:
                assert isinstance(phi, Ex)
                witnesses = []
                for j in range(len(path)):
                    if j < len(u_list):
                        witnesses.append(u_list[j])
                    witnesses.append(path[j])
                witnesses += u_list[len(path):]
                b = next(w for w in witnesses if instance(phi, w) not in label)
                kids = [(ZERO, rest + (phi, instance(phi, b)))]
        for a, lab in kids:
            rows[path + (a,)] = lab
            todo.append(path + (a,))
    return sorted(json.dumps({"path": [set_to_sexpr(a) for a in p], "label": [to_sexpr(f) for f in lab]})
                  for p, lab in rows.items())


def main(depth: int = 4):
    OUT.mkdir(parents=True, exist_ok=True)
    for n in (1, 2):
        lines = replay(n, depth)
        (OUT / f"search_tree_n{n}_d{depth}.jsonl").write_text("\n".join(lines) + "\n")
        print(f"n={n}: {len(lines)} nodes")


if __name__ == "__main__":
    main(*(int(x) for x in sys.argv[1:]))
