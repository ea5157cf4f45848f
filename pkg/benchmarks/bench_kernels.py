"""Compare the compiled and pure-Python graph kernels.

    python3 benchmarks/bench_kernels.py [--states N] [--repeat K]

Workloads: the raw kernels (tau closure, and a random CSR graph explored
against a random DFA), plus an end-to-end failures refinement check of an
interleaved system against itself.
"""

import argparse
import random
import statistics
import time
from array import array

from cspauto import _backend
from cspauto.kernel import Environment, Interleave, Ref, build_lts, chain
from cspauto.refinement import check_failures_refinement


def random_graph(n, out_degree, nlabels, tau_ratio, seed):
    rng = random.Random(seed)
    offsets, labels, targets = array("i", [0]), array("i"), array("i")
    for _ in range(n):
        edges = sorted(
            (0 if rng.random() < tau_ratio else rng.randrange(1, nlabels), rng.randrange(n))
            for _ in range(rng.randint(0, 2 * out_degree))
        )
        for lab, dst in edges:
            labels.append(lab)
            targets.append(dst)
        offsets.append(len(labels))
    return offsets, labels, targets


def random_dfa(nodes, nlabels, seed):
    rng = random.Random(seed)
    table = array("i", [-1]) * (nodes * nlabels)
    for i in range(len(table)):
        if i % nlabels and rng.random() < 0.999:
            table[i] = rng.randrange(nodes)
    return table


def timed(fn, repeat):
    runs = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        runs.append(time.perf_counter() - t)
    return statistics.median(runs)


def ring_system(k):
    defs = {f"C{i}": chain(f"a{i}", f"b{i}", f"c{i}", end=Ref(f"C{i}")) for i in range(k)}
    term = Ref("C0")
    for i in range(1, k):
        term = Interleave(term, Ref(f"C{i}"))
    return build_lts(term, Environment(defs))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--states", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--ring", type=int, default=7, help="components in the end-to-end model")
    args = ap.parse_args()

    names = _backend.available()
    if "cython" not in names:
        print("compiled kernels not built; only the Python fallback is available")
    nlabels = 16
    graph = random_graph(args.states, 3, nlabels, 0.2, 1)
    tau_graph = random_graph(args.states, 3, nlabels, 0.6, 3)
    dfa = random_dfa(64, nlabels, 2)
    seeds = list(range(0, args.states, max(1, args.states // 50)))
    lts = ring_system(args.ring)
    print(f"random graphs: {args.states} states, {len(graph[1])} edges; "
          f"ring model: {len(lts.states)} states, {len(lts.transitions)} transitions")

    results = {}
    for name in names:
        k = _backend.load(name)
        results[name] = (
            timed(lambda: k.tau_closure(*tau_graph, seeds), args.repeat),
            timed(lambda: k.explore_product(*graph, 0, dfa, nlabels, 0, False), args.repeat),
            timed(lambda: check_failures_refinement(lts, lts, kernels=k), args.repeat),
        )

    header = f"{'backend':<8} {'tau_closure':>12} {'product':>12} {'refinement':>12}"
    print(header)
    print("-" * len(header))
    for name, (tc, prod, ref) in results.items():
        print(f"{name:<8} {tc:>11.4f}s {prod:>11.4f}s {ref:>11.4f}s")
    if len(results) == 2:
        c, p = results["cython"], results["python"]
        print(f"{'speedup':<8} {p[0] / c[0]:>11.1f}x {p[1] / c[1]:>11.1f}x {p[2] / c[2]:>11.1f}x")


if __name__ == "__main__":
    main()
