"""Pure-Python graph kernels; reference behaviour for the compiled ``_ckernels``.

Graphs are CSR triples ``(offsets, labels, targets)`` over int32 buffers.
Label 0 is τ; every other label is an index into a shared event table whose
order is the canonical event order, so edge order is label order.
"""


def tau_closure(offsets, labels, targets, seeds):
    """Sorted list of states reachable from ``seeds`` by τ edges alone."""
    seen = set(seeds)
    todo = list(seen)
    while todo:
        s = todo.pop()
        for e in range(offsets[s], offsets[s + 1]):
            if labels[e] == 0:
                t = targets[e]
                if t not in seen:
                    seen.add(t)
                    todo.append(t)
    return sorted(seen)


def explore_product(offsets, labels, targets, init, dfa, nlabels, dfa_init, stop_on_violation):
    """Breadth-first exploration of an implementation graph against a DFA.

    Pairs (impl state, dfa node) are numbered so that, level by level, their
    shortest traces appear in lexicographic order; each newly found pair is
    followed immediately by its τ-closure.  A violation is a visible impl edge
    the DFA node has no transition for.

    Returns ``(pair_state, pair_node, parent, via, level_starts, violations)``
    where ``via`` is the label on the edge from the parent (0 for τ, -1 for
    the root) and ``violations`` lists ``(pair, label)``.
    """
    index = {}
    pair_state = []
    pair_node = []
    parent = []
    via = []

    def add(i, n, p, lab):
        key = (i, n)
        if key in index:
            return -1
        x = len(pair_state)
        index[key] = x
        pair_state.append(i)
        pair_node.append(n)
        parent.append(p)
        via.append(lab)
        return x

    def close(x):
        queue = [x]
        k = 0
        while k < len(queue):
            y = queue[k]
            k += 1
            i, n = pair_state[y], pair_node[y]
            for e in range(offsets[i], offsets[i + 1]):
                if labels[e] == 0:
                    z = add(targets[e], n, y, 0)
                    if z >= 0:
                        queue.append(z)

    close(add(init, dfa_init, -1, -1))
    level_starts = [0]
    violations = []
    start = 0
    while True:
        end = len(pair_state)
        found = False
        for x in range(start, end):
            i, row = pair_state[x], pair_node[x] * nlabels
            for e in range(offsets[i], offsets[i + 1]):
                lab = labels[e]
                if lab and dfa[row + lab] < 0:
                    violations.append((x, lab))
                    found = True
        if found and stop_on_violation:
            break
        for x in range(start, end):
            i, row = pair_state[x], pair_node[x] * nlabels
            for e in range(offsets[i], offsets[i + 1]):
                lab = labels[e]
                if lab:
                    n2 = dfa[row + lab]
                    if n2 >= 0:
                        y = add(targets[e], n2, x, lab)
                        if y >= 0:
                            close(y)
        if len(pair_state) == end:
            break
        level_starts.append(end)
        start = end
    return pair_state, pair_node, parent, via, level_starts, violations
