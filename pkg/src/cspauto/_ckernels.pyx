# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled graph kernels; same contract as ``cspauto._pykernels``."""

from cpython cimport array
from libc.string cimport memcpy
from libcpp.vector cimport vector
from libcpp.unordered_map cimport unordered_map
from libcpp.unordered_set cimport unordered_set
from libcpp.algorithm cimport sort

import array as _pyarray

cdef array.array _INT_ARRAY = _pyarray.array("i")


cdef array.array _to_array(vector[int]& v):
    cdef array.array out = array.clone(_INT_ARRAY, v.size(), zero=False)
    if v.size():
        memcpy(out.data.as_ints, v.data(), v.size() * sizeof(int))
    return out


def tau_closure(const int[:] offsets, const int[:] labels, const int[:] targets, seeds):
    cdef unordered_set[int] seen
    cdef vector[int] todo
    cdef int s, t, e
    for s in seeds:
        if seen.count(s) == 0:
            seen.insert(s)
            todo.push_back(s)
    while todo.size():
        s = todo.back()
        todo.pop_back()
        for e in range(offsets[s], offsets[s + 1]):
            if labels[e] == 0:
                t = targets[e]
                if seen.count(t) == 0:
                    seen.insert(t)
                    todo.push_back(t)
    cdef vector[int] out
    for s in seen:
        out.push_back(s)
    sort(out.begin(), out.end())
    return list(out)


# a dense pair index costs a slot per (state, node); use it only when that
# stays within a small multiple of the graph and under a hard cap
DEF DENSE_LIMIT = 64_000_000
DEF DENSE_FACTOR = 32


cdef class _Pairs:
    cdef unordered_map[long long, int] index
    cdef vector[int] dense
    cdef bint use_dense
    cdef vector[int] state
    cdef vector[int] node
    cdef vector[int] parent
    cdef vector[int] via
    cdef vector[int] queue
    cdef long long width
    cdef const int* off
    cdef const int* lab
    cdef const int* tgt

    cdef int add(self, int i, int n, int p, int lab):
        cdef long long key = <long long>i * self.width + n
        cdef int x = <int>self.state.size()
        if self.use_dense:
            if self.dense[key] >= 0:
                return -1
            self.dense[key] = x
        else:
            if self.index.count(key):
                return -1
            self.index[key] = x
        self.state.push_back(i)
        self.node.push_back(n)
        self.parent.push_back(p)
        self.via.push_back(lab)
        return x

    cdef void close(self, int x):
        cdef size_t k = 0
        cdef int y, i, n, e, z
        self.queue.clear()
        self.queue.push_back(x)
        while k < self.queue.size():
            y = self.queue[k]
            k += 1
            i = self.state[y]
            n = self.node[y]
            for e in range(self.off[i], self.off[i + 1]):
                if self.lab[e] == 0:
                    z = self.add(self.tgt[e], n, y, 0)
                    if z >= 0:
                        self.queue.push_back(z)


def explore_product(const int[:] offsets, const int[:] labels, const int[:] targets,
                    int init, const int[:] dfa, int nlabels, int dfa_init,
                    bint stop_on_violation):
    cdef _Pairs pairs = _Pairs()
    cdef int n_nodes = dfa.shape[0] // nlabels if nlabels else 0
    pairs.width = n_nodes + 1
    pairs.off = &offsets[0]
    pairs.lab = &labels[0] if labels.shape[0] else NULL
    pairs.tgt = &targets[0] if targets.shape[0] else NULL
    cdef long long slots = <long long>(offsets.shape[0] - 1) * pairs.width
    cdef long long graph_size = offsets.shape[0] + labels.shape[0]
    pairs.use_dense = slots <= DENSE_LIMIT and (slots <= 1_000_000 or slots <= DENSE_FACTOR * graph_size)
    if pairs.use_dense:
        pairs.dense.assign(slots, -1)
    else:
        pairs.index.reserve(offsets.shape[0])
    cdef int x, i, row, e, lab, n2, y
    cdef size_t start = 0, end
    cdef bint found
    cdef vector[int] level_starts
    cdef vector[int] bad_pair, bad_label

    pairs.close(pairs.add(init, dfa_init, -1, -1))
    level_starts.push_back(0)
    while True:
        end = pairs.state.size()
        found = False
        for x in range(start, end):
            i = pairs.state[x]
            row = pairs.node[x] * nlabels
            for e in range(offsets[i], offsets[i + 1]):
                lab = labels[e]
                if lab and dfa[row + lab] < 0:
                    bad_pair.push_back(x)
                    bad_label.push_back(lab)
                    found = True
        if found and stop_on_violation:
            break
        for x in range(start, end):
            i = pairs.state[x]
            row = pairs.node[x] * nlabels
            for e in range(offsets[i], offsets[i + 1]):
                lab = labels[e]
                if lab:
                    n2 = dfa[row + lab]
                    if n2 >= 0:
                        y = pairs.add(targets[e], n2, x, lab)
                        if y >= 0:
                            pairs.close(y)
        if pairs.state.size() == end:
            break
        level_starts.push_back(<int>end)
        start = end
    violations = [(bad_pair[k], bad_label[k]) for k in range(bad_pair.size())]
    return (_to_array(pairs.state), _to_array(pairs.node), _to_array(pairs.parent),
            _to_array(pairs.via), _to_array(level_starts), violations)
