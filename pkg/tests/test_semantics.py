import random
import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    RANDOM_ENV,
    architecture_paths,
    architecture_traces,
    names,
    random_term,
    raw_refusals,
    raw_trace_map,
)

from cspauto.errors import TraceNotFound, TruncationWarning
from cspauto.kernel import (
    STOP,
    Environment,
    ExtChoice,
    IntChoice,
    Ref,
    SyncParallel,
    build_lts,
    event,
    prefix,
)
from cspauto.semantics import (
    failures_up_to,
    is_deterministic,
    refusals_after,
    traces_up_to,
)

a, b = event("a"), event("b")
SIGMA = frozenset({a, b})


def lts_of(paper_env, name):
    return build_lts(Ref(name), paper_env)


def test_traces_of_stop():
    assert traces_up_to(build_lts(STOP), 5) == [()]


def test_parallel_deadlock_traces(paper_env):
    assert traces_up_to(lts_of(paper_env, "SYNC"), 5) == [()]


def test_gateway_traces(env):
    lts = build_lts(Ref("GATEWAY"), env)
    got = {names(t) for t in traces_up_to(lts, 5)}
    assert got == architecture_traces(5)
    assert len(got) == 26


def test_gateway_maximal_traces(env):
    lts = build_lts(Ref("GATEWAY"), env)
    traces = {names(t) for t in traces_up_to(lts, 6)}
    maximal = {t for t in traces if not any(u[: len(t)] == t and u != t for u in traces)}
    assert maximal == set(architecture_paths())
    assert len(maximal) == 13
    assert len({t[-1] for t in maximal}) == 13
    assert max(len(t) for t in maximal) == 5


def test_traces_are_sorted(env):
    traces = traces_up_to(build_lts(Ref("GATEWAY"), env), 5)
    assert [len(t) for t in traces] == sorted(len(t) for t in traces)


def test_refusals_external_choice(paper_env):
    r = refusals_after(lts_of(paper_env, "EXT"), (), SIGMA)
    assert r.expand() == {frozenset()}


def test_refusals_internal_choice(paper_env):
    r = refusals_after(lts_of(paper_env, "INT"), (), SIGMA)
    assert r.expand() == {frozenset(), frozenset({a}), frozenset({b})}


def test_refusals_stop():
    r = refusals_after(build_lts(STOP), (), SIGMA)
    assert r.expand() == {frozenset(), frozenset({a}), frozenset({b}), SIGMA}


def test_refusals_after_non_trace(paper_env):
    with pytest.raises(TraceNotFound):
        refusals_after(lts_of(paper_env, "EXT"), (event("c"),), SIGMA)


def test_failures_of_stop():
    fs = failures_up_to(build_lts(STOP), 3, frozenset({a}))
    assert [(f.trace, f.refusal) for f in fs] == [((), frozenset({a}))]


def test_failures_lifted_refusals(paper_env):
    ext = failures_up_to(lts_of(paper_env, "EXT"), 4, SIGMA)
    int_ = failures_up_to(lts_of(paper_env, "INT"), 4, SIGMA)
    assert ((), {a}) in int_
    assert ((), {a}) not in ext


def test_failures_of_single_prefix():
    fs = failures_up_to(build_lts(prefix("a", STOP)), 2, SIGMA)
    assert {(f.trace, f.refusal) for f in fs} == {((), frozenset({b})), ((a,), SIGMA)}


def test_is_deterministic(env, paper_env):
    assert is_deterministic(build_lts(STOP))
    assert not is_deterministic(lts_of(paper_env, "INT"))
    assert is_deterministic(build_lts(Ref("GATEWAY"), env))


def test_truncated_lts_warns(env):
    lts = build_lts(Ref("GATEWAY"), env, max_states=2)
    with pytest.warns(TruncationWarning):
        traces_up_to(lts, 3)
    with pytest.warns(TruncationWarning):
        failures_up_to(lts, 3)


# -- invariants over random processes ----------------------------------------

seeds = st.integers(0, 2**32 - 1)


def corpus_lts(seed):
    return build_lts(random_term(random.Random(seed)), RANDOM_ENV)


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_traces_match_raw_oracle(seed):
    lts = corpus_lts(seed)
    assert set(traces_up_to(lts, 5)) == set(raw_trace_map(lts, 5))


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_traces_prefix_closed(seed):
    traces = set(traces_up_to(corpus_lts(seed), 5))
    assert () in traces
    for t in traces:
        assert t[:-1] in traces or t == ()


@settings(max_examples=100, deadline=None)
@given(seeds, st.integers(0, 4))
def test_traces_monotone_in_depth(seed, d):
    lts = corpus_lts(seed)
    shallow, deep = set(traces_up_to(lts, d)), set(traces_up_to(lts, d + 1))
    assert shallow <= deep
    assert shallow == {t for t in deep if len(t) <= d}


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_tick_only_last(seed):
    for t in traces_up_to(corpus_lts(seed), 5):
        assert all(e.visible for e in t[:-1])


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_refusals_subset_closed_and_disjoint(seed):
    lts = corpus_lts(seed)
    sigma = frozenset({a, b, event("c")})
    tmap = raw_trace_map(lts, 3)
    for tr, states in tmap.items():
        fam = refusals_after(lts, tr, sigma)
        assert set(fam.maximal) == {
            x for x in raw_refusals(lts, states, sigma)
            if not any(x < y for y in raw_refusals(lts, states, sigma))
        }
        members = fam.expand()
        if fam.maximal:
            assert frozenset() in members
        for x in members:
            for e in x:
                assert x - {e} in members
        for s in states:
            if lts.is_stable(s):
                refused = sigma - lts.initials(s)
                assert refused in fam and not (refused & lts.initials(s))


@settings(max_examples=150, deadline=None)
@given(seeds, seeds)
def test_choice_operators_share_traces(s1, s2):
    p, q = random_term(random.Random(s1), 2), random_term(random.Random(s2), 2)
    ext = build_lts(ExtChoice(p, q), RANDOM_ENV)
    int_ = build_lts(IntChoice(p, q), RANDOM_ENV)
    assert traces_up_to(ext, 5) == traces_up_to(int_, 5)


def test_parallel_with_self_loop():
    env = Environment({"B": prefix("b", Ref("B"))})
    lts = build_lts(SyncParallel(Ref("B"), Ref("B")), env)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert traces_up_to(lts, 3) == [(), (b,), (b, b), (b, b, b)]
