import pytest

from oracles import names, shared_attack1_traces

from cspauto.automodels import (
    ALL_BUSES,
    ATTACK_CHANNELS,
    LITERAL,
    SHARED_ONLY,
    AttackScenario,
    ThreatActor,
    actor_capabilities,
    attack1,
    attacker_process,
    compose_attack,
    scenario,
)
from cspauto.errors import CspError, EmptyRestriction
from cspauto.kernel import (
    STOP,
    AlphaParallel,
    Environment,
    Ref,
    alphabet,
    build_lts,
    event,
    prefix,
)
from cspauto.refinement import Deadlock, Holds, deadlock_free
from cspauto.semantics import traces_up_to


def test_gateway_initials(env):
    lts = build_lts(Ref("GATEWAY"), env)
    assert {str(e) for e in lts.initials(lts.initial)} == {
        "gateway_canhs1", "gateway_canhs2", "gateway_canls", "gateway_flexray",
    }


def test_most_initials_after_entry(env):
    lts = build_lts(Ref("MOST"), env)
    (state,) = lts.after((event("canhs_most"),))
    assert {str(e) for e in lts.initials(state)} == {"dvd", "mp3", "radio", "media"}


def test_bus_names():
    assert len(ALL_BUSES) == len(set(ALL_BUSES)) == 13


def test_attacker_process_full(env):
    body = attacker_process(name="Attacker")
    lts = build_lts(body, env)
    assert len(lts.initials(lts.initial)) == 182
    assert len(lts.states) == 2  # the body, then Ref("Attacker") loops
    ref = build_lts(Ref("Attacker"), env)
    assert len(ref.states) == 1
    assert all(src == dst == 0 for src, _, dst in ref.transitions)


def test_attacker_process_small():
    body = attacker_process(buses=("engine_cu",), payloads=(2,), name="Mini")
    env = Environment({"Mini": body}, {})
    lts = build_lts(Ref("Mini"), env)
    assert len(lts.states) == 1
    assert {str(e) for e in lts.initials(0)} == {
        "spoofing.engine_cu.2", "block.engine_cu", "eavesdrop.engine_cu",
        "change_functionality.engine_cu",
    }


def test_actor_capabilities():
    assert actor_capabilities(ThreatActor.THIEF) == {"spoofing", "block", "eavesdrop"}
    assert actor_capabilities(ThreatActor.REMOTE_ATTACKER) == {"spoofing", "block", "eavesdrop"}
    assert actor_capabilities(ThreatActor.EVIL_MECHANIC) == {"change_functionality"}
    assert actor_capabilities(ThreatActor.OWNER_DRIVER) == set(ATTACK_CHANNELS)
    assert actor_capabilities("thief") == actor_capabilities(ThreatActor.THIEF)


def test_literal_attack_deadlocks():
    s = attack1(LITERAL)
    lts = build_lts(compose_attack(s), s.env)
    assert traces_up_to(lts, 6) == [()]
    assert deadlock_free(lts) == Deadlock(())


def test_shared_attack_matches_shuffle_oracle():
    s = attack1(SHARED_ONLY)
    lts = build_lts(compose_attack(s), s.env)
    got = {names(t) for t in traces_up_to(lts, 6)}
    assert got == shared_attack1_traces(6)
    assert ("spoofing.engine_cu.2",) in got
    assert ("gateway_canhs1", "gateway_canhs1", "engine_cu") in got


def test_shared_attack_is_deadlock_free():
    s = attack1(SHARED_ONLY)
    assert deadlock_free(build_lts(compose_attack(s), s.env)) == Holds()


def test_full_path_interleaves(env):
    attacker = Ref("Attacker")
    system = prefix("x", STOP)
    e2 = env.extend(definitions={"Sys": system})
    path = alphabet(attacker, e2) | alphabet(system, e2)
    s = AttackScenario("free", attacker, system, frozenset(path), e2, SHARED_ONLY)
    term = compose_attack(s)
    assert isinstance(term, AlphaParallel)
    assert not (term.alpha_left.members & term.alpha_right.members)
    lts = build_lts(term, e2)
    assert len(lts.initials(lts.initial)) == 183


def test_shared_empty_restriction(env):
    s = AttackScenario("x", Ref("Attacker"), Ref("GATEWAY"), frozenset({event("video")}),
                       env, SHARED_ONLY)
    with pytest.raises(EmptyRestriction):
        compose_attack(s)


def test_scenario_validation(env):
    with pytest.raises(CspError):
        AttackScenario("x", Ref("Attacker"), Ref("GATEWAY"), frozenset(), env)
    with pytest.raises(CspError):
        AttackScenario("x", Ref("Attacker"), Ref("GATEWAY"), frozenset({event("video")}), env,
                       actor=ThreatActor.EVIL_MECHANIC)
    with pytest.raises(CspError):
        scenario("attack99")


@pytest.mark.parametrize("actor", list(ThreatActor))
def test_actor_attackers_respect_capabilities(actor):
    s = attack1(SHARED_ONLY, actor=actor)
    assert s.attacker_channels <= actor_capabilities(actor)
