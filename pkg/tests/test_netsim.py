import pytest

from fivegsim import messages
from fivegsim.flows import run_registration
from fivegsim.netsim import (
    Action,
    AdversaryHook,
    Capability,
    Channel,
    JamWindow,
    Knowledge,
    TimeInPast,
    World,
)
from fivegsim.policy import OperatorPolicy
from fivegsim.worldfile import single_network_world


def _payload(timer_id=0):
    return messages.encode(messages.TimerFired(timer_id=timer_id))


def test_priority_order_and_tiebreak():
    world = World(seed=0)
    order = []

    class Sink:
        entity_id = "sink"

        def step(self, msg, event, ctx):
            order.append((event.time, event.seq))

    world.add_entity(Sink())
    world.schedule(5, Channel.INTERNAL, "world", "sink", _payload(1), "world")
    world.schedule(3, Channel.INTERNAL, "world", "sink", _payload(2), "world")
    world.schedule(3, Channel.INTERNAL, "world", "sink", _payload(3), "world")
    world.run_until(100)
    assert order == [(3, 1), (3, 2), (5, 0)]


def test_schedule_in_past_rejected():
    world = World(seed=0)
    world.time = 10
    with pytest.raises(TimeInPast):
        world.schedule(3, Channel.INTERNAL, "world", "x", _payload(), "world")


def test_unknown_destination_is_noop():
    world = World(seed=0)
    world.schedule(1, Channel.INTERNAL, "world", "ghost", _payload(), "world")
    world.run_until(10)
    assert len(world.transcript.entries) == 1
    assert not world.transcript.entries[0].annotations.dropped


def test_same_seed_same_transcript_hash():
    def run(seed):
        world, _ = single_network_world(seed=seed)
        run_registration(world, "ue1")
        return world.transcript.sha256()

    assert run(3) == run(3)
    assert run(3) != run(4)


def test_conservation_every_delivery_has_origin():
    world, _ = single_network_world(seed=3)
    run_registration(world, "ue1")
    for entry in world.transcript.entries:
        origin = entry.event.origin
        assert origin == "world" or origin.startswith(("entity:", "adversary:"))
        if origin.startswith("entity:"):
            name = origin.split(":", 1)[1]
            assert name in world.entities or name == "__ether__"


def test_passive_adversary_never_alters_transcript():
    base, _ = single_network_world(seed=9)
    run_registration(base, "ue1")
    observed, _ = single_network_world(seed=9)
    observed.attach_adversary(AdversaryHook(
        adversary_id="eve",
        vantage=frozenset(Channel),
        capabilities=frozenset({Capability.OBSERVE}),
    ))
    run_registration(observed, "ue1")
    assert base.transcript.to_jsonl() == observed.transcript.to_jsonl()
    assert base.transcript.sha256() == observed.transcript.sha256()


def test_adversary_without_observe_gets_no_bytes():
    world, _ = single_network_world(seed=5)
    mute = AdversaryHook(
        adversary_id="mute",
        vantage=frozenset({Channel.RADIO_NAS, Channel.RADIO_RRC}),
        capabilities=frozenset({Capability.DROP}),
        handler=lambda w, h, e: None,
    )
    world.attach_adversary(mute)
    run_registration(world, "ue1")
    assert mute.knowledge.seen == []


def test_adversary_vantage_limits_visibility():
    world, _ = single_network_world(seed=5)
    eve = AdversaryHook(
        adversary_id="eve",
        vantage=frozenset({Channel.RADIO_NAS}),
        capabilities=frozenset({Capability.OBSERVE}),
    )
    world.attach_adversary(eve)
    run_registration(world, "ue1")
    assert eve.knowledge.seen
    assert all(ch == Channel.RADIO_NAS.value for ch, _, _ in eve.knowledge.seen)


def test_link_protection_blocks_observation_without_key():
    policy = OperatorPolicy(n2_link_protected=True)
    world, _ = single_network_world(seed=5, policy=policy)
    tap = AdversaryHook(
        adversary_id="tap", vantage=frozenset({Channel.N2}),
        capabilities=frozenset({Capability.OBSERVE}),
    )
    world.attach_adversary(tap)
    run_registration(world, "ue1")
    assert tap.knowledge.seen == []

    world2, _ = single_network_world(seed=5, policy=policy)
    keyed = AdversaryHook(
        adversary_id="tap", vantage=frozenset({Channel.N2}),
        capabilities=frozenset({Capability.OBSERVE}),
    )
    keyed.knowledge.grant("link:N2", b"lifted")
    world2.attach_adversary(keyed)
    run_registration(world2, "ue1")
    assert keyed.knowledge.seen


def test_unprotected_link_is_observable():
    policy = OperatorPolicy(n2_link_protected=False)
    world, _ = single_network_world(seed=5, policy=policy)
    tap = AdversaryHook(
        adversary_id="tap", vantage=frozenset({Channel.N2}),
        capabilities=frozenset({Capability.OBSERVE}),
    )
    world.attach_adversary(tap)
    run_registration(world, "ue1")
    assert tap.knowledge.seen


def test_drop_all_radio_nas_forces_timeout():
    world, _ = single_network_world(seed=6)
    world.attach_adversary(AdversaryHook(
        adversary_id="dropper",
        vantage=frozenset({Channel.RADIO_NAS}),
        capabilities=frozenset({Capability.DROP}),
        handler=lambda w, h, e: Action(drop=True),
    ))
    outcome = run_registration(world, "ue1", horizon=5_000)
    assert outcome.outcome == "timeout"
    assert outcome.failure == "Timeout"
    assert any(e.annotations.dropped for e in world.transcript.entries)


def test_drop_without_capability_is_ignored():
    world, _ = single_network_world(seed=6)
    world.attach_adversary(AdversaryHook(
        adversary_id="wannabe",
        vantage=frozenset({Channel.RADIO_NAS}),
        capabilities=frozenset({Capability.OBSERVE}),  # no Drop
        handler=lambda w, h, e: Action(drop=True),
    ))
    outcome = run_registration(world, "ue1")
    assert outcome.success


def test_jam_window_validation():
    with pytest.raises(ValueError):
        JamWindow(target_cell="c", t_start=5, t_end=5)
    with pytest.raises(ValueError):
        JamWindow(target_cell="c", t_start=9, t_end=5)
    with pytest.raises(ValueError):
        JamWindow(target_cell="c", t_start=0, t_end=5, kind="Thermal")


def test_jam_drops_only_access_attempts_in_window():
    world, _ = single_network_world(seed=7)
    world.apply_jam(JamWindow(target_cell="cell-a", t_start=0, t_end=2_000))
    first = run_registration(world, "ue1", horizon=1_800)
    assert first.outcome == "timeout"
    second = run_registration(world, "ue1")
    assert second.success


def test_jam_suppression_requires_policy_and_flag():
    # suppressible jam + suppression-capable cell -> no effect
    policy = OperatorPolicy(jam_suppression_enabled=True)
    world, _ = single_network_world(seed=7, policy=policy)
    world.apply_jam(JamWindow(target_cell="cell-a", t_start=0, t_end=2_000,
                              suppressed=True))
    assert run_registration(world, "ue1", horizon=1_800).success
    # suppressible jam but the cell cannot suppress -> timeout
    world2, _ = single_network_world(seed=7)
    world2.apply_jam(JamWindow(target_cell="cell-a", t_start=0, t_end=2_000,
                               suppressed=True))
    assert run_registration(world2, "ue1", horizon=1_800).outcome == "timeout"


def test_injected_events_are_annotated():
    world, _ = single_network_world(seed=8)
    world.schedule(5, Channel.RADIO_RRC, "bot", "cell-a",
                   messages.encode(messages.RrcConnectionRequest(
                       c_rnti=b"\x00\x01", slice_id="embb", ue_nonce=b"n" * 8)),
                   "adversary:flood")
    world.run_until(100)
    injected = [e for e in world.transcript.entries if e.annotations.injected]
    assert injected and injected[0].event.src == "bot"


def test_transcript_scan_counts_payload_bytes():
    world, _ = single_network_world(seed=3)
    run_registration(world, "ue1")
    assert world.transcript.scan_payloads(b"\x00" * 200) == 0


def test_knowledge_payload_filters():
    knowledge = Knowledge()
    knowledge.see(Channel.N2, b"abc", 5)
    knowledge.see(Channel.RADIO_NAS, b"def", 10)
    assert knowledge.payloads(Channel.N2) == [b"abc"]
    assert knowledge.payloads(after=6) == [b"def"]
    assert knowledge.contains(b"de")


def test_cell_selection_tie_breaks_on_lowest_cell_id():
    world, builder = single_network_world(seed=30, cell_count=1)
    net = builder.networks["net"]
    builder.add_cell(net, "cell-z", strength=10)  # ties with cell-a at 10
    outcome = run_registration(world, "ue1")
    assert outcome.success
    assert world.entities["ue1"].serving_gnb == "cell-a"


def test_adversary_hooks_apply_in_registration_order():
    world, _ = single_network_world(seed=31)
    seen_by_second = []

    def stamp(w, hook, event):
        if messages.peek_type(event.payload) == "RegistrationRequest":
            msg = messages.decode(event.payload)
            stamped = messages.RegistrationRequest(
                suci=msg.suci, slice_id="stamped", ue_nonce=msg.ue_nonce)
            return Action(replace_payload=messages.encode(stamped))
        return None

    def record(w, hook, event):
        if messages.peek_type(event.payload) == "RegistrationRequest":
            seen_by_second.append(messages.decode(event.payload).slice_id)
        return None

    world.attach_adversary(AdversaryHook(
        adversary_id="first", vantage=frozenset({Channel.RADIO_NAS}),
        capabilities=frozenset({Capability.MODIFY}), handler=stamp))
    world.attach_adversary(AdversaryHook(
        adversary_id="second", vantage=frozenset({Channel.RADIO_NAS}),
        capabilities=frozenset({Capability.OBSERVE}), handler=record))
    run_registration(world, "ue1")
    assert seen_by_second and seen_by_second[0] == "stamped"


def test_world_file_adversary_placement(tmp_path):
    from fivegsim.worldfile import load_world_file
    path = tmp_path / "world.ini"
    path.write_text("""
[world]
seed = 2

[network home]
plmn = 00101

[cell cell-a]
network = home

[ue ue1]
network = home

[adversary eve]
channels = RadioNas, RadioRrc
capabilities = Observe
""")
    world, builder = load_world_file(str(path))
    assert [a.adversary_id for a in world.adversaries] == ["eve"]
    outcome = run_registration(world, "ue1")
    assert outcome.success
    assert world.adversaries[0].knowledge.seen
