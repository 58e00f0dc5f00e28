import pytest

from fivegsim import messages
from fivegsim.entities import (
    NetworkNameMismatch,
    PeerRevoked,
    PeerUnknown,
    Sepp,
    TokenExpired,
    UnknownConsumer,
    UnknownGuti,
    WrongAudience,
    authorize_nf,
    establish_interconnect,
    renew_context,
    validate_nf_token,
)
from fivegsim.entities.core import InvalidToken, Nrf, NfProducer
from fivegsim.entities.ue import UePhase
from fivegsim.flows import (
    establish_user_plane,
    find_amf_session,
    radio_plaintext_count,
    run_registration,
    send_app_data,
    trigger,
)
from fivegsim.identity import format_supi
from fivegsim.netsim import Channel
from fivegsim.policy import OperatorPolicy
from fivegsim.worldfile import roaming_world, single_network_world

SHARED_KEYS = ("k_amf", "k_nas_int", "k_nas_enc", "k_gnb")


def test_honest_registration_key_agreement():
    world, builder = single_network_world(seed=1)
    outcome = run_registration(world, "ue1")
    assert outcome.success
    ue = world.entities["ue1"]
    session = find_amf_session(builder.networks["net"].amf, ue)
    for name in SHARED_KEYS:
        assert outcome.ue_context.keys.get(name) == session.context.keys.get(name), name
    assert (outcome.ue_context.nea_id, outcome.ue_context.nia_id) == \
        (session.context.nea_id, session.context.nia_id)


def test_registration_request_carries_suci_never_supi():
    world, _ = single_network_world(seed=2)
    run_registration(world, "ue1")
    ue = world.entities["ue1"]
    requests = [
        messages.decode(e.event.payload)
        for e in world.transcript.delivered({Channel.RADIO_NAS})
        if e.msg_type == "RegistrationRequest"
    ]
    assert requests
    for req in requests:
        suci = __import__("fivegsim.identity", fromlist=["ConcealedIdentity"]) \
            .ConcealedIdentity.from_bytes(req.suci)
        assert suci.scheme.name == "PROFILE_A"
        assert ue.identity.msin.encode() not in req.suci
    assert radio_plaintext_count(world.transcript, ue.identity.msin.encode()) == 0


def test_gnb_never_holds_nas_keys_amf_never_holds_k():
    world, builder = single_network_world(seed=3)
    run_registration(world, "ue1")
    gnb = builder.networks["net"].cells[0]
    radio = next(iter(gnb.ue_contexts.values()))
    assert set(radio.as_keys.keys) == {"k_gnb", "k_rrc_int", "k_rrc_enc",
                                       "k_up_int", "k_up_enc"}
    amf = builder.networks["net"].amf
    ue = world.entities["ue1"]
    session = find_amf_session(amf, ue)
    assert "k_ausf" not in session.context.keys
    assert ue.credential.k not in session.context.keys.keys.values()


def test_supi_reaches_amf_only_with_home_confirmation():
    world, builder = single_network_world(seed=4)
    run_registration(world, "ue1")
    amf = builder.networks["net"].amf
    session = next(iter(amf.sessions.values()))
    assert session.supi == format_supi(world.entities["ue1"].identity)
    confirm_times = [
        e.event.time for e in world.transcript.delivered({Channel.SBI})
        if e.msg_type == "ConfirmResponseSbi" and e.event.dst == amf.entity_id
    ]
    assert confirm_times and session.supi_learned_at == confirm_times[0]


def test_pei_requested_after_security_and_stored():
    world, builder = single_network_world(seed=5)
    run_registration(world, "ue1")
    ue = world.entities["ue1"]
    session = find_amf_session(builder.networks["net"].amf, ue)
    assert session.pei == ue.pei.pei
    # ciphering on by default: the equipment identity never shows on radio
    assert radio_plaintext_count(world.transcript, ue.pei.pei.encode()) == 0


def test_pei_visible_when_nas_ciphering_off():
    world, _ = single_network_world(
        seed=5, policy=OperatorPolicy(nas_ciphering=False))
    outcome = run_registration(world, "ue1")
    assert outcome.success
    ue = world.entities["ue1"]
    assert radio_plaintext_count(world.transcript, ue.pei.pei.encode()) == 1


def test_nsa_attach_sends_imsi_plaintext_once():
    world, builder = single_network_world(seed=6, policy=OperatorPolicy(mode="NSA"))
    outcome = run_registration(world, "ue1")
    assert outcome.success
    ue = world.entities["ue1"]
    imsi = format_supi(ue.identity).encode()
    assert radio_plaintext_count(world.transcript, imsi) == 1
    # user plane flows through the dedicated NSA radio node
    assert establish_user_plane(world, "ue1")
    send_app_data(world, "ue1", b"nsa-payload")
    assert builder.networks["net"].upf.received[-1][1] == b"nsa-payload"


def test_guti_allocated_and_used_for_context():
    world, builder = single_network_world(seed=7)
    run_registration(world, "ue1")
    ue = world.entities["ue1"]
    amf = builder.networks["net"].amf
    assert ue.guti is not None and ue.guti.hex() in amf.contexts


def test_registration_continues_after_single_losses():
    # drop the first RegistrationRequest only: retransmission recovers
    from fivegsim.netsim import Action, AdversaryHook, Capability
    world, _ = single_network_world(seed=8)
    state = {"dropped": False}

    def drop_once(w, hook, event):
        if not state["dropped"] and messages.peek_type(event.payload) == "RegistrationRequest":
            state["dropped"] = True
            return Action(drop=True)
        return None

    world.attach_adversary(AdversaryHook(
        adversary_id="glitch", vantage=frozenset({Channel.RADIO_NAS}),
        capabilities=frozenset({Capability.DROP}), handler=drop_once))
    outcome = run_registration(world, "ue1")
    assert outcome.success and state["dropped"]


def test_unknown_message_is_ignored_not_fatal():
    world, _ = single_network_world(seed=9)
    # a core-side message delivered to a device makes no sense; it is ignored
    world.schedule_message(1, Channel.SBI, "world", "ue1",
                           messages.SmfSessionRequest(session="x", slice_id="embb"),
                           "world")
    world.run_until(10)
    outcome = run_registration(world, "ue1")
    assert outcome.success


# ---------------------------------------------------------------------------
# Reject handling and power cycling
# ---------------------------------------------------------------------------


def _rogue_world(seed, policy=None, cause=3, own_key=True):
    world, builder = single_network_world(seed=seed, policy=policy)
    builder.networks["net"].cells[0].strength = 5
    rogue = builder.add_rogue_cell("rogue-z", "00101", strength=99,
                                   reject_cause=cause, broadcast_own_key=own_key)
    return world, builder, rogue


def test_persistent_reject_locks_plmn_until_power_cycle():
    world, builder, rogue = _rogue_world(seed=10)
    outcome = run_registration(world, "ue1")
    ue = world.entities["ue1"]
    assert outcome.outcome == "rejected_persistent"
    assert ue.phase == UePhase.PERMANENTLY_DEREGISTERED
    assert ue.forbidden_plmns == {"00101"}

    radio_before = sum(1 for _ in world.transcript.delivered(
        {Channel.RADIO_NAS, Channel.RADIO_RRC}))
    second = run_registration(world, "ue1")
    radio_after = sum(1 for _ in world.transcript.delivered(
        {Channel.RADIO_NAS, Channel.RADIO_RRC}))
    assert second.outcome == "no_cell"
    assert radio_before == radio_after  # zero attempts toward the locked plmn

    sqn_before = ue.sqn_window
    trigger(world, "ue1", messages.PowerCycle())
    world.run_until(world.time + 10)
    assert ue.phase == UePhase.DEREGISTERED
    assert ue.forbidden_plmns == set()
    assert ue.sqn_window == sqn_before  # USIM state survives the cycle
    trigger(world, "rogue-z", messages.AdminSetActive(active=False))
    world.run_until(world.time + 10)
    assert run_registration(world, "ue1").success


def test_transient_reject_retries_other_cells():
    world, builder, rogue = _rogue_world(seed=11, cause=22)
    outcome = run_registration(world, "ue1")
    assert outcome.success
    assert world.entities["ue1"].serving_gnb == "cell-a"


def test_signed_reject_blocks_only_cells_with_that_key():
    policy = OperatorPolicy(signed_reject_enabled=True)
    world, builder, rogue = _rogue_world(seed=12, policy=policy)
    # second rogue broadcasting the same key: both must be avoided
    twin = builder.world.entities["rogue-z"]
    second = builder.add_rogue_cell("rogue-y", "00101", strength=80,
                                    reject_cause=3, broadcast_own_key=True)
    second.verification_key = twin.verification_key
    second.reject_signing_key = twin.reject_signing_key
    outcome = run_registration(world, "ue1")
    ue = world.entities["ue1"]
    assert outcome.success
    assert ue.serving_gnb == "cell-a"
    assert ue.phase == UePhase.REGISTERED
    assert twin.verification_key in ue.forbidden_reject_keys
    # rejected by key, not by plmn: the genuine network stayed reachable
    assert ue.forbidden_plmns == set()
    pinned = dict(ue.pinned_network_keys)
    assert pinned  # the serving network's key got pinned on success
    trigger(world, "ue1", messages.PowerCycle())
    world.run_until(world.time + 10)
    assert ue.pinned_network_keys == pinned  # pins survive the cycle
    assert ue.forbidden_reject_keys == set()


def test_unsigned_reject_is_ignored_when_mitigation_on():
    policy = OperatorPolicy(signed_reject_enabled=True)
    world, builder, rogue = _rogue_world(seed=13, policy=policy, own_key=False)
    outcome = run_registration(world, "ue1")
    assert outcome.success
    assert world.entities["ue1"].serving_gnb == "cell-a"


# ---------------------------------------------------------------------------
# Context renewal
# ---------------------------------------------------------------------------


def test_renew_context_directive_logic():
    world, builder = single_network_world(
        seed=14, policy=OperatorPolicy(context_renewal_interval=1000))
    run_registration(world, "ue1", horizon=900)
    amf = builder.networks["net"].amf
    guti = world.entities["ue1"].guti.hex()
    with pytest.raises(UnknownGuti):
        renew_context(amf, "00" * 10, world.time)
    session = amf.sessions[amf.contexts[guti]]
    young = session.context.born_at + 10
    assert renew_context(amf, guti, young) == []
    due = session.context.born_at + 1000
    assert len(renew_context(amf, guti, due)) == 1


def test_renewal_never_interval_produces_no_directives():
    world, builder = single_network_world(seed=14)
    run_registration(world, "ue1")
    amf = builder.networks["net"].amf
    guti = world.entities["ue1"].guti.hex()
    assert renew_context(amf, guti, world.time + 10**9) == []


def test_renewal_replaces_keys_end_to_end():
    world, builder = single_network_world(
        seed=15, policy=OperatorPolicy(context_renewal_interval=3000))
    outcome = run_registration(world, "ue1", horizon=2500)
    assert outcome.success
    ue = world.entities["ue1"]
    old = dict(ue.context.keys.keys)
    old_guti = ue.guti
    world.run_until(world.time + 5_000)
    assert ue.context.keys.get("k_nas_enc") != old["k_nas_enc"]
    assert ue.context.keys.get("k_gnb") != old["k_gnb"]
    assert ue.guti != old_guti
    amf = builder.networks["net"].amf
    session = find_amf_session(amf, ue)
    for name in SHARED_KEYS:
        assert session.context.keys.get(name) == ue.context.keys.get(name)


# ---------------------------------------------------------------------------
# Roaming and interconnect
# ---------------------------------------------------------------------------


def test_roaming_registration_through_proxies():
    world, builder = roaming_world(seed=16)
    outcome = run_registration(world, "ue1")
    assert outcome.success
    serving = builder.networks["serv"]
    session = find_amf_session(serving.amf, world.entities["ue1"])
    assert session.supi == format_supi(world.entities["ue1"].identity)
    sepp_msgs = [e.msg_type for e in world.transcript.delivered({Channel.SEPP_LINK})]
    assert "SeppHello" in sepp_msgs and "SeppForward" in sepp_msgs


def test_establish_interconnect_checks():
    a = Sepp("a-sepp", "00101", bytes(range(32)))
    b = Sepp("b-sepp", "99902", bytes(range(32, 64)))
    with pytest.raises(PeerUnknown):
        establish_interconnect(a, b)
    a.allowlist["99902"] = b.verification_key
    b.allowlist["00101"] = a.verification_key
    assert establish_interconnect(a, b) == ("00101", "99902")
    b.revoke(a.verification_key)
    with pytest.raises(PeerRevoked):
        establish_interconnect(a, b)


def test_forward_coherence_rejects_wrong_network_name():
    sepp = Sepp("h-sepp", "99902", bytes(range(32)))
    request = messages.AuthRequestSbi(session="s1", suci=b"\x00",
                                      serving_network_name="5G:00101")
    sepp.check_forward_coherence(request, "00101")  # matches: no error
    with pytest.raises(NetworkNameMismatch):
        sepp.check_forward_coherence(request, "00199")


# ---------------------------------------------------------------------------
# NF token authorization
# ---------------------------------------------------------------------------


def _nrf():
    nrf = Nrf("nrf", bytes(range(64, 96)))
    nrf.register_consumer("amf-1")
    return nrf


def test_token_round_trip():
    nrf = _nrf()
    token = authorize_nf(nrf, "amf-1", "nsmf-pdusession", now=100)
    producer = NfProducer(service="nsmf-pdusession",
                          nrf_verification_key=nrf.verification_key)
    claim = validate_nf_token(producer, token, now=200)
    assert claim.consumer_id == "amf-1"


def test_token_wrong_audience():
    nrf = _nrf()
    token = authorize_nf(nrf, "amf-1", "nsmf-pdusession", now=100)
    other = NfProducer(service="nudm-sdm",
                       nrf_verification_key=nrf.verification_key)
    with pytest.raises(WrongAudience):
        validate_nf_token(other, token, now=200)


def test_token_expiry():
    nrf = _nrf()
    token = authorize_nf(nrf, "amf-1", "nsmf-pdusession", now=100)
    producer = NfProducer(service="nsmf-pdusession",
                          nrf_verification_key=nrf.verification_key)
    with pytest.raises(TokenExpired):
        validate_nf_token(producer, token, now=100 + nrf.token_ttl)


def test_token_unknown_consumer_and_forgery():
    nrf = _nrf()
    with pytest.raises(UnknownConsumer):
        authorize_nf(nrf, "stranger", "nsmf-pdusession", now=0)
    token = authorize_nf(nrf, "amf-1", "nsmf-pdusession", now=0)
    producer = NfProducer(service="nsmf-pdusession",
                          nrf_verification_key=nrf.verification_key)
    forged = token[:-1] + bytes([token[-1] ^ 1])
    with pytest.raises(InvalidToken):
        validate_nf_token(producer, forged, now=1)


def test_token_flow_over_the_bus():
    world, builder = single_network_world(seed=17)
    net = builder.networks["net"]
    net.nrf.register_consumer("client")

    received = []

    class Client:
        entity_id = "client"

        def step(self, msg, event, ctx):
            received.append(msg)
            if isinstance(msg, messages.NfTokenResponse) and msg.ok:
                ctx.emit(Channel.SBI, net.smf.entity_id, messages.NfServiceRequest(
                    consumer_id="client", service="nsmf-pdusession",
                    token=msg.token))

    world.add_entity(Client())
    world.schedule_message(1, Channel.SBI, "client", net.nrf.entity_id,
                           messages.NfTokenRequest(
                               consumer_id="client",
                               producer_service="nsmf-pdusession"),
                           "entity:client")
    world.run_until(100)
    responses = [m for m in received if isinstance(m, messages.NfServiceResponse)]
    assert responses and responses[0].ok


def test_token_replay_to_wrong_producer_over_the_bus():
    world, builder = single_network_world(seed=18)
    net = builder.networks["net"]
    net.nrf.register_consumer("client")
    token = authorize_nf(net.nrf, "client", "nudm-sdm", now=world.time)

    received = []

    class Client:
        entity_id = "client"

        def step(self, msg, event, ctx):
            received.append(msg)

    world.add_entity(Client())
    world.schedule_message(1, Channel.SBI, "client", net.smf.entity_id,
                           messages.NfServiceRequest(
                               consumer_id="client", service="nsmf-pdusession",
                               token=token),
                           "entity:client")
    world.run_until(100)
    assert received and not received[0].ok
    assert received[0].error == "WrongAudience"


# ---------------------------------------------------------------------------
# AS security and user plane details
# ---------------------------------------------------------------------------


def test_as_keys_match_between_ue_and_cell():
    world, builder = single_network_world(seed=19)
    run_registration(world, "ue1")
    ue = world.entities["ue1"]
    gnb = builder.networks["net"].cells[0]
    radio = next(iter(gnb.ue_contexts.values()))
    for name in ("k_rrc_int", "k_rrc_enc", "k_up_int", "k_up_enc"):
        assert ue.as_keys.get(name) == radio.as_keys.get(name), name
    assert radio.secured


def test_tampered_up_packet_dropped_when_integrity_on():
    from fivegsim.netsim import Action, AdversaryHook, Capability
    policy = OperatorPolicy(up_integrity=True)
    world, builder = single_network_world(seed=20, policy=policy)
    run_registration(world, "ue1")
    establish_user_plane(world, "ue1")

    def corrupt(w, hook, event):
        if messages.peek_type(event.payload) == "SecuredUp":
            msg = messages.decode(event.payload)
            tampered = messages.SecuredUp(
                count=msg.count, direction=msg.direction, nea_id=msg.nea_id,
                nia_id=msg.nia_id, mac_tag=msg.mac_tag,
                body=bytes([msg.body[0] ^ 1]) + msg.body[1:])
            return Action(replace_payload=messages.encode(tampered))
        return None

    world.attach_adversary(AdversaryHook(
        adversary_id="mitm", vantage=frozenset({Channel.RADIO_RRC}),
        capabilities=frozenset({Capability.MODIFY}), handler=corrupt))
    send_app_data(world, "ue1", b"genuine-bytes")
    assert builder.networks["net"].upf.received == []


def test_roaming_data_routing_flag_moves_upf():
    world, builder = roaming_world(seed=21)
    run_registration(world, "ue1")
    establish_user_plane(world, "ue1")
    send_app_data(world, "ue1", b"breakout-bytes")
    assert builder.networks["serv"].upf.received
    assert not builder.networks["home"].upf.received

    world2, builder2 = roaming_world(seed=21, home_routed_data=True)
    run_registration(world2, "ue1")
    establish_user_plane(world2, "ue1")
    send_app_data(world2, "ue1", b"home-routed-bytes")
    assert builder2.networks["home"].upf.received
    assert not builder2.networks["serv"].upf.received


def test_power_cycle_from_registered_drops_context():
    world, _ = single_network_world(seed=22)
    assert run_registration(world, "ue1").success
    ue = world.entities["ue1"]
    sqn = ue.sqn_window
    trigger(world, "ue1", messages.PowerCycle())
    world.run_until(world.time + 10)
    assert ue.phase == UePhase.DEREGISTERED
    assert ue.context is None and ue.as_keys is None and ue.guti is None
    assert ue.sqn_window == sqn
    assert run_registration(world, "ue1").success


def test_garbage_injection_never_crashes_entities():
    # hostile bytes at every entity on its own channels: explicit ignores
    world, builder = single_network_world(seed=23)
    targets = [
        (Channel.RADIO_NAS, "ue1"), (Channel.RADIO_RRC, "ue1"),
        (Channel.RADIO_NAS, "cell-a"), (Channel.RADIO_RRC, "cell-a"),
        (Channel.N2, "net-amf"), (Channel.SBI, "net-ausf"),
        (Channel.SBI, "net-udm"), (Channel.SBI, "net-smf"),
        (Channel.N3, "net-upf"), (Channel.SEPP_LINK, "net-amf"),
    ]
    for i, (channel, dst) in enumerate(targets):
        world.schedule(2 + i, channel, "attacker", dst, b"\xde\xad" * (i + 1),
                       "adversary:fuzz")
        # well-framed but contextually nonsensical messages too
        world.schedule(2 + i, channel, "attacker", dst,
                       messages.encode(messages.InitialContextSetupResponse(
                           ran_ue_id=999)),
                       "adversary:fuzz")
        world.schedule(2 + i, channel, "attacker", dst,
                       messages.encode(messages.SecuredNas(
                           count=0, direction=1, nea_id=0, nia_id=2,
                           mac_tag=b"\x00" * 4, body=b"\xff\xff")),
                       "adversary:fuzz")
    assert run_registration(world, "ue1").success


def test_replayed_protected_message_is_ignored():
    from fivegsim.netsim import Action, AdversaryHook, Capability
    world, builder = single_network_world(seed=24)
    replayer_state = {}

    def capture_and_replay(w, hook, event):
        if messages.peek_type(event.payload) == "SecuredNas" and \
                "done" not in replayer_state:
            replayer_state["done"] = True
            return Action(inject=[(50, event.channel, event.src, event.dst,
                                   event.payload)])
        return None

    world.attach_adversary(AdversaryHook(
        adversary_id="replayer", vantage=frozenset({Channel.RADIO_NAS}),
        capabilities=frozenset({Capability.OBSERVE, Capability.INJECT}),
        handler=capture_and_replay))
    outcome = run_registration(world, "ue1")
    assert outcome.success and replayer_state.get("done")
    # the duplicate was delivered but changed nothing: keys still agree
    session = find_amf_session(builder.networks["net"].amf,
                               world.entities["ue1"])
    assert session.context.keys.get("k_nas_enc") == \
        outcome.ue_context.keys.get("k_nas_enc")
