"""Executable threat scenarios TS_01..TS_12.

Each scenario builds a world, places an adversary, runs to quiescence and
evaluates named boolean outcome predicates.  Compromise-based scenarios
start from an instantaneous capability grant (stolen key material or a
removed node) with the attack cost carried as metadata only; what the
adversary then achieves is computed exclusively from bytes it observed
plus the granted material.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import crypto, messages
from .entities import Sepp
from .entities.ran import SliceAdmission
from .flows import run_registration
from .identity import LongTermCredential, format_supi
from .netsim import (
    Action,
    AdversaryHook,
    Capability,
    Channel,
    JamWindow,
    Knowledge,
    RADIO_CHANNELS,
    World,
)
from .policy import CAUSE_ILLEGAL_UE, OperatorPolicy, POLICY_KEYS, parse_policy_value
from .risk import Impact, Likelihood, RiskCell, place
from .worldfile import WorldBuilder


class UnknownScenario(KeyError):
    pass


class InvalidOverride(ValueError):
    pass


@dataclass(frozen=True)
class ThreatScenario:
    scenario_id: str
    title: str
    stride: str  # subset of "STRIDE", canonical letter order
    assets: tuple[str, ...]
    likelihood: Likelihood | tuple[Likelihood, Likelihood]
    impact: Impact | tuple[Impact, Impact]
    predicates: tuple[str, ...]
    mitigations: tuple[str, ...]
    threat_agents: str
    attack_cost: str
    extra_overrides: tuple[str, ...] = ()


@dataclass
class ScenarioReport:
    scenario_id: str
    seed: int
    outcome: dict[str, bool]
    transcript_sha256: str
    risk: RiskCell
    overrides: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario_id,
            "seed": self.seed,
            "outcome": self.outcome,
            "transcript_sha256": self.transcript_sha256,
            "risk": {
                "likelihood": self.risk.likelihood.label,
                "impact": self.risk.impact.label,
                "level": self.risk.level.label,
            },
            "overrides": {k: str(v) for k, v in self.overrides.items()},
        }


_L = Likelihood
_I = Impact

CATALOG: dict[str, ThreatScenario] = {s.scenario_id: s for s in [
    ThreatScenario(
        "TS_01", "Subscriber key database theft",
        "STRIDE", ("Long term keys of UEs in a given network",),
        _L.UNLIKELY, _I.CRITICAL,
        ("all_subscriber_traffic_decryptable", "network_impersonation"),
        (),
        "malicious or blackmailed employee; criminal organization buyer",
        "insider access to the subscriber database plus HSM extraction time",
    ),
    ThreatScenario(
        "TS_02", "Roaming partner impersonation with a stolen gateway key",
        "SRIE", ("Private key used by a SEPP to authenticate to other networks",),
        _L.UNLIKELY, _I.VERY_HIGH,
        ("impersonation_as_stolen_plmn", "supi_disclosed_to_attacker",
         "other_network_name_refused", "name_mismatch_detected"),
        ("revoke_stolen_sepp",),
        "criminal organizations, foreign government agencies",
        "~50k side-channel/fault lab work against the proxy key, plus rogue infrastructure",
        extra_overrides=("revoke_stolen_sepp",),
    ),
    ThreatScenario(
        "TS_03", "Subscriber key extraction from one UICC",
        "SRIDE", ("Device keys", "Data transmitted or received by a device",
                  "Device service continuity"),
        _L.UNLIKELY, _I.HIGH,
        ("target_traffic_decrypted", "other_devices_unaffected"),
        (),
        "security researchers, criminal organizations, government agencies",
        "up to 1M invasive hardware attack, one device per attack",
    ),
    ThreatScenario(
        "TS_04", "Security context dump from the mobile equipment",
        "SRIDE", ("Device security context", "Data confidentiality and integrity"),
        _L.PROBABLE, _I.HIGH,
        ("context_extracted", "attacker_decrypts_later_traffic"),
        ("context_renewal_interval",),
        "opportunistic hackers, criminals, security researchers",
        "malware with sufficient privilege on the ME; no hardware lab needed",
    ),
    ThreatScenario(
        "TS_05", "Persistent lockout through reject causes from a rogue cell",
        "D", ("Service availability",),
        _L.PROBABLE, _I.MODERATE,
        ("dos_persistent", "recovered_after_power_cycle", "reattached_to_genuine"),
        ("signed_reject_enabled", "blacklist_rogue"),
        "criminal and terrorist organizations",
        "~5k software-defined radio with a minimal cell implementation",
        extra_overrides=("blacklist_rogue",),
    ),
    ThreatScenario(
        "TS_06", "Identity catching on the radio link",
        "I", ("Location tracking",),
        _L.VERY_PROBABLE, _I.MODERATE,
        ("pei_captured", "supi_captured", "home_network_learned"),
        ("nas_ciphering",),
        "criminals, terrorist organizations, foreign government agencies",
        "~1k passive radio interception",
    ),
    ThreatScenario(
        "TS_07", "Jamming a cell's random access",
        "D", ("Service availability",),
        _L.PROBABLE, _I.MODERATE,
        ("jam_window_timeout", "post_window_success"),
        ("jam_suppression_enabled",),
        "criminals",
        "~5k directional jammer or modified device spamming access slots",
    ),
    ThreatScenario(
        "TS_08", "Compromised cell software",
        "TRIDE", ("Service availability", "Data confidentiality and integrity",
                  "Device location"),
        _L.PROBABLE, (_I.HIGH, _I.CATASTROPHIC),
        ("up_traffic_exposed", "nas_protected_from_gnb", "dos_possible"),
        (),
        "malicious insiders at the vendor, exploit developers, state actors",
        "firmware implant or remotely exploitable vulnerability in the cell",
    ),
    ThreatScenario(
        "TS_09", "Compromised core network function",
        "TRID", ("Service availability", "Data confidentiality and integrity"),
        _L.UNLIKELY, _I.VERY_HIGH,
        ("nas_traffic_exposed", "root_key_not_exposed"),
        (),
        "opportunistic hackers, criminal organizations, government agencies",
        "software exploit against a core function or its hypervisor",
    ),
    ThreatScenario(
        "TS_10", "Link-protection key lifting between network functions",
        "TI", ("Device data",),
        _L.VERY_PROBABLE, _I.HIGH,
        ("k_gnb_extracted", "up_traffic_exposed"),
        (),
        "criminals, hackers, security researchers",
        "software key-extraction against the link endpoints",
    ),
    ThreatScenario(
        "TS_11", "Cell theft or physical takedown",
        "D", ("Service availability", "Network performance"),
        _L.VERY_PROBABLE, _I.MODERATE,
        ("coverage_lost", "service_maintained"),
        ("overlap_cell",),
        "hacktivists",
        "physical access to an insufficiently protected site",
        extra_overrides=("overlap_cell",),
    ),
    ThreatScenario(
        "TS_12", "Priority-slice resource exhaustion",
        "D", ("Network performance",),
        (_L.UNLIKELY, _L.PROBABLE), _I.MODERATE,
        ("victim_slice_starved", "priority_slice_unaffected"),
        ("reserved_for_victim",),
        "criminals, terrorists, an abusive sharing partner",
        "a fleet of devices admitted to the favored slice",
        extra_overrides=("reserved_for_victim",),
    ),
]}

SCENARIO_IDS = tuple(sorted(CATALOG))


def list_scenarios() -> list[ThreatScenario]:
    """The ordered catalog TS_01..TS_12."""
    return [CATALOG[sid] for sid in SCENARIO_IDS]


# ---------------------------------------------------------------------------
# Adversary-side analytics (operate on observed bytes + granted material)
# ---------------------------------------------------------------------------


def _decode_all(payloads: list[bytes]) -> list:
    out = []
    for payload in payloads:
        try:
            out.append(messages.decode(payload))
        except Exception:
            pass
    return out


def _auth_params(decoded: list) -> list[tuple[bytes, bytes]]:
    return [(m.rand, m.abba) for m in decoded
            if isinstance(m, messages.AuthenticationRequest)]


def _smc_params(decoded: list) -> list[tuple[int, int]]:
    params = []
    for m in decoded:
        if isinstance(m, messages.SecuredNas) and m.nea_id == 0:
            try:
                inner = messages.decode(m.body)
            except Exception:
                continue
            if isinstance(inner, messages.NasSecurityModeCommand):
                params.append((inner.nea_id, inner.nia_id))
    return params


def _as_smc_params(decoded: list) -> list[tuple[int, int]]:
    params = []
    for m in decoded:
        if isinstance(m, messages.SecuredRrc) and m.nea_id == 0:
            try:
                inner = messages.decode(m.body)
            except Exception:
                continue
            if isinstance(inner, messages.AsSecurityModeCommand):
                params.append((inner.nea_id, inner.nia_id))
    return params


def _candidate_chains(decoded: list, k: bytes, supi: str, sn_name: str) -> list:
    """Every key chain derivable from a stolen long-term key plus the
    parameters visible in the captured exchange."""
    cred = LongTermCredential(k=k, sqn=1)
    chains = []
    for rand, abba in _auth_params(decoded):
        k_ausf = crypto.ue_k_ausf(cred, rand, sn_name)
        for nea, nia in set(_smc_params(decoded)) or {(2, 2)}:
            chains.append(crypto.derive_key_chain(k_ausf, sn_name, supi, abba, nea, nia))
    return chains


def _try_unprotect_nas(wrapper: messages.SecuredNas, keys) -> bytes | None:
    key_enc = keys.get("k_nas_enc")
    key_int = keys.get("k_nas_int")
    if (wrapper.nea_id != 0 and key_enc is None) or \
       (wrapper.nia_id != 0 and key_int is None):
        return None  # the adversary simply lacks the material
    try:
        return crypto.unprotect(
            crypto.ProtectedMessage(ciphertext=wrapper.body, mac_tag=wrapper.mac_tag),
            wrapper.nea_id, wrapper.nia_id,
            key_enc, key_int,
            wrapper.direction, wrapper.count,
        )
    except crypto.IntegrityFailure:
        return None


def recover_peis(observed: list[bytes], k: bytes, supi: str, sn_name: str) -> set[str]:
    """Offline attack: with a stolen subscriber key, walk the captured radio
    exchange and decrypt whatever security-mode-complete messages verify."""
    decoded = _decode_all(observed)
    recovered = set()
    for chain in _candidate_chains(decoded, k, supi, sn_name):
        for m in decoded:
            if not isinstance(m, messages.SecuredNas) or m.direction != 0:
                continue
            payload = _try_unprotect_nas(m, chain)
            if payload is None:
                continue
            try:
                inner = messages.decode(payload)
            except Exception:
                continue
            if isinstance(inner, messages.NasSecurityModeComplete) and inner.pei:
                recovered.add(inner.pei)
    return recovered


def decrypt_up_payloads(observed: list[bytes], as_keys_list: list) -> list[bytes]:
    """Attempt user-plane decryption with each candidate radio key set."""
    decoded = _decode_all(observed)
    out = []
    for keys in as_keys_list:
        key_enc = keys.get("k_up_enc")
        key_int = keys.get("k_up_int")
        for m in decoded:
            if not isinstance(m, messages.SecuredUp):
                continue
            if (m.nea_id != 0 and key_enc is None) or \
               (m.nia_id != 0 and key_int is None):
                continue
            try:
                payload = crypto.unprotect(
                    crypto.ProtectedMessage(ciphertext=m.body, mac_tag=m.mac_tag),
                    m.nea_id, m.nia_id, key_enc, key_int,
                    m.direction, m.count,
                )
            except crypto.IntegrityFailure:
                continue
            try:
                inner = messages.decode(payload)
            except Exception:
                continue
            if isinstance(inner, messages.AppData):
                out.append(inner.payload)
    return out


def _observer(adversary_id: str, channels, capabilities=None,
              handler=None, cost_note: str = "") -> AdversaryHook:
    return AdversaryHook(
        adversary_id=adversary_id,
        vantage=frozenset(channels),
        capabilities=frozenset(capabilities or {Capability.OBSERVE}),
        knowledge=Knowledge(),
        handler=handler,
        cost_note=cost_note,
    )


# ---------------------------------------------------------------------------
# Scenario runners
# ---------------------------------------------------------------------------

HORIZON = 30_000
_MARKER_A = b"meter-reading-0042"
_MARKER_B = b"meter-reading-0043"


def _base_policy(overrides: dict, **scenario_defaults) -> OperatorPolicy:
    policy = OperatorPolicy(**scenario_defaults)
    policy_overrides = {k: v for k, v in overrides.items() if k in POLICY_KEYS}
    return policy.with_overrides(**policy_overrides) if policy_overrides else policy


def _script_registration(world: World, ue_id: str, at: int) -> None:
    world.schedule(at, Channel.INTERNAL, "world", ue_id,
                   messages.encode(messages.TriggerRegistration(target_cell="")),
                   "world")


def _script_msg(world: World, dst: str, msg, at: int) -> None:
    world.schedule(at, Channel.INTERNAL, "world", dst,
                   messages.encode(msg), "world")


def _run_ts01(seed: int, overrides: dict) -> tuple[World, dict]:
    policy = _base_policy(overrides)
    builder = WorldBuilder(seed)
    genuine = builder.add_network("net", "00101", policy)
    builder.add_cell(genuine, "cell-a", strength=10)
    rogue_net = builder.add_network("rog", "00101", policy)
    rogue_cell = builder.add_cell(rogue_net, "rog-cell", strength=99)
    rogue_cell.active = False
    ue = builder.add_ue("ue1", genuine)
    spy = _observer("insider", RADIO_CHANNELS,
                    {Capability.OBSERVE, Capability.IMPERSONATE},
                    cost_note=CATALOG["TS_01"].attack_cost)
    world = builder.world
    world.attach_adversary(spy)

    _script_registration(world, "ue1", 10)
    _script_msg(world, "ue1", messages.TriggerPduSession(), 1000)
    _script_msg(world, "ue1", messages.TriggerAppData(payload=_MARKER_A), 1500)

    def steal(w: World) -> None:
        db = {supi: cred.k for supi, cred in genuine.udm.subscribers.items()}
        spy.knowledge.grant("udm_db", db)
        spy.knowledge.grant("home_private", genuine.udm.home_keypair)
        rogue_net.udm.subscribers = {
            supi: LongTermCredential(k=c.k, sqn=c.sqn)
            for supi, c in genuine.udm.subscribers.items()
        }
        rogue_net.udm.home_keypair = genuine.udm.home_keypair
        rogue_cell.active = True

    world.schedule_action(2000, "udm-database-theft", steal)
    _script_msg(world, "ue1", messages.PowerCycle(), 2100)
    _script_registration(world, "ue1", 2500)
    world.run_until(HORIZON)

    supi = format_supi(ue.identity)
    stolen_k = spy.knowledge.keys["udm_db"][supi]
    peis = recover_peis(spy.knowledge.payloads(), stolen_k, supi, "5G:00101")
    outcome = {
        "all_subscriber_traffic_decryptable": ue.pei.pei in peis,
        "network_impersonation": (
            ue.phase.value == "registered" and ue.serving_gnb == "rog-cell"
        ),
    }
    return world, outcome


def _run_ts02(seed: int, overrides: dict) -> tuple[World, dict]:
    policy = _base_policy(overrides)
    builder = WorldBuilder(seed)
    home = builder.add_network("home", "99902", policy)
    builder.add_sepp(home)
    partner = builder.add_network("partner", "00101", policy)
    builder.add_sepp(partner)
    # the attacker's serving network presents the partner's stolen key
    atk = builder.add_network("atk", "00101", policy)
    stolen_seed = partner.sepp.signing_seed
    atk_sepp = Sepp("atk-sepp", "00101", stolen_seed,
                    peers={"99902": home.sepp.entity_id},
                    allowlist={"99902": home.sepp.verification_key})
    builder.world.add_entity(atk_sepp)
    atk.sepp = atk_sepp
    atk.amf.sepp_id = atk_sepp.entity_id
    builder.add_cell(atk, "atk-cell", strength=10)
    home.sepp.allowlist["00101"] = partner.sepp.verification_key
    home.sepp.peers["00101"] = atk_sepp.entity_id
    ue1 = builder.add_ue("ue1", home, msin="1000000001")
    ue2 = builder.add_ue("ue2", home, msin="1000000002")
    world = builder.world
    if overrides.get("revoke_stolen_sepp"):
        home.sepp.revoke(partner.sepp.verification_key)

    _script_registration(world, "ue1", 10)
    _script_msg(world, atk.amf.entity_id,
                messages.AdminSetNetworkName(serving_network_name="5G:00199"), 5000)
    _script_registration(world, "ue2", 5100)
    world.run_until(HORIZON)

    supi1 = format_supi(ue1.identity)
    outcome = {
        "impersonation_as_stolen_plmn": (
            ue1.phase.value == "registered" and ue1.serving_gnb == "atk-cell"
        ),
        "supi_disclosed_to_attacker": any(
            s.supi == supi1 for s in atk.amf.sessions.values()
        ),
        "other_network_name_refused": ue2.phase.value != "registered",
        "name_mismatch_detected": "NetworkNameMismatch" in home.sepp.rejections,
    }
    return world, outcome


def _run_ts03(seed: int, overrides: dict) -> tuple[World, dict]:
    policy = _base_policy(overrides)
    builder = WorldBuilder(seed)
    net = builder.add_network("net", "00101", policy)
    builder.add_cell(net, "cell-a", strength=10)
    ue1 = builder.add_ue("ue1", net, msin="1000000001")
    ue2 = builder.add_ue("ue2", net, msin="1000000002")
    spy = _observer("lab", RADIO_CHANNELS,
                    cost_note=CATALOG["TS_03"].attack_cost)
    spy.knowledge.grant("stolen_k", ue1.credential.k)
    spy.knowledge.grant("stolen_supi", format_supi(ue1.identity))
    world = builder.world
    world.attach_adversary(spy)

    _script_registration(world, "ue1", 10)
    _script_msg(world, "ue1", messages.TriggerPduSession(), 1000)
    _script_msg(world, "ue1", messages.TriggerAppData(payload=_MARKER_A), 1500)
    _script_registration(world, "ue2", 3000)
    _script_msg(world, "ue2", messages.TriggerPduSession(), 4000)
    _script_msg(world, "ue2", messages.TriggerAppData(payload=_MARKER_B), 4500)
    world.run_until(HORIZON)

    peis = recover_peis(
        spy.knowledge.payloads(),
        spy.knowledge.keys["stolen_k"],
        spy.knowledge.keys["stolen_supi"],
        "5G:00101",
    )
    outcome = {
        "target_traffic_decrypted": ue1.pei.pei in peis,
        "other_devices_unaffected": ue2.pei.pei not in peis,
    }
    return world, outcome


def _run_ts04(seed: int, overrides: dict) -> tuple[World, dict]:
    policy = _base_policy(overrides)
    builder = WorldBuilder(seed)
    net = builder.add_network("net", "00101", policy)
    builder.add_cell(net, "cell-a", strength=10)
    ue = builder.add_ue("ue1", net)
    spy = _observer("malware", RADIO_CHANNELS,
                    cost_note=CATALOG["TS_04"].attack_cost)
    world = builder.world
    world.attach_adversary(spy)

    _script_registration(world, "ue1", 10)
    _script_msg(world, "ue1", messages.TriggerPduSession(), 1000)
    _script_msg(world, "ue1", messages.TriggerAppData(payload=_MARKER_A), 1500)

    def dump_context(w: World) -> None:
        if ue.context is not None:
            spy.knowledge.grant("nas_keys", dict(ue.context.keys.keys))
        if ue.as_keys is not None:
            spy.knowledge.grant("as_keys", dict(ue.as_keys.keys))

    world.schedule_action(4000, "me-context-dump", dump_context)
    _script_msg(world, "ue1", messages.TriggerPduSession(), 8000)
    _script_msg(world, "ue1", messages.TriggerAppData(payload=_MARKER_B), 8500)
    world.run_until(HORIZON)

    stolen = spy.knowledge.keys.get("as_keys", {})

    class _StolenKeys:
        def get(self, name):
            return stolen.get(name)

    late_up = decrypt_up_payloads(
        spy.knowledge.payloads(after=8000), [_StolenKeys()]
    )
    outcome = {
        "context_extracted": bool(stolen),
        "attacker_decrypts_later_traffic": _MARKER_B in late_up,
    }
    return world, outcome


def _run_ts05(seed: int, overrides: dict) -> tuple[World, dict]:
    policy = _base_policy(overrides)
    builder = WorldBuilder(seed)
    net = builder.add_network("net", "00101", policy)
    blacklist = ["rogue-z"] if overrides.get("blacklist_rogue") else None
    builder.add_cell(net, "cell-a", strength=5, blacklist=blacklist)
    rogue = builder.add_rogue_cell(
        "rogue-z", "00101", strength=99,
        reject_cause=CAUSE_ILLEGAL_UE, broadcast_own_key=True,
    )
    ue = builder.add_ue("ue1", net)
    world = builder.world
    probe: dict = {}

    _script_registration(world, "ue1", 10)
    _script_registration(world, "ue1", 2000)

    def snapshot(w: World) -> None:
        probe["phase"] = ue.phase.value
        probe["serving"] = ue.serving_gnb

    world.schedule_action(3900, "pre-powercycle-probe", snapshot)
    _script_msg(world, "rogue-z", messages.AdminSetActive(active=False), 4000)
    _script_msg(world, "ue1", messages.PowerCycle(), 4100)
    _script_registration(world, "ue1", 5000)
    world.run_until(HORIZON)

    outcome = {
        "dos_persistent": probe.get("phase") == "permanently_deregistered",
        "recovered_after_power_cycle": ue.phase.value == "registered",
        "reattached_to_genuine": (
            probe.get("phase") == "registered" and probe.get("serving") == "cell-a"
        ),
    }
    return world, outcome


def _run_ts06(seed: int, overrides: dict) -> tuple[World, dict]:
    policy = _base_policy(overrides, nas_ciphering=False)
    builder = WorldBuilder(seed)
    net = builder.add_network("net", "00101", policy)
    builder.add_cell(net, "cell-a", strength=10)
    ue = builder.add_ue("ue1", net)
    spy = _observer("catcher", RADIO_CHANNELS,
                    cost_note=CATALOG["TS_06"].attack_cost)
    world = builder.world
    world.attach_adversary(spy)

    _script_registration(world, "ue1", 10)
    world.run_until(HORIZON)

    from .identity import ConcealedIdentity
    home_learned = any(
        isinstance(m, messages.RegistrationRequest)
        and ConcealedIdentity.from_bytes(m.suci).plmn == ue.identity.plmn
        for m in _decode_all(spy.knowledge.payloads())
    )
    outcome = {
        "pei_captured": spy.knowledge.contains(ue.pei.pei.encode()),
        "supi_captured": spy.knowledge.contains(ue.identity.msin.encode()),
        "home_network_learned": home_learned,
    }
    return world, outcome


def _run_ts07(seed: int, overrides: dict) -> tuple[World, dict]:
    policy = _base_policy(overrides)
    builder = WorldBuilder(seed)
    net = builder.add_network("net", "00101", policy)
    builder.add_cell(net, "cell-a", strength=10)
    ue = builder.add_ue("ue1", net)
    world = builder.world
    world.apply_jam(JamWindow(target_cell="cell-a", t_start=0, t_end=3000,
                              kind="RachLogical", suppressed=True))

    first = run_registration(world, "ue1", horizon=2800)
    second = run_registration(world, "ue1", horizon=5000)
    outcome = {
        "jam_window_timeout": first.outcome == "timeout",
        "post_window_success": second.success or first.success,
    }
    return world, outcome


def _run_ts08(seed: int, overrides: dict) -> tuple[World, dict]:
    policy = _base_policy(overrides)
    builder = WorldBuilder(seed)
    net = builder.add_network("net", "00101", policy)
    cell = builder.add_cell(net, "cell-a", strength=10)
    ue1 = builder.add_ue("ue1", net, msin="1000000001")
    ue2 = builder.add_ue("ue2", net, msin="1000000002")
    world = builder.world

    def tampered_cell(w: World, hook, event):
        if 6000 <= w.time < 12000 and "cell-a" in (event.src, event.dst):
            return Action(drop=True)
        return None

    spy = _observer(
        "implant", RADIO_CHANNELS,
        {Capability.OBSERVE, Capability.DROP}, handler=tampered_cell,
        cost_note=CATALOG["TS_08"].attack_cost,
    )
    world.attach_adversary(spy)

    _script_registration(world, "ue1", 10)
    _script_msg(world, "ue1", messages.TriggerPduSession(), 1000)

    def lift_radio_keys(w: World) -> None:
        for radio in cell.ue_contexts.values():
            if radio.ue_id == "ue1" and radio.as_keys is not None:
                spy.knowledge.grant("gnb_keys", dict(radio.as_keys.keys))

    world.schedule_action(4000, "gnb-key-lift", lift_radio_keys)
    _script_msg(world, "ue1", messages.TriggerAppData(payload=_MARKER_A), 4500)
    _script_registration(world, "ue2", 6100)
    world.run_until(HORIZON)

    stolen = spy.knowledge.keys.get("gnb_keys", {})

    class _Stolen:
        def get(self, name):
            return stolen.get(name)

    up = decrypt_up_payloads(spy.knowledge.payloads(), [_Stolen()])
    nas_cracked = False
    for m in _decode_all(spy.knowledge.payloads()):
        if isinstance(m, messages.SecuredNas) and m.nea_id != 0:
            if _try_unprotect_nas(m, _Stolen()) is not None:
                nas_cracked = True
    outcome = {
        "up_traffic_exposed": _MARKER_A in up,
        "nas_protected_from_gnb": not nas_cracked,
        "dos_possible": ue2.last_outcome() == "timeout",
    }
    return world, outcome


def _run_ts09(seed: int, overrides: dict) -> tuple[World, dict]:
    policy = _base_policy(overrides)
    builder = WorldBuilder(seed)
    net = builder.add_network("net", "00101", policy)
    builder.add_cell(net, "cell-a", strength=10)
    ue = builder.add_ue("ue1", net)
    spy = _observer("nf-implant", RADIO_CHANNELS,
                    cost_note=CATALOG["TS_09"].attack_cost)
    world = builder.world
    world.attach_adversary(spy)

    _script_registration(world, "ue1", 10)

    def dump_amf(w: World) -> None:
        for session in net.amf.sessions.values():
            if session.context is not None:
                spy.knowledge.grant("amf_keys", dict(session.context.keys.keys))

    world.schedule_action(4000, "amf-context-dump", dump_amf)
    _script_msg(world, "ue1", messages.TriggerPduSession(), 5000)
    world.run_until(HORIZON)

    stolen = spy.knowledge.keys.get("amf_keys", {})

    class _Stolen:
        def get(self, name):
            return stolen.get(name)

    nas_cracked = False
    for m in _decode_all(spy.knowledge.payloads(after=4000)):
        if isinstance(m, messages.SecuredNas):
            payload = _try_unprotect_nas(m, _Stolen())
            if payload is not None and m.nea_id != 0:
                nas_cracked = True
    outcome = {
        "nas_traffic_exposed": nas_cracked,
        "root_key_not_exposed": (
            "k_ausf" not in stolen and ue.credential.k not in stolen.values()
        ),
    }
    return world, outcome


def _run_ts10(seed: int, overrides: dict) -> tuple[World, dict]:
    policy = _base_policy(overrides)  # links protected by default
    builder = WorldBuilder(seed)
    net = builder.add_network("net", "00101", policy)
    builder.add_cell(net, "cell-a", strength=10)
    builder.add_ue("ue1", net)
    spy = _observer(
        "link-tap",
        set(RADIO_CHANNELS) | {Channel.N2, Channel.N3},
        cost_note=CATALOG["TS_10"].attack_cost,
    )
    spy.knowledge.grant("link:N2", b"lifted")
    spy.knowledge.grant("link:N3", b"lifted")
    world = builder.world
    world.attach_adversary(spy)

    _script_registration(world, "ue1", 10)
    _script_msg(world, "ue1", messages.TriggerPduSession(), 1000)
    _script_msg(world, "ue1", messages.TriggerAppData(payload=_MARKER_A), 1500)
    world.run_until(HORIZON)

    k_gnb = None
    alg = (2, 2)
    for m in _decode_all(spy.knowledge.payloads(Channel.N2)):
        if isinstance(m, messages.InitialContextSetupRequest):
            k_gnb = m.k_gnb
            alg = (m.nea_id, m.nia_id)
    chains = []
    if k_gnb is not None:
        chains.append(crypto.derive_as_keys(k_gnb, *alg))
    up = decrypt_up_payloads(spy.knowledge.payloads(), chains)
    outcome = {
        "k_gnb_extracted": k_gnb is not None,
        "up_traffic_exposed": _MARKER_A in up,
    }
    return world, outcome


def _run_ts11(seed: int, overrides: dict) -> tuple[World, dict]:
    policy = _base_policy(overrides)
    builder = WorldBuilder(seed)
    net = builder.add_network("net", "00101", policy)
    builder.add_cell(net, "cell-a", strength=10)
    if overrides.get("overlap_cell"):
        builder.add_cell(net, "cell-b", strength=7)
    ue = builder.add_ue("ue1", net)
    world = builder.world

    _script_msg(world, "cell-a", messages.AdminSetActive(active=False), 100)
    _script_registration(world, "ue1", 200)
    world.run_until(HORIZON)

    outcome = {
        "coverage_lost": ue.last_outcome() == "no_cell",
        "service_maintained": ue.phase.value == "registered",
    }
    return world, outcome


def _run_ts12(seed: int, overrides: dict) -> tuple[World, dict]:
    policy = _base_policy(overrides)
    reserved_victim = int(overrides.get("reserved_for_victim", 0))
    capacity = 10
    reserved = {"slice-a": capacity - reserved_victim}
    if reserved_victim:
        reserved["slice-b"] = reserved_victim
    builder = WorldBuilder(seed)
    net = builder.add_network("net", "00101", policy)
    builder.add_cell(net, "cell-a", strength=10,
                     admission=SliceAdmission(capacity=capacity, reserved=reserved))
    world = builder.world
    flood = _observer("botnet", RADIO_CHANNELS,
                      {Capability.OBSERVE, Capability.INJECT},
                      cost_note=CATALOG["TS_12"].attack_cost)
    world.attach_adversary(flood)

    rng = world.streams.stream("ts12:inject")
    for i in range(10):
        world.schedule(100 + i, Channel.RADIO_RRC, f"bot{i}", "cell-a",
                       messages.encode(messages.RrcConnectionRequest(
                           c_rnti=rng.take(2), slice_id="slice-a",
                           ue_nonce=rng.take(8))),
                       f"adversary:{flood.adversary_id}")
    for i in range(4):
        world.schedule(200 + i, Channel.RADIO_RRC, f"victim{i}", "cell-a",
                       messages.encode(messages.RrcConnectionRequest(
                           c_rnti=rng.take(2), slice_id="slice-b",
                           ue_nonce=rng.take(8))),
                       f"adversary:{flood.adversary_id}")
    world.run_until(HORIZON)

    granted = {"bot": 0, "victim": 0}
    for entry in world.transcript.delivered({Channel.RADIO_RRC}):
        if entry.msg_type == "RrcConnectionSetup":
            for prefix in granted:
                if entry.event.dst.startswith(prefix):
                    granted[prefix] += 1
    outcome = {
        "victim_slice_starved": granted["victim"] == 0,
        "priority_slice_unaffected": granted["bot"] == 10,
    }
    return world, outcome


_RUNNERS = {
    "TS_01": _run_ts01, "TS_02": _run_ts02, "TS_03": _run_ts03,
    "TS_04": _run_ts04, "TS_05": _run_ts05, "TS_06": _run_ts06,
    "TS_07": _run_ts07, "TS_08": _run_ts08, "TS_09": _run_ts09,
    "TS_10": _run_ts10, "TS_11": _run_ts11, "TS_12": _run_ts12,
}


def _normalize_overrides(scenario: ThreatScenario, overrides: dict | None) -> dict:
    if not overrides:
        return {}
    allowed = set(POLICY_KEYS) | set(scenario.extra_overrides)
    out = {}
    for key, value in overrides.items():
        if key not in allowed:
            raise InvalidOverride(
                f"{key!r} is not a valid override for {scenario.scenario_id}")
        if key in POLICY_KEYS:
            out[key] = parse_policy_value(key, value) if isinstance(value, str) else value
        elif isinstance(value, str):
            low = value.lower()
            out[key] = (low in ("true", "1", "yes", "on")) if low in (
                "true", "false", "1", "0", "yes", "no", "on", "off"
            ) else int(value)
        else:
            out[key] = value
    return out


def run_scenario(scenario_id: str, overrides: dict | None = None,
                 seed: int = 0) -> ScenarioReport:
    """Build, run and evaluate one scenario; deterministic under the seed."""
    scenario = CATALOG.get(scenario_id)
    if scenario is None:
        raise UnknownScenario(scenario_id)
    normalized = _normalize_overrides(scenario, overrides)
    world, outcome = _RUNNERS[scenario_id](seed, normalized)
    missing = set(scenario.predicates) - set(outcome)
    if missing:
        raise AssertionError(f"{scenario_id} left predicates unset: {missing}")
    return ScenarioReport(
        scenario_id=scenario_id,
        seed=seed,
        outcome={k: outcome[k] for k in scenario.predicates},
        transcript_sha256=world.transcript.sha256(),
        risk=place(scenario_id, scenario.likelihood, scenario.impact),
        overrides=normalized,
    )


def scenario_matrix(ids=None, seeds=(0,), overrides=None) -> dict:
    """Run each (scenario, seed) pair and aggregate outcomes and placements."""
    ids = list(ids) if ids is not None else list(SCENARIO_IDS)
    rows = []
    for scenario_id in ids:
        if scenario_id not in CATALOG:
            raise UnknownScenario(scenario_id)
    for scenario_id in ids:
        reports = [run_scenario(scenario_id, overrides, seed) for seed in seeds]
        rates = {}
        for name in CATALOG[scenario_id].predicates:
            hits = sum(1 for r in reports if r.outcome[name])
            rates[name] = hits / len(reports) if reports else 0.0
        rows.append({
            "scenario": scenario_id,
            "seeds": list(seeds),
            "predicate_rates": rates,
            "risk": reports[0].risk if reports else place(
                scenario_id, CATALOG[scenario_id].likelihood,
                CATALOG[scenario_id].impact),
            "reports": reports,
        })
    return {"rows": rows}
