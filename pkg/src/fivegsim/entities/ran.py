"""Radio access nodes: genuine gNBs, legacy eNBs, NSA user-plane nodes and
rogue cells.

A genuine node forwards NAS traffic between the radio and its core,
derives radio-level keys from the key handed over in the context setup,
and never holds NAS keys.  A rogue node answers registration attempts
with a reject cause of its choosing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .. import crypto, messages
from ..identity import KeyHierarchy
from ..netsim import Channel
from .base import Entity, try_decode


@dataclass
class SliceAdmission:
    """Token-counter admission control per network slice."""

    capacity: int
    reserved: dict[str, int] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)

    def admit(self, slice_id: str) -> bool:
        used = self.counts.get(slice_id, 0)
        if used < self.reserved.get(slice_id, 0):
            self.counts[slice_id] = used + 1
            return True
        free_pool = self.capacity - sum(self.reserved.values())
        free_used = sum(
            max(0, n - self.reserved.get(s, 0)) for s, n in self.counts.items()
        )
        if free_used < free_pool:
            self.counts[slice_id] = used + 1
            return True
        return False


@dataclass
class RadioUeContext:
    ue_id: str
    c_rnti: bytes
    slice_id: str
    as_keys: KeyHierarchy | None = None
    nea_id: int = 0
    nia_id: int = 0
    up_nea: int = 0
    up_nia: int = 0
    rrc_count_dl: int = 0
    rrc_count_ul: int = 0
    up_count_ul: int = 0
    secured: bool = False


class GnbNode(Entity):
    def __init__(
        self,
        entity_id: str,
        plmn: str,
        kind: str = "gnb",  # gnb | enb | engnb | rogue
        strength: int = 10,
        amf_id: str = "",
        upf_id: str = "",
        verification_key: bytes = b"",
        blacklist: list[str] | None = None,
        reject_cause: int | None = None,
        reject_signing_key: bytes = b"",
        admission: SliceAdmission | None = None,
        jam_suppression_enabled: bool = False,
    ):
        super().__init__(entity_id)
        self.plmn = plmn
        self.kind = kind
        self.strength = strength
        self.amf_id = amf_id
        self.upf_id = upf_id
        self.verification_key = verification_key
        self.blacklist = blacklist or []
        self.reject_cause = reject_cause
        self.reject_signing_key = reject_signing_key
        self.admission = admission
        self.jam_suppression_enabled = jam_suppression_enabled
        self.active = True
        self.ue_contexts: dict[int, RadioUeContext] = {}
        self.by_ue: dict[str, int] = {}
        self._next_ran_ue_id = 1

    # -- broadcast -------------------------------------------------------------

    def broadcast_info(self) -> messages.CellInfo | None:
        if not self.active or self.kind == "engnb":
            return None
        radio = "lte" if self.kind == "enb" else "nr"
        return messages.CellInfo(
            cell_id=self.entity_id,
            plmn=self.plmn,
            strength=self.strength,
            kind=radio,
            verification_key=self.verification_key,
            blacklist=list(self.blacklist),
        )

    def on_admin_set_active(self, msg, event, ctx) -> None:
        self.active = msg.active

    # -- radio access ------------------------------------------------------------

    def _ue_ctx(self, ue_id: str) -> RadioUeContext | None:
        rid = self.by_ue.get(ue_id)
        return self.ue_contexts.get(rid) if rid is not None else None

    def on_rrc_connection_request(self, msg, event, ctx) -> None:
        if not self.active:
            ctx.ignore()
            return
        if self.admission is not None and not self.admission.admit(msg.slice_id):
            ctx.emit(Channel.RADIO_RRC, event.src,
                     messages.RrcConnectionReject(cause="congestion"))
            return
        rid = self.by_ue.get(event.src)
        if rid is None:
            rid = self._next_ran_ue_id
            self._next_ran_ue_id += 1
            self.by_ue[event.src] = rid
        self.ue_contexts[rid] = RadioUeContext(
            ue_id=event.src, c_rnti=msg.c_rnti, slice_id=msg.slice_id
        )
        ctx.emit(Channel.RADIO_RRC, event.src,
                 messages.RrcConnectionSetup(c_rnti=msg.c_rnti, ran_ue_id=rid))

    # -- NAS transport ------------------------------------------------------------

    def _forward_initial(self, nas_bytes: bytes, event, ctx) -> None:
        radio = self._ue_ctx(event.src)
        if radio is None:
            ctx.ignore()
            return
        ctx.emit(Channel.N2, self.amf_id, messages.InitialUeMessage(
            ran_ue_id=self.by_ue[event.src],
            cell_id=self.entity_id,
            plmn=self.plmn,
            ue_radio_ref=event.src,
            nas=nas_bytes,
        ))

    def on_registration_request(self, msg, event, ctx) -> None:
        if self.reject_cause is not None:
            signature = b""
            if self.reject_signing_key:
                signature = crypto.sign_reject(
                    self.reject_signing_key, self.reject_cause,
                    self.entity_id, msg.ue_nonce,
                )
            ctx.emit(Channel.RADIO_NAS, event.src, messages.RegistrationReject(
                cause=self.reject_cause, signature=signature,
            ))
            return
        self._forward_initial(messages.encode(msg), event, ctx)

    def on_attach_request_4g(self, msg, event, ctx) -> None:
        if self.reject_cause is not None:
            signature = b""
            if self.reject_signing_key:
                signature = crypto.sign_reject(
                    self.reject_signing_key, self.reject_cause,
                    self.entity_id, msg.ue_nonce,
                )
            ctx.emit(Channel.RADIO_NAS, event.src, messages.RegistrationReject(
                cause=self.reject_cause, signature=signature,
            ))
            return
        self._forward_initial(messages.encode(msg), event, ctx)

    def _forward_uplink(self, msg, event, ctx) -> None:
        radio = self._ue_ctx(event.src)
        if radio is None or not self.amf_id:
            ctx.ignore()
            return
        ctx.emit(Channel.N2, self.amf_id, messages.UplinkNas(
            ran_ue_id=self.by_ue[event.src], nas=messages.encode(msg),
        ))

    on_authentication_response = _forward_uplink
    on_authentication_failure = _forward_uplink
    on_secured_nas = _forward_uplink

    def on_downlink_nas(self, msg, event, ctx) -> None:
        radio = self.ue_contexts.get(msg.ran_ue_id)
        if radio is None:
            ctx.ignore()
            return
        ctx.emit_raw(Channel.RADIO_NAS, radio.ue_id, msg.nas)

    # -- AS security --------------------------------------------------------------

    def on_initial_context_setup_request(self, msg, event, ctx) -> None:
        radio = self.ue_contexts.get(msg.ran_ue_id)
        if radio is None:
            # NSA user-plane node: context arrives without a prior RRC setup
            radio = RadioUeContext(ue_id=msg.ue_radio_ref, c_rnti=b"\x00\x00",
                                   slice_id="")
            self.ue_contexts[msg.ran_ue_id] = radio
            self.by_ue[msg.ue_radio_ref] = msg.ran_ue_id
        radio.as_keys = crypto.derive_as_keys(msg.k_gnb, msg.nea_id, msg.nia_id)
        radio.nea_id = msg.nea_id
        radio.nia_id = msg.nia_id
        radio.rrc_count_dl = 0
        radio.rrc_count_ul = 0
        radio.secured = False
        ctx.emit(Channel.N2, event.src,
                 messages.InitialContextSetupResponse(ran_ue_id=msg.ran_ue_id))
        smc = messages.encode(messages.AsSecurityModeCommand(
            nea_id=msg.nea_id, nia_id=msg.nia_id,
        ))
        count = radio.rrc_count_dl
        radio.rrc_count_dl += 1
        protected = crypto.protect(
            smc, 0, msg.nia_id, None, radio.as_keys.get("k_rrc_int"), 1, count,
        )
        ctx.emit(Channel.RADIO_RRC, radio.ue_id, messages.SecuredRrc(
            count=count, direction=1, nea_id=0, nia_id=msg.nia_id,
            mac_tag=protected.mac_tag, body=protected.ciphertext,
        ))

    def on_secured_rrc(self, wrapper, event, ctx) -> None:
        radio = self._ue_ctx(event.src)
        if radio is None or radio.as_keys is None or wrapper.direction != 0:
            ctx.ignore()
            return
        try:
            payload = crypto.unprotect(
                crypto.ProtectedMessage(ciphertext=wrapper.body, mac_tag=wrapper.mac_tag),
                wrapper.nea_id, wrapper.nia_id,
                radio.as_keys.get("k_rrc_enc"), radio.as_keys.get("k_rrc_int"),
                0, wrapper.count,
            )
        except crypto.IntegrityFailure:
            ctx.ignore()
            return
        radio.rrc_count_ul = wrapper.count + 1
        inner = try_decode(payload)
        if isinstance(inner, messages.AsSecurityModeComplete):
            radio.secured = True
            if self.amf_id:
                ctx.emit(Channel.N2, self.amf_id,
                         messages.UeContextActive(ran_ue_id=self.by_ue[event.src]))
        else:
            ctx.ignore()

    def on_pdu_resource_setup(self, msg, event, ctx) -> None:
        radio = self.ue_contexts.get(msg.ran_ue_id)
        if radio is None:
            ctx.ignore()
            return
        radio.up_nea = 2 if msg.up_ciphering else 0
        radio.up_nia = 2 if msg.up_integrity else 0
        radio.up_count_ul = 0

    def on_secured_up(self, wrapper, event, ctx) -> None:
        radio = self._ue_ctx(event.src)
        if radio is None or radio.as_keys is None or wrapper.direction != 0:
            ctx.ignore()
            return
        try:
            payload = crypto.unprotect(
                crypto.ProtectedMessage(ciphertext=wrapper.body, mac_tag=wrapper.mac_tag),
                wrapper.nea_id, wrapper.nia_id,
                radio.as_keys.get("k_up_enc"), radio.as_keys.get("k_up_int"),
                0, wrapper.count,
            )
        except crypto.IntegrityFailure:
            ctx.ignore()
            return
        radio.up_count_ul = wrapper.count + 1
        inner = try_decode(payload)
        if isinstance(inner, messages.AppData) and self.upf_id:
            ctx.emit(Channel.N3, self.upf_id, messages.GtpData(
                teid=self.by_ue[event.src], payload=inner.payload,
            ))
