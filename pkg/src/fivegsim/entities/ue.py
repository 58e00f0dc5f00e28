"""User equipment state machine.

Drives registration (standalone and legacy-attach), challenge/response
verification on the USIM, NAS and AS security mode setup, reject-cause
handling (including the signed-reject and blacklist mitigations), power
cycling and user-plane traffic.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .. import crypto, messages
from ..identity import (
    EquipmentIdentity,
    KeyHierarchy,
    LongTermCredential,
    SecurityContext,
    SubscriberIdentity,
    SuciScheme,
    format_supi,
)
from ..netsim import Channel
from ..policy import cause_is_persistent
from .base import Entity, try_decode

REG_TIMER_MS = 200
MAX_RETRANSMISSIONS = 2


class UePhase(enum.Enum):
    DEREGISTERED = "deregistered"
    REGISTRATION_INITIATED = "registration_initiated"
    AUTHENTICATING = "authenticating"
    NAS_SECURED = "nas_secured"
    REGISTERED = "registered"
    PERMANENTLY_DEREGISTERED = "permanently_deregistered"


@dataclass
class UeConfig:
    slice_id: str = "embb"
    mode: str = "SA"  # "SA" or "NSA"
    suci_scheme: SuciScheme = SuciScheme.PROFILE_A
    signed_reject_enabled: bool = False
    nsa_up_node: str = ""  # user-plane radio node in NSA mode


@dataclass
class Attempt:
    attempt_id: int
    target_cell: str
    started_at: int
    cells: list = field(default_factory=list)
    excluded: set = field(default_factory=set)
    cell: messages.CellInfo | None = None
    ran_ue_id: int = -1
    c_rnti: bytes = b""
    ue_nonce: bytes = b""
    awaiting: str | None = None
    last_send: tuple | None = None  # (channel, dst, msg)
    retries: int = MAX_RETRANSMISSIONS
    timer_id: int = -1
    rejects_seen: int = 0


class Ue(Entity):
    def __init__(
        self,
        entity_id: str,
        identity: SubscriberIdentity,
        pei: EquipmentIdentity,
        credential: LongTermCredential,
        home_public: crypto.HomeNetworkKeyPair | None,
        config: UeConfig | None = None,
    ):
        super().__init__(entity_id)
        self.identity = identity
        self.pei = pei
        self.credential = credential
        self.home_public = home_public
        self.config = config or UeConfig()

        self.phase = UePhase.DEREGISTERED
        self.sqn_window = 0
        self.attempt: Attempt | None = None
        self.attempts_log: list[dict] = []
        self._attempt_seq = 0
        self._timer_seq = 0

        self.context: SecurityContext | None = None
        self.as_keys: KeyHierarchy | None = None
        self.as_nea = 0
        self.as_nia = 0
        self.rrc_count_ul = 0
        self.rrc_count_dl = 0
        self.up_active = False
        self.up_nea = 0
        self.up_nia = 0
        self.up_count_ul = 0

        self.guti: bytes | None = None
        self.serving_gnb: str | None = None
        self.serving_plmn: str | None = None
        self.up_node: str | None = None

        self.forbidden_plmns: set[str] = set()
        self.forbidden_reject_keys: set[bytes] = set()
        self.pinned_network_keys: dict[str, bytes] = {}

        # transient auth state
        self._pending_rand: bytes | None = None
        self._pending_k_ausf: bytes | None = None
        self._pending_abba: bytes = b"\x00\x00"
        self._pending_ngksi: int = 0
        self._renewing = False

    # -- helpers -------------------------------------------------------------

    @property
    def home_plmn(self) -> str:
        return self.identity.plmn

    def _serving_network_name(self, plmn: str) -> str:
        prefix = "4G" if self.config.mode == "NSA" else "5G"
        return f"{prefix}:{plmn}"

    def _new_timer(self, ctx) -> int:
        self._timer_seq += 1
        ctx.timer(REG_TIMER_MS, self._timer_seq)
        return self._timer_seq

    def _send_awaiting(self, ctx, channel, dst, msg, awaiting: str) -> None:
        attempt = self.attempt
        attempt.awaiting = awaiting
        attempt.last_send = (channel, dst, msg)
        attempt.timer_id = self._new_timer(ctx)
        ctx.emit(channel, dst, msg)

    def _finish_attempt(self, outcome: str, ctx=None) -> None:
        if self.attempt is None:
            return
        self.attempts_log.append({
            "attempt_id": self.attempt.attempt_id,
            "outcome": outcome,
            "cell": self.attempt.cell.cell_id if self.attempt.cell else None,
            "started_at": self.attempt.started_at,
        })
        if outcome != "registered" and self.phase not in (
            UePhase.REGISTERED, UePhase.PERMANENTLY_DEREGISTERED
        ):
            self.phase = UePhase.DEREGISTERED
        self.attempt = None

    def last_outcome(self) -> str | None:
        return self.attempts_log[-1]["outcome"] if self.attempts_log else None

    # -- registration trigger and cell selection ------------------------------

    def on_trigger_registration(self, msg, event, ctx) -> None:
        if self.attempt is not None:
            return  # one attempt at a time
        if self.phase == UePhase.REGISTERED:
            return
        self._attempt_seq += 1
        self.attempt = Attempt(
            attempt_id=self._attempt_seq,
            target_cell=msg.target_cell,
            started_at=ctx.now,
        )
        self.attempt.awaiting = "scan"
        ctx.emit(Channel.INTERNAL, "__ether__", messages.CellScanRequest())

    def _candidate_cells(self) -> list[messages.CellInfo]:
        attempt = self.attempt
        wanted_kind = "lte" if self.config.mode == "NSA" else "nr"
        blacklist: set[str] = set()
        for cell in attempt.cells:
            blacklist.update(cell.blacklist)
        out = []
        for cell in attempt.cells:
            if cell.kind != wanted_kind:
                continue
            if cell.plmn in self.forbidden_plmns:
                continue
            if cell.cell_id in attempt.excluded:
                continue
            if cell.cell_id in blacklist:
                continue
            if cell.verification_key and cell.verification_key in self.forbidden_reject_keys:
                continue
            if attempt.target_cell and cell.cell_id != attempt.target_cell:
                continue
            out.append(cell)
        return out

    def _select_and_access(self, ctx) -> None:
        candidates = self._candidate_cells()
        if not candidates:
            self._finish_attempt("no_cell", ctx)
            return
        candidates.sort(key=lambda c: (-c.strength, c.cell_id))
        cell = candidates[0]
        attempt = self.attempt
        attempt.cell = cell
        attempt.c_rnti = ctx.rng("crnti").take(2)
        attempt.ue_nonce = ctx.rng("nonce").take(8)
        self._send_awaiting(
            ctx, Channel.RADIO_RRC, cell.cell_id,
            messages.RrcConnectionRequest(
                c_rnti=attempt.c_rnti,
                slice_id=self.config.slice_id,
                ue_nonce=attempt.ue_nonce,
            ),
            "rrc_setup",
        )

    def on_cell_scan_response(self, msg, event, ctx) -> None:
        attempt = self.attempt
        if attempt is None or attempt.awaiting != "scan":
            ctx.ignore()
            return
        attempt.cells = msg.cells
        self._select_and_access(ctx)

    # -- RRC connection --------------------------------------------------------

    def on_rrc_connection_setup(self, msg, event, ctx) -> None:
        attempt = self.attempt
        if attempt is None or attempt.awaiting != "rrc_setup" or \
                attempt.cell is None or event.src != attempt.cell.cell_id:
            ctx.ignore()
            return
        attempt.ran_ue_id = msg.ran_ue_id
        self.phase = UePhase.REGISTRATION_INITIATED
        if self.config.mode == "NSA":
            request = messages.AttachRequest4G(
                imsi=format_supi(self.identity),
                slice_id=self.config.slice_id,
                ue_nonce=attempt.ue_nonce,
            )
        else:
            suci = crypto.conceal_supi(
                self.identity, self.home_public, self.config.suci_scheme,
                ctx.rng("ecies").take(32),
            )
            request = messages.RegistrationRequest(
                suci=suci.to_bytes(),
                slice_id=self.config.slice_id,
                ue_nonce=attempt.ue_nonce,
            )
        self._send_awaiting(ctx, Channel.RADIO_NAS, attempt.cell.cell_id,
                            request, "auth_request")

    def on_rrc_connection_reject(self, msg, event, ctx) -> None:
        if self.attempt is None:
            ctx.ignore()
            return
        self._finish_attempt(f"rrc_rejected:{msg.cause}", ctx)

    # -- pre-security reject handling -------------------------------------------

    def on_registration_reject(self, msg, event, ctx) -> None:
        attempt = self.attempt
        if attempt is None or attempt.cell is None or \
                event.src != attempt.cell.cell_id:
            ctx.ignore()
            return
        cell = attempt.cell
        persistent = cause_is_persistent(msg.cause)
        if self.config.signed_reject_enabled:
            authentic = False
            if msg.signature and cell.verification_key:
                authentic = crypto.verify_reject(
                    cell.verification_key, msg.cause, cell.cell_id,
                    attempt.ue_nonce, msg.signature,
                )
                pinned = self.pinned_network_keys.get(cell.plmn)
                if pinned is not None and pinned != cell.verification_key:
                    authentic = False  # key does not match the pinned one
            if authentic:
                if persistent:
                    # scope of the lockout is the signing key, not the plmn
                    self.forbidden_reject_keys.add(cell.verification_key)
                attempt.excluded.add(cell.cell_id)
            else:
                # unauthenticated reject: disregard it, avoid only this cell
                attempt.excluded.add(cell.cell_id)
            attempt.rejects_seen += 1
            if attempt.rejects_seen > 8:
                self._finish_attempt("rejected", ctx)
                return
            self._select_and_access(ctx)
            return
        # legacy behavior: an unauthenticated reject is honored
        if persistent:
            self.forbidden_plmns.add(cell.plmn)
            self.phase = UePhase.PERMANENTLY_DEREGISTERED
            self._finish_attempt("rejected_persistent", ctx)
            return
        attempt.excluded.add(cell.cell_id)
        attempt.rejects_seen += 1
        if attempt.rejects_seen > 2:
            self._finish_attempt("rejected", ctx)
            return
        self._select_and_access(ctx)

    # -- authentication ----------------------------------------------------------

    def on_authentication_request(self, msg, event, ctx) -> None:
        renewal = self.phase == UePhase.REGISTERED
        attempt = self.attempt
        if not renewal and (attempt is None or attempt.awaiting != "auth_request"):
            ctx.ignore()
            return
        reply_dst = event.src
        try:
            res, new_window = crypto.ue_verify_challenge(
                self.credential, msg.rand, crypto.Autn.from_bytes(msg.autn),
                self.sqn_window,
            )
        except crypto.MacMismatch:
            ctx.emit(Channel.RADIO_NAS, reply_dst,
                     messages.AuthenticationFailure(cause="MacMismatch"))
            if not renewal:
                self._finish_attempt("auth_failure_mac", ctx)
            return
        except crypto.SqnStale:
            ctx.emit(Channel.RADIO_NAS, reply_dst,
                     messages.AuthenticationFailure(cause="SqnStale"))
            if not renewal:
                self._finish_attempt("auth_failure_sqn", ctx)
            return
        self.sqn_window = new_window
        plmn = self.serving_plmn if renewal else attempt.cell.plmn
        self._pending_rand = msg.rand
        self._pending_abba = msg.abba
        self._pending_ngksi = msg.ngksi
        self._pending_k_ausf = crypto.ue_k_ausf(
            self.credential, msg.rand, self._serving_network_name(plmn)
        )
        self._renewing = renewal
        if not renewal:
            self.phase = UePhase.AUTHENTICATING
            self._send_awaiting(ctx, Channel.RADIO_NAS, attempt.cell.cell_id,
                                messages.AuthenticationResponse(res=res), "nas_smc")
        else:
            ctx.emit(Channel.RADIO_NAS, reply_dst,
                     messages.AuthenticationResponse(res=res))

    def on_authentication_reject(self, msg, event, ctx) -> None:
        if self.attempt is None:
            ctx.ignore()
            return
        self._finish_attempt("auth_rejected", ctx)

    # -- NAS security ----------------------------------------------------------

    def _serving_cell_plmn(self) -> str:
        if self.attempt is not None and self.attempt.cell is not None:
            return self.attempt.cell.plmn
        return self.serving_plmn or self.home_plmn

    def _handle_nas_smc(self, wrapper, smc, ctx, reply_dst) -> None:
        if self._pending_k_ausf is None:
            ctx.ignore()
            return
        keys = crypto.derive_key_chain(
            self._pending_k_ausf,
            self._serving_network_name(self._serving_cell_plmn()),
            format_supi(self.identity),
            self._pending_abba,
            smc.nea_id,
            smc.nia_id,
        )
        try:
            crypto.unprotect(
                crypto.ProtectedMessage(ciphertext=wrapper.body, mac_tag=wrapper.mac_tag),
                0, wrapper.nia_id, None, keys.get("k_nas_int"), 1, wrapper.count,
            )
        except crypto.IntegrityFailure:
            ctx.ignore()
            return
        context = SecurityContext(
            ng_ksi=smc.ngksi, keys=keys, nea_id=smc.nea_id, nia_id=smc.nia_id,
            abba=self._pending_abba, born_at=ctx.now,
        )
        context.accept_dl(wrapper.count)
        self.context = context
        self.up_active = False
        complete = messages.NasSecurityModeComplete(
            pei=self.pei.pei if smc.request_pei else ""
        )
        self._emit_secured_nas(ctx, reply_dst, complete)
        if self._renewing:
            self._renewing = False
            # fresh AS keys follow via a new context setup on the radio side
            return
        self.phase = UePhase.NAS_SECURED
        if self.attempt is not None:
            self.attempt.awaiting = "as_smc"
            self.attempt.timer_id = self._new_timer(ctx)

    def _emit_secured_nas(self, ctx, dst, inner) -> None:
        context = self.context
        count = context.next_ul()
        protected = crypto.protect(
            messages.encode(inner), context.nea_id, context.nia_id,
            context.keys.get("k_nas_enc"), context.keys.get("k_nas_int"),
            0, count,
        )
        ctx.emit(Channel.RADIO_NAS, dst, messages.SecuredNas(
            count=count, direction=0, nea_id=context.nea_id,
            nia_id=context.nia_id, mac_tag=protected.mac_tag,
            body=protected.ciphertext,
        ))

    def on_secured_nas(self, wrapper, event, ctx) -> None:
        if wrapper.direction != 1:
            ctx.ignore()
            return
        reply_dst = event.src
        if wrapper.nea_id == 0:
            inner = try_decode(wrapper.body)
            if isinstance(inner, messages.NasSecurityModeCommand):
                self._handle_nas_smc(wrapper, inner, ctx, reply_dst)
                return
        if self.context is None:
            ctx.ignore()
            return
        context = self.context
        if (wrapper.nea_id, wrapper.nia_id) != (context.nea_id, context.nia_id):
            ctx.ignore()
            return
        if wrapper.count < context.nas_count_dl:
            ctx.ignore()  # replayed or out-of-order: never processed twice
            return
        try:
            payload = crypto.unprotect(
                crypto.ProtectedMessage(ciphertext=wrapper.body, mac_tag=wrapper.mac_tag),
                context.nea_id, context.nia_id,
                context.keys.get("k_nas_enc"), context.keys.get("k_nas_int"),
                1, wrapper.count,
            )
        except crypto.IntegrityFailure:
            ctx.ignore()
            return
        context.accept_dl(wrapper.count)
        inner = try_decode(payload)
        if inner is None:
            ctx.ignore()
            return
        if isinstance(inner, messages.RegistrationAccept):
            self.guti = inner.guti
            self.phase = UePhase.REGISTERED
            if self.attempt is not None:
                self.serving_gnb = self.attempt.cell.cell_id
                self.serving_plmn = self.attempt.cell.plmn
                key = self.attempt.cell.verification_key
                if key:
                    self.pinned_network_keys.setdefault(self.attempt.cell.plmn, key)
                self._finish_attempt("registered", ctx)
            if self.config.mode == "NSA" and self.config.nsa_up_node:
                self.up_node = self.config.nsa_up_node
            else:
                self.up_node = self.serving_gnb
        elif isinstance(inner, messages.PduSessionAccept):
            self.up_nea = 2 if inner.up_ciphering else 0
            self.up_nia = 2 if inner.up_integrity else 0
            self.up_count_ul = 0
            self.up_active = True
        else:
            ctx.ignore()

    # -- AS security -------------------------------------------------------------

    def on_secured_rrc(self, wrapper, event, ctx) -> None:
        if wrapper.direction != 1 or self.context is None:
            ctx.ignore()
            return
        if wrapper.nea_id == 0:
            inner = try_decode(wrapper.body)
            if isinstance(inner, messages.AsSecurityModeCommand):
                keys = crypto.derive_as_keys(
                    self.context.keys.get("k_gnb"), inner.nea_id, inner.nia_id
                )
                try:
                    crypto.unprotect(
                        crypto.ProtectedMessage(ciphertext=wrapper.body,
                                                mac_tag=wrapper.mac_tag),
                        0, wrapper.nia_id, None, keys.get("k_rrc_int"),
                        1, wrapper.count,
                    )
                except crypto.IntegrityFailure:
                    ctx.ignore()
                    return
                self.as_keys = keys
                self.as_nea = inner.nea_id
                self.as_nia = inner.nia_id
                self.rrc_count_ul = 0
                self.rrc_count_dl = wrapper.count + 1
                complete = messages.encode(messages.AsSecurityModeComplete())
                count = self.rrc_count_ul
                self.rrc_count_ul += 1
                protected = crypto.protect(
                    complete, self.as_nea, self.as_nia,
                    keys.get("k_rrc_enc"), keys.get("k_rrc_int"), 0, count,
                )
                ctx.emit(Channel.RADIO_RRC, event.src, messages.SecuredRrc(
                    count=count, direction=0, nea_id=self.as_nea,
                    nia_id=self.as_nia, mac_tag=protected.mac_tag,
                    body=protected.ciphertext,
                ))
                if self.attempt is not None:
                    self.attempt.awaiting = "reg_accept"
                    self.attempt.timer_id = self._new_timer(ctx)
                return
        ctx.ignore()

    # -- user plane ---------------------------------------------------------------

    def on_trigger_pdu_session(self, msg, event, ctx) -> None:
        if self.phase != UePhase.REGISTERED or self.context is None:
            ctx.ignore()
            return
        self._emit_secured_nas(
            ctx, self.serving_gnb,
            messages.PduSessionRequest(slice_id=self.config.slice_id),
        )

    def on_trigger_app_data(self, msg, event, ctx) -> None:
        if not self.up_active or self.as_keys is None:
            ctx.ignore()
            return
        count = self.up_count_ul
        self.up_count_ul += 1
        protected = crypto.protect(
            messages.encode(messages.AppData(payload=msg.payload)),
            self.up_nea, self.up_nia,
            self.as_keys.get("k_up_enc"), self.as_keys.get("k_up_int"),
            0, count,
        )
        ctx.emit(Channel.RADIO_RRC, self.up_node or self.serving_gnb,
                 messages.SecuredUp(
                     count=count, direction=0, nea_id=self.up_nea,
                     nia_id=self.up_nia, mac_tag=protected.mac_tag,
                     body=protected.ciphertext,
                 ))

    # -- power cycle and timers ------------------------------------------------------

    def on_power_cycle(self, msg, event, ctx) -> None:
        self.phase = UePhase.DEREGISTERED
        self.forbidden_plmns.clear()
        self.forbidden_reject_keys.clear()
        self.context = None
        self.as_keys = None
        self.up_active = False
        self.guti = None
        self.serving_gnb = None
        self.serving_plmn = None
        self.attempt = None
        self._pending_k_ausf = None
        self._renewing = False

    def on_timer_fired(self, msg, event, ctx) -> None:
        attempt = self.attempt
        if attempt is None or attempt.timer_id != msg.timer_id:
            ctx.ignore()
            return
        if attempt.awaiting in (None, "scan"):
            ctx.ignore()
            return
        if attempt.last_send is None:
            self._finish_attempt("timeout", ctx)
            return
        if attempt.retries > 0:
            attempt.retries -= 1
            channel, dst, message = attempt.last_send
            attempt.timer_id = self._new_timer(ctx)
            ctx.emit(channel, dst, message)
            return
        self._finish_attempt("timeout", ctx)
