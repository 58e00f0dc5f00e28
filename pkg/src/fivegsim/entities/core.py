"""Core network functions: AMF/SEAF, AUSF, UDM, SMF, UPF and the NRF
token-authorization service."""

from __future__ import annotations

from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from .. import crypto, messages
from ..identity import (
    ConcealedIdentity,
    GutiAllocator,
    LongTermCredential,
    SecurityContext,
    SuciScheme,
    UnsupportedScheme,
    format_supi,
    parse_supi,
)
from ..netsim import Channel
from ..policy import OperatorPolicy
from .base import Entity, try_decode


class UnknownGuti(KeyError):
    """renew_context was asked about a context the AMF does not hold."""


@dataclass
class RenewalDirective:
    guti: str
    session: str


@dataclass
class AmfSession:
    sid: str
    gnb: str
    ran_ue_id: int
    ue_radio_ref: str
    suci: bytes
    slice_id: str
    state: str = "new"
    nsa: bool = False
    rand: bytes = b""
    autn: bytes = b""
    hxres: bytes = b""
    k_seaf: bytes = b""
    xres: bytes = b""  # NSA only: legacy direct check
    k_ausf: bytes = b""  # NSA only
    ngksi: int = 0
    supi: str | None = None
    supi_learned_at: int | None = None
    pei: str = ""
    context: SecurityContext | None = None
    guti: bytes | None = None
    renewing: bool = False
    sbi_sid: str = ""
    up_node: str = ""


class Amf(Entity):
    """Access and mobility management with the security anchor inside.

    Holds k_seaf/k_amf and the NAS keys after a successful authentication,
    never the long-term key; learns the permanent identity only from the
    home network's confirmation.
    """

    def __init__(
        self,
        entity_id: str,
        plmn: str,
        policy: OperatorPolicy,
        ausf_id: str = "",
        udm_id: str = "",
        smf_id: str = "",
        sepp_id: str = "",
        engnb_id: str = "",
        serving_network_name: str = "",
        abba: bytes = b"\x00\x00",
    ):
        super().__init__(entity_id)
        self.plmn = plmn
        self.policy = policy
        self.ausf_id = ausf_id
        self.udm_id = udm_id
        self.smf_id = smf_id
        self.sepp_id = sepp_id
        self.engnb_id = engnb_id
        prefix = "4G" if policy.mode == "NSA" else "5G"
        self.serving_network_name = serving_network_name or f"{prefix}:{plmn}"
        self.abba = abba
        self.sessions: dict[str, AmfSession] = {}
        self.by_ran: dict[tuple[str, int], str] = {}
        self.by_sbi: dict[str, str] = {}
        self.contexts: dict[str, str] = {}  # guti hex -> session id
        self._session_seq = 0
        self._sbi_seq = 0
        self._timer_seq = 0
        self._timers: dict[int, tuple] = {}
        self._guti_alloc: GutiAllocator | None = None

    # -- helpers ---------------------------------------------------------------

    def on_admin_set_network_name(self, msg, event, ctx) -> None:
        self.serving_network_name = msg.serving_network_name

    def _allocator(self, ctx) -> GutiAllocator:
        if self._guti_alloc is None:
            self._guti_alloc = GutiAllocator(ctx.rng("guti"))
        return self._guti_alloc

    def _auth_route(self, suci_plmn: str) -> str:
        if self.policy.mode == "NSA":
            return self.udm_id
        if suci_plmn != self.plmn and self.sepp_id:
            return self.sepp_id
        return self.ausf_id

    def _new_sbi_sid(self, session: AmfSession) -> str:
        self._sbi_seq += 1
        sbi_sid = f"{self.entity_id}-a{self._sbi_seq}"
        session.sbi_sid = sbi_sid
        self.by_sbi[sbi_sid] = session.sid
        return sbi_sid

    def _downlink(self, ctx, session: AmfSession, nas_bytes: bytes) -> None:
        ctx.emit(Channel.N2, session.gnb, messages.DownlinkNas(
            ran_ue_id=session.ran_ue_id, nas=nas_bytes,
        ))

    def _start_authentication(self, ctx, session: AmfSession) -> None:
        sbi_sid = self._new_sbi_sid(session)
        session.state = "auth_pending"
        if self.policy.mode == "NSA":
            ctx.emit(Channel.SBI, self.udm_id, messages.UdmAuthRequest(
                session=sbi_sid, suci=session.suci,
                serving_network_name=self.serving_network_name,
            ))
            return
        suci = ConcealedIdentity.from_bytes(session.suci)
        ctx.emit(Channel.SBI, self._auth_route(suci.plmn), messages.AuthRequestSbi(
            session=sbi_sid, suci=session.suci,
            serving_network_name=self.serving_network_name,
        ))

    # -- registration entry ------------------------------------------------------

    def on_initial_ue_message(self, msg, event, ctx) -> None:
        inner = try_decode(msg.nas)
        if inner is None:
            ctx.ignore()
            return
        self._session_seq += 1
        sid = f"{self.entity_id}-s{self._session_seq}"
        if isinstance(inner, messages.RegistrationRequest):
            suci_bytes = inner.suci
            nsa = False
        elif isinstance(inner, messages.AttachRequest4G):
            # legacy attach: identity arrives in clear; wrap it in the
            # null-scheme container so the subscriber lookup is uniform
            ident = parse_supi(inner.imsi)
            suci_bytes = crypto.conceal_supi(ident, None, SuciScheme.NULL).to_bytes()
            nsa = True
        else:
            ctx.ignore()
            return
        session = AmfSession(
            sid=sid, gnb=event.src, ran_ue_id=msg.ran_ue_id,
            ue_radio_ref=msg.ue_radio_ref, suci=suci_bytes,
            slice_id=inner.slice_id, nsa=nsa,
        )
        session.ngksi = self._session_seq % 16
        self.sessions[sid] = session
        self.by_ran[(event.src, msg.ran_ue_id)] = sid
        self._start_authentication(ctx, session)

    # -- authentication (standalone path) ------------------------------------------

    def on_auth_response_sbi(self, msg, event, ctx) -> None:
        sid = self.by_sbi.get(msg.session)
        session = self.sessions.get(sid)
        if session is None:
            ctx.ignore()
            return
        session.rand = msg.rand
        session.autn = msg.autn
        session.hxres = msg.hxres
        session.k_seaf = msg.k_seaf
        session.state = "challenge_sent"
        self._downlink(ctx, session, messages.encode(messages.AuthenticationRequest(
            rand=msg.rand, autn=msg.autn, ngksi=session.ngksi, abba=self.abba,
        )))

    def on_auth_reject_sbi(self, msg, event, ctx) -> None:
        sid = self.by_sbi.get(msg.session)
        session = self.sessions.get(sid)
        if session is None:
            ctx.ignore()
            return
        session.state = f"auth_rejected:{msg.cause}"
        self._downlink(ctx, session, messages.encode(messages.AuthenticationReject()))

    # -- authentication (legacy direct path) ----------------------------------------

    def on_udm_auth_response(self, msg, event, ctx) -> None:
        sid = self.by_sbi.get(msg.session)
        session = self.sessions.get(sid)
        if session is None:
            ctx.ignore()
            return
        session.rand = msg.rand
        session.autn = msg.autn
        session.xres = msg.xres
        session.k_ausf = msg.k_ausf
        session.supi = msg.supi  # legacy trust model: home hands it over
        session.supi_learned_at = ctx.now
        session.state = "challenge_sent"
        self._downlink(ctx, session, messages.encode(messages.AuthenticationRequest(
            rand=msg.rand, autn=msg.autn, ngksi=session.ngksi, abba=self.abba,
        )))

    def on_udm_auth_reject(self, msg, event, ctx) -> None:
        self.on_auth_reject_sbi(msg, event, ctx)

    # -- NAS uplink -------------------------------------------------------------------

    def on_uplink_nas(self, msg, event, ctx) -> None:
        sid = self.by_ran.get((event.src, msg.ran_ue_id))
        session = self.sessions.get(sid)
        if session is None:
            ctx.ignore()
            return
        inner = try_decode(msg.nas)
        if isinstance(inner, messages.AuthenticationResponse):
            self._handle_auth_response(session, inner, ctx)
        elif isinstance(inner, messages.AuthenticationFailure):
            session.state = f"auth_failure:{inner.cause}"
        elif isinstance(inner, messages.SecuredNas):
            self._handle_secured_uplink(session, inner, ctx)
        else:
            ctx.ignore()

    def _handle_auth_response(self, session: AmfSession, msg, ctx) -> None:
        if session.state != "challenge_sent":
            return  # duplicate or out-of-order response
        if session.nsa:
            if msg.res == session.xres:
                self._establish_context(session, ctx, k_ausf=session.k_ausf)
            else:
                session.state = "auth_failed:res_mismatch"
                self._downlink(ctx, session,
                               messages.encode(messages.AuthenticationReject()))
            return
        if crypto.res_hash(session.rand, msg.res) != session.hxres:
            session.state = "auth_failed:hxres_mismatch"
            self._downlink(ctx, session,
                           messages.encode(messages.AuthenticationReject()))
            return
        session.state = "confirm_pending"
        suci = ConcealedIdentity.from_bytes(session.suci)
        ctx.emit(Channel.SBI, self._auth_route(suci.plmn), messages.ConfirmRequestSbi(
            session=session.sbi_sid, res=msg.res,
        ))

    def on_confirm_response_sbi(self, msg, event, ctx) -> None:
        sid = self.by_sbi.get(msg.session)
        session = self.sessions.get(sid)
        if session is None:
            ctx.ignore()
            return
        if not msg.success:
            session.state = "auth_failed:home_check"
            self._downlink(ctx, session,
                           messages.encode(messages.AuthenticationReject()))
            return
        if session.state != "confirm_pending":
            return
        # the one transition where the serving network learns the identity
        session.supi = msg.supi
        session.supi_learned_at = ctx.now
        self._establish_context(session, ctx, k_seaf=session.k_seaf)

    def _establish_context(self, session: AmfSession, ctx,
                           k_seaf: bytes = b"", k_ausf: bytes = b"") -> None:
        nea, nia = self.policy.nas_nea, self.policy.nas_nia
        if k_ausf:
            keys = crypto.derive_key_chain(
                k_ausf, self.serving_network_name, session.supi, self.abba, nea, nia,
            )
        else:
            keys = crypto.derive_chain_from_seaf(
                k_seaf, session.supi, self.abba, nea, nia,
            )
        session.context = SecurityContext(
            ng_ksi=session.ngksi, keys=keys, nea_id=nea, nia_id=nia,
            abba=self.abba, born_at=ctx.now,
        )
        session.state = "smc_sent"
        smc = messages.encode(messages.NasSecurityModeCommand(
            nea_id=nea, nia_id=nia, ngksi=session.ngksi, request_pei=True,
        ))
        count = session.context.next_dl()
        protected = crypto.protect(
            smc, 0, nia, None, keys.get("k_nas_int"), 1, count,
        )
        self._downlink(ctx, session, messages.encode(messages.SecuredNas(
            count=count, direction=1, nea_id=0, nia_id=nia,
            mac_tag=protected.mac_tag, body=protected.ciphertext,
        )))

    def _handle_secured_uplink(self, session: AmfSession, wrapper, ctx) -> None:
        context = session.context
        if context is None:
            ctx.ignore()
            return
        if wrapper.count < context.nas_count_ul:
            ctx.ignore()  # replayed or out-of-order: never processed twice
            return
        try:
            payload = crypto.unprotect(
                crypto.ProtectedMessage(ciphertext=wrapper.body, mac_tag=wrapper.mac_tag),
                wrapper.nea_id, wrapper.nia_id,
                context.keys.get("k_nas_enc"), context.keys.get("k_nas_int"),
                0, wrapper.count,
            )
        except crypto.IntegrityFailure:
            ctx.ignore()
            return
        context.accept_ul(wrapper.count)
        inner = try_decode(payload)
        if inner is None:
            ctx.ignore()
            return
        if isinstance(inner, messages.NasSecurityModeComplete):
            session.pei = inner.pei
            session.state = "nas_secured"
            target = self.engnb_id if session.nsa else session.gnb
            session.up_node = target
            ctx.emit(Channel.N2, target, messages.InitialContextSetupRequest(
                ran_ue_id=session.ran_ue_id, ue_radio_ref=session.ue_radio_ref,
                k_gnb=context.keys.get("k_gnb"),
                nea_id=self.policy.rrc_nea, nia_id=self.policy.rrc_nia,
            ))
        elif isinstance(inner, messages.PduSessionRequest):
            self._sbi_seq += 1
            sbi_sid = f"{self.entity_id}-p{self._sbi_seq}"
            self.by_sbi[sbi_sid] = session.sid
            ctx.emit(Channel.SBI, self.smf_id, messages.SmfSessionRequest(
                session=sbi_sid, slice_id=inner.slice_id,
            ))
        else:
            ctx.ignore()

    def on_initial_context_setup_response(self, msg, event, ctx) -> None:
        pass  # registration continues when the radio side reports security up

    def on_ue_context_active(self, msg, event, ctx) -> None:
        sid = None
        for key, candidate in self.by_ran.items():
            session = self.sessions.get(candidate)
            if session and session.ran_ue_id == msg.ran_ue_id and (
                key[0] == event.src or session.up_node == event.src
            ):
                sid = candidate
                break
        session = self.sessions.get(sid)
        if session is None:
            ctx.ignore()
            return
        if session.guti is not None:
            self.contexts.pop(session.guti.hex(), None)
        temp = self._allocator(ctx).allocate()
        session.guti = temp.guti
        session.renewing = False
        session.state = "registered"
        self.contexts[temp.guti.hex()] = session.sid
        if self.policy.context_renewal_interval is not None:
            self._timer_seq += 1
            self._timers[self._timer_seq] = ("renew", session.sid)
            ctx.timer(self.policy.context_renewal_interval, self._timer_seq)
        accept = messages.encode(messages.RegistrationAccept(guti=temp.guti))
        self._send_protected_nas(ctx, session, accept)

    def _send_protected_nas(self, ctx, session: AmfSession, inner_bytes: bytes) -> None:
        context = session.context
        count = context.next_dl()
        protected = crypto.protect(
            inner_bytes, context.nea_id, context.nia_id,
            context.keys.get("k_nas_enc"), context.keys.get("k_nas_int"),
            1, count,
        )
        self._downlink(ctx, session, messages.encode(messages.SecuredNas(
            count=count, direction=1, nea_id=context.nea_id, nia_id=context.nia_id,
            mac_tag=protected.mac_tag, body=protected.ciphertext,
        )))

    # -- session setup ------------------------------------------------------------------

    def on_smf_session_response(self, msg, event, ctx) -> None:
        sid = self.by_sbi.get(msg.session)
        session = self.sessions.get(sid)
        if session is None or session.context is None:
            ctx.ignore()
            return
        ctx.emit(Channel.N2, session.up_node or session.gnb,
                 messages.PduResourceSetup(
                     ran_ue_id=session.ran_ue_id,
                     up_ciphering=msg.up_ciphering, up_integrity=msg.up_integrity,
                 ))
        self._send_protected_nas(ctx, session, messages.encode(
            messages.PduSessionAccept(
                up_ciphering=msg.up_ciphering, up_integrity=msg.up_integrity,
            )
        ))

    # -- context renewal ------------------------------------------------------------------

    def on_timer_fired(self, msg, event, ctx) -> None:
        purpose = self._timers.pop(msg.timer_id, None)
        if purpose is None:
            ctx.ignore()
            return
        kind, sid = purpose
        if kind != "renew":
            return
        session = self.sessions.get(sid)
        if session is None or session.guti is None or session.state != "registered":
            return
        for directive in renew_context(self, session.guti.hex(), ctx.now):
            target = self.sessions.get(directive.session)
            if target is None:
                continue
            target.renewing = True
            target.state = "renewing"
            self._start_authentication(ctx, target)


class Ausf(Entity):
    """Home-network authentication server: transforms the home vector so the
    serving network can check the response without ever knowing it."""

    def __init__(self, entity_id: str, plmn: str, udm_id: str):
        super().__init__(entity_id)
        self.plmn = plmn
        self.udm_id = udm_id
        self.sessions: dict[str, dict] = {}

    def on_auth_request_sbi(self, msg, event, ctx) -> None:
        self.sessions[msg.session] = {
            "reply_to": event.src,
            "serving_network_name": msg.serving_network_name,
        }
        ctx.emit(Channel.SBI, self.udm_id, messages.UdmAuthRequest(
            session=msg.session, suci=msg.suci,
            serving_network_name=msg.serving_network_name,
        ))

    def on_udm_auth_response(self, msg, event, ctx) -> None:
        session = self.sessions.get(msg.session)
        if session is None:
            ctx.ignore()
            return
        session.update(supi=msg.supi, xres=msg.xres, rand=msg.rand)
        hxres = crypto.res_hash(msg.rand, msg.xres)
        k_seaf = crypto.derive_k_seaf(msg.k_ausf, session["serving_network_name"])
        ctx.emit(Channel.SBI, session["reply_to"], messages.AuthResponseSbi(
            session=msg.session, rand=msg.rand, autn=msg.autn,
            hxres=hxres, k_seaf=k_seaf,
        ))

    def on_udm_auth_reject(self, msg, event, ctx) -> None:
        session = self.sessions.get(msg.session)
        if session is None:
            ctx.ignore()
            return
        ctx.emit(Channel.SBI, session["reply_to"], messages.AuthRejectSbi(
            session=msg.session, cause=msg.cause,
        ))

    def on_confirm_request_sbi(self, msg, event, ctx) -> None:
        session = self.sessions.get(msg.session)
        if session is None or "xres" not in session:
            ctx.ignore()
            return
        success = msg.res == session["xres"]
        ctx.emit(Channel.SBI, event.src, messages.ConfirmResponseSbi(
            session=msg.session, success=success,
            supi=session["supi"] if success else "",
        ))


class Udm(Entity):
    """Home subscriber database: long-term keys, concealment private key."""

    def __init__(self, entity_id: str, plmn: str,
                 home_keypair: crypto.HomeNetworkKeyPair | None = None):
        super().__init__(entity_id)
        self.plmn = plmn
        self.home_keypair = home_keypair
        self.subscribers: dict[str, LongTermCredential] = {}

    def add_subscriber(self, supi: str, credential: LongTermCredential) -> None:
        self.subscribers[supi] = credential

    def on_udm_auth_request(self, msg, event, ctx) -> None:
        try:
            suci = ConcealedIdentity.from_bytes(msg.suci)
            identity = crypto.deconceal_suci(suci, self.home_keypair)
        except UnsupportedScheme:
            ctx.emit(Channel.SBI, event.src, messages.UdmAuthReject(
                session=msg.session, cause="UnsupportedScheme"))
            return
        except (crypto.IntegrityFailure, ValueError, IndexError):
            ctx.emit(Channel.SBI, event.src, messages.UdmAuthReject(
                session=msg.session, cause="IntegrityFailure"))
            return
        supi = format_supi(identity)
        credential = self.subscribers.get(supi)
        if credential is None:
            ctx.emit(Channel.SBI, event.src, messages.UdmAuthReject(
                session=msg.session, cause="UnknownSubscriber"))
            return
        vector, advanced = crypto.generate_auth_vector(
            credential, msg.serving_network_name, ctx.rng("rand"),
        )
        self.subscribers[supi] = advanced
        ctx.emit(Channel.SBI, event.src, messages.UdmAuthResponse(
            session=msg.session, supi=supi, rand=vector.rand,
            autn=vector.autn.to_bytes(), xres=vector.xres, k_ausf=vector.k_ausf,
        ))


class Smf(Entity):
    """Session management: answers session requests with the user-plane
    protection policy; also a token-protected service producer."""

    def __init__(self, entity_id: str, policy: OperatorPolicy,
                 nrf_verification_key: bytes = b""):
        super().__init__(entity_id)
        self.policy = policy
        self.producer = NfProducer(service="nsmf-pdusession",
                                   nrf_verification_key=nrf_verification_key)

    def on_smf_session_request(self, msg, event, ctx) -> None:
        ctx.emit(Channel.SBI, event.src, messages.SmfSessionResponse(
            session=msg.session,
            up_ciphering=self.policy.up_ciphering,
            up_integrity=self.policy.up_integrity,
        ))

    def on_nf_service_request(self, msg, event, ctx) -> None:
        try:
            validate_nf_token(self.producer, msg.token, ctx.now)
        except (TokenExpired, WrongAudience, InvalidToken) as exc:
            ctx.emit(Channel.SBI, event.src, messages.NfServiceResponse(
                ok=False, error=type(exc).__name__))
            return
        ctx.emit(Channel.SBI, event.src, messages.NfServiceResponse(ok=True, error=""))


class Upf(Entity):
    """User-plane sink: collects forwarded payloads."""

    def __init__(self, entity_id: str):
        super().__init__(entity_id)
        self.received: list[tuple[int, bytes]] = []

    def on_gtp_data(self, msg, event, ctx) -> None:
        self.received.append((msg.teid, msg.payload))


# ---------------------------------------------------------------------------
# NF token authorization
# ---------------------------------------------------------------------------


class UnknownConsumer(KeyError):
    pass


class TokenExpired(ValueError):
    pass


class WrongAudience(ValueError):
    pass


class InvalidToken(ValueError):
    pass


@dataclass
class NfProducer:
    service: str
    nrf_verification_key: bytes


DEFAULT_TOKEN_TTL = 10_000


class Nrf(Entity):
    """Repository function acting as the token authorization server."""

    def __init__(self, entity_id: str, signing_seed: bytes,
                 token_ttl: int = DEFAULT_TOKEN_TTL):
        super().__init__(entity_id)
        self.signing_seed = signing_seed
        self.token_ttl = token_ttl
        self.consumers: set[str] = set()
        priv = Ed25519PrivateKey.from_private_bytes(signing_seed)
        self.verification_key = priv.public_key().public_bytes(
            Encoding.Raw, PublicFormat.Raw)

    def register_consumer(self, consumer_id: str) -> None:
        self.consumers.add(consumer_id)

    def on_nf_token_request(self, msg, event, ctx) -> None:
        try:
            token = authorize_nf(self, msg.consumer_id, msg.producer_service, ctx.now)
        except UnknownConsumer:
            ctx.emit(Channel.SBI, event.src, messages.NfTokenResponse(
                ok=False, token=b"", error="UnknownConsumer"))
            return
        ctx.emit(Channel.SBI, event.src, messages.NfTokenResponse(
            ok=True, token=token, error=""))


def authorize_nf(nrf: Nrf, consumer_id: str, producer_service: str, now: int) -> bytes:
    """Issue a signed token binding (consumer, service, expiry)."""
    if consumer_id not in nrf.consumers:
        raise UnknownConsumer(consumer_id)
    body = messages.encode(messages.NfToken(
        consumer_id=consumer_id, service=producer_service,
        expiry=now + nrf.token_ttl,
    ))
    priv = Ed25519PrivateKey.from_private_bytes(nrf.signing_seed)
    return body + priv.sign(body)


def validate_nf_token(producer: NfProducer, token: bytes, now: int) -> messages.NfToken:
    """Producer-side check: signature, audience, expiry."""
    if len(token) < 64:
        raise InvalidToken("token too short")
    body, signature = token[:-64], token[-64:]
    pub = Ed25519PublicKey.from_public_bytes(producer.nrf_verification_key)
    try:
        pub.verify(signature, body)
    except InvalidSignature as exc:
        raise InvalidToken("bad signature") from exc
    claim = messages.decode(body)
    if claim.service != producer.service:
        raise WrongAudience(f"token for {claim.service}, producer is {producer.service}")
    if now >= claim.expiry:
        raise TokenExpired(f"expired at {claim.expiry}, now {now}")
    return claim


def renew_context(amf: Amf, guti: str, now: int) -> list[RenewalDirective]:
    """Decide whether a held context is due for a forced renewal."""
    sid = amf.contexts.get(guti)
    if sid is None:
        raise UnknownGuti(guti)
    session = amf.sessions[sid]
    interval = amf.policy.context_renewal_interval
    if interval is None or session.context is None:
        return []
    if now - session.context.born_at >= interval:
        return [RenewalDirective(guti=guti, session=sid)]
    return []
