"""Security edge protection proxies: the mutually authenticated gateway
between operators.

A SEPP forwards control-plane traffic only over sessions with allowlisted,
non-revoked peers, and checks that the serving network name inside a
forwarded authentication request matches the peer the session was
established with.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from .. import messages
from ..netsim import Channel
from .base import Entity, try_decode


class PeerUnknown(KeyError):
    pass


class PeerRevoked(PermissionError):
    pass


class NetworkNameMismatch(ValueError):
    pass


def _ed25519_public(seed: bytes) -> bytes:
    priv = Ed25519PrivateKey.from_private_bytes(seed)
    return priv.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)


def _sign(seed: bytes, message: bytes) -> bytes:
    return Ed25519PrivateKey.from_private_bytes(seed).sign(message)


def _verify(key: bytes, message: bytes, signature: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(key).verify(signature, message)
        return True
    except InvalidSignature:
        return False


def _hello_context(plmn: str, peer_plmn: str, nonce: bytes) -> bytes:
    return b"sepp-hello|" + plmn.encode() + b"|" + peer_plmn.encode() + b"|" + nonce


@dataclass
class SeppSession:
    peer_plmn: str
    peer_id: str
    established: bool = False
    pending: list[bytes] = field(default_factory=list)


class Sepp(Entity):
    def __init__(
        self,
        entity_id: str,
        plmn: str,
        signing_seed: bytes,
        ausf_id: str = "",
        peers: dict[str, str] | None = None,  # plmn -> sepp entity id
        allowlist: dict[str, bytes] | None = None,  # plmn -> verification key
    ):
        super().__init__(entity_id)
        self.plmn = plmn
        self.signing_seed = signing_seed
        self.verification_key = _ed25519_public(signing_seed)
        self.ausf_id = ausf_id
        self.peers = peers or {}
        self.allowlist = allowlist or {}
        self.revoked: set[bytes] = set()
        self.sessions: dict[str, SeppSession] = {}  # by peer plmn
        self._by_peer_id: dict[str, str] = {}  # peer entity id -> plmn
        self.routes_out: dict[str, tuple[str, str]] = {}  # sbi sid -> (requester, peer plmn)
        self.routes_in: dict[str, str] = {}  # sbi session -> peer sepp id
        self.rejections: list[str] = []

    def revoke(self, verification_key: bytes) -> None:
        self.revoked.add(verification_key)

    # -- peer validation -------------------------------------------------------

    def _validate_peer(self, plmn: str) -> bytes:
        key = self.allowlist.get(plmn)
        if key is None:
            raise PeerUnknown(plmn)
        if key in self.revoked:
            raise PeerRevoked(plmn)
        return key

    # -- outbound (serving side) --------------------------------------------------

    def _session_for(self, peer_plmn: str, ctx) -> SeppSession | None:
        session = self.sessions.get(peer_plmn)
        if session is not None:
            return session
        peer_id = self.peers.get(peer_plmn)
        if peer_id is None:
            return None
        session = SeppSession(peer_plmn=peer_plmn, peer_id=peer_id)
        self.sessions[peer_plmn] = session
        self._by_peer_id[peer_id] = peer_plmn
        nonce = ctx.rng("nonce").take(16)
        ctx.emit(Channel.SEPP_LINK, peer_id, messages.SeppHello(
            plmn=self.plmn, peer_plmn=peer_plmn, nonce=nonce,
            signature=_sign(self.signing_seed,
                            _hello_context(self.plmn, peer_plmn, nonce)),
        ))
        return session

    def _forward_out(self, inner_bytes: bytes, peer_plmn: str, ctx) -> bool:
        session = self._session_for(peer_plmn, ctx)
        if session is None:
            return False
        if session.established:
            ctx.emit(Channel.SEPP_LINK, session.peer_id,
                     messages.SeppForward(inner=inner_bytes))
        else:
            session.pending.append(inner_bytes)
        return True

    def on_auth_request_sbi(self, msg, event, ctx) -> None:
        # local AMF asks the home network of the concealed identity
        from ..identity import ConcealedIdentity
        home_plmn = ConcealedIdentity.from_bytes(msg.suci).plmn
        self.routes_out[msg.session] = (event.src, home_plmn)
        if not self._forward_out(messages.encode(msg), home_plmn, ctx):
            ctx.emit(Channel.SBI, event.src, messages.AuthRejectSbi(
                session=msg.session, cause="PeerUnknown"))

    def on_confirm_request_sbi(self, msg, event, ctx) -> None:
        route = self.routes_out.get(msg.session)
        if route is None:
            ctx.ignore()
            return
        self._forward_out(messages.encode(msg), route[1], ctx)

    # -- responses from the local home core (home side) -----------------------------

    def _return_in(self, msg, event, ctx) -> None:
        peer_id = self.routes_in.get(msg.session)
        if peer_id is None:
            ctx.ignore()
            return
        ctx.emit(Channel.SEPP_LINK, peer_id,
                 messages.SeppForward(inner=messages.encode(msg)))

    on_auth_response_sbi = _return_in
    on_auth_reject_sbi = _return_in
    on_confirm_response_sbi = _return_in

    # -- handshake -------------------------------------------------------------------

    def on_sepp_hello(self, msg, event, ctx) -> None:
        try:
            key = self._validate_peer(msg.plmn)
        except PeerUnknown:
            self.rejections.append("PeerUnknown")
            ctx.emit(Channel.SEPP_LINK, event.src, messages.SeppReject(reason="PeerUnknown"))
            return
        except PeerRevoked:
            self.rejections.append("PeerRevoked")
            ctx.emit(Channel.SEPP_LINK, event.src, messages.SeppReject(reason="PeerRevoked"))
            return
        if msg.peer_plmn != self.plmn or not _verify(
            key, _hello_context(msg.plmn, msg.peer_plmn, msg.nonce), msg.signature
        ):
            self.rejections.append("BadSignature")
            ctx.emit(Channel.SEPP_LINK, event.src, messages.SeppReject(reason="BadSignature"))
            return
        session = self.sessions.get(msg.plmn)
        if session is None:
            session = SeppSession(peer_plmn=msg.plmn, peer_id=event.src)
            self.sessions[msg.plmn] = session
        session.peer_id = event.src
        session.established = True
        self._by_peer_id[event.src] = msg.plmn
        ctx.emit(Channel.SEPP_LINK, event.src, messages.SeppHelloAck(
            plmn=self.plmn, peer_plmn=msg.plmn, echo_nonce=msg.nonce,
            signature=_sign(self.signing_seed,
                            _hello_context(self.plmn, msg.plmn, msg.nonce)),
        ))

    def on_sepp_hello_ack(self, msg, event, ctx) -> None:
        session = self.sessions.get(msg.plmn)
        if session is None:
            ctx.ignore()
            return
        try:
            key = self._validate_peer(msg.plmn)
        except (PeerUnknown, PeerRevoked):
            self.rejections.append("PeerInvalidOnAck")
            return
        if not _verify(key, _hello_context(msg.plmn, self.plmn, msg.echo_nonce),
                       msg.signature):
            self.rejections.append("BadSignature")
            return
        session.established = True
        for inner in session.pending:
            ctx.emit(Channel.SEPP_LINK, session.peer_id,
                     messages.SeppForward(inner=inner))
        session.pending.clear()

    def on_sepp_reject(self, msg, event, ctx) -> None:
        self.rejections.append(f"peer:{msg.reason}")

    # -- inbound forwards (home side) ----------------------------------------------

    def check_forward_coherence(self, inner, peer_plmn: str) -> None:
        """Serving-network-name coherence for forwarded auth requests."""
        if isinstance(inner, messages.AuthRequestSbi):
            expected = f"5G:{peer_plmn}"
            if inner.serving_network_name != expected:
                raise NetworkNameMismatch(
                    f"claimed {inner.serving_network_name!r}, session is with {expected!r}"
                )

    def on_sepp_forward(self, msg, event, ctx) -> None:
        peer_plmn = self._by_peer_id.get(event.src)
        session = self.sessions.get(peer_plmn) if peer_plmn else None
        if session is None or not session.established:
            ctx.emit(Channel.SEPP_LINK, event.src, messages.SeppReject(reason="NoSession"))
            return
        inner = try_decode(msg.inner)
        if inner is None:
            ctx.ignore()
            return
        if isinstance(inner, (messages.AuthRequestSbi, messages.ConfirmRequestSbi)):
            try:
                self.check_forward_coherence(inner, peer_plmn)
            except NetworkNameMismatch:
                self.rejections.append("NetworkNameMismatch")
                reject = messages.AuthRejectSbi(
                    session=inner.session, cause="NetworkNameMismatch")
                ctx.emit(Channel.SEPP_LINK, event.src,
                         messages.SeppForward(inner=messages.encode(reject)))
                return
            self.routes_in[inner.session] = event.src
            ctx.emit(Channel.SBI, self.ausf_id, inner)
            return
        # a response coming back to the serving side
        route = self.routes_out.get(getattr(inner, "session", None))
        if route is None:
            ctx.ignore()
            return
        ctx.emit(Channel.SBI, route[0], inner)


def establish_interconnect(sepp_a: Sepp, sepp_b: Sepp) -> tuple[str, str]:
    """Direct mutual-authentication check between two proxies.

    Returns the (plmn_a, plmn_b) session pair; raises PeerUnknown or
    PeerRevoked when either side refuses the other.
    """
    key_b = sepp_a._validate_peer(sepp_b.plmn)
    key_a = sepp_b._validate_peer(sepp_a.plmn)
    if key_b != sepp_b.verification_key or key_a != sepp_a.verification_key:
        raise PeerUnknown("allowlisted key does not match the peer's identity")
    session_ab = SeppSession(peer_plmn=sepp_b.plmn, peer_id=sepp_b.entity_id,
                             established=True)
    session_ba = SeppSession(peer_plmn=sepp_a.plmn, peer_id=sepp_a.entity_id,
                             established=True)
    sepp_a.sessions[sepp_b.plmn] = session_ab
    sepp_a._by_peer_id[sepp_b.entity_id] = sepp_b.plmn
    sepp_b.sessions[sepp_a.plmn] = session_ba
    sepp_b._by_peer_id[sepp_a.entity_id] = sepp_a.plmn
    return (sepp_a.plmn, sepp_b.plmn)
