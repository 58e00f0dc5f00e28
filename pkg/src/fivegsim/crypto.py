"""Cryptographic core: identity concealment, challenge/response vectors,
the key-derivation chain, message protection and signed reject messages.

All keyed PRFs are HMAC-SHA-256 with domain labels read from
``data/kdf_labels.json``; the test oracle recomputes everything from that
same file with independent primitives.
"""

from __future__ import annotations

import enum
import hashlib
import hmac as hmac_mod
import json
from dataclasses import dataclass
from importlib import resources

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from cryptography.hazmat.primitives.cmac import CMAC
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from .identity import (
    ConcealedIdentity,
    KeyHierarchy,
    LongTermCredential,
    SubscriberIdentity,
    SuciScheme,
    UnsupportedScheme,
    format_supi,
)
from .randomness import RandomStream

__all__ = [
    "AlgorithmRegistry",
    "AuthVector",
    "Autn",
    "HomeNetworkKeyPair",
    "IntegrityFailure",
    "MacMismatch",
    "ProtectedMessage",
    "RejectSigningKeyPair",
    "SqnStale",
    "StubAlgorithm",
    "compute_auth_vector",
    "conceal_supi",
    "deconceal_suci",
    "derive_as_keys",
    "derive_chain_from_seaf",
    "derive_k_seaf",
    "derive_key_chain",
    "generate_auth_vector",
    "load_labels",
    "protect",
    "res_hash",
    "sign_reject",
    "ue_verify_challenge",
    "unprotect",
    "verify_reject",
]

_P256_ORDER = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551

DEFAULT_AMF_FIELD = b"\x80\x00"


def load_labels() -> dict:
    with resources.files("fivegsim.data").joinpath("kdf_labels.json").open("rb") as fh:
        return json.load(fh)


_LABELS = load_labels()


class IntegrityFailure(Exception):
    """MAC verification failed on a protected or concealed payload."""


class MacMismatch(Exception):
    """Challenge token MAC does not verify under the subscriber key."""


class SqnStale(Exception):
    """Challenge sequence number is not fresh (replay)."""


class StubAlgorithm(Exception):
    """Algorithm id is registered but not implemented in this build."""


def _hmac(key: bytes, msg: bytes) -> bytes:
    return hmac_mod.new(key, msg, hashlib.sha256).digest()


def _aes_key(key32: bytes) -> bytes:
    # 128-bit algorithm key = low-order 16 bytes of the 256-bit chain key.
    return key32[16:]


# ---------------------------------------------------------------------------
# Home network key pairs and SUPI concealment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HomeNetworkKeyPair:
    """Asymmetric pair the home network publishes for identity concealment."""

    scheme: SuciScheme
    private_bytes: bytes
    public_bytes: bytes

    @classmethod
    def from_seed(cls, scheme: SuciScheme, seed: bytes) -> "HomeNetworkKeyPair":
        if len(seed) != 32:
            raise ValueError("key seed must be 32 bytes")
        if scheme == SuciScheme.PROFILE_A:
            priv = X25519PrivateKey.from_private_bytes(seed)
            pub = priv.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
            return cls(scheme=scheme, private_bytes=seed, public_bytes=pub)
        if scheme == SuciScheme.PROFILE_B:
            scalar = int.from_bytes(seed, "big") % (_P256_ORDER - 1) + 1
            priv = ec.derive_private_key(scalar, ec.SECP256R1())
            pub = priv.public_key().public_bytes(
                Encoding.X962, PublicFormat.CompressedPoint
            )
            return cls(
                scheme=scheme,
                private_bytes=scalar.to_bytes(32, "big"),
                public_bytes=pub,
            )
        raise ValueError("null scheme has no key pair")

    def _private_key(self):
        if self.scheme == SuciScheme.PROFILE_A:
            return X25519PrivateKey.from_private_bytes(self.private_bytes)
        return ec.derive_private_key(
            int.from_bytes(self.private_bytes, "big"), ec.SECP256R1()
        )


def _ephemeral_keypair(scheme: SuciScheme, randomness: bytes):
    if len(randomness) != 32:
        raise ValueError("ephemeral randomness must be 32 bytes")
    if scheme == SuciScheme.PROFILE_A:
        priv = X25519PrivateKey.from_private_bytes(randomness)
        pub = priv.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
        return priv, pub
    scalar = int.from_bytes(randomness, "big") % (_P256_ORDER - 1) + 1
    priv = ec.derive_private_key(scalar, ec.SECP256R1())
    pub = priv.public_key().public_bytes(Encoding.X962, PublicFormat.CompressedPoint)
    return priv, pub


def _ecies_shared(scheme: SuciScheme, private_key, peer_public: bytes) -> bytes:
    try:
        if scheme == SuciScheme.PROFILE_A:
            return private_key.exchange(X25519PublicKey.from_public_bytes(peer_public))
        peer = ec.EllipticCurvePublicKey.from_encoded_point(ec.SECP256R1(), peer_public)
        return private_key.exchange(ec.ECDH(), peer)
    except ValueError as exc:
        raise ValueError(f"malformed public point for {scheme.name}") from exc


def _x963_kdf(shared: bytes, sharedinfo: bytes, length: int) -> bytes:
    out = b""
    counter = 1
    while len(out) < length:
        out += hashlib.sha256(shared + counter.to_bytes(4, "big") + sharedinfo).digest()
        counter += 1
    return out[:length]


def _ecies_keys(shared: bytes, eph_pub: bytes) -> tuple[bytes, bytes, bytes]:
    spec = _LABELS["ecies"]
    total = spec["enc_key_len"] + spec["icb_len"] + spec["mac_key_len"]
    okm = _x963_kdf(shared, eph_pub, total)
    enc_key = okm[: spec["enc_key_len"]]
    icb = okm[spec["enc_key_len"]: spec["enc_key_len"] + spec["icb_len"]]
    mac_key = okm[-spec["mac_key_len"]:]
    return enc_key, icb, mac_key


def _aes_ctr(key: bytes, icb: bytes, data: bytes) -> bytes:
    cipher = Cipher(algorithms.AES(key), modes.CTR(icb))
    enc = cipher.encryptor()
    return enc.update(data) + enc.finalize()


def conceal_supi(
    identity: SubscriberIdentity,
    home_public: HomeNetworkKeyPair | bytes | None,
    scheme: SuciScheme,
    ephemeral_randomness: bytes | None = None,
) -> ConcealedIdentity:
    """Build the concealed identity sent in an initial registration.

    The null scheme copies the msin verbatim; the ECIES profiles run an
    ephemeral key agreement against the home network public key, encrypt
    the msin with AES-128-CTR and append a truncated HMAC tag.  The home
    network id always stays in clear.
    """
    if scheme == SuciScheme.NULL:
        return ConcealedIdentity(
            mcc=identity.mcc,
            mnc=identity.mnc,
            scheme=scheme,
            ciphertext=identity.msin.encode(),
        )
    if home_public is None:
        raise ValueError(f"{scheme.name} requires the home network public key")
    if isinstance(home_public, HomeNetworkKeyPair):
        if home_public.scheme != scheme:
            raise ValueError(
                f"scheme {scheme.name} does not match key pair scheme "
                f"{home_public.scheme.name}"
            )
        home_public_bytes = home_public.public_bytes
    else:
        home_public_bytes = home_public
    if ephemeral_randomness is None:
        raise ValueError("ephemeral randomness required for ecies schemes")
    eph_priv, eph_pub = _ephemeral_keypair(scheme, ephemeral_randomness)
    shared = _ecies_shared(scheme, eph_priv, home_public_bytes)
    enc_key, icb, mac_key = _ecies_keys(shared, eph_pub)
    ciphertext = _aes_ctr(enc_key, icb, identity.msin.encode())
    tag = _hmac(mac_key, ciphertext)[: _LABELS["ecies"]["tag_len"]]
    return ConcealedIdentity(
        mcc=identity.mcc,
        mnc=identity.mnc,
        scheme=scheme,
        ciphertext=ciphertext,
        ephemeral_public_key=eph_pub,
        mac_tag=tag,
    )


def deconceal_suci(
    suci: ConcealedIdentity, home_private: HomeNetworkKeyPair | None = None
) -> SubscriberIdentity:
    """Recover the subscriber identity from a concealed one (home network side)."""
    if suci.scheme == SuciScheme.NULL:
        return SubscriberIdentity(
            mcc=suci.mcc, mnc=suci.mnc, msin=suci.ciphertext.decode()
        )
    if suci.scheme not in (SuciScheme.PROFILE_A, SuciScheme.PROFILE_B):
        raise UnsupportedScheme(f"unknown scheme {suci.scheme}")
    if home_private is None or home_private.scheme != suci.scheme:
        raise ValueError("home private key missing or for the wrong scheme")
    shared = _ecies_shared(
        suci.scheme, home_private._private_key(), suci.ephemeral_public_key
    )
    enc_key, icb, mac_key = _ecies_keys(shared, suci.ephemeral_public_key)
    expected = _hmac(mac_key, suci.ciphertext)[: _LABELS["ecies"]["tag_len"]]
    if not hmac_mod.compare_digest(expected, suci.mac_tag):
        raise IntegrityFailure("suci tag mismatch")
    msin = _aes_ctr(enc_key, icb, suci.ciphertext).decode(errors="replace")
    return SubscriberIdentity(mcc=suci.mcc, mnc=suci.mnc, msin=msin)


# ---------------------------------------------------------------------------
# Challenge/response authentication vectors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Autn:
    """Authentication token: concealed sequence number, field, MAC."""

    sqn_xor_ak: bytes
    amf_field: bytes
    mac: bytes

    def __post_init__(self):
        if len(self.sqn_xor_ak) != 6 or len(self.amf_field) != 2 or len(self.mac) != 8:
            raise ValueError("autn field widths are 6/2/8 bytes")

    def to_bytes(self) -> bytes:
        return self.sqn_xor_ak + self.amf_field + self.mac

    @classmethod
    def from_bytes(cls, data: bytes) -> "Autn":
        if len(data) != 16:
            raise ValueError("autn is 16 bytes")
        return cls(sqn_xor_ak=data[:6], amf_field=data[6:8], mac=data[8:16])


@dataclass(frozen=True)
class AuthVector:
    rand: bytes
    autn: Autn
    xres: bytes
    hxres: bytes
    k_ausf: bytes

    def __post_init__(self):
        if len(self.rand) != 16 or len(self.xres) != 16:
            raise ValueError("rand and xres are 16 bytes")
        if len(self.hxres) != 16 or len(self.k_ausf) != 32:
            raise ValueError("hxres is 16 bytes, k_ausf 32 bytes")


def _sqn_bytes(sqn: int) -> bytes:
    return sqn.to_bytes(6, "big")


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


def _aka_prf(k: bytes, name: str, **inputs: bytes) -> bytes:
    spec = _LABELS["aka"][name]
    msg = spec["label"].encode()
    for part in spec["inputs"]:
        msg += inputs[part]
    return _hmac(k, msg)[: spec["length"]]


def res_hash(rand: bytes, res_or_xres: bytes) -> bytes:
    """Response hash letting the serving network check a response it never knew."""
    if len(rand) != 16 or len(res_or_xres) != 16:
        raise ValueError("inputs are 16 bytes each")
    return hashlib.sha256(rand + res_or_xres).digest()[: _LABELS["res_hash"]["length"]]


def compute_auth_vector(
    cred: LongTermCredential,
    serving_network_name: str,
    rand: bytes,
    amf_field: bytes = DEFAULT_AMF_FIELD,
) -> AuthVector:
    """Deterministic vector for a given challenge (home network side)."""
    sqn = _sqn_bytes(cred.sqn)
    sn = serving_network_name.encode()
    mac = _aka_prf(cred.k, "mac", sqn=sqn, rand=rand, amf_field=amf_field)
    ak = _aka_prf(cred.k, "ak", rand=rand)
    xres = _aka_prf(cred.k, "xres", rand=rand)
    k_ausf = _aka_prf(cred.k, "k_ausf", rand=rand, serving_network_name=sn)
    autn = Autn(sqn_xor_ak=_xor(sqn, ak), amf_field=amf_field, mac=mac)
    return AuthVector(
        rand=rand, autn=autn, xres=xres, hxres=res_hash(rand, xres), k_ausf=k_ausf
    )


def generate_auth_vector(
    cred: LongTermCredential,
    serving_network_name: str,
    rng: RandomStream,
    amf_field: bytes = DEFAULT_AMF_FIELD,
) -> tuple[AuthVector, LongTermCredential]:
    """Draw a fresh challenge and advance the stored sequence counter."""
    rand = rng.take(16)
    vector = compute_auth_vector(cred, serving_network_name, rand, amf_field)
    return vector, cred.advanced()


def ue_verify_challenge(
    cred: LongTermCredential,
    rand: bytes,
    autn: Autn,
    ue_sqn_window: int,
) -> tuple[bytes, int]:
    """USIM-side check of a challenge token.

    Returns the 16-byte response and the new highest accepted sequence
    number.  Raises MacMismatch on a bad token and SqnStale on replay;
    the two are deliberately distinct.
    """
    ak = _aka_prf(cred.k, "ak", rand=rand)
    sqn_bytes = _xor(autn.sqn_xor_ak, ak)
    mac = _aka_prf(cred.k, "mac", sqn=sqn_bytes, rand=rand, amf_field=autn.amf_field)
    if not hmac_mod.compare_digest(mac, autn.mac):
        raise MacMismatch("challenge token MAC mismatch")
    sqn = int.from_bytes(sqn_bytes, "big")
    if sqn <= ue_sqn_window:
        raise SqnStale(f"sqn {sqn} not above window {ue_sqn_window}")
    res = _aka_prf(cred.k, "xres", rand=rand)
    return res, sqn


def ue_k_ausf(cred: LongTermCredential, rand: bytes, serving_network_name: str) -> bytes:
    """UE-side anchor key for a verified challenge."""
    return _aka_prf(
        cred.k, "k_ausf", rand=rand, serving_network_name=serving_network_name.encode()
    )


# ---------------------------------------------------------------------------
# Key-derivation chain
# ---------------------------------------------------------------------------


def _context_bytes(names: list[str], ctx: dict[str, bytes]) -> bytes:
    out = b""
    for name in names:
        value = ctx[name]
        out += len(value).to_bytes(2, "big") + value
    return out


def _derive_edge(parent_key: bytes, child: str, ctx: dict[str, bytes]) -> bytes:
    spec = _LABELS["chain"][child]
    msg = spec["label"].encode() + b"\x00" + _context_bytes(spec["context"], ctx)
    return _hmac(parent_key, msg)


def _chain_context(
    serving_network_name: str,
    supi: str | SubscriberIdentity,
    abba: bytes,
    nea_id: int,
    nia_id: int,
) -> dict[str, bytes]:
    if isinstance(supi, SubscriberIdentity):
        supi = format_supi(supi)
    return {
        "serving_network_name": serving_network_name.encode(),
        "supi": supi.encode(),
        "abba": abba,
        "nea_id": bytes([nea_id]),
        "nia_id": bytes([nia_id]),
    }


def _populate(hierarchy: KeyHierarchy, names: list[str], ctx: dict[str, bytes]) -> None:
    for child in names:
        parent = _LABELS["chain"][child]["parent"]
        hierarchy.record(child, parent, _derive_edge(hierarchy.get(parent), child, ctx))


_FULL_ORDER = [
    "k_seaf", "k_amf", "k_nas_int", "k_nas_enc", "k_gnb",
    "k_rrc_int", "k_rrc_enc", "k_up_int", "k_up_enc",
]


def derive_k_seaf(k_ausf: bytes, serving_network_name: str) -> bytes:
    """Single anchor-to-serving edge, used by the home network alone."""
    ctx = _chain_context(serving_network_name, "", b"\x00\x00", 0, 0)
    return _derive_edge(k_ausf, "k_seaf", ctx)


def derive_key_chain(
    k_ausf: bytes,
    serving_network_name: str,
    supi: str | SubscriberIdentity,
    abba: bytes,
    nea_id: int,
    nia_id: int,
) -> KeyHierarchy:
    """Populate the whole derivation DAG from the anchor key (UE side)."""
    ctx = _chain_context(serving_network_name, supi, abba, nea_id, nia_id)
    hierarchy = KeyHierarchy()
    hierarchy.set_root("k_ausf", k_ausf)
    _populate(hierarchy, _FULL_ORDER, ctx)
    return hierarchy


def derive_chain_from_seaf(
    k_seaf: bytes,
    supi: str | SubscriberIdentity,
    abba: bytes,
    nea_id: int,
    nia_id: int,
) -> KeyHierarchy:
    """Serving-network chain: the AMF never sees the anchor key above k_seaf."""
    ctx = _chain_context("", supi, abba, nea_id, nia_id)
    hierarchy = KeyHierarchy()
    hierarchy.set_root("k_seaf", k_seaf)
    _populate(hierarchy, ["k_amf", "k_nas_int", "k_nas_enc", "k_gnb"], ctx)
    return hierarchy


def derive_as_keys(k_gnb: bytes, nea_id: int, nia_id: int) -> KeyHierarchy:
    """Radio-side chain: the gNB starts from k_gnb and derives only AS keys."""
    ctx = _chain_context("", "", b"\x00\x00", nea_id, nia_id)
    hierarchy = KeyHierarchy()
    hierarchy.set_root("k_gnb", k_gnb)
    _populate(hierarchy, ["k_rrc_int", "k_rrc_enc", "k_up_int", "k_up_enc"], ctx)
    return hierarchy


# ---------------------------------------------------------------------------
# NAS/AS message protection
# ---------------------------------------------------------------------------


class AlgorithmStatus(enum.Enum):
    IMPLEMENTED = "implemented"
    STUB = "stub"


class AlgorithmRegistry:
    """Registered ciphering/integrity algorithm ids and their build status.

    Ids 0 (null) and 2 (AES-based) are implemented; 1 and 3 are registered
    stubs that refuse to produce bytes.
    """

    _STATUS = {0: AlgorithmStatus.IMPLEMENTED, 1: AlgorithmStatus.STUB,
               2: AlgorithmStatus.IMPLEMENTED, 3: AlgorithmStatus.STUB}

    @classmethod
    def status(cls, kind: str, alg_id: int) -> AlgorithmStatus:
        if kind not in ("ciphering", "integrity"):
            raise ValueError("kind is 'ciphering' or 'integrity'")
        if alg_id not in cls._STATUS:
            raise ValueError(f"unknown algorithm id {alg_id}")
        return cls._STATUS[alg_id]

    @classmethod
    def require_implemented(cls, kind: str, alg_id: int) -> None:
        if cls.status(kind, alg_id) is not AlgorithmStatus.IMPLEMENTED:
            raise StubAlgorithm(f"{kind} algorithm {alg_id} is a stub in this build")


MAC_I_LEN = 4


@dataclass(frozen=True)
class ProtectedMessage:
    ciphertext: bytes
    mac_tag: bytes

    def __post_init__(self):
        if len(self.mac_tag) != MAC_I_LEN:
            raise ValueError(f"mac tag is {MAC_I_LEN} bytes")


def _ctr_nonce(count: int, direction: int) -> bytes:
    return count.to_bytes(4, "big") + bytes([direction & 1]) + b"\x00" * 11


def _cmac_tag(key_int: bytes, count: int, direction: int, ciphertext: bytes) -> bytes:
    mac = CMAC(algorithms.AES(_aes_key(key_int)))
    mac.update(count.to_bytes(4, "big") + bytes([direction & 1]) + ciphertext)
    return mac.finalize()[:MAC_I_LEN]


def protect(
    payload: bytes,
    nea_id: int,
    nia_id: int,
    key_enc: bytes | None,
    key_int: bytes | None,
    direction: int,
    count: int,
) -> ProtectedMessage:
    """Apply ciphering and integrity protection to one message.

    The null algorithms pass bytes through but the tag overhead is always
    present (four zero bytes under null integrity).
    """
    AlgorithmRegistry.require_implemented("ciphering", nea_id)
    AlgorithmRegistry.require_implemented("integrity", nia_id)
    if nea_id == 0:
        ciphertext = payload
    else:
        ciphertext = _aes_ctr(_aes_key(key_enc), _ctr_nonce(count, direction), payload)
    if nia_id == 0:
        tag = b"\x00" * MAC_I_LEN
    else:
        tag = _cmac_tag(key_int, count, direction, ciphertext)
    return ProtectedMessage(ciphertext=ciphertext, mac_tag=tag)


def unprotect(
    msg: ProtectedMessage,
    nea_id: int,
    nia_id: int,
    key_enc: bytes | None,
    key_int: bytes | None,
    direction: int,
    count: int,
) -> bytes:
    """Verify the tag (unless null integrity) and decipher."""
    AlgorithmRegistry.require_implemented("ciphering", nea_id)
    AlgorithmRegistry.require_implemented("integrity", nia_id)
    if nia_id != 0:
        expected = _cmac_tag(key_int, count, direction, msg.ciphertext)
        if not hmac_mod.compare_digest(expected, msg.mac_tag):
            raise IntegrityFailure("message tag mismatch")
    if nea_id == 0:
        return msg.ciphertext
    return _aes_ctr(_aes_key(key_enc), _ctr_nonce(count, direction), msg.ciphertext)


# ---------------------------------------------------------------------------
# Signed reject messages (pre-security-context network authentication)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RejectSigningKeyPair:
    """Ed25519 pair a network uses to sign pre-context reject messages."""

    signing_key: bytes
    verification_key: bytes

    def __post_init__(self):
        if len(self.signing_key) != 32 or len(self.verification_key) != 32:
            raise ValueError("keys are 32 bytes")

    @classmethod
    def from_seed(cls, seed: bytes) -> "RejectSigningKeyPair":
        if len(seed) != 32:
            raise ValueError("seed must be 32 bytes")
        priv = Ed25519PrivateKey.from_private_bytes(seed)
        pub = priv.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
        return cls(signing_key=seed, verification_key=pub)


def _reject_message(reject_cause: int, cell_id: str, ue_nonce: bytes) -> bytes:
    ctx = _LABELS["reject_signature"]["context"].encode()
    cell = cell_id.encode()
    return (
        ctx + bytes([reject_cause])
        + len(cell).to_bytes(2, "big") + cell
        + len(ue_nonce).to_bytes(2, "big") + ue_nonce
    )


def sign_reject(
    signing_key: bytes, reject_cause: int, cell_id: str, ue_nonce: bytes
) -> bytes:
    """Sign a reject over (cause, cell, the UE's request nonce); 64 bytes out."""
    if len(signing_key) != 32:
        raise ValueError("signing key is 32 bytes")
    priv = Ed25519PrivateKey.from_private_bytes(signing_key)
    return priv.sign(_reject_message(reject_cause, cell_id, ue_nonce))


def verify_reject(
    verification_key: bytes,
    reject_cause: int,
    cell_id: str,
    ue_nonce: bytes,
    signature: bytes,
) -> bool:
    if len(verification_key) != 32:
        raise ValueError("verification key is 32 bytes")
    if len(signature) != 64:
        return False
    pub = Ed25519PublicKey.from_public_bytes(verification_key)
    try:
        pub.verify(signature, _reject_message(reject_cause, cell_id, ue_nonce))
        return True
    except InvalidSignature:
        return False
