"""Subscriber and equipment identifiers plus the derived-key hierarchy.

Covers the permanent identity (SUPI), its concealed form (SUCI), the
equipment identity (PEI), temporary identifiers (5G-GUTI / S-TMSI), the
long-term subscriber credential and the per-session key chain with
derivation provenance.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from .randomness import RandomStream

GUTI_LEN = 10
S_TMSI_LEN = 6
KEY_LEN = 32
SQN_MAX = 2**48 - 1


class SuciScheme(enum.IntEnum):
    """Identity concealment schemes selectable by the USIM."""

    NULL = 0
    PROFILE_A = 1  # Curve25519
    PROFILE_B = 2  # secp256r1


def _require_digits(value: str, what: str) -> None:
    if not value.isascii() or not value.isdigit():
        raise ValueError(f"{what} must be decimal digits, got {value!r}")


@dataclass(frozen=True)
class SubscriberIdentity:
    """Permanent subscriber identity: mcc + mnc + msin."""

    mcc: str
    mnc: str
    msin: str

    def __post_init__(self):
        _require_digits(self.mcc, "mcc")
        _require_digits(self.mnc, "mnc")
        _require_digits(self.msin, "msin")
        if len(self.mcc) != 3:
            raise ValueError("mcc must be exactly 3 digits")
        if len(self.mnc) not in (2, 3):
            raise ValueError("mnc must be 2 or 3 digits")
        if not 1 <= len(self.msin) <= 10:
            raise ValueError("msin must be 1..10 digits")

    @property
    def home_network_id(self) -> tuple[str, str]:
        return (self.mcc, self.mnc)

    @property
    def plmn(self) -> str:
        return self.mcc + self.mnc


@dataclass(frozen=True)
class EquipmentIdentity:
    """Permanent equipment identity (15 decimal digits)."""

    pei: str

    def __post_init__(self):
        _require_digits(self.pei, "pei")
        if len(self.pei) != 15:
            raise ValueError("pei must be exactly 15 digits")


def format_supi(identity: SubscriberIdentity) -> str:
    return "imsi-" + identity.mcc + identity.mnc + identity.msin


def parse_supi(text: str, mnc_digits: int | None = None) -> SubscriberIdentity:
    """Inverse of format_supi.

    The digit string does not delimit mcc/mnc/msin, so the mnc width must
    be known.  When ``mnc_digits`` is None a 2-digit mnc is assumed unless
    the total length is 16 (only reachable with a 3-digit mnc and a
    10-digit msin).
    """
    if not text.startswith("imsi-"):
        raise ValueError(f"not a supi encoding: {text!r}")
    digits = text[len("imsi-"):]
    _require_digits(digits, "supi digits")
    if mnc_digits is None:
        mnc_digits = 3 if len(digits) == 16 else 2
    if mnc_digits not in (2, 3):
        raise ValueError("mnc_digits must be 2 or 3")
    return SubscriberIdentity(
        mcc=digits[:3], mnc=digits[3:3 + mnc_digits], msin=digits[3 + mnc_digits:]
    )


def format_pei(identity: EquipmentIdentity) -> str:
    return "pei-" + identity.pei


def parse_pei(text: str) -> EquipmentIdentity:
    if not text.startswith("pei-"):
        raise ValueError(f"not a pei encoding: {text!r}")
    return EquipmentIdentity(pei=text[len("pei-"):])


@dataclass(frozen=True)
class ConcealedIdentity:
    """Concealed subscriber identity as sent in a registration request.

    The home network id travels in clear; the msin is either copied
    verbatim (null scheme) or ECIES-encrypted with an ephemeral public key
    and an 8-byte tag.
    """

    mcc: str
    mnc: str
    scheme: SuciScheme
    ciphertext: bytes
    ephemeral_public_key: bytes | None = None
    mac_tag: bytes | None = None

    def __post_init__(self):
        _require_digits(self.mcc, "mcc")
        _require_digits(self.mnc, "mnc")
        if self.scheme == SuciScheme.NULL:
            if self.ephemeral_public_key is not None or self.mac_tag is not None:
                raise ValueError("null scheme carries no key material")
            if not self.ciphertext.isdigit():
                raise ValueError("null scheme ciphertext must be the msin digits")
        else:
            expected = 32 if self.scheme == SuciScheme.PROFILE_A else 33
            if self.ephemeral_public_key is None or len(self.ephemeral_public_key) != expected:
                raise ValueError(f"scheme {self.scheme.name} needs a {expected}-byte ephemeral key")
            if self.mac_tag is None or len(self.mac_tag) != 8:
                raise ValueError("ecies schemes need an 8-byte tag")

    @property
    def home_network_id(self) -> tuple[str, str]:
        return (self.mcc, self.mnc)

    @property
    def plmn(self) -> str:
        return self.mcc + self.mnc

    def to_bytes(self) -> bytes:
        out = bytearray()
        out.append(int(self.scheme))
        out += self.mcc.encode()
        out.append(len(self.mnc))
        out += self.mnc.encode()
        if self.scheme == SuciScheme.NULL:
            out.append(len(self.ciphertext))
            out += self.ciphertext
        else:
            out.append(len(self.ephemeral_public_key))
            out += self.ephemeral_public_key
            out.append(len(self.ciphertext))
            out += self.ciphertext
            out += self.mac_tag
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "ConcealedIdentity":
        try:
            scheme = SuciScheme(data[0])
        except ValueError as exc:
            raise UnsupportedScheme(f"unknown suci scheme id {data[0]}") from exc
        mcc = data[1:4].decode()
        mnc_len = data[4]
        pos = 5
        mnc = data[pos:pos + mnc_len].decode()
        pos += mnc_len
        if scheme == SuciScheme.NULL:
            ct_len = data[pos]
            pos += 1
            ct = data[pos:pos + ct_len]
            if pos + ct_len != len(data):
                raise ValueError("trailing bytes in suci encoding")
            return cls(mcc=mcc, mnc=mnc, scheme=scheme, ciphertext=ct)
        eph_len = data[pos]
        pos += 1
        eph = data[pos:pos + eph_len]
        pos += eph_len
        ct_len = data[pos]
        pos += 1
        ct = data[pos:pos + ct_len]
        pos += ct_len
        tag = data[pos:pos + 8]
        if pos + 8 != len(data):
            raise ValueError("trailing bytes in suci encoding")
        return cls(
            mcc=mcc, mnc=mnc, scheme=scheme, ciphertext=ct,
            ephemeral_public_key=eph, mac_tag=tag,
        )


class UnsupportedScheme(ValueError):
    """Raised when a SUCI names a concealment scheme this build cannot handle."""


@dataclass(frozen=True)
class TemporaryIdentity:
    """5G-GUTI with its S-TMSI truncation and an allocation epoch."""

    guti: bytes
    allocation_epoch: int

    def __post_init__(self):
        if len(self.guti) != GUTI_LEN:
            raise ValueError(f"guti must be {GUTI_LEN} bytes")
        if self.allocation_epoch < 1:
            raise ValueError("allocation epoch starts at 1")

    @property
    def s_tmsi(self) -> bytes:
        return self.guti[-S_TMSI_LEN:]

    def encode(self) -> str:
        return self.guti.hex()


def parse_guti(text: str) -> bytes:
    raw = bytes.fromhex(text)
    if len(raw) != GUTI_LEN:
        raise ValueError(f"guti must be {GUTI_LEN} bytes")
    return raw


class GutiAllocator:
    """Allocates fresh temporary identities from a seeded stream.

    Every allocation in one run is distinct and the epoch counter strictly
    increases; the same stream seed replays the same sequence.
    """

    def __init__(self, rng: RandomStream):
        self._rng = rng
        self._epoch = 0
        self._issued: set[bytes] = set()

    def allocate(self) -> TemporaryIdentity:
        while True:
            guti = self._rng.take(GUTI_LEN)
            if guti not in self._issued:
                break
        self._issued.add(guti)
        self._epoch += 1
        return TemporaryIdentity(guti=guti, allocation_epoch=self._epoch)


@dataclass
class LongTermCredential:
    """Long-term key K and the sequence counter shared UE-side and UDM-side."""

    k: bytes
    sqn: int = 1

    def __post_init__(self):
        if len(self.k) != 16:
            raise ValueError("k must be 16 bytes")
        if not 0 <= self.sqn <= SQN_MAX:
            raise ValueError("sqn out of 48-bit range")

    def advanced(self) -> "LongTermCredential":
        if self.sqn >= SQN_MAX:
            raise ValueError("sqn exhausted")
        return replace(self, sqn=self.sqn + 1)


# Fixed derivation DAG: child -> parent.
KEY_PARENT: dict[str, str] = {
    "k_seaf": "k_ausf",
    "k_amf": "k_seaf",
    "k_nas_int": "k_amf",
    "k_nas_enc": "k_amf",
    "k_gnb": "k_amf",
    "k_rrc_int": "k_gnb",
    "k_rrc_enc": "k_gnb",
    "k_up_int": "k_gnb",
    "k_up_enc": "k_gnb",
}
KEY_NAMES: tuple[str, ...] = ("k_ausf",) + tuple(KEY_PARENT)


def key_ancestors(name: str) -> list[str]:
    """Ancestor chain of a key name, nearest parent first."""
    chain = []
    while name in KEY_PARENT:
        name = KEY_PARENT[name]
        chain.append(name)
    return chain


class DerivationOrderError(ValueError):
    """A key was recorded before its parent, or with an edge outside the DAG."""


@dataclass
class KeyHierarchy:
    """Populated derived keys plus the ordered log of derivation edges.

    Keys may only be recorded once their parent is present; entities that
    never see the upper chain (the serving AMF starts at k_seaf, the gNB
    at k_gnb) declare those keys as roots.
    """

    keys: dict[str, bytes] = field(default_factory=dict)
    derivation_log: list[tuple[str, str]] = field(default_factory=list)
    roots: set[str] = field(default_factory=set)

    def set_root(self, name: str, key: bytes) -> None:
        if name not in KEY_NAMES:
            raise DerivationOrderError(f"unknown key name {name}")
        if len(key) != KEY_LEN:
            raise ValueError(f"{name} must be {KEY_LEN} bytes")
        if self.keys:
            raise DerivationOrderError("root must be set before any derivation")
        self.roots.add(name)
        self.keys[name] = key

    def record(self, child: str, parent: str, key: bytes) -> None:
        if KEY_PARENT.get(child) != parent:
            raise DerivationOrderError(f"{parent} -> {child} is not a derivation edge")
        if parent not in self.keys:
            raise DerivationOrderError(f"parent {parent} not derived yet for {child}")
        if child in self.keys:
            raise DerivationOrderError(f"{child} already derived")
        if len(key) != KEY_LEN:
            raise ValueError(f"{child} must be {KEY_LEN} bytes")
        self.keys[child] = key
        self.derivation_log.append((child, parent))

    def get(self, name: str) -> bytes:
        return self.keys[name]

    def __contains__(self, name: str) -> bool:
        return name in self.keys

    def validate(self) -> None:
        """Check topological consistency of the log against the fixed DAG."""
        seen = set(self.roots)
        for child, parent in self.derivation_log:
            if KEY_PARENT.get(child) != parent:
                raise DerivationOrderError(f"edge {parent} -> {child} outside DAG")
            if parent not in seen:
                raise DerivationOrderError(f"{child} logged before parent {parent}")
            seen.add(child)
        for name in self.keys:
            if name not in seen:
                raise DerivationOrderError(f"{name} present without derivation or root")


NAS_COUNT_MAX = 2**24 - 1


@dataclass
class SecurityContext:
    """Per-session NAS security state shared by UE and AMF."""

    ng_ksi: int
    keys: KeyHierarchy
    nea_id: int
    nia_id: int
    abba: bytes = b"\x00\x00"
    nas_count_ul: int = 0
    nas_count_dl: int = 0
    born_at: int = 0

    def __post_init__(self):
        if not 0 <= self.ng_ksi <= 0x0F:
            raise ValueError("ng_ksi is a 4-bit value")
        if len(self.abba) != 2:
            raise ValueError("abba is 2 bytes")
        if self.nea_id not in (0, 1, 2, 3) or self.nia_id not in (0, 1, 2, 3):
            raise ValueError("algorithm ids are 0..3")

    def next_ul(self) -> int:
        count = self.nas_count_ul
        if count >= NAS_COUNT_MAX:
            raise ValueError("uplink NAS count exhausted")
        self.nas_count_ul = count + 1
        return count

    def next_dl(self) -> int:
        count = self.nas_count_dl
        if count >= NAS_COUNT_MAX:
            raise ValueError("downlink NAS count exhausted")
        self.nas_count_dl = count + 1
        return count

    def accept_ul(self, count: int) -> None:
        if count < self.nas_count_ul:
            raise ValueError("uplink NAS count went backwards")
        self.nas_count_ul = count + 1

    def accept_dl(self, count: int) -> None:
        if count < self.nas_count_dl:
            raise ValueError("downlink NAS count went backwards")
        self.nas_count_dl = count + 1
