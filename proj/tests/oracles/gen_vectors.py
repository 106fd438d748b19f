#!/usr/bin/env python3
"""Independent oracle for the golden-vector files under tests/data.

Uses only the Python `cryptography` package and exact rational arithmetic, so
the frozen vectors do not share any code path with the C++ library. Run from
the repository root:

    python3 tests/oracles/gen_vectors.py tests/data
"""

import hashlib
import math
import sys
from fractions import Fraction
from pathlib import Path

from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey, X25519PublicKey
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF
from cryptography.hazmat.primitives import serialization

BASE_ENIN = 2629728  # 2020-01-01T00:00:00Z / 600


def hkdf(ikm, info, length, salt=b""):
    return HKDF(algorithm=hashes.SHA256(), length=length, salt=salt or None, info=info).derive(ikm)


def seed_bytes(label, i, n):
    return hashlib.sha256(f"ctxen-vector-{label}-{i}".encode()).digest()[:n]


def le32(v):
    return v.to_bytes(4, "little")


def be32(v):
    return v.to_bytes(4, "big")


def rpi(key, enin):
    rpik = hkdf(key, b"EN-RPIK", 16)
    block = b"EN-RPI" + bytes(6) + le32(enin)
    enc = Cipher(algorithms.AES(rpik), modes.ECB()).encryptor()
    return enc.update(block) + enc.finalize()


def aem(key, enin, metadata):
    aemk = hkdf(key, b"EN-AEMK", 16)
    enc = Cipher(algorithms.AES(aemk), modes.CTR(rpi(key, enin))).encryptor()
    return enc.update(metadata) + enc.finalize()


def code(value, offset, span):
    c = math.floor((Fraction(value) + offset) / span * (1 << 32))
    return min(c, (1 << 32) - 1)


def blob(lat, lon, enin):
    return be32(code(lat, 90, 180)) + be32(code(lon, 180, 360)) + be32(enin) + bytes(4)


def seal(key, nonce, plaintext):
    return nonce + AESGCM(key).encrypt(nonce, plaintext, None)


def consent_key(dk, cs):
    return hkdf(bytes(a ^ b for a, b in zip(dk, cs)), b"CTX-CONSENT", 16)


def x25519_pub(sk):
    return X25519PrivateKey.from_private_bytes(sk).public_key().public_bytes(
        serialization.Encoding.Raw, serialization.PublicFormat.Raw)


def asym_encrypt(rpub, eph_sk, nonce, plaintext):
    eph_pub = x25519_pub(eph_sk)
    shared = X25519PrivateKey.from_private_bytes(eph_sk).exchange(X25519PublicKey.from_public_bytes(rpub))
    key = hkdf(shared, b"CTX-ASYM", 16, salt=eph_pub + rpub)
    return eph_pub + seal(key, nonce, plaintext)


def window_secret(master, label, window, n):
    return hkdf(master, label + le32(window), n)


# Local equirectangular grid, cells clipped at the +-85 deg band and the
# antimeridian. Written from the geometric definition, not from the C++ code.
R = 6371000.0
POLAR = 85.0


def quantize(lat, lon, cell):
    k = R * math.pi / 180.0
    y = lat * k
    row = math.floor(y / cell)
    y_lo = max(row * cell, -POLAR * k)
    y_hi = min((row + 1) * cell, POLAR * k)
    lat_c = (y_lo + y_hi) / 2.0 / k
    kx = k * math.cos(math.radians(lat_c))
    x = lon * kx
    col = math.floor(x / cell)
    x_lo = max(col * cell, -180.0 * kx)
    x_hi = min((col + 1) * cell, 180.0 * kx)
    lon_c = (x_lo + x_hi) / 2.0 / kx
    return lat_c, lon_c


def main(out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)

    lines = [f"{bytes(16).hex()} 0 {rpi(bytes(16), 0).hex()}"]
    for i in range(24):
        key = seed_bytes("tek", i, 16)
        enin = BASE_ENIN + 6 * i
        lines.append(f"{key.hex()} {enin} {rpi(key, enin).hex()}")
    (out / "rpi_vectors.txt").write_text("\n".join(lines) + "\n")

    points = [(0.0, 0.0, 0), (-90.0, -180.0, 7), (42.3601, -71.0942, BASE_ENIN),
              (90.0, 179.999999, 4294967295), (-33.8688, 151.2093, 2629800),
              (51.5007, -0.1246, 2629801), (1e-9, -1e-9, 1)]
    lines = [f"{lat!r} {lon!r} {e} {blob(lat, lon, e).hex()}" for lat, lon, e in points]
    (out / "context_blob_vectors.txt").write_text("\n".join(lines) + "\n")

    lines = []
    for i in range(4):
        key = seed_bytes("aem-key", i, 16)
        meta = seed_bytes("aem-meta", i, 4)
        enin = BASE_ENIN + i
        lines.append(f"aem {key.hex()} {enin} {meta.hex()} -> {aem(key, enin, meta).hex()}")
    for i in range(4):
        dk = seed_bytes("sym-key", i, 16)
        nonce = seed_bytes("sym-nonce", i, 12)
        pt = blob(*points[i % len(points)])
        lines.append(f"sym {dk.hex()} {nonce.hex()} {pt.hex()} -> {seal(hkdf(dk, b'CTX-SYM', 16), nonce, pt).hex()}")
    for i in range(4):
        dk = seed_bytes("consent-key", i, 16)
        cs = seed_bytes("consent-secret", i, 16) if i else bytes(16)
        lines.append(f"consent_key {dk.hex()} {cs.hex()} -> {consent_key(dk, cs).hex()}")
        nonce = seed_bytes("consent-nonce", i, 12)
        pt = blob(*points[(i + 2) % len(points)])
        lines.append(f"consent {dk.hex()} {cs.hex()} {nonce.hex()} {pt.hex()} -> {seal(consent_key(dk, cs), nonce, pt).hex()}")
    for i in range(4):
        rsk = seed_bytes("asym-recipient", i, 32)
        eph = seed_bytes("asym-ephemeral", i, 32)
        nonce = seed_bytes("asym-nonce", i, 12)
        pt = blob(*points[(i + 3) % len(points)])
        rpub = x25519_pub(rsk)
        lines.append(f"asym {rsk.hex()} {eph.hex()} {nonce.hex()} {pt.hex()} -> {asym_encrypt(rpub, eph, nonce, pt).hex()}")
    for i in range(4):
        master = seed_bytes("findmy-master", i, 32)
        window = 1753152 + 37 * i  # 15-minute windows around 2020-01-01
        uuid = window_secret(master, b"FM-UUID", window, 16)
        pub = x25519_pub(window_secret(master, b"FM-SK", window, 32))
        lines.append(f"findmy {master.hex()} {window} -> {uuid.hex()} {pub.hex()}")
    for i in range(4):
        master = seed_bytes("asym-master", i, 32)
        window = BASE_ENIN + 11 * i
        pub = x25519_pub(window_secret(master, b"ASYM-SK", window, 32))
        lines.append(f"asym_window {master.hex()} {window} -> {pub.hex()}")
    (out / "scheme_vectors.txt").write_text("\n".join(lines) + "\n")

    qpoints = [(42.3601, -71.0942, 200.0), (42.3601, -71.0942, 1000.0), (-33.8688, 151.2093, 200.0),
               (84.9999, 179.9999, 1000.0), (-84.9999, -179.9999, 1000.0), (0.0, 0.0, 200.0),
               (60.1699, 24.9384, 500.0), (35.6762, 139.6503, 100000.0)]
    lines = []
    for lat, lon, cell in qpoints:
        clat, clon = quantize(lat, lon, cell)
        lines.append(f"{lat!r} {lon!r} {cell!r} {clat!r} {clon!r}")
    (out / "quantizer_vectors.txt").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/data")
