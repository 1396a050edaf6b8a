#!/usr/bin/env python3
"""Hand assembler for the TLV wire format. Regenerates frames.hex and
invalid.hex; it shares no code with the Rust codec."""

import struct

PT = {"interest": 0x10, "data": 0x11, "subscribe": 0x12, "unsubscribe": 0x13, "publish": 0x14}
NAME_COMPONENT, CD_BEGIN, PAYLOAD, NONCE, HOP_LIMIT, SNIPPET, SEQ = range(1, 8)


def tlv(t, value):
    return bytes([t]) + struct.pack(">H", len(value)) + value


def name(text):
    return b"".join(tlv(NAME_COMPONENT, c.encode()) for c in text.strip("/").split("/"))


def interest(n, nonce, hop):
    return bytes([PT["interest"]]) + name(n) + tlv(NONCE, struct.pack(">I", nonce)) + tlv(HOP_LIMIT, bytes([hop]))


def data(n, payload):
    return bytes([PT["data"]]) + name(n) + tlv(PAYLOAD, payload)


def sub(kind, cd):
    return bytes([PT[kind]]) + name(cd)


def publish(cds, payload, snippet, seq):
    out = bytes([PT["publish"]])
    for cd in cds:
        out += tlv(CD_BEGIN, b"") + name(cd)
    return out + tlv(PAYLOAD, payload) + tlv(SNIPPET, bytes([snippet])) + tlv(SEQ, struct.pack(">I", seq))


VALID = [
    (sub("subscribe", "/a"), "subscribe /a"),
    (sub("unsubscribe", "/a"), "unsubscribe /a"),
    (sub("subscribe", "/iot/k1"), "subscribe /iot/k1"),
    (interest("/a", 0, 16), "interest /a nonce=0 hop=16"),
    (interest("/data/17/42", 0xDEADBEEF, 3), "interest /data/17/42 nonce=3735928559 hop=3"),
    (data("/a", b""), "data /a payload="),
    (data("/data/1/0", bytes([0, 0, 0, 1]) + b"hello"), "data /data/1/0 payload=0000000168656c6c6f"),
    (publish(["/iot/k3"], bytes(range(20)), 0, 0x01000005),
     "publish /iot/k3 payload=000102030405060708090a0b0c0d0e0f10111213 snippet=0 seq=16777221"),
    (publish(["/a/x", "/b/y"], b"\xff", 1, 7), "publish /a/x,/b/y payload=ff snippet=1 seq=7"),
    (publish(["/a", "/b", "/c", "/d"], b"", 0, 0xFFFFFFFF), "publish /a,/b,/c,/d payload= snippet=0 seq=4294967295"),
    (data("/" + "x" * 32, bytes(88)), "data /" + "x" * 32 + " payload=" + "00" * 88),
]

# Malformed frames and the error the decoder must report.
INVALID = [
    (b"", "EmptyFrame"),
    (b"\xff", "UnknownPacketType"),
    (bytes([0x12, 0x01, 0x00, 0x05]) + b"a", "TruncatedTlv"),
    # Fewer bytes left than a TLV header holds.
    (bytes([0x12, 0x01, 0x00]), "TrailingGarbage"),
    (bytes([0x12]), "MissingField"),
    (bytes([PT["interest"]]) + name("/a") + tlv(NONCE, bytes(4)), "MissingField"),
    (interest("/a", 0, 16) + tlv(HOP_LIMIT, b"\x01"), "DuplicateField"),
    (sub("subscribe", "/a") + b"\x00", "TrailingGarbage"),
    (data("/a", bytes(130)), "OversizeFrame"),
]


def main():
    with open("frames.hex", "w") as f:
        for frame, desc in VALID:
            assert len(frame) <= 128, desc
            f.write(f"{frame.hex()}  # {desc}\n")
    with open("invalid.hex", "w") as f:
        for frame, err in INVALID:
            f.write(f"{frame.hex() or '-'}  # {err}\n")


if __name__ == "__main__":
    main()
