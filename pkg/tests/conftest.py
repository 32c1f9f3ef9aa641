import numpy as np
import pytest

from rhhh.hierarchy import HierarchySpec, PacketKey, parse_ipv4


def worked_example_stream():
    """108 packets: 102 under 101.102/16 (no /24 or /32 reaches 100), 6 elsewhere in 101/8."""
    keys = []
    for third in (1, 2):
        for last in range(1, 52):
            keys.append(PacketKey(parse_ipv4(f"101.102.{third}.{last}")))
    for last in range(1, 7):
        keys.append(PacketKey(parse_ipv4(f"101.7.7.{last}")))
    return keys


# theta * N == 100 for the 108-packet worked example
WORKED_THETA = 100 / 108


@pytest.fixture
def src_byte():
    return HierarchySpec.build("src-byte")


@pytest.fixture
def src_bit():
    return HierarchySpec.build("src-bit")


@pytest.fixture
def two_d():
    return HierarchySpec.build("2d-byte")


def clustered_keys(rng, n, dims, alphabet=(1, 2, 3)):
    """Random addresses whose bytes come from a tiny alphabet, so prefixes overlap a lot."""
    octets = np.asarray(alphabet, dtype=np.uint32)
    def addresses():
        b = octets[rng.integers(0, len(octets), size=(n, 4))]
        return (b[:, 0] << 24) | (b[:, 1] << 16) | (b[:, 2] << 8) | b[:, 3]
    src = addresses()
    return src, (addresses() if dims == 2 else None)
