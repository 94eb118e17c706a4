import re
import hashlib
import ipaddress
from decimal import Decimal, InvalidOperation, Overflow

# the digest of the missing block before the genesis block
ZERO_DIGEST = '0' * 32

DIGEST_RE = re.compile(r'^[0-9a-f]{32}$')
MAC_RE = re.compile(r'^[0-9A-F]{2}([-:])[0-9A-F]{2}(\1[0-9A-F]{2}){4}$')
IDENT_RE = re.compile(r'^\w+$')

BPS_PER_MBPS = Decimal(1000000)


def md5_hex(data):
    """
    Returns the lowercase hex MD5 digest of bytes
    or of the UTF-8 encoding of a string
    """
    if isinstance(data, str):
        data = data.encode('utf-8')
    return hashlib.md5(data).hexdigest()


def is_digest(value):
    """
    Checks whether the value is a 32-character lowercase hex digest
    """
    return isinstance(value, str) and bool(DIGEST_RE.match(value))


def normalize_mac(mac):
    """
    Returns the MAC address in the uppercase dash-separated form.
    Colon-separated and lowercase addresses are accepted.
    Raises ValueError for anything else.
    """
    value = str(mac).strip().upper()
    if not MAC_RE.match(value):
        raise ValueError("malformed MAC address: {!r}".format(mac))
    return value.replace(':', '-')


def normalize_ip(ip):
    """
    Returns the dotted-quad form of an IPv4 address.
    Raises ValueError if the address is not IPv4.
    """
    return str(ipaddress.IPv4Address(str(ip).strip()))


def is_identifier(value):
    """
    Checks whether the value may be used as a switch, host or flow id
    """
    return bool(IDENT_RE.match(value))


def mbps_to_bps(value):
    """
    Converts a decimal number of megabits per second
    (a string or a number) to an integer number of bits per second
    """
    try:
        # go through Decimal so '1.8' becomes exactly 1800000
        bps = Decimal(str(value)) * BPS_PER_MBPS
    except (InvalidOperation, Overflow):
        raise ValueError("not a number: {!r}".format(value))
    if not bps.is_finite():
        raise ValueError("not a finite rate: {!r}".format(value))
    try:
        return int(bps.to_integral_value())
    except (InvalidOperation, OverflowError):
        raise ValueError("rate out of range: {!r}".format(value))


def bps_to_mbps(bps):
    """
    Returns the shortest decimal string of megabits per second
    that converts back to the same number of bits per second
    """
    mbps = (Decimal(int(bps)) / BPS_PER_MBPS).normalize()
    return format(mbps, 'f')


class SimulationClock:
    """
    Simulated time. The time of a tick starts at tick * tick_ms
    and every stamped message moves the time one millisecond
    forward so that messages sent in the same tick are ordered.
    """

    def __init__(self, tick_ms=1000):
        self.tick_ms = tick_ms
        self.tick = 0
        self.offset = 0

    def set_tick(self, tick):
        """
        Moves the clock to the beginning of the tick
        """
        self.tick = tick
        self.offset = 0

    def now_ms(self):
        """
        Returns the current time in milliseconds
        """
        return self.tick * self.tick_ms + self.offset

    def stamp(self):
        """
        Advances the clock by one millisecond and returns the new time
        """
        self.offset += 1
        return self.now_ms()
