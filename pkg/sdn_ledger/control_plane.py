"""
Per-controller state machines of the control plane: commands sent
between peer controllers are verified against the digests recorded
in the ledger, DHCP leases are given only to MAC addresses of the
IP-MAC association table and ARP exchanges are validated against
the same table before a host pair may communicate.
"""
import logging
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

from . import exceptions, settings, utils

logger = logging.getLogger(__name__)

BROADCAST = 'Broadcast'

# the answer of handle_dhcp for MAC addresses missing in the table
DENIED = 'Denied'


class CommandKind(Enum):
    ARP_REQUEST = 'ArpRequest'
    ARP_REPLY = 'ArpReply'
    FLOW_MOD = 'FlowMod'
    CUSTOM = 'Custom'


class VerifyMode(Enum):
    IMMEDIATE = 'Immediate'
    DEFERRED = 'Deferred'

    @classmethod
    def from_name(cls, name):
        """
        Accepts the lowercase names used by the settings,
        scenario files and command line
        """
        if isinstance(name, cls):
            return name
        for mode in cls:
            if mode.value.lower() == str(name).lower():
                return mode
        raise ValueError("unknown verification mode: {!r}".format(name))


class SecurityEventKind(Enum):
    UNAUTHORIZED_HOST = 'UnauthorizedHost'
    ARP_SPOOF = 'ArpSpoof'
    POST_HOC_INTEGRITY_FAILURE = 'PostHocIntegrityFailure'
    IMMEDIATE_INTEGRITY_FAILURE = 'ImmediateIntegrityFailure'


class ArpOp(Enum):
    REQUEST = 'Request'
    REPLY = 'Reply'


class Action(Enum):
    FLOOD = 'Flood'
    REPLY = 'Reply'
    QUALIFY = 'Qualify'
    DISCARD = 'Discard'
    DROP = 'Drop'


@dataclass(frozen=True)
class ControlCommand:
    kind: CommandKind
    src_controller: int
    # a controller id or BROADCAST
    dst_controller: object
    payload: bytes
    timestamp_ms: int

    def wire(self):
        """
        The bytes that travel between controllers: the payload
        followed by the timestamp as 8 bytes in network order
        """
        return self.payload + self.timestamp_ms.to_bytes(8, 'big')

    def with_wire(self, data):
        """
        Returns the command carrying the given wire bytes
        """
        return replace(
            self,
            payload=bytes(data[:-8]),
            timestamp_ms=int.from_bytes(data[-8:], 'big'),
        )


def compute_command_digest(cmd):
    """
    MD5 of 'kind|src|dst|payload_hex|timestamp_ms'
    """
    encoding = '|'.join((
        cmd.kind.value,
        str(cmd.src_controller),
        str(cmd.dst_controller),
        cmd.payload.hex(),
        str(cmd.timestamp_ms),
    ))
    return utils.md5_hex(encoding)


@dataclass(frozen=True)
class VerificationResult:
    command_digest: str
    verified: bool
    mode: VerifyMode
    decided_at_ms: int


@dataclass(frozen=True)
class DeferredTicket:
    command_digest: str
    controller: int
    command: ControlCommand
    due_tick: int


@dataclass(frozen=True)
class ArpMessage:
    op: ArpOp
    sender_ip: str
    sender_mac: str
    target_ip: str
    target_mac: Optional[str] = None

    def encode(self):
        return ','.join((
            self.op.value,
            self.sender_ip,
            self.sender_mac,
            self.target_ip,
            self.target_mac or '',
        )).encode('utf-8')

    @classmethod
    def decode(cls, payload):
        """
        Raises ValueError if the payload is not an ARP message
        """
        parts = payload.decode('utf-8').split(',')
        if len(parts) != 5:
            raise ValueError("ARP message needs 5 fields")
        op, sender_ip, sender_mac, target_ip, target_mac = parts
        return cls(
            ArpOp(op), sender_ip, sender_mac, target_ip, target_mac or None
        )


@dataclass
class ArpPairRegistry:
    qualified: set = field(default_factory=set)

    def qualify(self, first_ip, second_ip):
        self.qualified.add(frozenset((first_ip, second_ip)))

    def __contains__(self, pair):
        return frozenset(pair) in self.qualified


@dataclass(frozen=True)
class SecurityEvent:
    time_ms: int
    kind: SecurityEventKind
    detail: str


class EventLog:
    """
    The time-ordered log of everything the control plane and the
    provisioning engine do. Every row is the time, the event kind
    and its detail fields.
    """

    def __init__(self, clock=None):
        self.rows = []
        self.security_events = []
        self._clock = clock or utils.SimulationClock(settings.CONF['tick_ms'])

    @staticmethod
    def _field(value):
        # commas separate the fields of a row
        return str(value).replace(',', ';')

    def record(self, kind, *fields):
        row = (
            self._clock.now_ms(),
            str(kind),
            tuple(self._field(value) for value in fields),
        )
        self.rows.append(row)
        return row

    def security(self, kind, *fields):
        time_ms, _, detail = self.record(kind.value, *fields)
        event = SecurityEvent(time_ms, kind, ';'.join(detail))
        self.security_events.append(event)
        logger.warning("security event %s: %s", kind.value, event.detail)
        return event

    def count(self, kind):
        kind = getattr(kind, 'value', kind)
        return sum(1 for row in self.rows if row[1] == kind)

    def of_kind(self, kind):
        kind = getattr(kind, 'value', kind)
        return [row for row in self.rows if row[1] == kind]

    def lines(self):
        return [
            ','.join((str(time_ms), kind) + detail)
            for time_ms, kind, detail in self.rows
        ]


@dataclass
class TamperRule:
    """
    A one-shot fault injected into the first later delivery
    matching every given filter
    """
    flip_byte: int = 0
    target_digest: Optional[str] = None
    match: Optional[str] = None
    dst: Optional[int] = None
    fired: bool = False

    def matches(self, digest, dst, cmd):
        if self.fired:
            return False
        if self.target_digest is not None and self.target_digest != digest:
            return False
        if self.match is not None and self.match.lower() != cmd.kind.value.lower():
            return False
        return self.dst is None or self.dst == dst

    def apply(self, cmd):
        wire = bytearray(cmd.wire())
        wire[self.flip_byte % len(wire)] ^= 0xFF
        self.fired = True
        return cmd.with_wire(wire)


@dataclass(frozen=True)
class Delivery:
    ready_tick: int
    dst: int
    command: ControlCommand
    digest: str


class ControlPlane:
    """
    The controllers of all domains. Commands travel through one
    FIFO queue and are handled in the order they were sent.
    """

    def __init__(self, topology, ledger, event_log=None, mode=None,
                 delay_ticks=None, clock=None):
        self.topology = topology
        self.ledger = ledger
        self.clock = clock or utils.SimulationClock(settings.CONF['tick_ms'])
        self.event_log = event_log or EventLog(self.clock)
        self.mode = VerifyMode.from_name(mode or settings.CONF['verify_mode'])
        if delay_ticks is None:
            delay_ticks = settings.CONF['verify_delay_ticks']
        self.delay_ticks = int(delay_ticks)

        self.queue = deque()
        self.results = []
        self.tamper_rules = []
        self.buffers = {cid: deque() for cid in topology.controllers}
        self.registries = {
            cid: ArpPairRegistry() for cid in topology.controllers
        }
        # outstanding requests keyed by (requester ip, target ip)
        self.pending = {cid: {} for cid in topology.controllers}

    def _domain(self, controller_id):
        return self.topology.controllers[controller_id].domain_id

    def _controller_of(self, host):
        return self.topology.controller_for_domain(host.domain_id).id

    def make_command(self, kind, src, dst, payload):
        """
        Creates a command stamped with the current simulated time
        """
        if isinstance(payload, str):
            payload = payload.encode('utf-8')
        return ControlCommand(
            CommandKind(getattr(kind, 'value', kind)),
            src, dst, payload, self.clock.stamp(),
        )

    # integrity verification

    def send_command(self, src, cmd, record=True):
        """
        Records the digest of the command in the ledger and then
        queues the command for the destination or for every peer
        of the sender. 'record=False' sends without recording.
        """
        if cmd.src_controller != src:
            raise exceptions.ControlPlaneError(
                "controller {} cannot send a command of {}".format(
                    src, cmd.src_controller
                )
            )
        if not cmd.payload:
            raise exceptions.ControlPlaneError("the payload is empty")
        if cmd.dst_controller == BROADCAST:
            targets = sorted(self.topology.controllers[src].peer_ids)
        elif cmd.dst_controller in self.topology.controllers:
            targets = [cmd.dst_controller]
        else:
            raise exceptions.ControlPlaneError(
                "unknown destination {}".format(cmd.dst_controller)
            )

        digest = compute_command_digest(cmd)
        if record:
            try:
                self.ledger.record_command_hash(digest)
            except exceptions.LedgerError as e:
                raise exceptions.LedgerRejected(str(e)) from e
            self.event_log.record(
                'command_recorded', digest, src, cmd.dst_controller,
                cmd.kind.value,
            )
        else:
            self.event_log.record(
                'command_unrecorded', digest, src, cmd.dst_controller,
                cmd.kind.value,
            )

        ready_tick = self.clock.tick
        if self.mode is VerifyMode.IMMEDIATE:
            # the command waits until the receiver can verify it
            ready_tick += self.delay_ticks
        for target in targets:
            self.queue.append(Delivery(ready_tick, target, cmd, digest))
        return digest

    def arm_tamper(self, rule):
        self.tamper_rules.append(rule)

    def _tampered(self, delivery):
        for rule in self.tamper_rules:
            if rule.matches(delivery.digest, delivery.dst, delivery.command):
                logger.debug("tampering with [%s]", delivery.digest)
                self.event_log.record(
                    'command_tampered', delivery.digest, delivery.dst,
                    rule.flip_byte,
                )
                return rule.apply(delivery.command)
        return delivery.command

    def deliver_ready(self, tick=None):
        """
        Delivers the queued commands due by the tick, including the
        commands sent while delivering. Returns their count.
        """
        if tick is None:
            tick = self.clock.tick
        count = 0
        while self.queue and self.queue[0].ready_tick <= tick:
            delivery = self.queue.popleft()
            cmd = self._tampered(delivery)
            self.event_log.record(
                'command_delivered', delivery.digest, delivery.dst,
                cmd.kind.value,
            )
            self.receive_command(delivery.dst, cmd)
            count += 1
        return count

    def receive_command(self, dst, cmd, mode=None):
        """
        Immediate mode deploys the command only if its digest is in
        the ledger. Deferred mode deploys it at once and buffers the
        digest for a later check.
        """
        mode = VerifyMode.from_name(mode or self.mode)
        digest = compute_command_digest(cmd)
        if mode is VerifyMode.DEFERRED:
            ticket = DeferredTicket(
                digest, dst, cmd, self.clock.tick + self.delay_ticks
            )
            self.buffers[dst].append(ticket)
            self.event_log.record(
                'command_deployed_unverified', digest, dst, cmd.kind.value
            )
            self.deploy(dst, cmd)
            return ticket

        verified = self.ledger.contains_command_hash(digest)
        result = VerificationResult(
            digest, verified, mode, self.clock.now_ms()
        )
        self.results.append(result)
        if not verified:
            self.event_log.security(
                SecurityEventKind.IMMEDIATE_INTEGRITY_FAILURE,
                digest, dst, cmd.kind.value,
            )
            return result
        logger.info("[%s] was verified", digest)
        self.event_log.record('command_verified', digest, dst)
        self.deploy(dst, cmd)
        return result

    def flush_deferred(self, dst, up_to_tick=None):
        """
        Verifies the buffered digests of the controller in FIFO
        order, only the ones due by 'up_to_tick' if it is given
        """
        buffer = self.buffers[dst]
        results = []
        while buffer and (up_to_tick is None or buffer[0].due_tick <= up_to_tick):
            ticket = buffer.popleft()
            verified = self.ledger.contains_command_hash(ticket.command_digest)
            result = VerificationResult(
                ticket.command_digest, verified, VerifyMode.DEFERRED,
                self.clock.now_ms(),
            )
            if verified:
                logger.info("[%s] was verified", ticket.command_digest)
                self.event_log.record(
                    'command_verified', ticket.command_digest, dst
                )
            else:
                self.event_log.security(
                    SecurityEventKind.POST_HOC_INTEGRITY_FAILURE,
                    ticket.command_digest, dst, ticket.command.kind.value,
                )
            results.append(result)
        self.results.extend(results)
        return results

    def flush_all(self, up_to_tick=None):
        results = []
        for controller_id in sorted(self.buffers):
            results.extend(self.flush_deferred(controller_id, up_to_tick))
        return results

    def deploy(self, dst, cmd):
        if cmd.kind not in (CommandKind.ARP_REQUEST, CommandKind.ARP_REPLY):
            self.event_log.record(
                'command_deployed', compute_command_digest(cmd), dst
            )
            return None
        try:
            arp = ArpMessage.decode(cmd.payload)
        except ValueError:
            logger.info("malformed ARP message: packet is discarded")
            self.event_log.record(
                'arp_malformed', compute_command_digest(cmd), dst
            )
            return Action.DISCARD
        return self.handle_arp(dst, arp, origin=cmd.src_controller)

    # malicious host detection

    def handle_dhcp(self, ctrl, mac, host=None):
        """
        Returns the IP bound to the MAC in the ledger and assigns it
        to the host, or DENIED for a MAC missing in the table. Without
        a host the lease goes to the host that owns the MAC.
        """
        ip = self.ledger.mac_authorized(mac)
        if ip is None:
            self.event_log.security(
                SecurityEventKind.UNAUTHORIZED_HOST, ctrl, mac
            )
            return DENIED
        if host is None:
            host = self.topology.host_by_mac(utils.normalize_mac(mac))
        if host is not None:
            host.ip = ip
        self.event_log.record('dhcp_lease', ctrl, mac, ip)
        return ip

    def _authentic(self, ctrl, arp):
        """
        Checks the sender of the ARP message against the IP-MAC table
        """
        if self.ledger.mac_authorized(arp.sender_mac) == arp.sender_ip:
            return True
        self.event_log.security(
            SecurityEventKind.ARP_SPOOF, ctrl, arp.sender_ip, arp.sender_mac
        )
        return False

    def handle_arp(self, ctrl, arp, origin=None):
        """
        Handles an ARP message at a controller. 'origin' is the peer
        controller the message came from, None for a local host.
        """
        if not self._authentic(ctrl, arp):
            return Action.DROP
        if arp.op is ArpOp.REPLY:
            return self._handle_reply(ctrl, arp)

        target = self.topology.host_by_ip(arp.target_ip)
        is_local = (
            target is not None
            and target.domain_id == self._domain(ctrl)
        )
        if origin is None:
            self.pending[ctrl][(arp.sender_ip, arp.target_ip)] = arp
            if is_local:
                return self._reply(ctrl, arp, target, origin=ctrl)
            cmd = self.make_command(
                CommandKind.ARP_REQUEST, ctrl, BROADCAST, arp.encode()
            )
            self.send_command(ctrl, cmd)
            self.event_log.record('arp_flooded', ctrl, arp.target_ip)
            return Action.FLOOD
        if is_local:
            return self._reply(ctrl, arp, target, origin=origin)
        logger.info(
            "controller %s has no host %s: packet is discarded",
            ctrl, arp.target_ip,
        )
        self.event_log.record('arp_discarded', ctrl, arp.target_ip)
        return Action.DISCARD

    def _reply(self, ctrl, request, target, origin):
        reply = ArpMessage(
            ArpOp.REPLY, target.ip, target.mac,
            request.sender_ip, request.sender_mac,
        )
        if not self._authentic(ctrl, reply):
            return Action.DROP
        self.registries[ctrl].qualify(request.sender_ip, target.ip)
        self.event_log.record('arp_replied', ctrl, target.ip, origin)
        if origin == ctrl:
            self._handle_reply(ctrl, reply)
            return Action.REPLY
        cmd = self.make_command(
            CommandKind.ARP_REPLY, ctrl, origin, reply.encode()
        )
        self.send_command(ctrl, cmd)
        return Action.REPLY

    def _handle_reply(self, ctrl, reply):
        key = (reply.target_ip, reply.sender_ip)
        request = self.pending[ctrl].get(key)
        if request is None or request.sender_mac != reply.target_mac:
            logger.info("unexpected ARP reply: packet is discarded")
            self.event_log.record('arp_discarded', ctrl, reply.sender_ip)
            return Action.DISCARD
        del self.pending[ctrl][key]
        self.registries[ctrl].qualify(reply.sender_ip, reply.target_ip)
        self.event_log.record(
            'arp_qualified', ctrl, reply.target_ip, reply.sender_ip
        )
        return Action.QUALIFY

    def arp_exchange(self, src_host, dst_host, sender_ip=None, sender_mac=None):
        """
        Starts the ARP request of a host for the address of another
        host. The sender fields may be forged.
        """
        ctrl = self._controller_of(src_host)
        sender_ip = sender_ip or src_host.ip
        if sender_ip is None or dst_host.ip is None:
            logger.warning(
                "ARP from %s to %s without a leased address",
                src_host.name, dst_host.name,
            )
            self.event_log.record('arp_discarded', ctrl, dst_host.name)
            return Action.DISCARD
        arp = ArpMessage(
            ArpOp.REQUEST, sender_ip, sender_mac or src_host.mac, dst_host.ip
        )
        return self.handle_arp(ctrl, arp)

    def can_communicate(self, first, second):
        """
        Whether the two hosts completed a validated ARP exchange
        at the controllers of both
        """
        if first.ip is None or second.ip is None:
            return False
        pair = (first.ip, second.ip)
        return (
            pair in self.registries[self._controller_of(first)]
            and pair in self.registries[self._controller_of(second)]
        )
