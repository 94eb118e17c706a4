"""
A simulated permissioned blockchain. Every committed transaction is
sealed into its own block chained to the previous one by an MD5 digest,
and mutates the contract state: the recorded command hashes, the IP-MAC
association table, the SLA definition table, the inter- and
intra-controller bandwidth matrices and the traversal edge-switch matrix.
"""
import logging
from enum import Enum
from collections import Counter
from dataclasses import dataclass, fields
from typing import Optional, Tuple

from . import utils
from . import exceptions

logger = logging.getLogger(__name__)


class TxKind(Enum):
    RECORD_COMMAND_HASH = 'RecordCommandHash'
    PUT_IP_MAC = 'PutIpMac'
    PUT_SLA = 'PutSla'
    UPDATE_SLA = 'UpdateSla'
    RESERVE_BANDWIDTH = 'ReserveBandwidth'
    RELEASE_BANDWIDTH = 'ReleaseBandwidth'
    SET_TRAVERSAL_EDGE = 'SetTraversalEdge'
    DEFINE_LINK = 'DefineLink'


class SlaFlag(Enum):
    BEST_EFFORT = 0
    GUARANTEED = 1


@dataclass(frozen=True, order=True)
class LinkKey:
    """
    The key of a link in the bandwidth matrices. Inter-domain links
    are keyed by the pair of controllers they connect, intra-domain
    and host access links by the domain and their two endpoints.
    Endpoints are kept sorted so (a, b) and (b, a) are the same key.
    """
    scope: str
    domain: Optional[int]
    a: object
    b: object

    @classmethod
    def inter(cls, first, second):
        a, b = sorted((int(first), int(second)))
        return cls('inter', None, a, b)

    @classmethod
    def intra(cls, domain, first, second):
        a, b = sorted((str(first), str(second)))
        return cls('intra', int(domain), a, b)

    @property
    def is_inter(self):
        return self.scope == 'inter'

    def __str__(self):
        if self.is_inter:
            return 'inter:{}-{}'.format(self.a, self.b)
        return 'intra:{}:{}-{}'.format(self.domain, self.a, self.b)


# payload records, the field order is the order of the canonical encoding

@dataclass(frozen=True)
class CommandHashRecord:
    digest: str


@dataclass(frozen=True)
class IpMacEntry:
    ip: str
    mac: str


@dataclass(frozen=True)
class SlaEntry:
    index: int
    src_ip: str
    dst_ip: str
    sla_bandwidth_bps: int
    flag: SlaFlag

    @property
    def guaranteed(self):
        return self.flag is SlaFlag.GUARANTEED


@dataclass(frozen=True)
class BandwidthChange:
    links: Tuple[LinkKey, ...]
    bw_bps: int


@dataclass(frozen=True)
class TraversalEdge:
    from_controller: int
    to_controller: int
    edge_switch: str


@dataclass(frozen=True)
class LinkDefinition:
    link: LinkKey
    max_bps: int


def canonical_field(value):
    """
    Returns the text of a single payload field in the block encoding
    """
    if value is None:
        return ''
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (tuple, list)):
        return ';'.join(canonical_field(item) for item in value)
    return str(value)


def canonical_payload(payload):
    """
    Joins the payload fields with commas in declaration order
    """
    return ','.join(
        canonical_field(getattr(payload, f.name)) for f in fields(payload)
    )


@dataclass(frozen=True)
class Transaction:
    kind: TxKind
    payload: object
    seq: int

    def encoding(self):
        return '|'.join([
            str(self.seq),
            canonical_field(self.kind),
            canonical_payload(self.payload),
        ])


@dataclass(frozen=True)
class Block:
    index: int
    prev_hash: str
    timestamp: int
    transactions: Tuple[Transaction, ...]
    block_hash: str

    @classmethod
    def seal(cls, index, prev_hash, timestamp, transactions):
        """
        Creates a block with the digest of its canonical encoding
        """
        block = cls(index, prev_hash, timestamp, tuple(transactions), '')
        return cls(
            index, prev_hash, timestamp, block.transactions,
            block.compute_hash()
        )

    def encoding(self):
        """
        index|prev_hash|timestamp_ms followed by seq|kind|payload
        of every transaction of the block
        """
        parts = [str(self.index), str(self.prev_hash), str(self.timestamp)]
        parts.extend(tx.encoding() for tx in self.transactions)
        return '|'.join(parts)

    def compute_hash(self):
        return utils.md5_hex(self.encoding())

    def export_line(self):
        return '{}|{}'.format(self.encoding(), self.block_hash)


class BandwidthMatrices:
    """
    The available guaranteed bandwidth of every link. The inter
    matrix is keyed by pairs of controllers, the intra matrices
    by the domain and then by pairs of nodes of the domain.
    """

    def __init__(self):
        self.inter = {}
        self.intra = {}
        # the guaranteed-queue maximum of every defined link
        self.maximum = {}

    def __contains__(self, key):
        return key in self.maximum

    def define(self, key, max_bps):
        self.maximum[key] = max_bps
        self.set_available(key, max_bps)

    def available(self, key):
        if key.is_inter:
            return self.inter[(key.a, key.b)]
        return self.intra[key.domain][(key.a, key.b)]

    def set_available(self, key, bps):
        if key.is_inter:
            self.inter[(key.a, key.b)] = bps
        else:
            self.intra.setdefault(key.domain, {})[(key.a, key.b)] = bps

    def inter_available(self, first, second):
        return self.available(LinkKey.inter(first, second))

    def intra_available(self, domain, first, second):
        return self.available(LinkKey.intra(domain, first, second))

    def snapshot(self):
        return tuple(
            (str(key), self.available(key), self.maximum[key])
            for key in sorted(self.maximum)
        )


class TraversalEdgeSwitchMatrix(dict):
    """
    Maps (from_controller, to_controller) to the edge switch
    that leaves the domain of from_controller toward to_controller
    """

    def edge_switch(self, from_controller, to_controller):
        return self.get((from_controller, to_controller))


class ContractState:
    """
    The state mutated by ledger transactions. Every transaction kind
    has a '_check_*' method that raises without side effects and an
    '_apply_*' method that changes the state.
    """

    def __init__(self):
        self.command_hashes = set()
        self.ip_by_mac = {}
        self.mac_by_ip = {}
        self.sla = {}
        self.sla_by_pair = {}
        self.matrices = BandwidthMatrices()
        self.traversal = TraversalEdgeSwitchMatrix()

    @classmethod
    def replay(cls, transactions):
        """
        Builds the state produced by applying the transactions
        in seq order onto the empty state
        """
        state = cls()
        for tx in sorted(transactions, key=lambda tx: tx.seq):
            state.check(tx)
            state.apply(tx)
        return state

    def check(self, tx):
        getattr(self, '_check_' + tx.kind.name.lower())(tx.payload)

    def apply(self, tx):
        getattr(self, '_apply_' + tx.kind.name.lower())(tx.payload)

    def snapshot(self):
        """
        Returns a comparable representation of the whole state
        """
        return (
            tuple(sorted(self.command_hashes)),
            tuple(sorted(self.ip_by_mac.items())),
            tuple(sorted(
                (index, entry.src_ip, entry.dst_ip,
                 entry.sla_bandwidth_bps, entry.flag.value)
                for index, entry in self.sla.items()
            )),
            self.matrices.snapshot(),
            tuple(sorted(self.traversal.items())),
        )

    # command hashes

    def _check_record_command_hash(self, payload):
        if not utils.is_digest(payload.digest):
            raise exceptions.MalformedDigest(
                "not an MD5 hex digest: {!r}".format(payload.digest)
            )

    def _apply_record_command_hash(self, payload):
        self.command_hashes.add(payload.digest)

    # IP-MAC association table

    def _check_put_ip_mac(self, payload):
        if payload.mac in self.ip_by_mac:
            raise exceptions.DuplicateMac(
                "MAC {} is already bound".format(payload.mac)
            )
        if payload.ip in self.mac_by_ip:
            raise exceptions.DuplicateIp(
                "IP {} is already bound".format(payload.ip)
            )

    def _apply_put_ip_mac(self, payload):
        self.ip_by_mac[payload.mac] = payload.ip
        self.mac_by_ip[payload.ip] = payload.mac

    # SLA definition table

    @staticmethod
    def _check_sla_values(entry):
        if entry.sla_bandwidth_bps < 0:
            raise exceptions.NegativeBandwidth(
                "SLA {} has negative bandwidth".format(entry.index)
            )
        if entry.index < 0:
            raise exceptions.InvalidSlaEntry("SLA index must not be negative")
        if entry.guaranteed and entry.sla_bandwidth_bps == 0:
            raise exceptions.InvalidSlaEntry(
                "guaranteed SLA {} has no bandwidth".format(entry.index)
            )

    def _check_put_sla(self, entry):
        self._check_sla_values(entry)
        if entry.index in self.sla:
            raise exceptions.DuplicateSlaIndex(
                "SLA index {} already exists".format(entry.index)
            )
        if (entry.src_ip, entry.dst_ip) in self.sla_by_pair:
            raise exceptions.DuplicateSlaPair(
                "SLA for {} -> {} already exists".format(
                    entry.src_ip, entry.dst_ip
                )
            )

    def _apply_put_sla(self, entry):
        self.sla[entry.index] = entry
        self.sla_by_pair[(entry.src_ip, entry.dst_ip)] = entry.index

    def _check_update_sla(self, entry):
        self._check_sla_values(entry)
        if entry.index not in self.sla:
            raise exceptions.UnknownSlaIndex(
                "SLA index {} does not exist".format(entry.index)
            )
        owner = self.sla_by_pair.get((entry.src_ip, entry.dst_ip))
        if owner is not None and owner != entry.index:
            raise exceptions.DuplicateSlaPair(
                "SLA for {} -> {} belongs to index {}".format(
                    entry.src_ip, entry.dst_ip, owner
                )
            )

    def _apply_update_sla(self, entry):
        # the entry is replaced in place, its old pair is forgotten
        old = self.sla[entry.index]
        del self.sla_by_pair[(old.src_ip, old.dst_ip)]
        self._apply_put_sla(entry)

    # bandwidth matrices

    def _check_define_link(self, payload):
        if payload.max_bps < 0:
            raise exceptions.NegativeBandwidth(
                "link {} has negative queue maximum".format(payload.link)
            )
        if payload.link in self.matrices:
            raise exceptions.DuplicateLink(
                "link {} is already defined".format(payload.link)
            )

    def _apply_define_link(self, payload):
        self.matrices.define(payload.link, payload.max_bps)

    def _checked_counts(self, change):
        """
        Validates the common part of reservations and releases and
        returns how many times each link occurs, in path order
        """
        if change.bw_bps < 0:
            raise exceptions.NegativeBandwidth(
                "bandwidth must not be negative: {}".format(change.bw_bps)
            )
        counts = Counter(change.links)
        for key in counts:
            if key not in self.matrices:
                raise exceptions.UnknownLink("unknown link {}".format(key))
        return counts

    def _check_reserve_bandwidth(self, change):
        for key, count in self._checked_counts(change).items():
            available = self.matrices.available(key)
            if available < change.bw_bps * count:
                raise exceptions.InsufficientBandwidth(
                    key, available, change.bw_bps
                )

    def _apply_reserve_bandwidth(self, change):
        for key in change.links:
            available = self.matrices.available(key)
            self.matrices.set_available(key, available - change.bw_bps)

    def _check_release_bandwidth(self, change):
        for key, count in self._checked_counts(change).items():
            available = self.matrices.available(key)
            if available + change.bw_bps * count > self.matrices.maximum[key]:
                raise exceptions.OverRelease(
                    "releasing {} bps on {} exceeds its queue maximum".format(
                        change.bw_bps, key
                    )
                )

    def _apply_release_bandwidth(self, change):
        for key in change.links:
            available = self.matrices.available(key)
            self.matrices.set_available(key, available + change.bw_bps)

    # traversal edge-switch matrix

    def _check_set_traversal_edge(self, payload):
        if payload.from_controller == payload.to_controller:
            raise exceptions.LedgerError(
                "a traversal entry needs two different controllers"
            )

    def _apply_set_traversal_edge(self, payload):
        key = (payload.from_controller, payload.to_controller)
        self.traversal[key] = payload.edge_switch


class Ledger:
    """
    A single-writer chain holding one transaction per block.
    The clock is a callable returning the current simulated
    time in milliseconds, used as the block timestamp.
    """

    def __init__(self, clock=None):
        self.chain = []
        self.state = ContractState()
        self._clock = clock or (lambda: 0)
        self._seq = 0

    def __len__(self):
        return len(self.chain)

    @property
    def head_hash(self):
        """
        The digest the next block is chained to
        """
        if not self.chain:
            return utils.ZERO_DIGEST
        return self.chain[-1].block_hash

    @property
    def matrices(self):
        return self.state.matrices

    @property
    def traversal(self):
        return self.state.traversal

    def append_transaction(self, kind, payload):
        """
        Validates the transaction against the contract state, seals
        it into a new block and applies it. A rejected transaction
        raises a LedgerError and leaves the chain and state unchanged.
        """
        tx = Transaction(kind, payload, self._seq)
        self.state.check(tx)
        block = Block.seal(
            index=len(self.chain),
            prev_hash=self.head_hash,
            timestamp=int(self._clock()),
            transactions=(tx,),
        )
        self.state.apply(tx)
        self.chain.append(block)
        self._seq += 1
        logger.debug("block %d sealed: %s", block.index, block.block_hash)
        return block

    def validate_chain(self):
        """
        Recomputes every block digest and checks every link
        of the chain. Returns False on any mismatch.
        """
        prev_hash = utils.ZERO_DIGEST
        seq = 0
        for position, block in enumerate(self.chain):
            if block.index != position or block.prev_hash != prev_hash:
                return False
            if block.block_hash != block.compute_hash():
                return False
            for tx in block.transactions:
                if tx.seq != seq:
                    return False
                seq += 1
            prev_hash = block.block_hash
        return True

    def transactions(self):
        return [tx for block in self.chain for tx in block.transactions]

    def export_lines(self):
        return [block.export_line() for block in self.chain]

    # command hashes

    def record_command_hash(self, digest):
        block = self.append_transaction(
            TxKind.RECORD_COMMAND_HASH, CommandHashRecord(digest)
        )
        logger.info("Appending [%s] to blockchain", digest)
        return block

    def contains_command_hash(self, digest):
        return digest in self.state.command_hashes

    # IP-MAC association table

    def put_ip_mac(self, ip, mac):
        entry = IpMacEntry(utils.normalize_ip(ip), utils.normalize_mac(mac))
        return self.append_transaction(TxKind.PUT_IP_MAC, entry)

    def mac_authorized(self, mac):
        """
        Returns the IP bound to the MAC or None
        """
        try:
            mac = utils.normalize_mac(mac)
        except ValueError:
            return None
        return self.state.ip_by_mac.get(mac)

    # SLA definition table

    @staticmethod
    def _sla_entry(index, src_ip, dst_ip, bw_bps, flag):
        return SlaEntry(
            int(index),
            utils.normalize_ip(src_ip),
            utils.normalize_ip(dst_ip),
            int(bw_bps),
            SlaFlag(int(getattr(flag, 'value', flag))),
        )

    def put_sla(self, index, src_ip, dst_ip, bw_bps, flag):
        entry = self._sla_entry(index, src_ip, dst_ip, bw_bps, flag)
        return self.append_transaction(TxKind.PUT_SLA, entry)

    def update_sla(self, index, src_ip, dst_ip, bw_bps, flag):
        entry = self._sla_entry(index, src_ip, dst_ip, bw_bps, flag)
        return self.append_transaction(TxKind.UPDATE_SLA, entry)

    def find_sla(self, src_ip, dst_ip):
        """
        Returns the SLA entry of the exact (source, destination)
        pair or None. The reverse direction is a different pair.
        """
        index = self.state.sla_by_pair.get((src_ip, dst_ip))
        if index is None:
            return None
        return self.state.sla[index]

    # bandwidth matrices

    def define_link(self, key, max_bps):
        return self.append_transaction(
            TxKind.DEFINE_LINK, LinkDefinition(key, int(max_bps))
        )

    def available(self, key):
        return self.matrices.available(key)

    def reserve_bandwidth(self, path_links, bw_bps):
        """
        Takes bw_bps from every link of the path in one transaction.
        Nothing changes if any link lacks the bandwidth.
        """
        change = BandwidthChange(tuple(path_links), int(bw_bps))
        return self.append_transaction(TxKind.RESERVE_BANDWIDTH, change)

    def release_bandwidth(self, path_links, bw_bps):
        change = BandwidthChange(tuple(path_links), int(bw_bps))
        return self.append_transaction(TxKind.RELEASE_BANDWIDTH, change)

    # traversal edge-switch matrix

    def set_traversal_edge(self, from_controller, to_controller, edge_switch):
        entry = TraversalEdge(
            int(from_controller), int(to_controller), str(edge_switch)
        )
        return self.append_transaction(TxKind.SET_TRAVERSAL_EDGE, entry)


def validate_export(lines):
    """
    Verifies an exported chain: every line must end with the digest
    of the rest of the line, carry its position as the index and
    point to the digest of the previous line.
    """
    prev_hash = utils.ZERO_DIGEST
    position = 0
    for line in lines:
        line = line.rstrip('\r\n')
        if not line:
            continue
        encoding, separator, digest = line.rpartition('|')
        if not separator or utils.md5_hex(encoding) != digest:
            return False
        parts = encoding.split('|')
        if len(parts) < 3:
            return False
        if parts[0] != str(position) or parts[1] != prev_hash:
            return False
        prev_hash = digest
        position += 1
    return True
