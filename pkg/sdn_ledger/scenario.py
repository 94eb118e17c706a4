"""
Scenario files: one record per line, the record type followed by
key=value pairs, '#' starting a comment.
"""
import os
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from slugify import UniqueSlugify

from . import exceptions, utils
from .control_plane import BROADCAST, CommandKind
from .ledger import SlaEntry, SlaFlag
from .topology import (
    Controller, Host, LinkState, Switch, TopologyDescription, build_topology,
)

logger = logging.getLogger(__name__)

BUILTIN_DIR = os.path.join(os.path.dirname(__file__), 'scenarios')
BUILTIN_SCENARIOS = ('case_a', 'case_b')

VERIFY_MODES = ('immediate', 'deferred')

# record type: (required keys, optional keys)
RECORDS = {
    'run': ((), ('name', 'ticks', 'verify_mode', 'verify_delay')),
    'controller': (('id', 'domain'), ('peers',)),
    'switch': (('id', 'domain'), ('edge',)),
    'link': (('a', 'b', 'capacity_mbps', 'gq_mbps'), ()),
    'host': (('name', 'mac', 'switch'), ()),
    'traversal': (('from', 'to', 'edge_switch'), ()),
    'ipmac': (('ip', 'mac'), ()),
    'sla': (('index', 'src', 'dst', 'bw_mbps', 'flag'), ()),
}

# event kind: (required keys, optional keys) besides 't' and 'kind'
EVENTS = {
    'dhcp': (('host',), ('mac',)),
    'arp_exchange': (('src', 'dst'), ('sender_ip', 'sender_mac')),
    'send_command': (('src', 'dst', 'command', 'payload'), ('record',)),
    'tamper': ((), ('flip_byte', 'target_digest', 'match', 'dst')),
    'start_flow': (('src', 'dst', 'demand_mbps'), ('meter_mbps', 'flow')),
    'provision': (('src', 'dst'), ('demand_mbps', 'meter_mbps', 'flow')),
    'stop_flow': (('flow',), ()),
    'update_sla': (('index', 'src', 'dst', 'bw_mbps', 'flag'), ()),
}


@dataclass
class Event:
    t: int
    kind: str
    # the raw key=value pairs except 't' and 'kind'
    params: Dict[str, str] = field(default_factory=dict)
    line: int = field(default=0, compare=False)


@dataclass
class Scenario:
    name: str = 'scenario'
    ticks: Optional[int] = None
    verify_mode: Optional[str] = None
    verify_delay_ticks: Optional[int] = None
    topology: TopologyDescription = field(default_factory=TopologyDescription)
    traversal: List[Tuple[int, int, str]] = field(default_factory=list)
    ip_mac: List[Tuple[str, str]] = field(default_factory=list)
    sla: List[SlaEntry] = field(default_factory=list)
    events: List[Event] = field(default_factory=list)

    def build_topology(self):
        return build_topology(self.topology)


class _Parser:
    """
    Parses the lines of a scenario file, keeping track of the
    declared ids to resolve references
    """

    def __init__(self, text):
        self.lines = text.splitlines()
        self.scenario = Scenario()
        self.line = 0
        self.flow_ids = set()
        self.last_t = 0
        # the lines of the traversal records, checked once
        # the topology is complete
        self.traversal_lines = []
        # the ledger rejects repeated keys, the parser names the line
        self.ips = set()
        self.macs = set()
        self.sla_indices = set()
        self.sla_pairs = set()
        # generated flow ids are the slugified host pair and a number
        # for every further flow of the same pair:
        #     h1_h2
        #     h1_h2_1
        #     h1_h2_2
        self.slugify_flow_id = UniqueSlugify(
            unique_check=self._unique_flow_id_check,
            to_lower=True,
            separator='_',
        )

    def _unique_flow_id_check(self, text, uids):
        """
        Checks whether no flow of the scenario has the id yet
        """
        return text not in self.flow_ids

    def error(self, message, error_class=exceptions.ScenarioSyntaxError):
        return error_class(self.line, message)

    def tokens(self, text):
        record, *pairs = text.split()
        values = {}
        for pair in pairs:
            key, separator, value = pair.partition('=')
            if not separator or not key:
                raise self.error("expected key=value, got {!r}".format(pair))
            if key in values:
                raise self.error("duplicate key {!r}".format(key))
            values[key] = value
        return record, values

    def check_keys(self, what, values, required, optional):
        for key in required:
            if key not in values:
                raise self.error("{} needs {}=".format(what, key))
        for key in values:
            if key not in required and key not in optional:
                raise self.error("{} has no key {!r}".format(what, key))

    # value converters

    def integer(self, value, minimum=None):
        try:
            number = int(value)
        except ValueError:
            raise self.error("not an integer: {!r}".format(value))
        if minimum is not None and number < minimum:
            raise self.error("{} is below {}".format(number, minimum))
        return number

    def flag(self, value):
        if value not in ('0', '1'):
            raise self.error("expected 0 or 1, got {!r}".format(value))
        return value == '1'

    def bps(self, value):
        try:
            bps = utils.mbps_to_bps(value)
        except ValueError:
            raise self.error("not a rate: {!r}".format(value))
        if bps < 0:
            raise self.error("negative rate {!r}".format(value))
        return bps

    def mac(self, value):
        try:
            return utils.normalize_mac(value)
        except ValueError as e:
            raise self.error(str(e))

    def ip(self, value):
        try:
            return utils.normalize_ip(value)
        except ValueError as e:
            raise self.error(str(e))

    def identifier(self, value):
        if not utils.is_identifier(value):
            raise self.error("invalid id {!r}".format(value))
        return value

    # references

    @property
    def controllers(self):
        return {c.id for c in self.scenario.topology.controllers}

    @property
    def domains(self):
        return {c.domain_id for c in self.scenario.topology.controllers}

    @property
    def switches(self):
        return {s.id for s in self.scenario.topology.switches}

    @property
    def hosts(self):
        return {h.name for h in self.scenario.topology.hosts}

    def resolve(self, value, known, what):
        if value not in known:
            raise self.error(
                "unknown {} {!r}".format(what, value), exceptions.UnknownId
            )
        return value

    # records

    def parse_run(self, values):
        scenario = self.scenario
        if 'name' in values:
            scenario.name = self.identifier(values['name'])
        if 'ticks' in values:
            scenario.ticks = self.integer(values['ticks'], minimum=1)
        if 'verify_mode' in values:
            if values['verify_mode'] not in VERIFY_MODES:
                raise self.error(
                    "unknown verify mode {!r}".format(values['verify_mode'])
                )
            scenario.verify_mode = values['verify_mode']
        if 'verify_delay' in values:
            scenario.verify_delay_ticks = self.integer(
                values['verify_delay'], minimum=0
            )

    def parse_controller(self, values):
        peers = values.get('peers', '')
        peer_ids = tuple(
            self.integer(peer, minimum=0) for peer in peers.split(',') if peer
        )
        self.scenario.topology.controllers.append(Controller(
            self.integer(values['id'], minimum=0),
            self.integer(values['domain'], minimum=0),
            peer_ids,
        ))

    def parse_switch(self, values):
        domain = self.integer(values['domain'], minimum=0)
        self.resolve(domain, self.domains, 'domain')
        self.scenario.topology.switches.append(Switch(
            self.identifier(values['id']),
            domain,
            self.flag(values.get('edge', '0')),
        ))

    def parse_link(self, values):
        nodes = self.switches | self.hosts
        self.scenario.topology.links.append(LinkState(
            self.resolve(values['a'], nodes, 'endpoint'),
            self.resolve(values['b'], nodes, 'endpoint'),
            self.bps(values['capacity_mbps']),
            self.bps(values['gq_mbps']),
        ))

    def parse_host(self, values):
        self.scenario.topology.hosts.append(Host(
            self.identifier(values['name']),
            self.mac(values['mac']),
            self.resolve(values['switch'], self.switches, 'switch'),
        ))

    def parse_traversal(self, values):
        from_controller = self.integer(values['from'])
        to_controller = self.integer(values['to'])
        self.resolve(from_controller, self.controllers, 'controller')
        self.resolve(to_controller, self.controllers, 'controller')
        self.scenario.traversal.append((
            from_controller,
            to_controller,
            self.resolve(values['edge_switch'], self.switches, 'switch'),
        ))
        self.traversal_lines.append(self.line)

    def check_traversal(self, topology):
        for self.line, entry in zip(self.traversal_lines, self.scenario.traversal):
            try:
                topology.check_traversal_edge(*entry)
            except exceptions.InvalidTraversalEdge as e:
                raise self.error(str(e))

    def parse_ipmac(self, values):
        ip, mac = self.ip(values['ip']), self.mac(values['mac'])
        if ip in self.ips:
            raise self.error("IP {} is already bound".format(ip))
        if mac in self.macs:
            raise self.error("MAC {} is already bound".format(mac))
        self.ips.add(ip)
        self.macs.add(mac)
        self.scenario.ip_mac.append((ip, mac))

    def sla_entry(self, values):
        entry = SlaEntry(
            self.integer(values['index'], minimum=0),
            self.ip(values['src']),
            self.ip(values['dst']),
            self.bps(values['bw_mbps']),
            SlaFlag(int(self.flag(values['flag']))),
        )
        if entry.guaranteed and not entry.sla_bandwidth_bps:
            raise self.error(
                "guaranteed SLA {} has no bandwidth".format(entry.index)
            )
        return entry

    def parse_sla(self, values):
        entry = self.sla_entry(values)
        pair = (entry.src_ip, entry.dst_ip)
        if entry.index in self.sla_indices:
            raise self.error("SLA index {} already exists".format(entry.index))
        if pair in self.sla_pairs:
            raise self.error("SLA for {} -> {} already exists".format(*pair))
        self.sla_indices.add(entry.index)
        self.sla_pairs.add(pair)
        self.scenario.sla.append(entry)

    def parse_event(self, values):
        for key in ('t', 'kind'):
            if key not in values:
                raise self.error("event needs {}=".format(key))
        t = self.integer(values.pop('t'), minimum=0)
        kind = values.pop('kind')
        if kind not in EVENTS:
            raise self.error("unknown event kind {!r}".format(kind))
        self.check_keys(kind, values, *EVENTS[kind])
        if t < self.last_t:
            raise self.error(
                "event at t={} follows t={}".format(t, self.last_t),
                exceptions.UnsortedEvents,
            )
        self.last_t = t
        getattr(self, 'check_' + kind)(values)
        self.scenario.events.append(Event(t, kind, values, self.line))

    # event parameters

    def check_dhcp(self, values):
        self.resolve(values['host'], self.hosts, 'host')
        if 'mac' in values:
            self.mac(values['mac'])

    def check_arp_exchange(self, values):
        self.resolve(values['src'], self.hosts, 'host')
        self.resolve(values['dst'], self.hosts, 'host')
        if 'sender_ip' in values:
            self.ip(values['sender_ip'])
        if 'sender_mac' in values:
            self.mac(values['sender_mac'])

    def check_send_command(self, values):
        self.resolve(self.integer(values['src']), self.controllers, 'controller')
        if values['dst'].lower() != BROADCAST.lower():
            self.resolve(
                self.integer(values['dst']), self.controllers, 'controller'
            )
        if values['command'] not in (
            CommandKind.FLOW_MOD.value, CommandKind.CUSTOM.value
        ):
            raise self.error(
                "command must be FlowMod or Custom, got {!r}".format(
                    values['command']
                )
            )
        if 'record' in values:
            self.flag(values['record'])

    def check_tamper(self, values):
        if 'flip_byte' in values:
            self.integer(values['flip_byte'], minimum=0)
        if 'target_digest' in values and not utils.is_digest(values['target_digest']):
            raise self.error(
                "malformed digest {!r}".format(values['target_digest'])
            )
        if 'match' in values:
            kinds = [kind.value.lower() for kind in CommandKind]
            if values['match'].lower() not in kinds:
                raise self.error(
                    "unknown command kind {!r}".format(values['match'])
                )
        if 'dst' in values:
            self.resolve(
                self.integer(values['dst']), self.controllers, 'controller'
            )

    def check_start_flow(self, values):
        self.resolve(values['src'], self.hosts, 'host')
        self.resolve(values['dst'], self.hosts, 'host')
        for key in ('demand_mbps', 'meter_mbps'):
            if key in values:
                self.bps(values[key])
        if 'flow' in values:
            flow_id = self.identifier(values['flow'])
            if flow_id in self.flow_ids:
                raise self.error("flow {} is declared twice".format(flow_id))
            self.flow_ids.add(flow_id)
        else:
            values['flow'] = self.slugify_flow_id(
                '{} {}'.format(values['src'], values['dst'])
            )
            self.flow_ids.add(values['flow'])

    check_provision = check_start_flow

    def check_stop_flow(self, values):
        self.resolve(values['flow'], self.flow_ids, 'flow')

    def check_update_sla(self, values):
        self.sla_entry(values)

    def parse(self):
        for self.line, text in enumerate(self.lines, start=1):
            text = text.split('#', 1)[0].strip()
            if not text:
                continue
            record, values = self.tokens(text)
            if record == 'event':
                self.parse_event(values)
                continue
            if record not in RECORDS:
                raise self.error("unknown record {!r}".format(record))
            self.check_keys(record, values, *RECORDS[record])
            getattr(self, 'parse_' + record)(values)

        topology = self.scenario.topology
        if not topology.controllers or not topology.switches:
            self.line = 0
            raise self.error("the scenario has no topology")
        self.check_traversal(self.scenario.build_topology())
        return self.scenario


def parse_scenario(text):
    """
    Parses and validates a scenario. Syntax errors, unresolved ids,
    repeated table keys, invalid traversal entries and events out of
    time order raise a ScenarioError naming the line; an inconsistent
    topology raises a TopologyError.
    """
    return _Parser(text).parse()


def _pairs(record, pairs):
    return ' '.join(
        [record] + ['{}={}'.format(key, value) for key, value in pairs]
    )


def serialize_scenario(scenario):
    """
    Returns the text of the scenario in the line format
    """
    lines = []
    run = [('name', scenario.name)]
    if scenario.ticks is not None:
        run.append(('ticks', scenario.ticks))
    if scenario.verify_mode is not None:
        run.append(('verify_mode', scenario.verify_mode))
    if scenario.verify_delay_ticks is not None:
        run.append(('verify_delay', scenario.verify_delay_ticks))
    lines.append(_pairs('run', run))

    topology = scenario.topology
    for c in topology.controllers:
        pairs = [('id', c.id), ('domain', c.domain_id)]
        if c.peer_ids:
            pairs.append(('peers', ','.join(str(peer) for peer in c.peer_ids)))
        lines.append(_pairs('controller', pairs))
    for s in topology.switches:
        lines.append(_pairs('switch', [
            ('id', s.id), ('domain', s.domain_id),
            ('edge', int(s.is_domain_edge)),
        ]))
    for h in topology.hosts:
        lines.append(_pairs('host', [
            ('name', h.name), ('mac', h.mac), ('switch', h.attached_switch),
        ]))
    for link in topology.links:
        lines.append(_pairs('link', [
            ('a', link.a), ('b', link.b),
            ('capacity_mbps', utils.bps_to_mbps(link.capacity_bps)),
            ('gq_mbps', utils.bps_to_mbps(link.guaranteed_queue_max_bps)),
        ]))
    for from_controller, to_controller, edge_switch in scenario.traversal:
        lines.append(_pairs('traversal', [
            ('from', from_controller), ('to', to_controller),
            ('edge_switch', edge_switch),
        ]))
    for ip, mac in scenario.ip_mac:
        lines.append(_pairs('ipmac', [('ip', ip), ('mac', mac)]))
    for entry in scenario.sla:
        lines.append(_pairs('sla', [
            ('index', entry.index), ('src', entry.src_ip),
            ('dst', entry.dst_ip),
            ('bw_mbps', utils.bps_to_mbps(entry.sla_bandwidth_bps)),
            ('flag', entry.flag.value),
        ]))
    for event in scenario.events:
        pairs = [('t', event.t), ('kind', event.kind)]
        lines.append(_pairs('event', pairs + list(event.params.items())))
    return '\n'.join(lines) + '\n'


def load_scenario(name_or_path):
    """
    Loads a built-in scenario by name or a scenario file by path.
    A scenario without a 'run name=' record is named after the file.
    """
    if name_or_path in BUILTIN_SCENARIOS:
        path = os.path.join(BUILTIN_DIR, name_or_path + '.txt')
    else:
        path = name_or_path
    with open(path, encoding='utf-8') as f:
        text = f.read()
    scenario = parse_scenario(text)
    if scenario.name == Scenario.name:
        scenario.name = os.path.splitext(os.path.basename(path))[0]
    logger.debug("scenario %s loaded from %s", scenario.name, path)
    return scenario
