"""
The static network model: controllers with their domains, switches
(some of them marked as domain-edge switches), hosts and links.
"""
import logging
from enum import Enum
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import networkx as nx

from . import exceptions
from .ledger import LinkKey

logger = logging.getLogger(__name__)


class LinkKind(Enum):
    INTRA_DOMAIN = 'IntraDomain'
    INTER_DOMAIN = 'InterDomain'
    HOST_ACCESS = 'HostAccess'


@dataclass(frozen=True)
class Controller:
    id: int
    domain_id: int
    peer_ids: Tuple[int, ...] = ()


@dataclass(frozen=True)
class Switch:
    id: str
    domain_id: int
    is_domain_edge: bool = False


@dataclass
class Host:
    name: str
    mac: str
    attached_switch: str
    domain_id: Optional[int] = None
    # assigned by a successful DHCP request
    ip: Optional[str] = None


@dataclass(frozen=True)
class LinkState:
    a: str
    b: str
    capacity_bps: int
    guaranteed_queue_max_bps: int
    kind: Optional[LinkKind] = None


@dataclass
class TopologyDescription:
    """
    The declarations a topology is built from
    """
    controllers: List[Controller] = field(default_factory=list)
    switches: List[Switch] = field(default_factory=list)
    links: List[LinkState] = field(default_factory=list)
    hosts: List[Host] = field(default_factory=list)


def tree_description(depth, fanout, capacity_bps, gq_bps):
    """
    Returns a single-domain tree: switches s1, s2, ... numbered in
    depth-first order from the root and hosts h1, h2, ... on the
    leaves, every link with the same capacity and queue maximum
    """
    description = TopologyDescription(controllers=[Controller(0, 0)])
    counters = {'s': 0, 'h': 0}

    def add_tree(level):
        if level == 0:
            counters['h'] += 1
            name = 'h{}'.format(counters['h'])
            mac = '00-00-00-00-{:02X}-{:02X}'.format(
                counters['h'] // 256, counters['h'] % 256
            )
            # the switch is filled in by the parent
            description.hosts.append(Host(name, mac, ''))
            return name
        counters['s'] += 1
        name = 's{}'.format(counters['s'])
        description.switches.append(Switch(name, 0))
        for _ in range(fanout):
            child = add_tree(level - 1)
            if child.startswith('h'):
                description.hosts[-1].attached_switch = name
            description.links.append(
                LinkState(name, child, capacity_bps, gq_bps)
            )
        return name

    add_tree(depth)
    return description


class Topology:
    """
    A built and validated topology. The graph nodes are switch ids
    and host names carrying their domain, every edge carries its
    LinkState and its key in the bandwidth matrices.
    """

    def __init__(self, controllers, switches, hosts, links):
        self.controllers = {c.id: c for c in controllers}
        self.switches = {s.id: s for s in switches}
        self.hosts = {h.name: h for h in hosts}
        self.links = list(links)
        self._controller_by_domain = {
            c.domain_id: c for c in controllers
        }
        self._domain_graphs = {}
        self._diameter = None

        self.graph = nx.Graph()
        for switch in switches:
            self.graph.add_node(switch.id, domain=switch.domain_id)
        for host in hosts:
            self.graph.add_node(host.name, domain=host.domain_id)
        for link in self.links:
            self.graph.add_edge(
                link.a, link.b, link=link, key=self._key_for(link)
            )

        self.controller_graph = nx.Graph()
        for controller in controllers:
            self.controller_graph.add_node(controller.id)
            for peer in controller.peer_ids:
                self.controller_graph.add_edge(controller.id, peer)

    def _key_for(self, link):
        domain_a = self.graph.nodes[link.a]['domain']
        domain_b = self.graph.nodes[link.b]['domain']
        if link.kind is LinkKind.INTER_DOMAIN:
            return LinkKey.inter(
                self._controller_by_domain[domain_a].id,
                self._controller_by_domain[domain_b].id,
            )
        return LinkKey.intra(domain_a, link.a, link.b)

    def controller_for_domain(self, domain_id):
        return self._controller_by_domain[domain_id]

    def node_domain(self, node):
        return self.graph.nodes[node]['domain']

    def check_traversal_edge(self, from_controller, to_controller, edge_switch):
        """
        Checks whether the switch may be the traversal entry of the
        controller pair: a domain-edge switch of the domain of
        'from_controller' with an inter-domain link into the domain
        of 'to_controller'
        """
        for controller_id in (from_controller, to_controller):
            if controller_id not in self.controllers:
                raise exceptions.InvalidTraversalEdge(
                    "unknown controller {}".format(controller_id)
                )
        switch = self.switches.get(edge_switch)
        if switch is None or not switch.is_domain_edge:
            raise exceptions.InvalidTraversalEdge(
                "{} is not a domain-edge switch".format(edge_switch)
            )
        from_domain = self.controllers[from_controller].domain_id
        to_domain = self.controllers[to_controller].domain_id
        if switch.domain_id != from_domain:
            raise exceptions.InvalidTraversalEdge(
                "{} is not in domain {}".format(edge_switch, from_domain)
            )
        for neighbor, data in self.graph[edge_switch].items():
            if (data['link'].kind is LinkKind.INTER_DOMAIN
                    and self.node_domain(neighbor) == to_domain):
                return
        raise exceptions.InvalidTraversalEdge(
            "{} has no inter-domain link into domain {}".format(
                edge_switch, to_domain
            )
        )

    def host_by_ip(self, ip):
        for host in self.hosts.values():
            if host.ip is not None and host.ip == ip:
                return host
        return None

    def host_by_mac(self, mac):
        for host in self.hosts.values():
            if host.mac == mac:
                return host
        return None

    def link_key(self, first, second):
        try:
            return self.graph.edges[first, second]['key']
        except KeyError:
            raise exceptions.NoPath(
                "no link between {} and {}".format(first, second)
            )

    def link_state(self, key):
        """
        Returns the LinkState stored under the matrix key
        """
        for first, second, data in self.graph.edges(data=True):
            if data['key'] == key:
                return data['link']
        raise KeyError(key)

    def link_keys(self):
        """
        Returns the key and the LinkState of every link
        in declaration order
        """
        return [
            (self.graph.edges[link.a, link.b]['key'], link)
            for link in self.links
        ]

    def path_links(self, nodes):
        """
        Returns the link keys along a node path
        """
        return [
            self.link_key(first, second)
            for first, second in zip(nodes, nodes[1:])
        ]

    def domain_graph(self, domain_id):
        """
        Returns the subgraph of a domain: its switches, its
        hosts and the links between them
        """
        if domain_id not in self._domain_graphs:
            nodes = [
                node for node, domain in self.graph.nodes(data='domain')
                if domain == domain_id
            ]
            self._domain_graphs[domain_id] = self.graph.subgraph(nodes)
        return self._domain_graphs[domain_id]

    def local_shortest_path(self, domain_id, from_node, to_node):
        """
        Returns the minimum-hop path inside the domain. Among paths of
        equal length the one with the lexicographically smallest node
        sequence is chosen, which is what a breadth-first search
        visiting neighbors in sorted order finds first.
        """
        graph = self.domain_graph(domain_id)
        for node in (from_node, to_node):
            if node not in graph:
                raise exceptions.NoPath(
                    "{} is not in domain {}".format(node, domain_id)
                )
        if from_node == to_node:
            return [from_node]
        predecessors = dict(
            nx.bfs_predecessors(graph, from_node, sort_neighbors=sorted)
        )
        if to_node not in predecessors:
            raise exceptions.NoPath(
                "{} is unreachable from {} in domain {}".format(
                    to_node, from_node, domain_id
                )
            )
        path = [to_node]
        while path[-1] != from_node:
            path.append(predecessors[path[-1]])
        path.reverse()
        return path

    @property
    def diameter(self):
        """
        The longest shortest path of the whole graph in hops
        """
        if self._diameter is None:
            self._diameter = nx.diameter(self.graph)
        return self._diameter

    def simple_paths(self, source, target, cutoff=None):
        """
        Returns the loop-free paths of at most 'cutoff' hops ordered
        by hop count and then by node sequence
        """
        paths = nx.all_simple_paths(self.graph, source, target, cutoff=cutoff)
        return sorted(paths, key=lambda path: (len(path), path))


def _check_controllers(controllers):
    ids = set()
    domains = set()
    for controller in controllers:
        if controller.id in ids:
            raise exceptions.DuplicateId(
                "controller {} is declared twice".format(controller.id)
            )
        if controller.domain_id in domains:
            raise exceptions.DuplicateId(
                "domain {} has two controllers".format(controller.domain_id)
            )
        ids.add(controller.id)
        domains.add(controller.domain_id)
    peers = {c.id: set(c.peer_ids) for c in controllers}
    for controller in controllers:
        for peer in controller.peer_ids:
            if peer not in ids or peer == controller.id:
                raise exceptions.UnknownEndpoint(
                    "controller {} has an invalid peer {}".format(
                        controller.id, peer
                    )
                )
            # the horizontal architecture has symmetric peerings
            if controller.id not in peers[peer]:
                raise exceptions.AsymmetricPeers(
                    "controller {} peers with {} but not vice versa".format(
                        controller.id, peer
                    )
                )
    return domains


def _classify_link(link, switches, hosts):
    """
    Returns the kind of the link checking that it connects
    the right kind of endpoints
    """
    for endpoint in (link.a, link.b):
        if endpoint not in switches and endpoint not in hosts:
            raise exceptions.UnknownEndpoint(
                "link {}-{} has an unknown endpoint {}".format(
                    link.a, link.b, endpoint
                )
            )
    if link.a == link.b:
        raise exceptions.InvalidLink("link {} is a loop".format(link.a))
    if not 0 <= link.guaranteed_queue_max_bps <= link.capacity_bps:
        raise exceptions.InvalidLink(
            "link {}-{} needs 0 <= queue maximum <= capacity".format(
                link.a, link.b
            )
        )
    if link.a in hosts or link.b in hosts:
        host, other = (link.a, link.b) if link.a in hosts else (link.b, link.a)
        if hosts[host].attached_switch != other:
            raise exceptions.InvalidLink(
                "host {} is attached to {}, not to {}".format(
                    host, hosts[host].attached_switch, other
                )
            )
        return LinkKind.HOST_ACCESS
    first, second = switches[link.a], switches[link.b]
    if first.domain_id == second.domain_id:
        return LinkKind.INTRA_DOMAIN
    for switch in (first, second):
        if not switch.is_domain_edge:
            raise exceptions.EdgeLinkOnNonEdgeSwitch(
                "inter-domain link {}-{} ends on {}".format(
                    link.a, link.b, switch.id
                )
            )
    return LinkKind.INTER_DOMAIN


def build_topology(description):
    """
    Validates the declarations and returns the Topology
    """
    domains = _check_controllers(description.controllers)

    switches = {}
    for switch in description.switches:
        if switch.id in switches:
            raise exceptions.DuplicateId(
                "switch {} is declared twice".format(switch.id)
            )
        if switch.domain_id not in domains:
            raise exceptions.UnknownEndpoint(
                "switch {} is in domain {} without a controller".format(
                    switch.id, switch.domain_id
                )
            )
        switches[switch.id] = switch

    hosts = {}
    macs = set()
    for declared in description.hosts:
        if declared.name in hosts or declared.name in switches:
            raise exceptions.DuplicateId(
                "id {} is declared twice".format(declared.name)
            )
        if declared.mac in macs:
            raise exceptions.DuplicateId(
                "MAC {} is used by two hosts".format(declared.mac)
            )
        if declared.attached_switch not in switches:
            raise exceptions.UnknownEndpoint(
                "host {} is attached to unknown switch {}".format(
                    declared.name, declared.attached_switch
                )
            )
        # hosts belong to the domain of their switch
        domain = switches[declared.attached_switch].domain_id
        hosts[declared.name] = replace(declared, domain_id=domain)
        macs.add(declared.mac)

    links = []
    seen = set()
    inter_pairs = set()
    for declared in description.links:
        kind = _classify_link(declared, switches, hosts)
        endpoints = frozenset((declared.a, declared.b))
        if endpoints in seen:
            raise exceptions.DuplicateId(
                "link {}-{} is declared twice".format(declared.a, declared.b)
            )
        seen.add(endpoints)
        if kind is LinkKind.INTER_DOMAIN:
            pair = frozenset((
                switches[declared.a].domain_id,
                switches[declared.b].domain_id,
            ))
            if pair in inter_pairs:
                raise exceptions.ParallelInterDomainLink(
                    "domains {} are already connected".format(sorted(pair))
                )
            inter_pairs.add(pair)
        links.append(replace(declared, kind=kind))

    linked_hosts = {
        endpoint for link in links if link.kind is LinkKind.HOST_ACCESS
        for endpoint in (link.a, link.b) if endpoint in hosts
    }
    for name in hosts:
        if name not in linked_hosts:
            raise exceptions.InvalidLink(
                "host {} has no access link".format(name)
            )

    topology = Topology(
        description.controllers,
        list(switches.values()),
        list(hosts.values()),
        links,
    )
    if not switches or not nx.is_connected(topology.graph):
        raise exceptions.DisconnectedGraph("the network is not connected")
    logger.debug(
        "topology built: %d controllers, %d switches, %d hosts, %d links",
        len(topology.controllers), len(switches), len(hosts), len(links),
    )
    return topology
