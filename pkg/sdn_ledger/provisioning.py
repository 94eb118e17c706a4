"""
Autonomous bandwidth provisioning. Requests are classified by the
flag of their SLA entry, routed over the controllers' domains and
admitted against the bandwidth matrices held in the ledger.
"""
import logging
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import networkx as nx

from . import exceptions

logger = logging.getLogger(__name__)


class FlowClass(Enum):
    GUARANTEED = 'Guaranteed'
    BEST_EFFORT = 'BestEffort'


class FlowState(Enum):
    ACTIVE_GUARANTEED = 'ActiveGuaranteed'
    ACTIVE_BEST_EFFORT = 'ActiveBestEffort'
    DEMOTED = 'DemotedAwaitingPromotion'


class OutcomeKind(Enum):
    GUARANTEED_ON_PRIMARY_PATH = 'GuaranteedOnPrimaryPath'
    GUARANTEED_ON_ALTERNATE_PATH = 'GuaranteedOnAlternatePath'
    BEST_EFFORT_FALLBACK = 'BestEffortFallback'
    BEST_EFFORT = 'BestEffort'


@dataclass(frozen=True)
class ProvisionRequest:
    src_host: str
    dst_host: str
    src_ip: str
    dst_ip: str
    requested_at_ms: int = 0


@dataclass(frozen=True)
class Classification:
    flow_class: FlowClass
    sla: Optional[object] = None


@dataclass
class Flow:
    id: str
    flow_class: FlowClass
    demand_bps: int
    state: FlowState
    src_host: str
    dst_host: str
    # link keys and nodes of the path the traffic takes now
    path: List[object] = field(default_factory=list)
    nodes: List[str] = field(default_factory=list)
    meter_cap_bps: Optional[int] = None
    sla_index: Optional[int] = None
    sla_bandwidth_bps: int = 0
    # the promotion target of a demoted flow
    guaranteed_path: List[object] = field(default_factory=list)
    guaranteed_nodes: List[str] = field(default_factory=list)

    @property
    def is_guaranteed(self):
        return self.state is FlowState.ACTIVE_GUARANTEED


@dataclass(frozen=True)
class ProvisionOutcome:
    kind: OutcomeKind
    flow: Flow


def seed_link_matrices(topology, ledger):
    """
    Defines every link of the topology in the bandwidth matrices
    with its guaranteed-queue maximum
    """
    for key, link in topology.link_keys():
        ledger.define_link(key, link.guaranteed_queue_max_bps)


def format_nodes(nodes):
    return '>'.join(nodes)


class ProvisioningEngine:
    """
    Owns the provisioned flows. Provisioning, promotion and teardown
    run one at a time, a request arriving while another one is being
    handled is refused with ProvisioningBlocked.
    """

    def __init__(self, topology, ledger, event_log=None, can_communicate=None):
        self.topology = topology
        self.ledger = ledger
        self.event_log = event_log
        self.can_communicate = can_communicate
        self.flows = {}
        self.last_promoted = []
        self._demoted = []
        self._locked = False

    @contextmanager
    def _lock(self):
        if self._locked:
            raise exceptions.ProvisioningBlocked(
                "a provisioning request is being handled"
            )
        self._locked = True
        try:
            yield
        finally:
            self._locked = False

    def _log(self, kind, *fields):
        if self.event_log is not None:
            self.event_log.record(kind, *fields)

    @property
    def demoted(self):
        """
        The ids of the demoted flows in demotion order
        """
        return list(self._demoted)

    def active_flows(self):
        return list(self.flows.values())

    def classify_request(self, req):
        sla = self.ledger.find_sla(req.src_ip, req.dst_ip)
        if sla is not None and sla.guaranteed:
            return Classification(FlowClass.GUARANTEED, sla)
        return Classification(FlowClass.BEST_EFFORT)

    def controller_path(self, src_domain, dst_domain):
        """
        Returns the minimum-hop chain of peer controllers between the
        domains, ties going to the lowest controller ids
        """
        try:
            src = self.topology.controller_for_domain(src_domain).id
            dst = self.topology.controller_for_domain(dst_domain).id
        except KeyError as e:
            raise exceptions.NoControllerPath(
                "domain {} has no controller".format(e)
            )
        if src == dst:
            return [src]
        predecessors = dict(nx.bfs_predecessors(
            self.topology.controller_graph, src, sort_neighbors=sorted
        ))
        if dst not in predecessors:
            raise exceptions.NoControllerPath(
                "controllers {} and {} are not connected".format(src, dst)
            )
        path = [dst]
        while path[-1] != src:
            path.append(predecessors[path[-1]])
        path.reverse()
        return path

    def compose_nodes(self, req):
        """
        Joins the local shortest paths of the domains on the way at
        the edge switches named by the traversal edge-switch matrix
        """
        src = self.topology.hosts[req.src_host]
        dst = self.topology.hosts[req.dst_host]
        controllers = self.controller_path(src.domain_id, dst.domain_id)
        traversal = self.ledger.traversal
        nodes = []
        entry = src.name
        for position, controller in enumerate(controllers):
            domain = self.topology.controllers[controller].domain_id
            if position + 1 == len(controllers):
                nodes.extend(
                    self.topology.local_shortest_path(domain, entry, dst.name)
                )
                break
            following = controllers[position + 1]
            exit_switch = traversal.get((controller, following))
            next_entry = traversal.get((following, controller))
            if exit_switch is None or next_entry is None:
                raise exceptions.NoPath(
                    "no edge switch between controllers {} and {}".format(
                        controller, following
                    )
                )
            nodes.extend(
                self.topology.local_shortest_path(domain, entry, exit_switch)
            )
            # raises NoPath if the edge switches are not linked
            self.topology.link_key(exit_switch, next_entry)
            entry = next_entry
        if len(set(nodes)) != len(nodes):
            raise exceptions.NoPath(
                "the path {} has a loop".format(format_nodes(nodes))
            )
        return nodes

    def compose_path(self, req):
        return self.topology.path_links(self.compose_nodes(req))

    def fits(self, path, bw_bps):
        return all(self.ledger.available(key) >= bw_bps for key in path)

    def _alternate_nodes(self, req, primary, bw_bps):
        candidates = self.topology.simple_paths(
            req.src_host, req.dst_host, cutoff=self.topology.diameter
        )
        for nodes in candidates:
            if nodes == primary:
                continue
            if self.fits(self.topology.path_links(nodes), bw_bps):
                return nodes
        return None

    def provision(self, req, demand_bps=None, meter_cap_bps=None, flow_id=None):
        """
        Places the flow of the request and returns the outcome.
        Guaranteed requests try the composed path, then the loop-free
        paths of at most diameter hops, and fall back to best effort.
        """
        with self._lock():
            flow_id = flow_id or '{}_{}'.format(req.src_host, req.dst_host)
            if flow_id in self.flows:
                raise exceptions.DuplicateFlow(
                    "flow {} already exists".format(flow_id)
                )
            src = self.topology.hosts[req.src_host]
            dst = self.topology.hosts[req.dst_host]
            if self.can_communicate is not None \
                    and not self.can_communicate(src, dst):
                raise exceptions.NotQualified(
                    "{} and {} have no qualified ARP pair".format(
                        src.name, dst.name
                    )
                )

            classification = self.classify_request(req)
            nodes = self.compose_nodes(req)
            path = self.topology.path_links(nodes)

            if classification.flow_class is FlowClass.BEST_EFFORT:
                flow = Flow(
                    flow_id, FlowClass.BEST_EFFORT, int(demand_bps or 0),
                    FlowState.ACTIVE_BEST_EFFORT, src.name, dst.name,
                    path, nodes,
                )
                outcome = ProvisionOutcome(OutcomeKind.BEST_EFFORT, flow)
            else:
                outcome = self._provision_guaranteed(
                    req, flow_id, classification.sla, nodes,
                    demand_bps, meter_cap_bps,
                )

            self.flows[flow_id] = outcome.flow
            logger.info(
                "flow %s provisioned: %s via %s",
                flow_id, outcome.kind.value, format_nodes(outcome.flow.nodes),
            )
            self._log(
                'provision', flow_id, outcome.kind.value,
                format_nodes(outcome.flow.nodes),
            )
            return outcome

    def _provision_guaranteed(self, req, flow_id, sla, nodes, demand_bps,
                              meter_cap_bps):
        bw_bps = sla.sla_bandwidth_bps
        if meter_cap_bps is None:
            meter_cap_bps = bw_bps
        if meter_cap_bps < bw_bps:
            raise exceptions.InvalidMeter(
                "meter {} bps of flow {} is below the SLA bandwidth {}".format(
                    meter_cap_bps, flow_id, bw_bps
                )
            )
        if demand_bps is None:
            demand_bps = bw_bps
        path = self.topology.path_links(nodes)
        flow = Flow(
            flow_id, FlowClass.GUARANTEED, int(demand_bps),
            FlowState.ACTIVE_GUARANTEED, req.src_host, req.dst_host,
            path, nodes,
            meter_cap_bps=int(meter_cap_bps),
            sla_index=sla.index,
            sla_bandwidth_bps=bw_bps,
            guaranteed_path=path,
            guaranteed_nodes=nodes,
        )

        if self.fits(path, bw_bps):
            self.ledger.reserve_bandwidth(path, bw_bps)
            return ProvisionOutcome(OutcomeKind.GUARANTEED_ON_PRIMARY_PATH, flow)

        alternate = self._alternate_nodes(req, nodes, bw_bps)
        if alternate is not None:
            flow.nodes = flow.guaranteed_nodes = alternate
            flow.path = flow.guaranteed_path = self.topology.path_links(alternate)
            self.ledger.reserve_bandwidth(flow.path, bw_bps)
            return ProvisionOutcome(
                OutcomeKind.GUARANTEED_ON_ALTERNATE_PATH, flow
            )

        # served as best effort on the composed path until it fits
        flow.state = FlowState.DEMOTED
        self._demoted.append(flow_id)
        return ProvisionOutcome(OutcomeKind.BEST_EFFORT_FALLBACK, flow)

    def _promote(self):
        promoted = []
        for flow_id in list(self._demoted):
            flow = self.flows[flow_id]
            if not self.fits(flow.guaranteed_path, flow.sla_bandwidth_bps):
                continue
            self.ledger.reserve_bandwidth(
                flow.guaranteed_path, flow.sla_bandwidth_bps
            )
            flow.state = FlowState.ACTIVE_GUARANTEED
            flow.path = flow.guaranteed_path
            flow.nodes = flow.guaranteed_nodes
            self._demoted.remove(flow_id)
            promoted.append(flow_id)
            logger.info("flow %s switched back to its guaranteed path", flow_id)
            self._log('promote', flow_id, format_nodes(flow.nodes))
        self.last_promoted = promoted
        return promoted

    def try_promote(self):
        """
        Reserves bandwidth for the demoted flows that fit again,
        in the order they were demoted
        """
        with self._lock():
            return self._promote()

    def teardown(self, flow_id):
        """
        Removes the flow, releases its reservation and gives the
        demoted flows a chance. Returns the release block if any.
        """
        with self._lock():
            try:
                flow = self.flows.pop(flow_id)
            except KeyError:
                raise exceptions.UnknownFlow("unknown flow {}".format(flow_id))
            block = None
            if flow.state is FlowState.ACTIVE_GUARANTEED:
                block = self.ledger.release_bandwidth(
                    flow.path, flow.sla_bandwidth_bps
                )
            elif flow.state is FlowState.DEMOTED:
                self._demoted.remove(flow_id)
            logger.info("flow %s torn down", flow_id)
            self._log('teardown', flow_id, flow.state.value)
            self._promote()
            return block
