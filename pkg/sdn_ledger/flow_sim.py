"""
Fluid traffic model. Every tick each link serves its guaranteed
queue first, each guaranteed flow capped by its meter and the queue
by its maximum; the rest of the capacity is shared max-min fair by
the best-effort and demoted flows.
"""
import logging
from dataclasses import dataclass, field
from typing import List

from . import settings
from .provisioning import FlowClass, FlowState

logger = logging.getLogger(__name__)

# bps below which a remaining capacity or demand counts as exhausted
EPS = 1e-6


def loss_rate(demand_bps, allocated_bps):
    if demand_bps <= 0:
        return 0.0
    return max(0.0, (demand_bps - allocated_bps) / demand_bps)


@dataclass(frozen=True)
class FlowTick:
    flow_id: str
    flow_class: FlowClass
    state: FlowState
    demand_bps: int
    allocated_bps: float
    loss_rate: float


@dataclass
class TickAllocation:
    tick: int
    flows: List[FlowTick] = field(default_factory=list)

    def allocated(self, flow_id):
        for row in self.flows:
            if row.flow_id == flow_id:
                return row.allocated_bps
        return 0.0

    @property
    def guaranteed_bps(self):
        return sum(
            row.allocated_bps for row in self.flows
            if row.state is FlowState.ACTIVE_GUARANTEED
        )

    @property
    def best_effort_bps(self):
        return sum(
            row.allocated_bps for row in self.flows
            if row.state is not FlowState.ACTIVE_GUARANTEED
        )

    @property
    def total_bps(self):
        return self.guaranteed_bps + self.best_effort_bps


def progressive_fill(capacities, flows):
    """
    Max-min fair rates of flows sharing links. 'capacities' maps a
    link to its capacity and 'flows' maps a flow to a pair of its
    demand and the links it crosses. All active flows grow at the
    same pace until their demand is met or one of their links is
    full.
    """
    rates = {flow: 0.0 for flow in flows}
    remaining = dict(capacities)
    active = {
        flow for flow, (demand, links) in flows.items()
        if demand > EPS and links
    }
    # every round freezes at least one flow
    for _ in range(len(flows) + 1):
        if not active:
            break
        crossing = {}
        for flow in active:
            for link in flows[flow][1]:
                crossing[link] = crossing.get(link, 0) + 1
        increment = min(flows[flow][0] - rates[flow] for flow in active)
        for link, count in crossing.items():
            increment = min(increment, remaining[link] / count)
        increment = max(increment, 0.0)
        for flow in active:
            rates[flow] += increment
        for link, count in crossing.items():
            remaining[link] -= increment * count
        active = {
            flow for flow in active
            if flows[flow][0] - rates[flow] > EPS
            and all(remaining[link] > EPS for link in flows[flow][1])
        }
    return rates


def guaranteed_want(flow):
    if flow.meter_cap_bps is None:
        return flow.demand_bps
    return min(flow.demand_bps, flow.meter_cap_bps)


def guaranteed_rates(links, flows, paths):
    """
    Rates of the guaranteed flows: each flow asks for its metered
    demand and every queue above its maximum scales the flows
    crossing it in proportion
    """
    rates = {f.id: float(guaranteed_want(f)) for f in flows}
    # a second round never scales again once every queue fits
    for _ in range(len(links) + 1):
        load = {}
        for f in flows:
            for key in paths[f.id]:
                load[key] = load.get(key, 0.0) + rates[f.id]
        scales = {
            key: links[key].guaranteed_queue_max_bps / total
            for key, total in load.items()
            if total > links[key].guaranteed_queue_max_bps + EPS
        }
        if not scales:
            break
        for f in flows:
            factor = min((scales.get(key, 1.0) for key in paths[f.id]), default=1.0)
            rates[f.id] *= factor
    return rates


def allocate_rates(links, flows, paths):
    """
    Rates of flows sharing links: the guaranteed queue first, then
    the residual capacity filled max-min by the others. 'links' maps
    a link key to its state and 'paths' a flow id to its link keys.
    """
    guaranteed = [f for f in flows if f.state is FlowState.ACTIVE_GUARANTEED]
    others = [f for f in flows if f.state is not FlowState.ACTIVE_GUARANTEED]

    rates = guaranteed_rates(links, guaranteed, paths)
    residual = {key: float(link.capacity_bps) for key, link in links.items()}
    for f in guaranteed:
        for key in paths[f.id]:
            residual[key] -= rates[f.id]
    rates.update(progressive_fill(
        residual, {f.id: (f.demand_bps, tuple(paths[f.id])) for f in others}
    ))
    return rates


def allocate_link(link, flows):
    """
    Allocation of one link to the flows crossing it,
    returned as a dict of flow ids to bps
    """
    return allocate_rates(
        {'link': link}, flows, {f.id: ('link',) for f in flows}
    )


class FlowSimulator:
    """
    Steps the traffic of the provisioned flows over the topology
    and keeps the allocation of every tick
    """

    def __init__(self, topology):
        self.topology = topology
        self.links = dict(topology.link_keys())
        self.history = []

    def allocate(self, tick, flows):
        """
        End-to-end rates of the flows over their paths
        """
        rates = allocate_rates(
            self.links, flows, {f.id: tuple(f.path) for f in flows}
        )
        allocation = TickAllocation(tick)
        for f in flows:
            allocated = rates.get(f.id, 0.0)
            allocation.flows.append(FlowTick(
                f.id, f.flow_class, f.state, f.demand_bps,
                allocated, loss_rate(f.demand_bps, allocated),
            ))
        logger.debug(
            "tick %d: guaranteed %.0f bps, best effort %.0f bps",
            tick, allocation.guaranteed_bps, allocation.best_effort_bps,
        )
        return allocation

    def step(self, world):
        """
        Allocates one tick for the flows the world carries, then
        verifies the deferred digests due and promotes what fits
        """
        tick = world.clock.tick
        hosts = self.topology.hosts
        flows = [
            f for f in world.engine.active_flows()
            if world.control.can_communicate(hosts[f.src_host], hosts[f.dst_host])
        ]
        allocation = self.allocate(tick, flows)
        self.history.append(allocation)
        world.control.flush_all(up_to_tick=tick)
        world.engine.try_promote()
        return allocation

    def metrics_series(self):
        """
        One row per flow per tick
        """
        decimals = settings.CONF['loss_decimals']
        return [
            {
                'tick': allocation.tick,
                'flow_id': row.flow_id,
                'class': row.flow_class.value,
                'demand_bps': row.demand_bps,
                'allocated_bps': int(round(row.allocated_bps)),
                'loss_rate': '{:.{}f}'.format(row.loss_rate, decimals),
            }
            for allocation in self.history
            for row in allocation.flows
        ]

    def occupancy_series(self):
        """
        The bandwidth occupied by each traffic class every tick
        """
        return [
            {
                'tick': allocation.tick,
                'guaranteed_bps': int(round(allocation.guaranteed_bps)),
                'best_effort_bps': int(round(allocation.best_effort_bps)),
                'total_bps': int(round(allocation.total_bps)),
            }
            for allocation in self.history
        ]
