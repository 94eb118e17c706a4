from collections import deque
from contextlib import contextmanager
from dataclasses import fields, replace
from enum import Enum

from .. import settings
from ..ledger import LinkKey
from ..provisioning import Flow, FlowClass, FlowState
from ..topology import Controller, Host, LinkState, Switch, TopologyDescription

# the queue maximums random topologies choose from
GQ_CHOICES = (1000000, 2000000, 3000000, 5000000)


@contextmanager
def patch_settings(settings_dict):
    """
    Temporary replaces values in the SDN ledger
    settings with values from the dictionary
    """
    saved_settings = {}
    for key, value in settings_dict.items():
        # save the original value
        saved_settings[key] = settings.CONF[key]
        # set the fake value
        settings.CONF[key] = value
    try:
        # stop here until the context manager exits
        yield
    finally:
        # restore the original settings
        settings.CONF.update(saved_settings)


def water_fill(capacity, demands, rounds=200):
    """
    Max-min fair shares of one link found by bisection on the
    water level: every flow gets min(demand, level) and the level
    is the highest one the capacity can pay for
    """
    if sum(demands) <= capacity:
        return [float(demand) for demand in demands]
    low, high = 0.0, float(max(demands))
    for _ in range(rounds):
        level = (low + high) / 2
        if sum(min(demand, level) for demand in demands) > capacity:
            high = level
        else:
            low = level
    return [min(float(demand), low) for demand in demands]


def adjacency_of(description):
    """
    The neighbours of every node of a topology description
    """
    adjacency = {}
    for link in description.links:
        adjacency.setdefault(link.a, set()).add(link.b)
        adjacency.setdefault(link.b, set()).add(link.a)
    return adjacency


def brute_force_paths(adjacency, source, target, max_hops):
    """
    Every loop-free path of at most max_hops links, found by a plain
    depth-first walk over an adjacency dict
    """
    paths = []

    def extend(path):
        node = path[-1]
        if node == target:
            paths.append(list(path))
            return
        if len(path) - 1 == max_hops:
            return
        for neighbour in adjacency[node]:
            if neighbour not in path:
                path.append(neighbour)
                extend(path)
                path.pop()

    extend([source])
    return paths


def hop_distances(adjacency, source):
    distances = {source: 0}
    queue = deque([source])
    while queue:
        node = queue.popleft()
        for neighbour in adjacency[node]:
            if neighbour not in distances:
                distances[neighbour] = distances[node] + 1
                queue.append(neighbour)
    return distances


def hop_diameter(adjacency):
    return max(
        max(hop_distances(adjacency, node).values()) for node in adjacency
    )


def random_description(rng, max_switches=8, capacity_bps=10000000,
                       host_names=('ha', 'hb', 'hc')):
    """
    A connected single-domain topology: a random spanning tree over
    the switches, random extra links and hosts on random switches,
    every link with a random queue maximum
    """
    count = rng.randint(2, max_switches)
    switches = ['s{}'.format(number) for number in range(1, count + 1)]
    description = TopologyDescription(
        controllers=[Controller(0, 0)],
        switches=[Switch(switch, 0) for switch in switches],
    )
    pairs = set()
    for position in range(1, count):
        parent = switches[rng.randrange(position)]
        pairs.add(tuple(sorted((parent, switches[position]))))
    for _ in range(rng.randint(0, count)):
        pairs.add(tuple(sorted(rng.sample(switches, 2))))
    for a, b in sorted(pairs):
        description.links.append(
            LinkState(a, b, capacity_bps, rng.choice(GQ_CHOICES))
        )
    for number, name in enumerate(host_names, start=1):
        switch = rng.choice(switches)
        description.hosts.append(
            Host(name, '00-00-00-00-01-{:02X}'.format(number), switch)
        )
        description.links.append(
            LinkState(name, switch, capacity_bps, rng.choice(GQ_CHOICES))
        )
    return description


def diamond_description(gq_bps=5000000, capacity_bps=10000000):
    """
    Two equal two-hop paths between s1 and s4, through s2 and s3,
    with the host ha on s1 and hb on s4. The s3 links are declared
    first so that ties are not decided by declaration order.
    """
    links = [
        ('s3', 's4'), ('s1', 's3'), ('s2', 's4'), ('s1', 's2'),
        ('ha', 's1'), ('hb', 's4'),
    ]
    return TopologyDescription(
        controllers=[Controller(0, 0)],
        switches=[Switch('s{}'.format(number), 0) for number in range(1, 5)],
        links=[LinkState(a, b, capacity_bps, gq_bps) for a, b in links],
        hosts=[
            Host('ha', '00-00-00-00-02-01', 's1'),
            Host('hb', '00-00-00-00-02-02', 's4'),
        ],
    )


def make_flow(flow_id, demand_bps, guaranteed=False, meter_cap_bps=None,
              path=(), state=None):
    """
    A flow for the allocation tests, best effort unless guaranteed
    """
    if state is None:
        state = (
            FlowState.ACTIVE_GUARANTEED if guaranteed
            else FlowState.ACTIVE_BEST_EFFORT
        )
    flow_class = FlowClass.GUARANTEED if guaranteed else FlowClass.BEST_EFFORT
    return Flow(
        flow_id, flow_class, demand_bps, state, 'ha', 'hb',
        path=list(path), meter_cap_bps=meter_cap_bps,
    )


def mutate_value(value):
    """
    Returns a value of the same kind that encodes differently
    """
    if isinstance(value, Enum):
        members = list(type(value))
        return members[(members.index(value) + 1) % len(members)]
    if isinstance(value, bool):
        return not value
    if isinstance(value, int):
        return value + 1
    if isinstance(value, str):
        return value[:-1] + ('x' if value[-1:] != 'x' else 'y')
    if isinstance(value, LinkKey):
        return replace(value, b=mutate_value(value.b))
    if isinstance(value, tuple):
        return (mutate_value(value[0]),) + value[1:]
    raise TypeError("cannot mutate {!r}".format(value))


def mutate_block(block, rng):
    """
    Returns a copy of the block with one randomly chosen
    field of the block or of its transaction changed
    """
    target = rng.choice(
        ('index', 'prev_hash', 'timestamp', 'block_hash', 'seq', 'payload')
    )
    if target in ('index', 'prev_hash', 'timestamp', 'block_hash'):
        return replace(block, **{target: mutate_value(getattr(block, target))})
    tx = block.transactions[0]
    if target == 'seq':
        tx = replace(tx, seq=tx.seq + 1)
    else:
        name = rng.choice([f.name for f in fields(tx.payload)])
        payload = replace(
            tx.payload, **{name: mutate_value(getattr(tx.payload, name))}
        )
        tx = replace(tx, payload=payload)
    return replace(block, transactions=(tx,) + block.transactions[1:])
