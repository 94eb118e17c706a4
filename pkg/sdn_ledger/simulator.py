"""
The event loop binding the ledger, the control plane, the
provisioning engine and the flow simulator for one scenario.
"""
import logging
from collections import OrderedDict, deque
from statistics import mean

from . import artifacts, exceptions, settings, utils
from .control_plane import (
    BROADCAST, ControlPlane, EventLog, SecurityEventKind, TamperRule,
    VerifyMode,
)
from .flow_sim import FlowSimulator
from .ledger import Ledger
from .provisioning import ProvisionRequest, ProvisioningEngine, seed_link_matrices

logger = logging.getLogger(__name__)


def _first_set(*values):
    for value in values:
        if value is not None:
            return value
    return None


class Simulation:
    """
    One run of a scenario. Command line options take precedence
    over the 'run' record of the scenario, which takes precedence
    over the settings.
    """

    def __init__(self, scenario, verify_mode=None, verify_delay=None, ticks=None):
        self.scenario = scenario
        self.ticks = int(_first_set(ticks, scenario.ticks, settings.CONF['default_ticks']))
        self.verify_mode = VerifyMode.from_name(
            _first_set(verify_mode, scenario.verify_mode, settings.CONF['verify_mode'])
        )
        self.verify_delay = int(_first_set(
            verify_delay, scenario.verify_delay_ticks,
            settings.CONF['verify_delay_ticks'],
        ))

        self.clock = utils.SimulationClock(settings.CONF['tick_ms'])
        self.topology = scenario.build_topology()
        self.ledger = Ledger(clock=self.clock.now_ms)
        self.event_log = EventLog(self.clock)
        self.control = ControlPlane(
            self.topology, self.ledger, self.event_log,
            mode=self.verify_mode, delay_ticks=self.verify_delay,
            clock=self.clock,
        )
        self.engine = ProvisioningEngine(
            self.topology, self.ledger, self.event_log,
            can_communicate=self.control.can_communicate,
        )
        self.flow_sim = FlowSimulator(self.topology)
        self.finished = False
        self._seed_ledger()

    def _seed_ledger(self):
        """
        Writes the static tables of the scenario to the ledger
        """
        seed_link_matrices(self.topology, self.ledger)
        for from_controller, to_controller, edge_switch in self.scenario.traversal:
            self.topology.check_traversal_edge(
                from_controller, to_controller, edge_switch
            )
            self.ledger.set_traversal_edge(
                from_controller, to_controller, edge_switch
            )
        for ip, mac in self.scenario.ip_mac:
            self.ledger.put_ip_mac(ip, mac)
        for entry in self.scenario.sla:
            self.ledger.put_sla(
                entry.index, entry.src_ip, entry.dst_ip,
                entry.sla_bandwidth_bps, entry.flag,
            )

    @property
    def security_events(self):
        return self.event_log.security_events

    @property
    def exit_code(self):
        return 2 if self.security_events else 0

    def run(self):
        """
        Applies the events of tick 0, then every tick delivers the
        commands due, applies the events of the tick and steps the
        traffic. The run ends by delivering and verifying everything
        still pending.
        """
        events = deque(self.scenario.events)
        self.clock.set_tick(0)
        self._apply_events(0, events)
        for tick in range(1, self.ticks + 1):
            self.clock.set_tick(tick)
            self.control.deliver_ready(tick)
            self._apply_events(tick, events)
            self.flow_sim.step(self)
        for event in events:
            logger.warning(
                "event at line %d (t=%d) is past the end of the run",
                event.line, event.t,
            )
        self.control.deliver_ready(float('inf'))
        self.control.flush_all()
        self.finished = True
        logger.info(
            "scenario %s ran %d ticks: %d blocks, %d security events",
            self.scenario.name, self.ticks, len(self.ledger),
            len(self.security_events),
        )
        return self

    def _apply_events(self, tick, events):
        while events and events[0].t <= tick:
            self.apply_event(events.popleft())
            self.control.deliver_ready(tick)

    def apply_event(self, event):
        handler = getattr(self, '_event_' + event.kind)
        try:
            handler(event.params)
        except exceptions.NotQualified as e:
            logger.warning("flow %s blocked: %s", event.params.get('flow'), e)
            self.event_log.record(
                'flow_blocked', event.params.get('flow'),
                event.params['src'], event.params['dst'],
            )
        except exceptions.SdnLedgerError as e:
            logger.warning("event at line %d failed: %s", event.line, e)
            self.event_log.record('event_failed', event.kind, e)

    def _controller_of(self, host):
        return self.topology.controller_for_domain(host.domain_id).id

    def _event_dhcp(self, params):
        host = self.topology.hosts[params['host']]
        mac = utils.normalize_mac(params.get('mac', host.mac))
        self.control.handle_dhcp(self._controller_of(host), mac, host)

    def _event_arp_exchange(self, params):
        sender_mac = params.get('sender_mac')
        self.control.arp_exchange(
            self.topology.hosts[params['src']],
            self.topology.hosts[params['dst']],
            sender_ip=params.get('sender_ip'),
            sender_mac=sender_mac and utils.normalize_mac(sender_mac),
        )

    def _event_send_command(self, params):
        src = int(params['src'])
        dst = params['dst']
        dst = BROADCAST if dst.lower() == BROADCAST.lower() else int(dst)
        cmd = self.control.make_command(
            params['command'], src, dst, params['payload']
        )
        self.control.send_command(
            src, cmd, record=params.get('record', '1') == '1'
        )

    def _event_tamper(self, params):
        dst = params.get('dst')
        self.control.arm_tamper(TamperRule(
            flip_byte=int(params.get('flip_byte', 0)),
            target_digest=params.get('target_digest'),
            match=params.get('match'),
            dst=None if dst is None else int(dst),
        ))

    def _event_start_flow(self, params):
        src = self.topology.hosts[params['src']]
        dst = self.topology.hosts[params['dst']]
        request = ProvisionRequest(
            src.name, dst.name, src.ip, dst.ip, self.clock.now_ms()
        )
        demand = params.get('demand_mbps')
        meter = params.get('meter_mbps')
        self.engine.provision(
            request,
            demand_bps=None if demand is None else utils.mbps_to_bps(demand),
            meter_cap_bps=None if meter is None else utils.mbps_to_bps(meter),
            flow_id=params['flow'],
        )

    _event_provision = _event_start_flow

    def _event_stop_flow(self, params):
        self.engine.teardown(params['flow'])

    def _event_update_sla(self, params):
        self.ledger.update_sla(
            params['index'], params['src'], params['dst'],
            utils.mbps_to_bps(params['bw_mbps']), params['flag'],
        )

    def flow_summaries(self):
        """
        The mean throughput and loss rate of every flow over
        the ticks it was carried
        """
        allocations = OrderedDict()
        for allocation in self.flow_sim.history:
            for row in allocation.flows:
                allocations.setdefault(row.flow_id, []).append(row)
        return [
            {
                'flow_id': flow_id,
                'class': rows[-1].flow_class.value,
                'state': rows[-1].state.value,
                'ticks': len(rows),
                'mean_bps': mean(row.allocated_bps for row in rows),
                'mean_loss': mean(row.loss_rate for row in rows),
            }
            for flow_id, rows in allocations.items()
        ]

    def summary(self):
        """
        The context of the summary report
        """
        results = self.control.results
        return {
            'name': self.scenario.name,
            'ticks': self.ticks,
            'verify_mode': self.verify_mode.value,
            'verify_delay': self.verify_delay,
            'blocks': len(self.ledger),
            'chain_valid': self.ledger.validate_chain(),
            'verified': sum(1 for result in results if result.verified),
            'failed': sum(1 for result in results if not result.verified),
            'security': [
                (kind.value, sum(
                    1 for event in self.security_events if event.kind is kind
                ))
                for kind in SecurityEventKind
            ],
            'flows': self.flow_summaries(),
            'blocked': [row[2][0] for row in self.event_log.of_kind('flow_blocked')],
            'exit_code': self.exit_code,
        }

    def write_artifacts(self, out_dir):
        return artifacts.write_artifacts(self, out_dir)


def run_scenario(scenario, out_dir=None, **options):
    """
    Runs the scenario, writes the artifacts if a directory is
    given and returns the finished simulation
    """
    simulation = Simulation(scenario, **options).run()
    if out_dir is not None:
        simulation.write_artifacts(out_dir)
    return simulation
