import os
import tempfile

from django.test import SimpleTestCase

from .. import exceptions
from ..ledger import SlaFlag
from ..scenario import (
    Event, load_scenario, parse_scenario, serialize_scenario,
)
from ..topology import tree_description

# two hosts on one switch, six lines long
MINIMAL = """\
controller id=0 domain=0
switch id=s1 domain=0
host name=h1 mac=00-00-00-00-00-01 switch=s1
host name=h2 mac=00-00-00-00-00-02 switch=s1
link a=h1 b=s1 capacity_mbps=10 gq_mbps=5
link a=h2 b=s1 capacity_mbps=10 gq_mbps=5
"""


def with_lines(*lines):
    return MINIMAL + ''.join(line + '\n' for line in lines)


class TestBuiltinScenarios(SimpleTestCase):
    """
    Tests for the scenarios shipped with the package
    """

    def test_tree_case(self):
        """
        Checks whether the tree case declares the tree of depth 2 and
        fan-out 4, its service requests and the meters of its flows
        """
        scenario = load_scenario('case_b')
        self.assertEqual(scenario.name, 'case_b')
        self.assertEqual(scenario.ticks, 400)
        self.assertIsNone(scenario.verify_mode)
        self.assertEqual(
            scenario.topology, tree_description(2, 4, 9400000, 5000000)
        )
        self.assertEqual(len(scenario.ip_mac), 16)
        self.assertEqual(
            [(entry.sla_bandwidth_bps, entry.flag) for entry in scenario.sla],
            [
                (5700000, SlaFlag.BEST_EFFORT), (3700000, SlaFlag.BEST_EFFORT),
                (1800000, SlaFlag.GUARANTEED), (2800000, SlaFlag.GUARANTEED),
            ],
        )
        self.assertEqual(
            [
                event.params.get('meter_mbps')
                for event in scenario.events if event.kind == 'start_flow'
            ],
            [None, None, '2', '3'],
        )
        self.assertEqual(scenario.events[-1], Event(203, 'start_flow', {
            'src': 'h4', 'dst': 'h8', 'demand_mbps': '2.8',
            'meter_mbps': '3', 'flow': 'g2',
        }))

    def test_three_domains(self):
        scenario = load_scenario('case_a')
        self.assertEqual(scenario.ticks, 5)
        self.assertEqual(len(scenario.topology.controllers), 3)
        self.assertEqual(len(scenario.traversal), 6)
        self.assertEqual(scenario.traversal[0], (0, 1, 's5'))
        self.assertEqual(
            [event.kind for event in scenario.events],
            ['dhcp', 'dhcp', 'dhcp', 'arp_exchange', 'start_flow', 'send_command'],
        )

    def test_serialize(self):
        """
        Checks whether a serialized scenario parses to the same scenario
        """
        for name in ('case_a', 'case_b'):
            with self.subTest(name=name):
                scenario = load_scenario(name)
                self.assertEqual(
                    parse_scenario(serialize_scenario(scenario)), scenario
                )


class TestParseScenario(SimpleTestCase):
    """
    Tests for parsing scenario text
    """

    def test_minimal(self):
        """
        Checks whether a scenario without a run record keeps
        the defaults of the settings
        """
        scenario = parse_scenario(MINIMAL)
        self.assertEqual(scenario.name, 'scenario')
        self.assertIsNone(scenario.ticks)
        self.assertIsNone(scenario.verify_delay_ticks)
        self.assertEqual(scenario.events, [])
        self.assertEqual(len(scenario.build_topology().hosts), 2)

    def test_run_record(self):
        scenario = parse_scenario(
            'run name=net ticks=5 verify_mode=deferred verify_delay=2\n' + MINIMAL
        )
        self.assertEqual(scenario.name, 'net')
        self.assertEqual(scenario.ticks, 5)
        self.assertEqual(scenario.verify_mode, 'deferred')
        self.assertEqual(scenario.verify_delay_ticks, 2)

    def test_comments(self):
        scenario = parse_scenario(
            '# a comment\n\n' + MINIMAL.replace('switch=s1\n', 'switch=s1  # h\n', 1)
        )
        self.assertEqual(scenario.topology.hosts[0].attached_switch, 's1')

    def test_normalized_addresses(self):
        scenario = parse_scenario(with_lines(
            'ipmac ip=10.0.0.1 mac=00:00:00:00:00:0a',
        ))
        self.assertEqual(scenario.ip_mac, [('10.0.0.1', '00-00-00-00-00-0A')])

    def test_events(self):
        scenario = parse_scenario(with_lines(
            'event t=0 kind=dhcp host=h1',
            'event t=0 kind=tamper match=arpreply flip_byte=3',
            'event t=1 kind=send_command src=0 dst=broadcast command=Custom payload=x',
            'event t=1 kind=update_sla index=1 src=10.0.0.1 dst=10.0.0.2 bw_mbps=1 flag=1',
        ))
        self.assertEqual(
            [(event.t, event.kind) for event in scenario.events],
            [(0, 'dhcp'), (0, 'tamper'), (1, 'send_command'), (1, 'update_sla')],
        )
        self.assertEqual(scenario.events[0].line, 7)

    def test_generated_flow_ids(self):
        """
        Checks whether flows without an id are named after their hosts
        and further flows of the same pair get a number
        """
        scenario = parse_scenario(with_lines(
            'event t=1 kind=start_flow src=h1 dst=h2 demand_mbps=1 flow=h1_h2',
            'event t=1 kind=start_flow src=h1 dst=h2 demand_mbps=1',
            'event t=2 kind=provision src=h1 dst=h2',
            'event t=3 kind=stop_flow flow=h1_h2_2',
        ))
        self.assertEqual(
            [event.params['flow'] for event in scenario.events[:3]],
            ['h1_h2', 'h1_h2_1', 'h1_h2_2'],
        )

    def test_load_file(self):
        """
        Checks whether a scenario file without a name
        is named after the file
        """
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'my_net.txt')
            with open(path, 'w', encoding='utf-8') as f:
                f.write(MINIMAL)
            self.assertEqual(load_scenario(path).name, 'my_net')


class TestScenarioErrors(SimpleTestCase):
    """
    Tests for the errors of malformed scenarios
    """

    def assertLineError(self, line, error=exceptions.ScenarioSyntaxError):
        with self.assertRaises(error) as context:
            parse_scenario(with_lines(line))
        self.assertEqual(context.exception.line, 7)
        self.assertIn('line 7', str(context.exception))

    def test_empty(self):
        """
        Checks whether a scenario without a topology
        is an error of the whole file
        """
        for text in ('', '# nothing\n', 'run ticks=3\n'):
            with self.subTest(text=text):
                with self.assertRaises(exceptions.ScenarioSyntaxError) as context:
                    parse_scenario(text)
                self.assertEqual(context.exception.line, 0)

    def test_syntax(self):
        lines = (
            'switch s2 domain=0',
            'switch id=s2 domain=0 domain=0',
            'switch id=s2',
            'switch id=s2 domain=0 color=red',
            'switch id=s-2 domain=0',
            'switch id=s2 domain=0 edge=yes',
            'router id=r1',
            'link a=h1 b=s1 capacity_mbps=fast gq_mbps=5',
            'link a=h1 b=s1 capacity_mbps=-1 gq_mbps=5',
            'link a=h1 b=s1 capacity_mbps=inf gq_mbps=5',
            'link a=h1 b=s1 capacity_mbps=10 gq_mbps=nan',
            'host name=h3 mac=zz switch=s1',
            'ipmac ip=10.0.0.300 mac=00-00-00-00-00-01',
            'run ticks=0',
            'run verify_mode=later',
            'sla index=1 src=10.0.0.1 dst=10.0.0.2 bw_mbps=1 flag=2',
            'sla index=1 src=10.0.0.1 dst=10.0.0.2 bw_mbps=0 flag=1',
            'event t=1 kind=update_sla index=1 src=10.0.0.1 dst=10.0.0.2 bw_mbps=0 flag=1',
            'event t=1',
            'event t=-1 kind=dhcp host=h1',
            'event t=1 kind=teleport',
            'event t=1 kind=dhcp',
            'event t=1 kind=send_command src=0 dst=0 command=ArpRequest payload=x',
            'event t=1 kind=tamper match=Handshake',
            'event t=1 kind=tamper target_digest=abc',
        )
        for line in lines:
            with self.subTest(line=line):
                self.assertLineError(line)

    def test_unknown_ids(self):
        lines = (
            'switch id=s2 domain=3',
            'link a=h1 b=s9 capacity_mbps=10 gq_mbps=5',
            'host name=h3 mac=00-00-00-00-00-03 switch=s9',
            'traversal from=0 to=4 edge_switch=s1',
            'event t=1 kind=dhcp host=h99',
            'event t=1 kind=send_command src=4 dst=0 command=FlowMod payload=x',
            'event t=1 kind=stop_flow flow=f1',
        )
        for line in lines:
            with self.subTest(line=line):
                self.assertLineError(line, exceptions.UnknownId)

    def test_unsorted_events(self):
        with self.assertRaises(exceptions.UnsortedEvents) as context:
            parse_scenario(with_lines(
                'event t=2 kind=dhcp host=h1',
                'event t=1 kind=dhcp host=h2',
            ))
        self.assertEqual(context.exception.line, 8)

    def test_duplicate_flow(self):
        with self.assertRaises(exceptions.ScenarioSyntaxError) as context:
            parse_scenario(with_lines(
                'event t=1 kind=start_flow src=h1 dst=h2 demand_mbps=1 flow=f1',
                'event t=2 kind=start_flow src=h2 dst=h1 demand_mbps=1 flow=f1',
            ))
        self.assertEqual(context.exception.line, 8)

    def test_inconsistent_topology(self):
        """
        Checks whether a topology that parses but cannot
        be built raises a topology error
        """
        with self.assertRaises(exceptions.DisconnectedGraph):
            parse_scenario(with_lines('switch id=s2 domain=0'))
        with self.assertRaises(exceptions.DuplicateId):
            parse_scenario(with_lines(
                'link a=s1 b=h1 capacity_mbps=10 gq_mbps=5'
            ))

    def test_repeated_table_keys(self):
        """
        Checks whether a second binding of an IP or a MAC and a second
        SLA with the same index or host pair are errors of their line
        """
        pairs = (
            ('ipmac ip=10.0.0.1 mac=00-00-00-00-00-01',
             'ipmac ip=10.0.0.1 mac=00-00-00-00-00-02'),
            ('ipmac ip=10.0.0.1 mac=00-00-00-00-00-01',
             'ipmac ip=10.0.0.2 mac=00:00:00:00:00:01'),
            ('sla index=1 src=10.0.0.1 dst=10.0.0.2 bw_mbps=1 flag=1',
             'sla index=1 src=10.0.0.2 dst=10.0.0.1 bw_mbps=1 flag=1'),
            ('sla index=1 src=10.0.0.1 dst=10.0.0.2 bw_mbps=1 flag=1',
             'sla index=2 src=10.0.0.1 dst=10.0.0.2 bw_mbps=0 flag=0'),
        )
        for first, second in pairs:
            with self.subTest(line=second):
                with self.assertRaises(exceptions.ScenarioSyntaxError) as context:
                    parse_scenario(with_lines(first, second))
                self.assertEqual(context.exception.line, 8)

    def test_reversed_sla_pair(self):
        scenario = parse_scenario(with_lines(
            'sla index=1 src=10.0.0.1 dst=10.0.0.2 bw_mbps=1 flag=1',
            'sla index=2 src=10.0.0.2 dst=10.0.0.1 bw_mbps=1 flag=1',
        ))
        self.assertEqual(len(scenario.sla), 2)

    def assertInvalidLine(self, name, old, new):
        """
        Replaces a line of a built-in scenario and checks
        whether parsing fails at that line
        """
        lines = serialize_scenario(load_scenario(name)).splitlines()
        number = lines.index(old) + 1
        lines[number - 1] = new
        with self.assertRaises(exceptions.ScenarioSyntaxError) as context:
            parse_scenario('\n'.join(lines) + '\n')
        self.assertEqual(context.exception.line, number)

    def test_invalid_traversal(self):
        """
        Checks whether a traversal entry naming a non-edge switch or
        a switch outside the domain of its first controller is an
        error of its line
        """
        self.assertInvalidLine(
            'case_a',
            'traversal from=0 to=1 edge_switch=s5',
            'traversal from=0 to=1 edge_switch=s1',
        )
        self.assertInvalidLine(
            'case_a',
            'traversal from=1 to=0 edge_switch=s10',
            'traversal from=1 to=0 edge_switch=s11',
        )

    def test_duplicate_sla_index(self):
        self.assertInvalidLine(
            'case_b',
            'sla index=2 src=10.0.0.2 dst=10.0.0.6 bw_mbps=3.7 flag=0',
            'sla index=1 src=10.0.0.2 dst=10.0.0.6 bw_mbps=3.7 flag=0',
        )
