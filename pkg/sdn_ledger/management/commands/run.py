from django.core.management.base import BaseCommand, CommandError

from ... import settings
from ...exceptions import SdnLedgerError
from ...scenario import VERIFY_MODES, load_scenario
from ...simulator import run_scenario


class Command(BaseCommand):
    help = (
        "Runs a scenario and writes metrics.csv, occupancy.csv, "
        "events.csv, chain.log and summary.txt to the output directory. "
        "Exits with 2 if security events were detected."
    )

    def add_arguments(self, parser):
        parser.add_argument(
            '--scenario', required=True,
            help="a scenario file or a built-in scenario: case_a, case_b",
        )
        parser.add_argument(
            '--out',
            help="the output directory, '{}' by default".format(
                settings.CONF['output_dir']
            ),
        )
        parser.add_argument('--ticks', type=int, help="the run length")
        parser.add_argument('--verify-mode', choices=VERIFY_MODES)
        parser.add_argument(
            '--verify-delay', type=int,
            help="the verification latency in ticks",
        )

    def handle(self, *args, **options):
        if options['ticks'] is not None and options['ticks'] < 1:
            raise CommandError("--ticks must be positive")
        if options['verify_delay'] is not None and options['verify_delay'] < 0:
            raise CommandError("--verify-delay must not be negative")
        out_dir = options['out'] or settings.CONF['output_dir']
        try:
            scenario = load_scenario(options['scenario'])
            simulation = run_scenario(
                scenario, out_dir,
                ticks=options['ticks'],
                verify_mode=options['verify_mode'],
                verify_delay=options['verify_delay'],
            )
        except (SdnLedgerError, OSError) as e:
            raise CommandError(str(e))

        self.stdout.write("{}: {} ticks, {} blocks, artifacts in {}".format(
            scenario.name, simulation.ticks, len(simulation.ledger), out_dir
        ))
        if simulation.exit_code:
            raise CommandError(
                "{} security events detected".format(
                    len(simulation.security_events)
                ),
                returncode=simulation.exit_code,
            )
