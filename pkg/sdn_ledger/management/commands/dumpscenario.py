from django.core.management.base import BaseCommand, CommandError

from ...exceptions import SdnLedgerError
from ...scenario import load_scenario, serialize_scenario


class Command(BaseCommand):
    help = "Prints a scenario in the scenario line format"

    def add_arguments(self, parser):
        parser.add_argument(
            'scenario', help="a scenario file or case_a, case_b",
        )

    def handle(self, *args, **options):
        try:
            scenario = load_scenario(options['scenario'])
        except (SdnLedgerError, OSError) as e:
            raise CommandError(str(e))
        self.stdout.write(serialize_scenario(scenario), ending='')
