from django.core.management.base import BaseCommand, CommandError

from ...ledger import validate_export


class Command(BaseCommand):
    help = "Verifies the hash links of an exported chain.log"

    def add_arguments(self, parser):
        parser.add_argument('chain_log')

    def handle(self, *args, **options):
        try:
            with open(options['chain_log'], encoding='utf-8') as f:
                lines = [line for line in f.read().splitlines() if line]
        except OSError as e:
            raise CommandError(str(e))
        if not validate_export(lines):
            raise CommandError(
                "{} is not a valid chain".format(options['chain_log'])
            )
        self.stdout.write("chain valid: {} blocks".format(len(lines)))
