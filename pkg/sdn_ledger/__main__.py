"""
Runs the management commands without a host project:

    python -m sdn_ledger run --scenario case_b --out out/
    python -m sdn_ledger verifychain out/chain.log
    python -m sdn_ledger dumpscenario case_a
"""
import sys

import django
from django.conf import settings


def main(argv=None):
    if not settings.configured:
        settings.configure(
            INSTALLED_APPS=['sdn_ledger'],
            TEMPLATES=[{
                'BACKEND': 'django.template.backends.django.DjangoTemplates',
                'APP_DIRS': True,
            }],
            LOGGING={
                'version': 1,
                'disable_existing_loggers': False,
                'handlers': {
                    'console': {'class': 'logging.StreamHandler'},
                },
                'loggers': {
                    'sdn_ledger': {'handlers': ['console'], 'level': 'WARNING'},
                },
            },
        )
    django.setup()

    from django.core.management import execute_from_command_line
    execute_from_command_line(['sdn_ledger'] + list(argv or sys.argv[1:]))


if __name__ == '__main__':
    main()
