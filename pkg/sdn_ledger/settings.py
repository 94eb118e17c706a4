from django.conf import settings
from django.core.exceptions import ImproperlyConfigured

# default settings
CONF = {
    # the verification mode used when neither the scenario
    # nor the command line specifies it
    'verify_mode': 'immediate',
    # how many ticks the ledger lookup of a received command takes
    'verify_delay_ticks': 0,

    # the length of a tick in milliseconds of simulated time
    'tick_ms': 1000,
    # the run length if the scenario has no 'run ticks=' record
    'default_ticks': 10,

    # the directory for run artifacts when no --out is given
    'output_dir': 'sdn_runs',
    # the precision of loss rates in metrics.csv
    'loss_decimals': 6,
}

# overwrite defaults with settings specified in project settings file
CONF.update(getattr(settings, 'SDN_LEDGER', {}))

# validate the values the simulator cannot work without

if CONF['verify_mode'] not in ('immediate', 'deferred'):
    raise ImproperlyConfigured(
        "'verify_mode' must be 'immediate' or 'deferred'"
    )

if CONF['tick_ms'] <= 0:
    raise ImproperlyConfigured("'tick_ms' must be positive")

if CONF['verify_delay_ticks'] < 0:
    raise ImproperlyConfigured("'verify_delay_ticks' must not be negative")
