from django.apps import AppConfig


class SdnLedgerConfig(AppConfig):
    name = 'sdn_ledger'
    verbose_name = 'SDN Ledger'
