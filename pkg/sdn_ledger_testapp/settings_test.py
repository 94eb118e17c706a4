from .settings import *

# set custom test runner that creates a tmp folder for run artifacts

TEST_RUNNER = 'sdn_ledger.tests.runner.SdnLedgerTestSuiteRunner'
