# pytest wiring that mirrors runtests.py and the custom test runner
# (sdn_ledger.tests.runner.SdnLedgerTestSuiteRunner)

import os
import shutil
import sys
import tempfile

base_dir = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(1, os.path.join(base_dir, 'sdn_ledger_testapp'))

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'sdn_ledger_testapp.settings_test')

import django

django.setup()

import pytest


@pytest.fixture(scope='session', autouse=True)
def _sdn_ledger_test_environment():
    from django.test.utils import setup_test_environment, teardown_test_environment
    from sdn_ledger import settings

    setup_test_environment()
    original_output_dir = settings.CONF['output_dir']
    temp_output = tempfile.mkdtemp()
    settings.CONF['output_dir'] = temp_output
    yield
    teardown_test_environment()
    shutil.rmtree(temp_output, ignore_errors=True)
    settings.CONF['output_dir'] = original_output_dir
