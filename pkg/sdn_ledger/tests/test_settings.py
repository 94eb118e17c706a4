from importlib import reload

from django.test import SimpleTestCase, override_settings
from django.core.exceptions import ImproperlyConfigured

from .. import settings


class TestSettings(SimpleTestCase):
    """
    Tests for settings module
    """

    def setUp(self):
        # reloading binds a new dict, the original one is put back
        self.original_conf = settings.CONF

    def tearDown(self):
        settings.CONF = self.original_conf

    @override_settings(SDN_LEDGER={})
    def test_defaults(self):
        """
        Checks whether the settings module has defaults for
        everything the simulator reads
        """
        reload(settings)
        self.assertEqual(settings.CONF['verify_mode'], 'immediate')
        self.assertEqual(settings.CONF['verify_delay_ticks'], 0)
        self.assertEqual(settings.CONF['tick_ms'], 1000)
        self.assertEqual(settings.CONF['default_ticks'], 10)
        self.assertEqual(settings.CONF['loss_decimals'], 6)

    @override_settings(SDN_LEDGER={'verify_mode': 'deferred'})
    def test_verify_mode(self):
        """
        Checks whether the settings module gets the verify_mode
        setting from the project settings
        """
        reload(settings)
        self.assertEqual(settings.CONF['verify_mode'], 'deferred')

    @override_settings(SDN_LEDGER={'verify_delay_ticks': 3})
    def test_verify_delay_ticks(self):
        reload(settings)
        self.assertEqual(settings.CONF['verify_delay_ticks'], 3)

    @override_settings(SDN_LEDGER={'output_dir': '/tmp/runs'})
    def test_output_dir(self):
        """
        Checks whether the settings module gets the output_dir
        setting from the project settings
        """
        reload(settings)
        self.assertEqual(settings.CONF['output_dir'], '/tmp/runs')

    @override_settings(SDN_LEDGER={'loss_decimals': 3})
    def test_loss_decimals(self):
        reload(settings)
        self.assertEqual(settings.CONF['loss_decimals'], 3)

    @override_settings(SDN_LEDGER={'verify_mode': 'eventually'})
    def test_invalid_verify_mode(self):
        """
        Checks whether the ImproperlyConfigured exception
        is raised for an unknown verification mode
        """
        with self.assertRaises(ImproperlyConfigured):
            reload(settings)

    @override_settings(SDN_LEDGER={'tick_ms': 0})
    def test_invalid_tick_ms(self):
        with self.assertRaises(ImproperlyConfigured):
            reload(settings)

    @override_settings(SDN_LEDGER={'verify_delay_ticks': -1})
    def test_negative_delay(self):
        """
        Checks whether the ImproperlyConfigured exception
        is raised for a negative verification delay
        """
        with self.assertRaises(ImproperlyConfigured):
            reload(settings)
