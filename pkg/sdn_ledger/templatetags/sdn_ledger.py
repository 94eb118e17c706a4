from django import template

from .. import settings, utils

register = template.Library()


@register.filter
def mbps(bps):
    """
    Formats a rate in bits per second as megabits
    per second, rounded to whole kilobits
    """
    try:
        value = float(bps)
    except (TypeError, ValueError):
        return ''
    return "{} Mbps".format(utils.bps_to_mbps(round(value / 1000) * 1000))


@register.filter
def rate(value, decimals=None):
    """
    Formats a ratio with the precision of the loss rates
    in metrics.csv unless another precision is given
    """
    if decimals is None:
        decimals = settings.CONF['loss_decimals']
    try:
        return "{:.{}f}".format(float(value), int(decimals))
    except (TypeError, ValueError):
        return ''
