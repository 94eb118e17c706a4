"""
Exceptions raised by the ledger, the network model, the control plane,
the provisioning engine and the scenario parser.
"""


class SdnLedgerError(Exception):
    """
    The base class of all errors of the package
    """


# ledger

class LedgerError(SdnLedgerError):
    """
    A transaction has been rejected, the chain is unchanged
    """


class MalformedDigest(LedgerError):
    pass


class DuplicateMac(LedgerError):
    pass


class DuplicateIp(LedgerError):
    pass


class DuplicateSlaIndex(LedgerError):
    pass


class DuplicateSlaPair(LedgerError):
    pass


class UnknownSlaIndex(LedgerError):
    pass


class InvalidSlaEntry(LedgerError):
    pass


class NegativeBandwidth(LedgerError):
    pass


class UnknownLink(LedgerError):
    pass


class InsufficientBandwidth(LedgerError):
    """
    Raised by a reservation. The 'link' attribute names
    the first link without enough available bandwidth.
    """

    def __init__(self, link, available, requested):
        self.link = link
        self.available = available
        self.requested = requested
        super().__init__(
            "link {} has {} bps available, {} bps requested".format(
                link, available, requested
            )
        )


class OverRelease(LedgerError):
    pass


class DuplicateLink(LedgerError):
    pass


# topology

class TopologyError(SdnLedgerError):
    pass


class DisconnectedGraph(TopologyError):
    pass


class EdgeLinkOnNonEdgeSwitch(TopologyError):
    pass


class DuplicateId(TopologyError):
    pass


class UnknownEndpoint(TopologyError):
    pass


class InvalidLink(TopologyError):
    pass


class AsymmetricPeers(TopologyError):
    pass


class ParallelInterDomainLink(TopologyError):
    pass


class NoPath(TopologyError):
    pass


class InvalidTraversalEdge(TopologyError):
    pass


# control plane

class ControlPlaneError(SdnLedgerError):
    pass


class LedgerRejected(ControlPlaneError):
    """
    The digest of a command could not be recorded,
    so the command has not been sent
    """


# provisioning

class ProvisioningError(SdnLedgerError):
    pass


class NoControllerPath(ProvisioningError):
    pass


class UnknownFlow(ProvisioningError):
    pass


class DuplicateFlow(ProvisioningError):
    pass


class NotQualified(ProvisioningError):
    """
    The hosts have not completed a validated ARP request-reply pair
    """


class InvalidMeter(ProvisioningError):
    pass


class ProvisioningBlocked(ProvisioningError):
    """
    A provisioning decision was requested while another
    one was updating the bandwidth matrices
    """


# scenario files

class ScenarioError(SdnLedgerError):
    """
    A scenario file error. The 'line' attribute is the 1-based
    number of the offending line or 0 if the error concerns
    the file as a whole.
    """

    def __init__(self, line, message):
        self.line = line
        super().__init__("line {}: {}".format(line, message))


class ScenarioSyntaxError(ScenarioError):
    pass


class UnknownId(ScenarioError):
    pass


class UnsortedEvents(ScenarioError):
    pass
