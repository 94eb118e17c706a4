import os
import logging
from abc import ABCMeta, abstractmethod

from django.template.loader import render_to_string

logger = logging.getLogger(__name__)


class BaseArtifact(metaclass=ABCMeta):
    """
    An abstract base class for the files a finished simulation
    leaves in the output directory. Implements common methods.
    """

    def __init__(self, filename):
        self.filename = filename

    def path(self, out_dir):
        """
        Returns the path to the file in the output directory
        """
        return os.path.join(out_dir, self.filename)

    @abstractmethod
    def _create_lines(self, simulation):
        """Creates the lines of the file"""

    def write(self, out_dir, simulation):
        """
        Writes the file and returns its path
        """
        path = self.path(out_dir)
        lines = self._create_lines(simulation)
        # '\n' endings on every platform keep runs byte-identical
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.writelines(line + '\n' for line in lines)
        logger.debug("%s written: %d lines", path, len(lines))
        return path


class CsvArtifact(BaseArtifact):
    """
    A CSV file with a header and one line per row
    of a series of the simulation
    """

    def __init__(self, filename, columns, series):
        super().__init__(filename)
        self.columns = columns
        # the name of the FlowSimulator method returning the rows
        self.series = series

    def _create_lines(self, simulation):
        rows = getattr(simulation.flow_sim, self.series)()
        return [','.join(self.columns)] + [
            ','.join(str(row[column]) for column in self.columns)
            for row in rows
        ]


class EventsArtifact(BaseArtifact):

    def _create_lines(self, simulation):
        return simulation.event_log.lines()


class ChainArtifact(BaseArtifact):
    """
    The chain export: one block per line in the canonical block
    encoding followed by the block digest
    """

    def _create_lines(self, simulation):
        return simulation.ledger.export_lines()


class SummaryArtifact(BaseArtifact):
    """
    A human readable report rendered from a template
    """

    def __init__(self, filename, template_name):
        super().__init__(filename)
        self.template_name = template_name

    def _create_lines(self, simulation):
        text = render_to_string(self.template_name, simulation.summary())
        return text.strip('\n').split('\n')


ARTIFACTS = (
    CsvArtifact(
        'metrics.csv',
        ('tick', 'flow_id', 'class', 'demand_bps', 'allocated_bps', 'loss_rate'),
        'metrics_series',
    ),
    CsvArtifact(
        'occupancy.csv',
        ('tick', 'guaranteed_bps', 'best_effort_bps', 'total_bps'),
        'occupancy_series',
    ),
    EventsArtifact('events.csv'),
    ChainArtifact('chain.log'),
    SummaryArtifact('summary.txt', 'sdn_ledger/summary.txt'),
)


def write_artifacts(simulation, out_dir):
    """
    Writes every artifact of the finished simulation into the
    directory, creating it if needed, and returns the paths
    """
    os.makedirs(out_dir, exist_ok=True)
    return [artifact.write(out_dir, simulation) for artifact in ARTIFACTS]
