import abc
import dataclasses


@dataclasses.dataclass
class Table:
    """Rows produced by one command.

    Attributes
    ----------
    name : str
        What the rows describe, e.g. 'geodesic'.
    columns : list of str
        Header row.
    rows : list of list
        Data rows, one value per column.
    payload : dict
        Structured results that do not fit the rows (reports, verdicts).
    """

    name: str
    columns: list
    rows: list
    payload: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(f"row of {len(row)} values under {len(self.columns)} columns in '{self.name}'")


class Report(abc.ABC):
    """Interface for the output formats of the command line.
    """

    @abc.abstractmethod
    def render(self, table: Table, config: dict) -> str:
        """Render a table as the text of an output file.

        Parameters
        ----------
        table : Table
            The rows and payload of a command.
        config : dict
            The run configuration, embedded where the format allows it.

        Returns
        -------
        str
            The file content. Equal inputs give byte-identical output.
        """

        pass
