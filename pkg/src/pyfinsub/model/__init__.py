from .report import Report, Table
from .csv_report import CSVReport
from .json_report import JSONReport

FORMATS = {'csv': CSVReport, 'json': JSONReport}
