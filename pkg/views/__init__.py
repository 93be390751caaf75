# Views package for loopflux
from .report_view import ReportWriter, render_csv, render_json

__all__ = [
    'ReportWriter',
    'render_csv',
    'render_json',
]
