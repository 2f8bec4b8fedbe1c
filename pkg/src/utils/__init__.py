"""
Utility modules for MicroNEAT
"""
from .pdf_report import (
    RunReportGenerator, generate_run_report, REPORTLAB_AVAILABLE
)

__all__ = ['RunReportGenerator', 'generate_run_report', 'REPORTLAB_AVAILABLE']
