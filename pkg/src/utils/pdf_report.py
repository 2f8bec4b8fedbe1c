"""
PDF run reports for MicroNEAT
Training statistics and generalization sweep tables rendered with reportlab
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from ..storage import STATS_FILE, read_csv, read_json, MANIFEST_FILE

logger = logging.getLogger(__name__)

REPORTLAB_AVAILABLE = False
try:
    from reportlab.lib import colors
    from reportlab.lib.enums import TA_CENTER
    from reportlab.lib.pagesizes import A4
    from reportlab.lib.styles import getSampleStyleSheet, ParagraphStyle
    from reportlab.lib.units import mm
    from reportlab.platypus import (
        SimpleDocTemplate, Table, TableStyle, Paragraph, Spacer, HRFlowable, PageBreak
    )
    REPORTLAB_AVAILABLE = True
except ImportError:
    pass

REPORT_FILE = "report.pdf"
MAX_STATS_ROWS = 60  # longer runs are thinned to evenly spaced generations

COLORS = {
    'primary': '#1e3a8a',
    'success': '#22c55e',
    'warning': '#f59e0b',
    'text': '#1f2937',
    'text_light': '#6b7280',
    'border': '#e5e7eb',
    'stripe': '#f8fafc',
}

STATS_COLUMNS = [
    ('generation', "Gen"),
    ('best', "Best"),
    ('mean', "Mean"),
    ('best_so_far', "Best so far"),
    ('species', "Species"),
    ('threshold', "Threshold"),
    ('mean_connections', "Conns"),
    ('mean_hidden', "Hidden"),
    ('percent_of_max', "% max"),
]

SWEEP_COLUMNS = [
    ('zealots', "Zealots"),
    ('mean_remaining_ranged', "Ranged left"),
    ('mean_remaining_melee', "Melee left"),
    ('mean_fitness', "Fitness"),
]


def thin_rows(rows: Sequence[dict], limit: int = MAX_STATS_ROWS) -> List[dict]:
    """At most `limit` rows, always keeping the first and the last"""
    if len(rows) <= limit:
        return list(rows)
    step = (len(rows) - 1) / (limit - 1)
    return [rows[round(i * step)] for i in range(limit)]


def _cell(value: str) -> str:
    try:
        number = float(value)
    except (TypeError, ValueError):
        return str(value)
    return str(int(number)) if number.is_integer() else f"{number:.2f}"


class RunReportGenerator:
    def __init__(self, colors_config: Optional[Dict[str, str]] = None):
        if not REPORTLAB_AVAILABLE:
            raise ImportError("reportlab not installed. Run: pip install reportlab")
        self.colors = {**COLORS, **(colors_config or {})}
        self._setup_styles()

    def _hex_to_color(self, hex_color):
        if isinstance(hex_color, str) and hex_color.startswith('#'):
            return colors.HexColor(hex_color)
        return hex_color

    def _setup_styles(self):
        self.styles = getSampleStyleSheet()
        for name, config in [
            ('Title1', {'fontName': 'Helvetica-Bold', 'fontSize': 16, 'textColor': self._hex_to_color(self.colors['primary']), 'spaceAfter': 4}),
            ('SectionHeader', {'fontName': 'Helvetica-Bold', 'fontSize': 12, 'textColor': self._hex_to_color(self.colors['primary']), 'spaceAfter': 6}),
            ('NormalText', {'fontName': 'Helvetica', 'fontSize': 10, 'textColor': self._hex_to_color(self.colors['text'])}),
            ('SmallText', {'fontName': 'Helvetica', 'fontSize': 8, 'textColor': self._hex_to_color(self.colors['text_light'])}),
            ('Footer', {'fontName': 'Helvetica-Oblique', 'fontSize': 8, 'textColor': self._hex_to_color(self.colors['text_light']), 'alignment': TA_CENTER}),
        ]:
            self.styles.add(ParagraphStyle(name=name, **config))

    def _table(self, header: List[str], body: List[List[str]], col_width: float):
        table = Table([header] + body, colWidths=[col_width] * len(header), repeatRows=1)
        table.setStyle(TableStyle([
            ('BACKGROUND', (0, 0), (-1, 0), self._hex_to_color(self.colors['primary'])),
            ('TEXTCOLOR', (0, 0), (-1, 0), colors.white),
            ('FONTNAME', (0, 0), (-1, 0), 'Helvetica-Bold'),
            ('FONTSIZE', (0, 0), (-1, -1), 8),
            ('ALIGN', (0, 0), (-1, -1), 'CENTER'),
            ('GRID', (0, 0), (-1, -1), 0.5, self._hex_to_color(self.colors['border'])),
            ('ROWBACKGROUNDS', (0, 1), (-1, -1), [colors.white, self._hex_to_color(self.colors['stripe'])]),
            ('TOPPADDING', (0, 0), (-1, -1), 3),
            ('BOTTOMPADDING', (0, 0), (-1, -1), 3),
        ]))
        return table

    def _build_header(self, manifest: dict) -> list:
        info = (f"Command: <b>{manifest.get('command', '?')}</b> &nbsp; "
                f"Seed: <b>{manifest.get('seed')}</b> &nbsp; "
                f"Status: <b>{manifest.get('status', '?')}</b><br/>"
                f"Config: {manifest.get('config_path') or 'built-in preset'} "
                f"({manifest.get('config_hash', '')[:12]})<br/>"
                f"Started {manifest.get('started', '')} &nbsp; Finished {manifest.get('finished', '')}")
        return [
            Paragraph("MicroNEAT run report", self.styles['Title1']),
            Paragraph(info, self.styles['SmallText']),
            Spacer(1, 4 * mm),
            HRFlowable(width="100%", thickness=2, color=self._hex_to_color(self.colors['primary'])),
            Spacer(1, 4 * mm),
        ]

    def _build_stats(self, stats: Sequence[dict]) -> list:
        elements = [Paragraph("Training statistics", self.styles['SectionHeader'])]
        if not stats:
            elements.append(Paragraph("No generations recorded.", self.styles['NormalText']))
            return elements
        last = stats[-1]
        summary = (f"{len(stats)} generations, best fitness <b>{_cell(last['best_so_far'])}</b> "
                   f"({_cell(last['percent_of_max'])}% of maximum) "
                   f"first reached in generation {last['best_found_generation']}")
        elements.append(Paragraph(summary, self.styles['NormalText']))
        elements.append(Spacer(1, 3 * mm))
        body = [[_cell(row[key]) for key, _ in STATS_COLUMNS] for row in thin_rows(stats)]
        elements.append(self._table([title for _, title in STATS_COLUMNS], body, 20 * mm))
        elements.append(Spacer(1, 6 * mm))
        return elements

    def _build_sweep(self, sweep: Sequence[dict]) -> list:
        elements = [PageBreak(), Paragraph("Generalization sweep", self.styles['SectionHeader'])]
        for formation in dict.fromkeys(row['formation'] for row in sweep):
            rows = [row for row in sweep if row['formation'] == formation]
            elements.append(Paragraph(f"<b>{formation}</b> ({rows[0]['repeats']} repeats per count)",
                                      self.styles['NormalText']))
            body = [[_cell(row[key]) for key, _ in SWEEP_COLUMNS] for row in rows]
            elements.append(self._table([title for _, title in SWEEP_COLUMNS], body, 30 * mm))
            elements.append(Spacer(1, 5 * mm))
        return elements

    def generate(self, run_dir, sweep_csv=None, output_path=None) -> str:
        run_dir = Path(run_dir)
        manifest = read_json(run_dir / MANIFEST_FILE) if (run_dir / MANIFEST_FILE).exists() else {}
        stats = read_csv(run_dir / STATS_FILE) if (run_dir / STATS_FILE).exists() else []
        sweep = read_csv(sweep_csv) if sweep_csv else []
        output_path = str(output_path or run_dir / REPORT_FILE)

        doc = SimpleDocTemplate(output_path, pagesize=A4, topMargin=15 * mm, bottomMargin=15 * mm,
                                leftMargin=15 * mm, rightMargin=15 * mm)
        elements = []
        elements.extend(self._build_header(manifest))
        elements.extend(self._build_stats(stats))
        if sweep:
            elements.extend(self._build_sweep(sweep))
        elements.append(Paragraph("Generated by MicroNEAT", self.styles['Footer']))
        doc.build(elements)
        logger.debug("report written to %s", output_path)
        return output_path


def generate_run_report(run_dir, sweep_csv=None, output_path=None, **kwargs) -> str:
    """Quick function to render a run directory into a PDF"""
    generator = RunReportGenerator(**kwargs)
    return generator.generate(run_dir, sweep_csv, output_path)
