"""
Report bundle: report.md, specificity_<approach>.csv (square false-positive counts) and sensitivity.csv

sensitivity.csv columns: approach, median_es, count_es_ge_064, count_p_le_005
"""

import logging

import pandas as pd

from pathlib import Path
from typing import Dict, List, Optional

from helper.evaluation import CountMatrix, SensitivityRow
from helper.spectral import Spectrum, dominant_periods
from helper.stats import classify_effect

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.6f'


def _md_table(header, rows) -> List[str]:
    lines = ['| ' + ' | '.join(header) + ' |', '|' + '---|' * len(header)]
    lines += ['| ' + ' | '.join(str(c) for c in row) + ' |' for row in rows]
    return lines


def sensitivity_frame(rows: List[SensitivityRow]) -> pd.DataFrame:
    return pd.DataFrame(
        [(r.approach.value, r.median_es, r.count_es_ge_064, r.count_p_le_005) for r in rows],
        columns=['approach', 'median_es', 'count_es_ge_064', 'count_p_le_005'],
    )


def count_frame(matrix: CountMatrix) -> pd.DataFrame:
    frame = pd.DataFrame(matrix.counts, index=list(matrix.labels), columns=list(matrix.labels))
    frame.index.name = 'label'
    return frame


def render_report(out_dir,
                  specificity: Dict[str, CountMatrix],
                  sensitivity: List[SensitivityRow],
                  spectra: Optional[Dict[str, Spectrum]] = None,
                  state_summary: Optional[pd.DataFrame] = None,
                  title: str = 'Validation report') -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = [f"# {title}", '']

    lines += ['## Specificity (false positives on a single-variant corpus)', '']
    if not specificity:
        lines += ['No data.', '']
    else:
        lines += _md_table(['approach', 'false positives', 'pairs flagged at least once'],
                           [(name, m.total, int((m.counts > 0).sum() // 2)) for name, m in specificity.items()])
        lines.append('')
        for name, matrix in specificity.items():
            frame = count_frame(matrix)
            frame.to_csv(out_dir / f"specificity_{name}.csv", float_format=FLOAT_FORMAT, lineterminator='\n')
            lines += [f"### {name}", '']
            lines += _md_table([''] + list(matrix.labels),
                               [[label] + [int(c) for c in row] for label, row in zip(matrix.labels, matrix.counts)])
            lines.append('')

    lines += ['## Sensitivity (each variant against the baseline)', '']
    if not sensitivity:
        lines += ['No data.', '']
    else:
        sensitivity_frame(sensitivity).to_csv(out_dir / 'sensitivity.csv', index=False,
                                              float_format=FLOAT_FORMAT, lineterminator='\n')
        lines += _md_table(['approach', 'median(es)', 'es>=0.64', 'p<=0.05'],
                           [(r.approach.value, f"{r.median_es:.3f}", r.count_es_ge_064, r.count_p_le_005)
                            for r in sensitivity])
        lines.append('')
        for row in sensitivity:
            lines += [f"### {row.approach.value}", '']
            lines += _md_table(['variant', 'A12', 'p', 'magnitude'],
                               [(v, f"{es:.3f}", f"{p:.4g}", classify_effect(es).value)
                                for v, es, p in row.per_variant])
            lines.append('')

    if spectra is not None:
        lines += ['## Spectral analysis', '']
        if not spectra:
            lines += ['No data.', '']
        for name, spectrum in spectra.items():
            top = dominant_periods(spectrum, k=min(3, len(spectrum.power)))
            lines += [f"### {name}", '']
            lines += _md_table(['period (samples)', 'period (minutes)', 'power share'],
                               [(f"{d.period_samples:.1f}",
                                 '' if d.period_seconds is None else f"{d.period_seconds / 60:.1f}",
                                 f"{d.power_share:.3f}") for d in top])
            lines.append('')

    if state_summary is not None:
        lines += ['## System state per variant', '']
        header = [state_summary.index.name or ''] + list(state_summary.columns)
        lines += _md_table(header, [[idx] + [f"{v:.2f}" for v in row]
                                    for idx, row in zip(state_summary.index, state_summary.to_numpy())])
        lines.append('')

    report = out_dir / 'report.md'
    report.write_text('\n'.join(lines))
    logger.info(f"Report written to {report}")
    return report
