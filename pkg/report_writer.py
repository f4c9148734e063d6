import json
import logging
import math
import os
from fractions import Fraction
from typing import Any, Dict, List

import numpy as np
import pandas as pd

from config import RunConfig
from suites import CheckResult

REPORT_VERSION = "1.0"
SIGNIFICANT_DIGITS = 12
RECORD_COLUMNS = ["name", "anchor", "inputs", "value", "tolerance", "pass", "runtime_ms"]


def round_significant(value: float, digits: int = SIGNIFICANT_DIGITS) -> float:
    if value == 0 or not math.isfinite(value):
        return value
    return float(f"{value:.{digits - 1}e}")


def normalize(value: Any) -> Any:
    """JSON-safe copy with floats rounded to 12 significant digits"""
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = round_significant(float(value))
        # json has no literal for these
        return value if math.isfinite(value) else str(value)
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, np.ndarray):
        return [normalize(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): normalize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [normalize(v) for v in value]
    if value is None or isinstance(value, str):
        return value
    return str(value)


def _cell(value: Any) -> Any:
    """Flatten a record entry into a spreadsheet cell"""
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True)
    return value


class ReportWriter:
    """Writes check results as report.json plus optional CSV and XLSX tables"""

    def __init__(self, config: RunConfig):
        self.config = config
        self.logger = logging.getLogger(__name__)

    def records(self, results: List[CheckResult]) -> List[Dict[str, Any]]:
        return [normalize(result.to_record(self.config.timings)) for result in results]

    def render_json(self, results: List[CheckResult]) -> str:
        report = {
            "version": REPORT_VERSION,
            "command": self.config.command,
            "config_echo": normalize(self.config.config_echo()),
            "checks": self.records(results),
        }
        return json.dumps(report, sort_keys=True, indent=2) + "\n"

    def to_frame(self, results: List[CheckResult]) -> pd.DataFrame:
        rows = [{key: _cell(record[key]) for key in RECORD_COLUMNS} for record in self.records(results)]
        return pd.DataFrame(rows, columns=RECORD_COLUMNS)

    def write_all(self, results: List[CheckResult]) -> List[str]:
        """Write every requested format; returns the created paths"""
        os.makedirs(self.config.out_dir, exist_ok=True)
        files_created = [self.write_json(results)]
        if self.config.csv:
            files_created.append(self.write_csv(results))
        if self.config.xlsx:
            files_created.append(self.write_xlsx(results))
        for path in files_created:
            self.logger.info(f"Created file: {path}")
        return files_created

    def write_json(self, results: List[CheckResult]) -> str:
        full_path = os.path.join(self.config.out_dir, "report.json")
        with open(full_path, "w", encoding="utf-8", newline="\n") as f:
            f.write(self.render_json(results))
        return full_path

    def write_csv(self, results: List[CheckResult]) -> str:
        full_path = os.path.join(self.config.out_dir, "report.csv")
        self.to_frame(results).to_csv(full_path, index=False)
        return full_path

    def write_xlsx(self, results: List[CheckResult]) -> str:
        """Formatted table with frozen header and pass/fail highlighting"""
        full_path = os.path.join(self.config.out_dir, "report.xlsx")
        frame = self.to_frame(results)
        # cells hold text, numbers or blanks
        frame["value"] = frame["value"].map(lambda v: v if isinstance(v, (int, float)) and not isinstance(v, bool) else str(v))
        try:
            with pd.ExcelWriter(full_path, engine="xlsxwriter") as writer:
                frame.to_excel(writer, sheet_name="Checks", index=False)

                workbook = writer.book
                worksheet = writer.sheets["Checks"]

                pass_fmt = workbook.add_format({"bg_color": "#C6EFCE", "font_color": "#006100"})
                fail_fmt = workbook.add_format({"bg_color": "#FFC7CE", "font_color": "#9C0006"})
                sci_fmt = workbook.add_format({"num_format": "0.000E+00", "align": "right"})
                text_fmt = workbook.add_format({"align": "left"})

                worksheet.set_column("A:A", 48, text_fmt)
                worksheet.set_column("B:B", 30, text_fmt)
                worksheet.set_column("C:D", 40, text_fmt)
                worksheet.set_column("E:E", 12, sci_fmt)
                worksheet.set_column("F:F", 8)
                worksheet.set_column("G:G", 12)

                end_row = len(frame)
                worksheet.add_table(
                    0,
                    0,
                    end_row,
                    len(RECORD_COLUMNS) - 1,
                    {
                        "columns": [{"header": column} for column in RECORD_COLUMNS],
                        "style": "Table Style Light 11",
                        "autofilter": True,
                    },
                )
                if end_row:
                    pass_range = f"F2:F{end_row + 1}"
                    worksheet.conditional_format(pass_range, {"type": "cell", "criteria": "==", "value": "TRUE", "format": pass_fmt})
                    worksheet.conditional_format(pass_range, {"type": "cell", "criteria": "==", "value": "FALSE", "format": fail_fmt})

                worksheet.freeze_panes(1, 0)
                worksheet.set_zoom(90)

        except Exception:
            if os.path.exists(full_path):
                os.remove(full_path)
            raise

        return full_path
