from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

import pandas as pd
from loguru import logger

from denseorbit.utils.serialization import dumps

ORBIT_COLUMNS = ["word_length", "word", "theta1", "theta2", "distance_to_target"]

SURVEY_COLUMNS = ["epsilon", "max_word_length", "runs", "ok", "success_rate", "mean_distance"]


class TraceLogger:
    """Writes pipeline traces, orbit tables and survey rows as CSV files"""

    def __init__(self, log_dir: Union[str, Path] = "logs"):
        self.log_dir = Path(log_dir)
        self.log_dir.mkdir(parents=True, exist_ok=True)

        self.survey_file = self.log_dir / "survey.csv"

    def write_trace(self, trace: Any, path: Union[str, Path]) -> Path:
        """
        Write a pipeline trace as CSV, with the JSON record alongside

        Args:
            trace: PipelineTrace from the reduction
            path: CSV path; the JSON file shares its stem

        Returns:
            Path of the JSON file
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        trace.to_frame().to_csv(path.with_suffix(".csv"), index=False)
        json_path = path.with_suffix(".json")
        json_path.write_text(dumps(trace.to_dict()))
        logger.info(f"Wrote pipeline trace to {path.with_suffix('.csv')} and {json_path}")
        return json_path

    def _create_survey_file(self):
        df = pd.DataFrame(columns=SURVEY_COLUMNS)
        df.to_csv(self.survey_file, index=False)
        logger.info(f"Created survey log file at {self.survey_file}")

    def log_survey(self, row: Dict[str, Any]):
        """Append one survey row"""
        try:
            if not self.survey_file.exists():
                self._create_survey_file()
            survey_df = pd.read_csv(self.survey_file)
            new_row = pd.DataFrame([row], columns=SURVEY_COLUMNS)
            updated_df = new_row if survey_df.empty else pd.concat([survey_df, new_row], ignore_index=True)
            updated_df.to_csv(self.survey_file, index=False)
            logger.debug(f"Logged survey row: ε={row['epsilon']} n={row['max_word_length']} rate={row['success_rate']:.2f}")
        except Exception as e:
            logger.error(f"Error logging survey row: {str(e)}")

    def get_survey_history(self) -> pd.DataFrame:
        try:
            return pd.read_csv(self.survey_file)
        except Exception as e:
            logger.error(f"Error reading survey history: {str(e)}")
            return pd.DataFrame(columns=SURVEY_COLUMNS)


def orbit_frame(rows: Iterable[Dict[str, Any]]) -> pd.DataFrame:
    return pd.DataFrame(list(rows), columns=ORBIT_COLUMNS)


def survey_frame(rows: Iterable[Dict[str, Any]]) -> pd.DataFrame:
    return pd.DataFrame(list(rows), columns=SURVEY_COLUMNS)


def frame_to_csv(df: pd.DataFrame, path: Optional[Union[str, Path]] = None) -> str:
    """CSV text of a table; also written to `path` when given"""
    text = df.to_csv(index=False, float_format="%.12f")
    if path is not None:
        Path(path).write_text(text)
    return text
