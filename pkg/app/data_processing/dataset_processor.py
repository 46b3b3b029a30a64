"""
Dataset ingestion for the turbulent field synthesis system.
Reads long velocity records (.f32, .txt, .npy), cuts them into ensembles
and tracks every run in processing_metadata.json.
"""

import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import numpy as np

from app.core.errors import InvalidArgumentError
from app.core.field_core import segment, standardize, write_ensemble
from app.models.field_models import FieldMeta

logger = logging.getLogger(__name__)

# Failure kinds reported in result dictionaries.
INVALID_ARGUMENT = "invalid_argument"
DATA_ERROR = "data"


def _read_f32(path: Path) -> np.ndarray:
    return np.fromfile(path, dtype="<f4")


def _read_txt(path: Path) -> np.ndarray:
    return np.loadtxt(path, dtype=np.float64).ravel()


def _read_npy(path: Path) -> np.ndarray:
    return np.load(path, allow_pickle=False).ravel()


def _batch_error_kind(failures) -> Optional[str]:
    """None when nothing failed; invalid_argument only when every failure was one."""
    if not failures:
        return None
    if all(r.get("error_kind") == INVALID_ARGUMENT for r in failures):
        return INVALID_ARGUMENT
    return DATA_ERROR


class DatasetProcessor:
    """
    Turns raw records into training ensembles under data/processed and
    keeps a per-file processing log.
    """

    SUPPORTED_EXTENSIONS: Dict[str, Callable[[Path], np.ndarray]] = {
        ".f32": _read_f32,
        ".txt": _read_txt,
        ".npy": _read_npy,
    }

    def __init__(self, data_dir: str = "data"):
        """
        Initialize the dataset processor.

        Args:
            data_dir: Base directory holding raw/ and processed/
        """
        self.data_dir = Path(data_dir)
        self._create_directories()

        self.metadata_file = self.data_dir / "processing_metadata.json"
        self.processing_metadata = self._load_metadata()

        logger.info(f"DatasetProcessor initialized with data_dir: {self.data_dir}")

    def _create_directories(self) -> None:
        for directory in (self.data_dir, self.data_dir / "raw", self.data_dir / "processed"):
            directory.mkdir(parents=True, exist_ok=True)

    def _load_metadata(self) -> Dict[str, Any]:
        """Load processing metadata from file."""
        if self.metadata_file.exists():
            try:
                with open(self.metadata_file, "r", encoding="utf-8") as f:
                    return json.load(f)
            except Exception as e:
                logger.error(f"Error loading metadata: {e}")
                return {}
        return {}

    def _save_metadata(self) -> None:
        try:
            with open(self.metadata_file, "w", encoding="utf-8") as f:
                json.dump(self.processing_metadata, f, indent=2, ensure_ascii=False)
        except Exception as e:
            logger.error(f"Error saving metadata: {e}")

    def load_record(self, file_path: Path) -> np.ndarray:
        """Read a raw record as a 1D float64 array."""
        reader = self.SUPPORTED_EXTENSIONS.get(file_path.suffix.lower())
        if reader is None:
            raise ValueError(f"Unsupported record type: {file_path.suffix}")
        return np.asarray(reader(file_path), dtype=np.float64)

    def process_record(
        self,
        file_path: str,
        n: int,
        stride: Optional[int] = None,
        standardize_output: bool = True,
        output_stem: Optional[str] = None,
        meta: Optional[FieldMeta] = None,
    ) -> Dict[str, Any]:
        """
        Segment one record into an ensemble file pair.

        Args:
            file_path: Raw record
            n: Realization length
            stride: Offset between realizations, n (no overlap) when omitted
            standardize_output: Map the ensemble to zero mean and unit variance
            output_stem: Output file stem, data/processed/<record name> by default
            meta: Physical metadata written to the sidecar

        Returns:
            Dictionary containing processing results
        """
        file_path = Path(file_path)
        if not file_path.exists():
            error_msg = f"File not found: {file_path}"
            logger.error(error_msg)
            return {"success": False, "error": error_msg, "error_kind": DATA_ERROR}

        stride = stride or n
        try:
            logger.info(f"Loading record: {file_path}")
            series = self.load_record(file_path)

            ens = segment(series, n, stride, meta=meta)
            if standardize_output:
                ens = standardize(ens)

            stem = Path(output_stem) if output_stem else self.data_dir / "processed" / file_path.stem
            data_path, meta_path = write_ensemble(ens, stem)

            self.processing_metadata[str(file_path)] = {
                "file_name": file_path.name,
                "file_size": file_path.stat().st_size,
                "processed_at": datetime.now().isoformat(),
                "output": str(data_path),
                "realizations": ens.realizations,
                "samples": ens.samples,
                "stride": stride,
                "standardized": standardize_output,
                "status": "success",
            }
            self._save_metadata()

            logger.info(f"Successfully processed record: {file_path} -> {ens.realizations}x{n}")
            return {
                "success": True,
                "file_path": str(file_path),
                "output": str(data_path),
                "sidecar": str(meta_path),
                "realizations": ens.realizations,
                "samples": ens.samples,
            }

        except Exception as e:
            error_msg = f"Error processing record {file_path}: {str(e)}"
            logger.error(error_msg)

            self.processing_metadata[str(file_path)] = {
                "file_name": file_path.name,
                "processed_at": datetime.now().isoformat(),
                "status": "error",
                "error": str(e),
            }
            self._save_metadata()

            kind = INVALID_ARGUMENT if isinstance(e, InvalidArgumentError) else DATA_ERROR
            return {"success": False, "error": error_msg, "error_kind": kind}

    def process_directory(
        self,
        directory_path: str,
        n: int,
        stride: Optional[int] = None,
        standardize_output: bool = True,
        meta: Optional[FieldMeta] = None,
        recursive: bool = True,
    ) -> Dict[str, Any]:
        """
        Process all supported records in a directory.

        Args:
            directory_path: Directory containing raw records
            n: Realization length
            stride: Offset between realizations
            recursive: Whether to process subdirectories

        Returns:
            Dictionary containing batch processing results
        """
        directory_path = Path(directory_path)
        if not directory_path.exists() or not directory_path.is_dir():
            error_msg = f"Directory not found: {directory_path}"
            logger.error(error_msg)
            return {"success": False, "error": error_msg, "error_kind": DATA_ERROR}

        pattern = "**/*" if recursive else "*"
        records = sorted(
            f
            for f in directory_path.glob(pattern)
            if f.is_file() and f.suffix.lower() in self.SUPPORTED_EXTENSIONS
        )
        if not records:
            error_msg = f"No supported records found in: {directory_path}"
            logger.warning(error_msg)
            return {"success": False, "error": error_msg, "error_kind": DATA_ERROR}

        logger.info(f"Found {len(records)} records to process")
        results = [
            self.process_record(str(record), n, stride, standardize_output, meta=meta)
            for record in records
        ]
        successful_count = sum(1 for r in results if r["success"])
        failed_count = len(results) - successful_count

        logger.info(
            f"Batch processing completed: {successful_count} successful, {failed_count} failed"
        )
        failures = [r for r in results if not r["success"]]
        return {
            "success": failed_count == 0,
            "error_kind": _batch_error_kind(failures),
            "directory_path": str(directory_path),
            "total_files": len(records),
            "successful_count": successful_count,
            "failed_count": failed_count,
            "results": results,
        }

    def get_processing_status(self, file_path: Optional[str] = None) -> Dict[str, Any]:
        """
        Get processing status for records.

        Args:
            file_path: Specific record to check, or None for all records

        Returns:
            Dictionary containing processing status information
        """
        if file_path:
            return self.processing_metadata.get(str(Path(file_path)), {"status": "not_processed"})

        statuses = [m.get("status") for m in self.processing_metadata.values()]
        return {
            "total_files": len(self.processing_metadata),
            "successful": statuses.count("success"),
            "failed": statuses.count("error"),
            "files": self.processing_metadata,
        }
