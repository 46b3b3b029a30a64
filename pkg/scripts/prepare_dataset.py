#!/usr/bin/env python3
"""
CLI script for turning raw velocity records into training ensembles using
the DatasetProcessor.
"""

import argparse
import logging
import sys
from pathlib import Path

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Add the parent directory to the path so we can import from app
sys.path.insert(0, str(Path(__file__).parent.parent))

from app.data_processing.dataset_processor import INVALID_ARGUMENT, DatasetProcessor  # noqa: E402
from app.models.field_models import FieldMeta  # noqa: E402

# Configure logging
logging.basicConfig(
    level=logging.INFO, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)


def main():
    """Main CLI function."""
    parser = argparse.ArgumentParser(description="Prepare training ensembles from raw records")
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    record_parser = subparsers.add_parser("process-record", help="Segment a single record")
    record_parser.add_argument("file_path", help="Raw record (.f32, .txt, .npy)")
    record_parser.add_argument("--out", help="Output stem (default: data/processed/<name>)")

    dir_parser = subparsers.add_parser("process-dir", help="Segment every record in a directory")
    dir_parser.add_argument("directory_path", help="Directory containing raw records")
    dir_parser.add_argument("--recursive", action="store_true", help="Process subdirectories recursively")

    for sub in (record_parser, dir_parser):
        sub.add_argument("--n", type=int, default=32768, help="Realization length (default: 32768)")
        sub.add_argument("--stride", type=int, help="Offset between realizations (default: n)")
        sub.add_argument("--no-standardize", action="store_true", help="Keep the raw amplitude")
        sub.add_argument("--integral-scale", type=float, help="L in samples, written to the sidecar")
        sub.add_argument("--kolmogorov-scale", type=float, help="eta in samples, written to the sidecar")

    status_parser = subparsers.add_parser("status", help="Get processing status")
    status_parser.add_argument("--file-path", help="Specific record to check (optional)")

    parser.add_argument("--data-dir", default="data", help="Base data directory (default: data)")

    args = parser.parse_args()

    if not args.command:
        parser.print_help()
        return

    processor = DatasetProcessor(data_dir=args.data_dir)

    try:
        if args.command == "status":
            print_result(processor.get_processing_status(args.file_path))
            return

        meta = FieldMeta(integral_scale=args.integral_scale, kolmogorov_scale=args.kolmogorov_scale)
        if args.command == "process-record":
            result = processor.process_record(
                args.file_path, args.n, args.stride, not args.no_standardize, args.out, meta=meta
            )
        else:
            result = processor.process_directory(
                args.directory_path,
                args.n,
                args.stride,
                not args.no_standardize,
                meta=meta,
                recursive=args.recursive,
            )
        print_result(result)
        if not result.get("success", False):
            sys.exit(2 if result.get("error_kind") == INVALID_ARGUMENT else 3)

    except Exception as e:
        logger.error(f"Error executing command: {e}")
        sys.exit(1)


def print_result(result):
    """Print a result dictionary in a formatted way."""
    if result.get("success", True):
        print("Success")
        for key, value in result.items():
            if key not in ("success", "results"):
                print(f"  {key}: {value}")
    else:
        print("Error")
        print(f"  Error: {result.get('error', 'Unknown error')}")
        for failed in result.get("results", []):
            if not failed["success"]:
                print(f"  {failed['error']}")


if __name__ == "__main__":
    main()
