#!/usr/bin/env python
"""
Run a benchmark configuration twice and check that the written reports match.
Prints the correctness and cost tables of the first run.
"""
import argparse
import sys
from pathlib import Path
from typing import Dict

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.main import main as cli  # noqa: E402


def read_tree(directory: Path) -> Dict[str, bytes]:
    """
    Read every file of a report directory.

    Args:
        directory: The report directory

    Returns:
        File name to content
    """
    return {path.name: path.read_bytes() for path in sorted(directory.iterdir()) if path.is_file()}


def main():
    """Main function."""
    parser = argparse.ArgumentParser(description='Reproduce a benchmark run and compare the artifacts')
    parser.add_argument('--config', type=str, default='config/benchmarks/synthetic_bundles.json',
                        help='Benchmark configuration JSON')
    parser.add_argument('--output-dir', type=str, default='output/reproduce', help='Where both runs are written')
    parser.add_argument('--threads', type=int, default=1, help='Worker threads of the second run')

    args = parser.parse_args()
    first = Path(args.output_dir) / 'first'
    second = Path(args.output_dir) / 'second'

    for directory, threads in ((first, 1), (second, args.threads)):
        code = cli(['bench', '--config', args.config, '--threads', str(threads), '--output-dir', str(directory)])
        if code != 0:
            print(f"Benchmark failed with status {code}")
            return code

    if read_tree(first) != read_tree(second):
        print("Reports differ between runs")
        return 1

    for metric in ('correctness', 'cost'):
        print(f"{metric}:")
        print((first / f"{metric}.md").read_text())
    print("Reports are identical")
    return 0


if __name__ == '__main__':
    sys.exit(main())
