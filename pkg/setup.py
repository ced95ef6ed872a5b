#!/usr/bin/env python
"""
Setup script for the effective hyperbolicity toolkit
Checks the pinned stack, prepares .env and the data directories, writes the
sample system descriptors and runs a one-second smoke analysis.
"""

import subprocess
import sys
from importlib import metadata
from pathlib import Path


def pinned_requirements(path='requirements.txt'):
    """(distribution, version) pairs from the pinned requirements file"""
    pins = []
    for line in Path(path).read_text().splitlines():
        line = line.split('#', 1)[0].strip()
        if '==' in line:
            name, version = line.split('==', 1)
            pins.append((name.strip(), version.strip()))
    return pins


def check_stack():
    """Report installed versions against the pins; returns the missing distributions"""
    if sys.version_info < (3, 10):
        print("❌ Python 3.10+ required")
        sys.exit(1)
    print(f"✓ Python {sys.version_info.major}.{sys.version_info.minor}")

    missing = []
    for name, pinned in pinned_requirements():
        try:
            installed = metadata.version(name)
        except metadata.PackageNotFoundError:
            print(f"❌ {name} not installed (pinned {pinned})")
            missing.append(f"{name}=={pinned}")
            continue
        marker = "✓" if installed == pinned else "⚠️"
        print(f"{marker} {name} {installed}" + ("" if installed == pinned else f" (pinned {pinned})"))
    return missing


def install(missing):
    print(f"\n📦 Installing {len(missing)} missing packages...")
    result = subprocess.run([sys.executable, "-m", "pip", "install", *missing])
    if result.returncode != 0:
        print("❌ pip failed; install the pinned requirements by hand")
        sys.exit(1)


def merge_env_file():
    """Create .env from .env.example, or append keys the existing .env lacks"""
    template = dict(line.split('=', 1) for line in Path('.env.example').read_text().splitlines()
                    if '=' in line)
    env = Path('.env')
    present = {line.split('=', 1)[0] for line in env.read_text().splitlines()
               if '=' in line} if env.exists() else set()
    added = [f"{key}={value}" for key, value in template.items() if key not in present]
    if added:
        existing = env.read_text() if env.exists() else ''
        separator = '' if not existing or existing.endswith('\n') else '\n'
        env.write_text(existing + separator + '\n'.join(added) + '\n')
    print(f"✓ .env has {len(template)} settings ({len(added)} added)")


def prepare_data():
    import config
    from src.catalog.descriptor import SAMPLE_DESCRIPTORS

    for directory in (config.SYSTEMS_DIR, config.OUTPUT_DIR):
        Path(directory).mkdir(parents=True, exist_ok=True)
    for desc in SAMPLE_DESCRIPTORS:
        desc.save(Path(config.SYSTEMS_DIR) / f"{desc.name}.json")
    print(f"✓ {len(SAMPLE_DESCRIPTORS)} system descriptors in {config.SYSTEMS_DIR}")


def smoke_analysis():
    """diag_linear(2, 1/2) must report chi^e = log 2"""
    import math

    from src.catalog.builtins import builtin
    from src.diagnostics.effective import effective_report, effective_series
    from src.germs.linear_data import extract_linear_data

    seq, split = builtin('diag_linear', {'length': 20})
    lin = extract_linear_data(seq, split)
    report = effective_report(lin, effective_series(lin, 1.0, 1.0))
    if abs(report.chi_e - math.log(2.0)) > 1e-12:
        print(f"❌ Smoke analysis gave chi^e = {report.chi_e:.6f}, expected log 2")
        sys.exit(1)
    print(f"✓ Smoke analysis: chi^e = {report.chi_e:.6f}")


def main():
    print("=" * 60)
    print("Effective Hyperbolicity Toolkit - Setup")
    print("=" * 60)

    missing = check_stack()
    if missing:
        if input("\nInstall the missing packages? (y/n): ").lower() != 'y':
            print("❌ Setup needs the pinned stack")
            sys.exit(1)
        install(missing)

    merge_env_file()
    prepare_data()
    smoke_analysis()

    print("\nNext: python app.py analyze --config run.json, then pytest tests/")


if __name__ == "__main__":
    main()
