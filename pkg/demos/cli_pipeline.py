"""Drive the whole pipeline through the command-line interface.

Same entry points as `frfselect <subcommand>`, called in-process so the
demo can show what each stage writes. Everything is controlled by one
YAML config; rerunning with the same config and seed reproduces every
output byte.
"""

import json
import tempfile
from pathlib import Path

from frfselect.cli import main

CONFIG = Path(__file__).parent / "configs" / "pipeline.yaml"


def run(argv: list[str], out: Path) -> None:
    print(f"\n$ frfselect {' '.join(argv)}")
    code = main(argv + ["--config", str(CONFIG), "--out", str(out)])
    print(f"exit code {code}; files now in {out.name}/:")
    for p in sorted(out.iterdir()):
        print(f"  {p.name} ({p.stat().st_size} bytes)")


def main_demo() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "run"
        run(["generate"], out)
        run(["compare"], out)
        run(["grid"], out)
        run(["transfer"], out)

        report = json.loads((out / "report.json").read_text())
        best = max(report["summary"], key=lambda r: r["f1"])
        print("\nbest row in report.json:")
        print(f"  {best}")
        transfer = json.loads((out / "transfer.json").read_text())
        print(f"transfer rows against unseen task "
              f"'{transfer['unseen_task']}': {len(transfer['rows'])}")


if __name__ == "__main__":
    main_demo()
