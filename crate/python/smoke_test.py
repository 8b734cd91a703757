"""Builds the `resil` extension module and checks a few known results through it.

Run from the repository root: python3 python/smoke_test.py
"""

import json
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def build_module(dest: pathlib.Path) -> None:
    subprocess.run(
        ["cargo", "build", "-p", "resil-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    lib = ROOT / "target" / "debug" / "libresil.so"
    shutil.copy(lib, dest / "resil.so")


def main() -> int:
    with tempfile.TemporaryDirectory() as tmp:
        build_module(pathlib.Path(tmp))
        sys.path.insert(0, tmp)
        import resil

        assert "FIG4" in resil.fixture_names()

        worst = json.loads(resil.evaluate("FIG4", "all-a", "reach:G:>2/5"))
        assert worst["transient"] == "2" and worst["frequency"] == "0", worst

        expected = json.loads(resil.evaluate("FIG4", "all-a", semantics="expected"))
        assert expected["transient"] == "6/5", expected

        synthesized = json.loads(resil.synthesize("FIG6L", k=4))
        assert synthesized["transient"] == "2", synthesized

        code, out, err = resil.run(["evaluate", "--model", "NODIST", "--strategy", "default"])
        assert code == 0 and json.loads(out)["transient"] == "unbreakable", (code, err)

        try:
            resil.evaluate("missing-model", "default")
        except ValueError as e:
            code, message = e.args
            assert code == 1 and json.loads(message)["error"] == "usage"
        else:
            raise AssertionError("unknown model accepted")

    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
