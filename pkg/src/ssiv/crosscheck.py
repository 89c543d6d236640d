"""Running an external NuSMV binary on emitted programs and reading its verdicts."""
from __future__ import annotations

import os
import re
import shutil
import subprocess
from pathlib import Path
from typing import List, Optional, Union

ENV_VAR = "SSIV_NUSMV"

_RESULT = re.compile(r"^-- specification (.*) is (true|false)\s*$")


def find_nusmv(path: Optional[str] = None) -> Optional[str]:
    """Executable from an explicit path, then $SSIV_NUSMV, then the PATH; None if absent."""
    for cand in (path, os.environ.get(ENV_VAR)):
        if cand:
            found = shutil.which(cand)
            if found:
                return found
            if Path(cand).is_file() and os.access(cand, os.X_OK):
                return str(cand)
            return None
    return shutil.which("NuSMV")


def parse_results(output: str) -> List[bool]:
    """Verdicts of the `-- specification ... is true|false` lines, in order."""
    out = []
    for line in output.splitlines():
        m = _RESULT.match(line.strip())
        if m:
            out.append(m.group(2) == "true")
    return out


def run_nusmv(exe: str, smv: Union[str, Path], timeout: float = 600.0) -> List[bool]:
    """Run `NuSMV <file>` and return one verdict per specification."""
    proc = subprocess.run([exe, str(smv)], capture_output=True, text=True, timeout=timeout)
    if proc.returncode != 0:
        raise RuntimeError(f"NuSMV exited with {proc.returncode}: {proc.stderr.strip()[:2000]}")
    return parse_results(proc.stdout)
