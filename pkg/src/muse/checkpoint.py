"""Parameter checkpoint files.

Text container: magic line, then for each parameter one header line
`<name> <ndim> <dim...> <trainable>` followed by one line of
space-separated C99 hex floats (exact round-trip, byte-stable).
"""

import numpy as np

from .errors import ParseError

MAGIC = "MUSE-CKPT-1"


def save_checkpoint(path, params):
    lines = [MAGIC]
    for p in params:
        dims = " ".join(str(d) for d in p.data.shape)
        lines.append(f"{p.name} {p.data.ndim} {dims} {int(p.trainable)}")
        lines.append(" ".join(v.hex() for v in p.data.reshape(-1).tolist()))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load_checkpoint(path):
    """Returns {name: (ndarray, trainable)}."""
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines or lines[0] != MAGIC:
        raise ParseError(f"{path}: missing {MAGIC} header")
    out = {}
    i = 1
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        fields = lines[i].split()
        if len(fields) < 3:
            raise ParseError(f"{path}: bad parameter header at line {i + 1}")
        name = fields[0]
        ndim = int(fields[1])
        shape = tuple(int(d) for d in fields[2:2 + ndim])
        trainable = bool(int(fields[2 + ndim]))
        values = [float.fromhex(tok) for tok in lines[i + 1].split()]
        arr = np.array(values, dtype=np.float64).reshape(shape)
        out[name] = (arr, trainable)
        i += 2
    return out


def restore_into(path, params):
    """Load a checkpoint into an existing parameter list, matching by name."""
    saved = load_checkpoint(path)
    for p in params:
        if p.name not in saved:
            raise ParseError(f"checkpoint missing parameter {p.name!r}")
        arr, _ = saved[p.name]
        if arr.shape != p.data.shape:
            raise ParseError(
                f"checkpoint shape {arr.shape} != model shape {p.data.shape} "
                f"for {p.name!r}")
        p.data = arr.copy()
