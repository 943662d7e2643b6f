"""Pure-python (numpy) fallback for the compiled butterfly kernel."""

import numpy as np

BACKEND = "python"


def butterfly_stage(w, p, sign):
    """See absparse._kernels.butterfly_stage; same contract, numpy rolls."""
    a, _, b, _ = w.shape
    out = np.zeros_like(w)
    for j in range(p):
        acc = out[:, j]
        for x in range(p):
            shift = (sign * j * x) % p
            if shift:
                acc += np.roll(w[:, x], shift, axis=-1)
            else:
                acc += w[:, x]
    return out
