import numpy as np
from hypothesis import strategies as st

from ftangle.state import make_params

finite = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)


@st.composite
def family_states(draw):
    """Normalized (w, z) from 12 bounded reals, skipping the all-zero draw."""
    g = np.array(draw(st.lists(finite, min_size=12, max_size=12)))
    if np.sum(g * g) < 1e-6:
        g[0] = 1.0
    return make_params(g[0:3] + 1j * g[3:6], g[6:9] + 1j * g[9:12], normalize=True)


def random_hermitian(rng, n, size):
    a = rng.standard_normal((n, size, size)) + 1j * rng.standard_normal((n, size, size))
    return a + np.conj(np.swapaxes(a, -1, -2))


def random_psd(rng, n, size=4, rank=None):
    rank = size if rank is None else rank
    a = rng.standard_normal((n, size, rank)) + 1j * rng.standard_normal((n, size, rank))
    m = a @ np.conj(np.swapaxes(a, -1, -2))
    return m / np.trace(m, axis1=-2, axis2=-1).real[:, None, None]
