import math

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from entropy_lab.tree import NodeId, TreeMeasure

settings.register_profile(
    "default", deadline=None, max_examples=150, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@st.composite
def nodes(draw, max_level=10):
    level = draw(st.integers(0, max_level))
    return NodeId(level, draw(st.integers(0, (1 << level) - 1)))


masses = st.floats(-1.0, 1.0, allow_nan=False).filter(lambda m: abs(m) > 1e-6)


@st.composite
def tree_measures(draw, max_level=10, max_atoms=12, unit=False):
    atoms = draw(st.dictionaries(nodes(max_level), masses, min_size=1, max_size=max_atoms))
    mu = TreeMeasure(atoms)
    if unit:
        mu = mu.scale(1.0 / mu.norm1())
    return mu


@st.composite
def subtrees(draw, max_level=6):
    from entropy_lab.operators import Subtree

    terminal = draw(st.lists(nodes(max_level), min_size=1, max_size=6))
    return Subtree.from_terminal(terminal)


def brute_mass(mu, t):
    return math.fsum(m for s, m in mu.atoms.items() if t.precedes(s))


def brute_variation(mu, t):
    return math.fsum(abs(m) for s, m in mu.atoms.items() if t.precedes(s))
