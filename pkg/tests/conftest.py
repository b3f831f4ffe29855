import pytest

from mapcoach.causal import CausalLink, CausalMap, Concept, ExpertMap, Sign
from mapcoach.pack import default_expert_map


@pytest.fixture(scope="session")
def pack():
    return default_expert_map()


@pytest.fixture(scope="session")
def tiny_expert():
    """Four concepts, three links, one shortcut opportunity (a -> c)."""
    concepts = [
        Concept(id="a", name="A", section="s1"),
        Concept(id="b", name="B", section="s1"),
        Concept(id="c", name="C", section="s1"),
        Concept(id="d", name="D", section="s2"),
    ]
    links = [
        CausalLink(source="a", target="b", sign=Sign.INCREASE, source_page="pa"),
        CausalLink(source="b", target="c", sign=Sign.INCREASE, source_page="pb"),
        CausalLink(source="a", target="d", sign=Sign.DECREASE, source_page="pd"),
    ]
    return ExpertMap(CausalMap(concepts, links))
