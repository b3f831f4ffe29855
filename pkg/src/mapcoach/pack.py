"""Bundled default domain pack: a 12-concept, 15-link thermoregulation-style
expert map with page provenance, used by the simulator and CLI defaults."""

from __future__ import annotations

from .causal import CausalLink, CausalMap, Concept, ExpertMap, Sign

_CONCEPTS = [
    ("cold_exposure", "Cold exposure", "cold"),
    ("cold_detection", "Cold detection", "cold"),
    ("hypothalamus_cold", "Hypothalamus cold response", "cold"),
    ("shivering", "Shivering", "cold"),
    ("heat_production", "Heat production", "cold"),
    ("vasoconstriction", "Blood vessel constriction", "cold"),
    ("heat_loss", "Heat loss", "heat"),
    ("body_temperature", "Body temperature", "core"),
    ("heat_exposure", "Heat exposure", "heat"),
    ("heat_detection", "Heat detection", "heat"),
    ("hypothalamus_heat", "Hypothalamus heat response", "heat"),
    ("sweating", "Sweating", "heat"),
]

# (source, target, sign, page) -- 15 links across 7 resource pages
_LINKS = [
    ("cold_exposure", "cold_detection", Sign.INCREASE, "p-cold-detection"),
    ("cold_detection", "hypothalamus_cold", Sign.INCREASE, "p-cold-detection"),
    ("hypothalamus_cold", "shivering", Sign.INCREASE, "p-cold-response"),
    ("shivering", "heat_production", Sign.INCREASE, "p-cold-response"),
    ("heat_production", "body_temperature", Sign.INCREASE, "p-cold-response"),
    ("hypothalamus_cold", "vasoconstriction", Sign.INCREASE, "p-vessels"),
    ("vasoconstriction", "heat_loss", Sign.DECREASE, "p-vessels"),
    ("heat_loss", "body_temperature", Sign.DECREASE, "p-heat-balance"),
    ("cold_exposure", "body_temperature", Sign.DECREASE, "p-heat-balance"),
    ("heat_exposure", "heat_detection", Sign.INCREASE, "p-heat-detection"),
    ("heat_detection", "hypothalamus_heat", Sign.INCREASE, "p-heat-detection"),
    ("hypothalamus_heat", "sweating", Sign.INCREASE, "p-heat-response"),
    ("sweating", "heat_loss", Sign.INCREASE, "p-heat-response"),
    ("body_temperature", "heat_detection", Sign.INCREASE, "p-feedback"),
    ("heat_exposure", "body_temperature", Sign.INCREASE, "p-heat-balance"),
]


def default_expert_map() -> ExpertMap:
    concepts = [Concept(id=i, name=n, section=s) for i, n, s in _CONCEPTS]
    links = [
        CausalLink(source=s, target=t, sign=sign, source_page=page)
        for s, t, sign, page in _LINKS
    ]
    return ExpertMap(CausalMap(concepts, links))
