"""Generative text pipeline for live sports and music events.

Subsystems: domain model and canonical keys (`model`), partitioned event bus
(`bus`), feed ontology and congruency gate (`ontology`, `congruency`),
prompt engineering (`templating`, `retrieval`, `prompts`), generation
backends (`generation`), hallucination-correcting post-processing
(`postprocess`), slot-filler personalization (`slots`), content stores and
CDN (`store`), evaluation metrics and reports (`metrics`, `report`), and the
orchestrating pipeline, HTTP API, and CLI (`pipeline`, `api`, `cli`).
"""

__version__ = "0.1.0"
