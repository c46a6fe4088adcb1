"""Multimodal punctuation prediction as sequence labeling: lexical
transformer encoder, frozen-feature acoustic adapter, two fusion
mechanisms, streaming inference, and an edit-distance punctuation
restoration pipeline."""

__version__ = "0.1.0"
