"""Agentic RAG engine for quality-engineering artifact generation."""

__version__ = "0.1.0"
