"""Cross-category recommendation engine: basket mining, LLM candidate
generation, cart-context neural ranking, and a serving layer."""

__version__ = "0.1.0"
