"""Bundled example maps, ideals and measure configs, addressed as catalog:NAME."""
