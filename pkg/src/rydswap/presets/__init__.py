"""Bundled scenario presets (INI configs) mirroring the published operating points."""
