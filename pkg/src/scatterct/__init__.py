"""One-step vs two-step scatter correction and density reconstruction
for spherically symmetric objects in X-ray CT."""

__version__ = "0.1.0"
