"""Wire-protocol diffusion editing adapter with a weight-free stub mode."""

__version__ = "0.1.0"

from .app import AdapterConfig, create_app  # noqa: F401
