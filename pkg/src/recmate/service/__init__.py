"""HTTP decision service: FastAPI app over the core community model."""

from .app import create_app
from .state import ServiceState

__all__ = ["create_app", "ServiceState"]
