"""maskit: a multi-agent system runtime (BDI agents, workspaces/artifacts,
organisations) managed through a resource-oriented HTTP API with revision
history."""

from .api import build_app
from .project import boot, load_project
from .system import System

__all__ = ["System", "build_app", "boot", "load_project"]
__version__ = "0.1.0"
