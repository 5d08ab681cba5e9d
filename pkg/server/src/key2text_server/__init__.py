"""Reference HTTP model server for the key2text gateway protocol."""

from .app import create_app
from .config import ServerConfig

__version__ = "0.1.0"
