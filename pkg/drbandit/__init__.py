# drbandit/__init__.py

from drbandit.config import VERSION

__version__ = VERSION
