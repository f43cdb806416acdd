from .__about__ import VERSION

__version__ = VERSION
