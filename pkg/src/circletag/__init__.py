"""Circle-Tag simulator and analysis toolkit for online multi-robot network formation."""

__version__ = "0.1.0"
