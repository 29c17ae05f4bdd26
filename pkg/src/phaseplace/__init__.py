"""Phase-aware placement of cloud virtual disks from provisioning metadata."""

__version__ = "0.1.0"
