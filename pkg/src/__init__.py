"""Cell-free Massive MIMO Fronthaul Bit Allocation Simulator"""

__version__ = "0.1.0"
