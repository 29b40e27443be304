"""GA-MS layered LDPC decoding and hardware models for 5G NR codes."""

__version__ = "0.1.0"
