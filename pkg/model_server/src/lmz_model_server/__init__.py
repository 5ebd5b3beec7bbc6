"""Neural predictor service for the lmz compressor.

Serves next-byte distributions from a small autoregressive transformer over
the framed wire protocol (see the main package's docs/PROTOCOL.md).  The
service quantizes probabilities itself — integers on the wire, never floats
— with the same deterministic algorithm the compressor uses, verified
bit-exact against the shared test-vector file.
"""

__version__ = "0.1.0"
