"""Local-optimality certificates, NWMS decoding, LP decoding and threshold bounds for Tanner codes."""
from .codes import LocalCode, TannerCode, enumerate_codewords, load_code, make_local_code
from .graph import TannerGraph, gen_regular, girth, lift_cover, parse_alist, read_alist, write_alist

__version__ = "0.1.0"

__all__ = [
    "LocalCode", "TannerCode", "TannerGraph", "enumerate_codewords", "gen_regular", "girth",
    "lift_cover", "load_code", "make_local_code", "parse_alist", "read_alist", "write_alist",
]
