"""Encode one frame, send it over AWGN and decode it with sum-product and EMS.

Run with ``python demos/quickstart.py``.
"""
import numpy as np

from rasc import channel, code, ring
from rasc.code import CodeConfig
from rasc.decode_bp import BPDecoder
from rasc.decode_ems import EMSDecoder, EmsConfig
from rasc.ring import RingParams

p = RingParams(2, 2)                      # 16 points, 4-QAM information symbols
print(f"ring: L={p.L} Nbv={p.Nbv} Q={p.Q}, bijective filters: {list(ring.bijective_filters(p))}")

cfg = CodeConfig(p, q=3, Ns=500, fb=11, interleaver_seed=1)
print(f"rate {code.rate(cfg):.3f} bpcu, Shannon limit {channel.shannon_limit_db(code.rate(cfg)):.2f} dB")

rng = np.random.default_rng(0)
s = cfg.random_input(rng)
x = code.encode(s, cfg)
assert code.verify_parity(x, s, cfg)

graph = code.build_graph(cfg)
for snr in (-1.0, 0.5):
    ch = channel.ChannelParams.from_snr_db(snr, p)
    llr = channel.channel_llrs(channel.transmit(x, ch, p, rng), ch, p)
    for name, dec in [("sum-product", BPDecoder(graph)),
                      ("EMS Nm=16", EMSDecoder(graph, EmsConfig(16, eta=-2.0)))]:
        s_hat, diag = dec.decode(llr, 100)
        print(f"{snr:5.1f} dB  {name:12s} symbol errors {np.count_nonzero(s_hat != s):4d}"
              f"  iterations {diag.iterations}")
