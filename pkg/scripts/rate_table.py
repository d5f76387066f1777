#!/usr/bin/env python3
"""Print the rate arithmetic for every builtin configuration."""

from nanocodec.config import builtin_configs, rate_report


def main():
    header = (f"{'config':36s} {'fps':>9s} {'tok/s':>8s} {'bits':>5s} "
              f"{'kbps':>8s} {'hop':>6s} {'enc':>9s} {'dec':>9s}")
    print(header)
    print("-" * len(header))
    for cfg in builtin_configs():
        rr = rate_report(cfg)
        enc = "causal" if cfg.encoder_causal else "noncausal"
        dec = "causal" if cfg.decoder_causal else "noncausal"
        print(f"{cfg.name:36s} {float(rr.frames_per_sec):9.4f} "
              f"{float(rr.tokens_per_sec):8.2f} {rr.bits_per_token:5d} "
              f"{float(rr.bitrate_bps) / 1000:8.4f} {rr.hop_samples:6d} "
              f"{enc:>9s} {dec:>9s}")


if __name__ == "__main__":
    main()
