#!/usr/bin/env python3
"""Nine hybrid spans end to end, at a sweep of launch powers.

Shapes random symbols onto a root-raised-cosine waveform, propagates
through 9 amplified two-segment spans, and receives twice: once with
plain chromatic-dispersion compensation and once with 4-step-per-span
digital back-propagation.  Prints measured SNR and demapper GMI next to
the analytical budget so the three regimes (noise-limited, optimum,
nonlinearity-limited) are visible on one table.

Takes a minute or so: each power point is a full split-step run.
"""

from shapelink import channel as ch
from shapelink import experiments, linkbudget

POWERS_DBM = (-4.0, -2.0, 0.0, 2.0, 4.0)

span = ch.hybrid_span()
print(f"span: {span.length_m / 1e3:.0f} km, {span.loss_db:.2f} dB loss, "
      f"NF {span.amp_noise_figure_db} dB")
print(f"{'P [dBm]':>8s} {'budget':>8s} {'snr cdc':>8s} {'snr dbp':>8s} "
      f"{'gmi cdc':>8s} {'gmi dbp':>8s}")

for power in POWERS_DBM:
    cfg = experiments.ExperimentConfig(
        mode="fiber_e2e",
        output_dir=f"out_fiber/p{power:+.0f}dBm",
        source="system12",
        span_count=9,
        launch_power_dbm=power,
        symbols=8192,
    )
    report = experiments.run_experiment(cfg)
    row = dict(zip(report.columns, report.rows[0]))
    predicted = linkbudget.combine_snr([
        linkbudget.ase_snr(9, span.loss_db, 1.4, power, 35e9, 193.4e12),
        linkbudget.gn_nli_estimate(span, power, span_count=9),
        cfg.transceiver_snr_db,
    ])
    print(f"{power:8.1f} {predicted:8.2f} {row['snr_pre_dbp']:8.2f} "
          f"{row['snr_post_dbp']:8.2f} {row['gmi_pre']:8.4f} {row['gmi_post']:8.4f}")

print("\nback-propagation claws back part of the nonlinear penalty, most")
print("visibly above the optimum; the budget drifts optimistic there too,")
print("since the closed-form nonlinear term ignores coherent accumulation.")
