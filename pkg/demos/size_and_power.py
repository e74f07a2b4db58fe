"""Small Monte-Carlo runs of the size and power designs.

The replicate counts are far below those of a real study, so expect a few
points of Monte-Carlo noise. Raise R and B for publication-quality numbers.
"""

from funkmean.simulate import run_power_experiment, run_size_experiment, table1_config, table2_config

size = run_size_experiment(table1_config(R=200, B=200, nu_values=(0.5, 5.0, 50.0)))
print("empirical size at alpha=0.05")
for r in size.rows:
    print(f"  nu={r['nu_or_c']:<5g} {r['basis']:10s} {r['reject_rate']:.3f}")

power = run_power_experiment(table2_config(R=200, B=200, c_values=(0.0, 0.321, 0.643, 0.964)))
print("\npower against a growing mean difference")
for r in power.rows:
    print(f"  c={r['nu_or_c']:.3f} {r['basis']:10s} {r['reject_rate']:.3f}")

size.to_csv("size.csv")
power.to_svg("power.svg", title="power vs c")
