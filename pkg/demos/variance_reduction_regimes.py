"""When does the control variate shrink the swap-correction variance?

The control variate for a chain is its position m steps ago. Its benefit
depends on how far the chain drifts in that time. Near a mode of curvature
a the chain is an Ornstein-Uhlenbeck process, and relative to the plain
estimator the variance ratio is about 2 * (1 - exp(-a * eta * m)). Small
eta * m gives strong reduction, while large eta * m makes the stale snapshot
worse than none.

    python3 demos/variance_reduction_regimes.py
"""

import math

from vrresgld import preset, run
from vrresgld.model import MixtureModel

model = MixtureModel.from_spec(preset("mixture").model_spec)
curvature = 200.0  # n_data / noise_sd**2 near either mode

print(f"{'eta':>8s} {'m':>4s} {'a*eta*m':>8s} {'vr/plain':>9s} {'predicted':>9s}")
for eta, m in ((1e-6, 10), (1e-5, 10), (1e-5, 50), (1e-4, 50), (1e-3, 50)):
    common = dict(steps=20000, eta1=eta, eta2=eta, cv_period=m, init1=25.0, init2=25.0,
                  seed=1, write_trace=False)
    vr = run(preset("mixture", sampler="vr_re_sgld", **common), model=model)
    re = run(preset("mixture", sampler="re_sgld", **common), model=model)
    ratio = vr.summary["mean_sigma2_probe"] / re.summary["mean_sigma2_probe"]
    x = curvature * eta * m
    print(f"{eta:8.0e} {m:4d} {x:8.3f} {ratio:9.3f} {2 * (1 - math.exp(-x)):9.3f}")
