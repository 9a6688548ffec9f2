"""One probe-bath collision, followed step by step."""
import numpy as np

from naqtur.collision import CollisionConfig, evaluate, sample_params
from naqtur.qcore import bloch_vector

cfg = CollisionConfig(system_mode="haar-isospectral")
rng = np.random.default_rng(7)
params = sample_params(cfg, rng)
print(f"bath radius r = {params.r:.4f}, direction n = {np.round(params.n, 4)}")
print(f"swap angle phi = {params.phi:.4f}")
print("charge frame R =\n", np.round(params.frame, 4))

rec = evaluate(params, cfg)
print(f"\nentropy production Sigma    {rec.sigma:.10f}")
print(f"mutual information I(S:E)   {rec.mutual_info:.10f}")
print(f"bath relative entropy       {rec.d_bath:.10f}")
print(f"split residual              {rec.sigma - rec.mutual_info - rec.d_bath:+.1e}")

print(f"\ncurrent dq = {rec.dq}")
print("V  =\n", rec.V)
print("V' =\n", rec.Vp)
print(f"\nbound B      {rec.bound_B:.10f}")
print(f"F(s_simple)  {rec.F_of_s:.10f}   (symmetric-covariance shortcut)")
print(f"relative slack 1 - B/D_bath = {rec.rel_slack:.4f}")
print(f"Robertson ratio C = {rec.robertson_C:.4f}")
